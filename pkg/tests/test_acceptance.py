"""Acceptance criteria, one test each. Every test prints a single PASS/FAIL line."""

import contextlib
import io
import json
import math
import time

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from hexcover import bench, cli, geometry as geo, planners, tsp
from hexcover.field_model import (
    EXPERIMENT_PARAMS,
    FieldParams,
    PlanningQuery,
    compute_r_max,
    compute_r_min,
    covariance,
    estimation_error,
    noise_floor,
)
from hexcover.verification import check_feasibility, compute_bounds, monte_carlo_mse

P = EXPERIMENT_PARAMS
S0 = P.sigma0_sq
FRACTIONS = (0.3, 0.2, 0.1)


def verdict(capsys, number: int, ok: bool, detail: str, elapsed: float, limit: float):
    in_time = elapsed < limit
    status = "PASS" if ok and in_time else "FAIL"
    with capsys.disabled():
        print(f"\ncriterion {number:2d} {status}: {detail} [{elapsed:.2f} s, limit {limit:g} s]")
    assert ok, detail
    assert in_time, f"runtime {elapsed:.2f} s exceeds {limit:g} s"


@pytest.fixture(scope="module")
def feasibility_suite():
    """Ten random rectangles per tolerance, planned, verified and toured."""
    rng = np.random.default_rng(4)
    cases = []
    t_verify = t_tour = 0.0
    for frac in FRACTIONS:
        delta = frac * S0
        for _ in range(10):
            w, h = rng.uniform(10.0, 150.0, 2)
            env = geo.Environment.rectangle(w, h)
            t0 = time.perf_counter()
            ms = planners.hex_cover(env, P, delta)
            feas = check_feasibility(env, ms, P, delta, ms.r_min_used / 20)
            t_verify += time.perf_counter() - t0
            t0 = time.perf_counter()
            raw = tsp.christofides(ms.points)
            t_tour += time.perf_counter() - t0
            query = PlanningQuery(P, delta)
            cases.append(dict(env=env, frac=frac, query=query, samples=ms, feas=feas, raw=raw,
                              bounds=compute_bounds(env, query, ms, raw)))
    return {"cases": cases, "t_verify": t_verify, "t_tour": t_tour}


def test_criterion_01_counterexample(capsys):
    t0 = time.perf_counter()
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(["counterexample", "--json"])
    rep = json.loads(buf.getvalue())
    text = io.StringIO()
    with contextlib.redirect_stdout(text):
        cli.main(["counterexample"])
    elapsed = time.perf_counter() - t0
    ok = (
        code == 0
        and abs(rep["rhs_bound"] - 0.83255461) <= 1e-8
        and abs(rep["error_value"] - 0.443771) <= 1e-5
        and "0.83255461" in text.getvalue()
        and "0.443771" in text.getvalue()
    )
    verdict(capsys, 1, ok, f"rhs={rep['rhs_bound']:.10f} f={rep['error_value']:.8f} exit={code}", elapsed, 1.0)


def test_criterion_02_effective_range(capsys):
    t0 = time.perf_counter()
    failures = []
    for params in (P, FieldParams(1.0, 1.0), FieldParams(2.5, 3.0, 0.1)):
        r_max = compute_r_max(params)
        if abs(r_max - math.sqrt(6.0) * params.length_scale) > 1e-12 * r_max:
            failures.append(f"r_max={r_max}")
        ratio = covariance(r_max, params) / params.sigma0_sq
        if abs(ratio - 0.05) > 1e-12 * 0.05:
            failures.append(f"phi(r_max)/sigma0^2={ratio:.12f}")
    elapsed = time.perf_counter() - t0
    detail = "; ".join(sorted(set(failures))) if failures else "r_max = sqrt(6) L and phi(r_max) = 0.05 sigma0^2"
    verdict(capsys, 2, not failures, detail, elapsed, 1.0)


def test_criterion_03_single_sample_sufficiency(capsys):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        s0 = float(np.exp(rng.uniform(np.log(0.1), np.log(500.0))))
        params = FieldParams(s0, float(rng.uniform(0.1, 50.0)), float(rng.uniform(0.0, 0.5)) * s0)
        lo = noise_floor(params) / s0
        delta = (lo + (1 - lo) * float(rng.uniform(0.01, 0.99))) * s0
        r = compute_r_min(params, delta)
        theta = rng.uniform(0, 2 * np.pi)
        x = rng.uniform(-100, 100, 2)
        sample = x + r * np.array([np.cos(theta), np.sin(theta)])
        err = estimation_error(x, [sample], params)
        worst = max(worst, abs(err - delta) / delta)
    elapsed = time.perf_counter() - t0
    verdict(capsys, 3, worst <= 1e-9, f"max relative deviation {worst:.2e} over 100 draws", elapsed, 1.0)


def test_criterion_04_feasibility_suite(capsys, feasibility_suite):
    cases = feasibility_suite["cases"]
    bad = [c for c in cases if not c["feas"].feasible]
    worst = max(c["feas"].worst_error / (c["frac"] * S0) for c in cases)
    detail = f"{len(cases) - len(bad)}/{len(cases)} feasible, max error/delta {worst:.4f}"
    verdict(capsys, 4, not bad and len(cases) == 30, detail, feasibility_suite["t_verify"], 120.0)


def test_criterion_05_lattice_invariants(capsys):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    failures = 0
    checked = 0
    while checked < 200:
        if rng.random() < 0.5:
            env = geo.Environment.rectangle(*rng.uniform(2.0, 60.0, 2))
        else:
            pts = rng.uniform(0, rng.uniform(5, 60), size=(20, 2))
            env = geo.Environment.polygon(pts[ConvexHull(pts).vertices])
        edge = float(rng.uniform(0.3, 8.0))
        centers = geo.hexagonal_tiling_array(env, edge)
        if len(centers) < 2:
            continue
        checked += 1
        spacing_ok = abs(geo.min_pairwise_distance(centers) - math.sqrt(3) * edge) <= 1e-9
        covered = geo.is_covering(geo.Cover(centers, edge), env, edge / 20)
        failures += not (spacing_ok and covered)
    elapsed = time.perf_counter() - t0
    verdict(capsys, 5, failures == 0, f"{checked - failures}/{checked} instances with sqrt(3) spacing and full cover",
            elapsed, 60.0)


def test_criterion_06_sample_count_bound(capsys, feasibility_suite):
    t0 = time.perf_counter()
    eligible = [c for c in feasibility_suite["cases"] if geo.fits_ball(c["env"], math.sqrt(3) * c["query"].r_min)]
    ratios = [len(c["samples"]) / (geo.area(c["env"]) / (math.pi * c["query"].r_min ** 2)) for c in eligible]
    elapsed = time.perf_counter() - t0
    ok = bool(eligible) and max(ratios) <= 3.05
    verdict(capsys, 6, ok, f"max |S|/(area/(pi r_min^2)) = {max(ratios):.3f} <= 3.05 on {len(eligible)} rectangles",
            elapsed, 60.0)


def test_criterion_07_christofides_guarantee(capsys):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst, low = 0.0, math.inf
    for _ in range(200):
        n = int(rng.integers(3, 13))
        pts = rng.uniform(0, 100, size=(n, 2))
        opt = tsp.held_karp_exact(pts).length
        got = tsp.christofides(pts).length
        worst = max(worst, got / opt)
        low = min(low, got / opt)
    elapsed = time.perf_counter() - t0
    ok = low >= 1 - 1e-12 and worst <= 1.5 + 1e-12
    verdict(capsys, 7, ok, f"christofides/optimal in [{low:.4f}, {worst:.4f}] over 200 instances", elapsed, 120.0)


def test_criterion_08_tour_bound(capsys, feasibility_suite):
    t0 = time.perf_counter()
    worst = 0.0
    for c in feasibility_suite["cases"]:
        bound = 15.6 * geo.area(c["env"]) / (math.pi * c["query"].r_min) + planners.repair_slack(c["samples"])
        worst = max(worst, c["raw"].length / bound)
    elapsed = feasibility_suite["t_tour"] + time.perf_counter() - t0
    verdict(capsys, 8, worst <= 1.0, f"max raw tour / (length bound + repair slack) = {worst:.4f}", elapsed, 120.0)


def test_criterion_09_ratio_diagnostics(capsys, feasibility_suite):
    t0 = time.perf_counter()
    eligible = [c for c in feasibility_suite["cases"] if geo.fits_ball(c["env"], math.sqrt(3) * c["query"].r_min)]
    sample_slack = max(c["bounds"].realized_sample_ratio - c["bounds"].alpha_samples for c in eligible)
    tour_slack = max(c["bounds"].realized_tour_ratio - c["bounds"].alpha_tour for c in eligible)
    elapsed = time.perf_counter() - t0
    ok = sample_slack <= 0.1 and tour_slack <= 0.1
    detail = (f"max(sample ratio - alpha) = {sample_slack:.2f}, max(tour ratio - alpha) = {tour_slack:.2f}"
              f" on {len(eligible)} rectangles")
    verdict(capsys, 9, ok, detail, elapsed, 60.0)


def test_criterion_10_directional_reproduction(capsys):
    t0 = time.perf_counter()
    rows = bench.run_sweep(bench.config_from_dict({}))
    elapsed = time.perf_counter() - t0
    by = {(r.algorithm, round(r.area_m2), r.delta_fraction): r for r in rows}
    sample_ratios, tour_ratios = [], []
    for (algo, area, frac), r in by.items():
        if algo == "hexcover" and area >= 10000:
            sample_ratios.append(by["diskcover", area, frac].n_samples / r.n_samples)
        if algo == "hexcovertour" and area == 40000:
            tour_ratios.append(by["diskcovertour", area, frac].tour_length_m / r.tour_length_m)
    ok = min(sample_ratios) >= 2.0 and min(tour_ratios) >= 1.3
    detail = (f"min disk/hex sample ratio (area >= 10000) = {min(sample_ratios):.2f} (need 2), "
              f"min disk/hex tour ratio (area 40000) = {min(tour_ratios):.2f} (need 1.3)")
    verdict(capsys, 10, ok, detail, elapsed, 600.0)


def test_criterion_11_monte_carlo_oracle(capsys):
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    agree = 0
    for i in range(100):
        params = FieldParams(float(rng.uniform(0.5, 4.0)), float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.01, 1.0)))
        n = int(rng.integers(0, 9))
        pts = rng.uniform(-3, 3, size=(n, 2))
        x = rng.uniform(-3, 3, 2)
        exact = estimation_error(x, pts, params)
        mc = monte_carlo_mse(x, pts, params, trials=20000, seed=i)
        agree += abs(mc["empirical_mse"] - exact) <= 3 * mc["standard_error"]
    elapsed = time.perf_counter() - t0
    verdict(capsys, 11, agree >= 95, f"{agree}/100 configurations within 3 standard errors", elapsed, 300.0)


def test_criterion_12_monotonicity(capsys):
    rng = np.random.default_rng(12)
    t0 = time.perf_counter()
    worst = -math.inf
    for _ in range(1000):
        params = FieldParams(float(rng.uniform(0.5, 200.0)), float(rng.uniform(0.5, 10.0)),
                             float(rng.uniform(1e-3, 1.0)))
        n = int(rng.integers(0, 10))
        scale = 4 * params.length_scale
        pts = rng.uniform(-scale, scale, size=(n, 2))
        x = rng.uniform(-scale, scale, 2)
        y = rng.uniform(-scale, scale, 2)
        before = estimation_error(x, pts, params)
        after = estimation_error(x, np.vstack([pts, y]), params)
        worst = max(worst, (after - before) / params.sigma0_sq)
    elapsed = time.perf_counter() - t0
    verdict(capsys, 12, worst <= 1e-9, f"max increase f(S+y) - f(S) = {worst:.2e} sigma0^2 over 1000 triples",
            elapsed, 30.0)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
