"""Command-line entry point: ``hexcover {plan,tour,verify,bench,counterexample}``.

Exit codes: 0 success, 1 verification failure, 2 infeasible tolerance,
3 parse or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench, geometry as geo, planners, plotting
from .field_model import EXPERIMENT_PARAMS, FieldParams, InfeasibleToleranceError, PlanningQuery, noise_floor
from .verification import check_feasibility, compute_bounds, counterexample_check

EXIT_OK, EXIT_VERIFY, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2, 3

log = logging.getLogger("hexcover")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _problem_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("problem")
    g.add_argument("--rect", default="100x100", help="rectangle WxH in meters (default 100x100)")
    g.add_argument("--sigma0", type=float, default=EXPERIMENT_PARAMS.sigma0, help="prior standard deviation")
    g.add_argument("--length-scale", type=float, default=EXPERIMENT_PARAMS.length_scale, help="kernel length scale (m)")
    g.add_argument("--noise-var", type=float, default=EXPERIMENT_PARAMS.noise_var, help="measurement noise variance")
    g.add_argument("--delta-frac", type=float, default=0.3, help="tolerance as a fraction of sigma0^2")
    g.add_argument("--grid-step", type=float, default=None, help="verification grid step (default r_min/20)")
    return p


def _output_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--output-dir", type=Path, default=None, help="directory for output files")
    p.add_argument("--seed", type=int, default=None, help="seed recorded with the outputs (default 0)")
    p.add_argument("--json", action="store_true", help="print a JSON summary")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hexcover", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    problem, output = _problem_flags(), _output_flags()
    matching = argparse.ArgumentParser(add_help=False)
    matching.add_argument("--matching", choices=["exact", "greedy"], default=None,
                          help="odd-vertex matching for Christofides (default exact)")

    sub.add_parser("plan", parents=[problem, output], help="place samples and write plan.csv")
    t = sub.add_parser("tour", parents=[problem, output, matching], help="plan plus tour, writes tour.csv and tour.svg")
    t.add_argument("--no-two-opt", action="store_true", help="report the raw Christofides tour")
    v = sub.add_parser("verify", parents=[problem, output], help="check feasibility of an existing plan CSV")
    v.add_argument("plan_csv", type=Path)
    b = sub.add_parser("bench", parents=[output, matching], help="run a sweep from a JSON config")
    b.add_argument("config", type=Path, nargs="?", help="JSON config (defaults apply when omitted)")
    c = sub.add_parser("counterexample", help="reproduce the necessary-condition counterexample")
    c.add_argument("--json", action="store_true")
    return parser


def _problem(args):
    dims = bench.parse_rect(args.rect)
    params = FieldParams.from_sigma0(args.sigma0, args.length_scale, args.noise_var)
    if args.grid_step is not None and not args.grid_step > 0:
        raise bench.ConfigError("grid-step", f"must be > 0, got {args.grid_step}")
    query = PlanningQuery.from_fraction(params, args.delta_frac)
    return geo.Environment.rectangle(*dims), params, query


def _emit(args, summary: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(summary, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


def _summary(env, query, report: planners.PlanReport, seed: int) -> tuple[dict, list[str]]:
    feas, b = report.feasibility, report.diagnostics
    s = {
        "area_m2": geo.area(env),
        "n_samples": len(report.samples),
        "n_repair": report.samples.count(planners.REPAIR),
        "r_min": query.r_min,
        "r_max": query.r_max,
        "delta": query.delta,
        "seed": seed,
        "bounds": b.as_dict(),
        "feasibility": feas.as_dict(),
    }
    lines = [
        f"samples      {s['n_samples']} ({s['n_repair']} repair)",
        f"r_min        {query.r_min:.6f} m",
        f"r_max        {query.r_max:.6f} m",
        f"bounds       samples >= {b.sample_lower_bound}, <= {b.sample_upper_bound:.1f}; "
        f"ratio {b.realized_sample_ratio:.3f} (alpha {b.alpha_samples:.3f})",
        f"feasible     {feas.feasible} (worst error {feas.worst_error:.6g} <= {query.delta:.6g}"
        f" at ({feas.worst_point.x:.3f}, {feas.worst_point.y:.3f}), {feas.points_checked} grid points)",
    ]
    return s, lines


def cmd_plan(args) -> int:
    env, params, query = _problem(args)
    samples = planners.hex_cover(env, params, query.delta, args.grid_step)
    report = planners.plan_report(env, params, query.delta, samples, "hexcover", grid_step=args.grid_step)
    out = args.output_dir or Path(".")
    path = bench.write_plan_csv(samples, out / "plan.csv")
    summary, lines = _summary(env, query, report, args.seed or 0)
    summary["plan_csv"] = str(path)
    _emit(args, summary, lines + [f"plan         {path}"])
    return EXIT_OK if report.feasibility.feasible else EXIT_VERIFY


def cmd_tour(args) -> int:
    env, params, query = _problem(args)
    report = planners.hex_cover_tour(env, params, query.delta, matching=args.matching or "exact",
                                     improve=not args.no_two_opt, grid_step=args.grid_step)
    out = args.output_dir or Path(".")
    bench.write_plan_csv(report.samples, out / "plan.csv")
    tour_csv = bench.write_tour_csv(report.tour, report.samples.points, out / "tour.csv")
    svg = plotting.plot_tour(env, report.samples, report.tour.order, out / "tour.svg",
                             title=f"{len(report.samples)} samples, length {report.tour.length:.1f} m")
    summary, lines = _summary(env, query, report, args.seed or 0)
    b = report.diagnostics
    summary.update(
        tour_length=report.tour.length,
        raw_christofides_length=report.raw_tour.length,
        matching=report.raw_tour.matching,
        repair_slack=planners.repair_slack(report.samples),
        tour_csv=str(tour_csv),
        tour_svg=str(svg),
    )
    lines += [
        f"tour         {report.tour.length:.3f} m (christofides {report.raw_tour.length:.3f} m, "
        f"{report.raw_tour.matching} matching)",
        f"tour bounds  >= {b.tour_lower_bound:.1f} m, <= {b.tour_upper_bound:.1f} m; "
        f"ratio {b.realized_tour_ratio:.3f} (alpha {b.alpha_tour:.3f})",
        f"files        {tour_csv}, {svg}",
    ]
    _emit(args, summary, lines)
    return EXIT_OK if report.feasibility.feasible else EXIT_VERIFY


def cmd_verify(args) -> int:
    env, params, query = _problem(args)
    samples = bench.read_plan_csv(args.plan_csv, query.r_min)
    outside = [i for i, ok in enumerate(geo.contains_many(env, samples.points)) if not ok]
    feas = check_feasibility(env, samples, params, query.delta, args.grid_step)
    summary = {"n_samples": len(samples), "outside": len(outside), "feasibility": feas.as_dict(),
               "bounds": compute_bounds(env, query, samples).as_dict()}
    ok = feas.feasible and not outside
    _emit(args, summary, [
        f"samples      {len(samples)} ({len(outside)} outside the environment)",
        f"feasible     {feas.feasible} (worst error {feas.worst_error:.6g} <= {query.delta:.6g}"
        f" at ({feas.worst_point.x:.3f}, {feas.worst_point.y:.3f}))",
        f"verdict      {'PASS' if ok else 'FAIL'}",
    ])
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_bench(args) -> int:
    config = bench.parse_config(args.config) if args.config else bench.config_from_dict({})
    if args.output_dir is not None:
        config.output_dir = args.output_dir
    if args.matching is not None:
        config.matching = args.matching
    if args.seed is not None:
        config.seed = args.seed
    try:
        rows = bench.run_sweep(config)
    except bench.SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    out = config.output_dir
    results = bench.write_results(rows, out / "results.csv")
    flat = [r.flat() for r in rows]
    figs = [plotting.plot_samples_vs_area(flat, out / "samples_vs_area.svg"),
            plotting.plot_tour_vs_area(flat, out / "tour_length_vs_area.svg")]
    summary = {"rows": len(rows), "results_csv": str(results), "figures": [str(f) for f in figs],
               "seed": config.seed}
    lines = [f"{r.algorithm:14s} {r.area_m2:9.0f} m2  frac {r.delta_fraction:<4g} n={r.n_samples:<5d}"
             + ("" if r.tour_length_m is None else f" tour={r.tour_length_m:.1f} m")
             + f"  {r.runtime_ms:.0f} ms" for r in rows]
    _emit(args, summary, lines + [f"wrote {results}"] + [f"wrote {f}" for f in figs])
    return EXIT_OK


def cmd_counterexample(args) -> int:
    rep = counterexample_check()
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=True))
    else:
        print(f"prior bound rhs  {rep['rhs_bound']:.8f}")
        print(f"sample distance  {rep['r_used']:.8f}")
        print(f"error f_x(S)     {rep['error_value']:.6f}")
        print(f"tolerance        {rep['delta']:g}")
        print(f"contradiction    {rep['contradiction']}")
    return EXIT_OK if rep["contradiction"] else EXIT_VERIFY


COMMANDS = {
    "plan": cmd_plan,
    "tour": cmd_tour,
    "verify": cmd_verify,
    "bench": cmd_bench,
    "counterexample": cmd_counterexample,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InfeasibleToleranceError as exc:
        params = FieldParams.from_sigma0(args.sigma0, args.length_scale, args.noise_var) \
            if hasattr(args, "sigma0") else None
        extra = ""
        if params is not None:
            extra = f"; --delta-frac must exceed the noise floor fraction {noise_floor(params) / params.sigma0_sq:.6g}"
        print(f"error: infeasible tolerance: {exc}{extra}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (bench.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
