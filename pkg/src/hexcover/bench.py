"""Experiment configuration, parameter sweeps and flat-file I/O."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import planners, tsp
from .field_model import EXPERIMENT_PARAMS, FieldParams, noise_floor
from .verification import check_feasibility

log = logging.getLogger(__name__)

ALGORITHMS = ("hexcover", "diskcover", "hexcovertour", "diskcovertour")
MIN_AREA, MAX_AREA, N_AREAS = 400.0, 40000.0, 8


class ConfigError(ValueError):
    """Malformed or invalid configuration. ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class SweepError(RuntimeError):
    """A planner produced an infeasible plan during a sweep."""


def default_areas() -> list[float]:
    return [float(a) for a in np.geomspace(MIN_AREA, MAX_AREA, N_AREAS)]


def square_sides(areas) -> list[tuple[float, float]]:
    return [(math.sqrt(a), math.sqrt(a)) for a in areas]


# Documented defaults; every key of a config file must appear here.
DEFAULTS = {
    "environments": square_sides(default_areas()),
    "sigma0": EXPERIMENT_PARAMS.sigma0,
    "length_scale": EXPERIMENT_PARAMS.length_scale,
    "noise_var": EXPERIMENT_PARAMS.noise_var,
    "delta_fractions": [0.3, 0.2, 0.1],
    "algorithms": list(ALGORITHMS),
    "grid_step": None,  # None: r_min / 20 per run
    "seed": 0,
    "output_dir": "bench_out",
    "matching": "exact",
    "greedy_threshold": tsp.DEFAULT_GREEDY_THRESHOLD,
    "two_opt": True,
}


@dataclass
class ExperimentConfig:
    environments: list[tuple[float, float]]
    params: FieldParams
    delta_fractions: list[float]
    algorithms: list[str]
    grid_step: float | None = None
    seed: int = 0
    output_dir: Path = Path("bench_out")
    matching: str = "exact"
    greedy_threshold: int = tsp.DEFAULT_GREEDY_THRESHOLD
    two_opt: bool = True


def parse_rect(text: str) -> tuple[float, float]:
    """Parse ``"WxH"`` into positive finite floats."""
    parts = str(text).lower().split("x")
    if len(parts) != 2:
        raise ConfigError("rect", f"expected WxH, got {text!r}")
    try:
        w, h = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError("rect", f"expected WxH with numeric sides, got {text!r}") from None
    if not (math.isfinite(w) and math.isfinite(h) and w > 0 and h > 0):
        raise ConfigError("rect", f"sides must be positive and finite, got {text!r}")
    return w, h


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError(k, "duplicate key")
        out[k] = v
    return out


def _number(name, value, positive=False, nonneg=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(name, "must be finite")
    if positive and value <= 0:
        raise ConfigError(name, f"must be > 0, got {value}")
    if nonneg and value < 0:
        raise ConfigError(name, f"must be >= 0, got {value}")
    return value


def _environment(i, item) -> tuple[float, float]:
    name = f"environments[{i}]"
    if isinstance(item, str):
        try:
            return parse_rect(item)
        except ConfigError as exc:
            raise ConfigError(name, str(exc)) from None
    if not isinstance(item, (list, tuple)) or len(item) != 2:
        raise ConfigError(name, f"expected [width, height] or \"WxH\", got {item!r}")
    return _number(name, item[0], positive=True), _number(name, item[1], positive=True)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    merged = {**DEFAULTS, **raw}

    envs = merged["environments"]
    if not isinstance(envs, list) or not envs:
        raise ConfigError("environments", "must be a non-empty list")
    environments = [_environment(i, e) for i, e in enumerate(envs)]

    sigma0 = _number("sigma0", merged["sigma0"], positive=True)
    length_scale = _number("length_scale", merged["length_scale"], positive=True)
    noise_var = _number("noise_var", merged["noise_var"], nonneg=True)
    params = FieldParams.from_sigma0(sigma0, length_scale, noise_var)

    fracs = merged["delta_fractions"]
    if not isinstance(fracs, list) or not fracs:
        raise ConfigError("delta_fractions", "must be a non-empty list")
    floor = noise_floor(params) / params.sigma0_sq
    delta_fractions = []
    for i, f in enumerate(fracs):
        f = _number(f"delta_fractions[{i}]", f)
        if not floor < f < 1.0:
            raise ConfigError(f"delta_fractions[{i}]", f"must lie in ({floor:.6g}, 1), got {f}")
        delta_fractions.append(f)

    algos = merged["algorithms"]
    if not isinstance(algos, list) or not algos:
        raise ConfigError("algorithms", "must be a non-empty list")
    for a in algos:
        if a not in ALGORITHMS:
            raise ConfigError("algorithms", f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")

    grid_step = merged["grid_step"]
    if grid_step is not None:
        grid_step = _number("grid_step", grid_step, positive=True)
    seed = merged["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", f"expected a non-negative integer, got {seed!r}")
    if not isinstance(merged["output_dir"], str) or not merged["output_dir"]:
        raise ConfigError("output_dir", "expected a non-empty path string")
    if merged["matching"] not in ("exact", "greedy"):
        raise ConfigError("matching", f"expected 'exact' or 'greedy', got {merged['matching']!r}")
    threshold = merged["greedy_threshold"]
    if isinstance(threshold, bool) or not isinstance(threshold, int) or threshold < 0:
        raise ConfigError("greedy_threshold", f"expected a non-negative integer, got {threshold!r}")
    if not isinstance(merged["two_opt"], bool):
        raise ConfigError("two_opt", "expected true or false")

    return ExperimentConfig(
        environments=environments,
        params=params,
        delta_fractions=delta_fractions,
        algorithms=list(algos),
        grid_step=grid_step,
        seed=seed,
        output_dir=Path(merged["output_dir"]),
        matching=merged["matching"],
        greedy_threshold=threshold,
        two_opt=merged["two_opt"],
    )


def parse_config(path) -> ExperimentConfig:
    """Strictly parse a flat JSON config file (see ``DEFAULTS`` for the schema)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"malformed JSON: {exc}") from None
    return config_from_dict(raw)


# -- results ------------------------------------------------------------------

@dataclass
class ResultRow:
    algorithm: str
    width_m: float
    height_m: float
    area_m2: float
    delta_fraction: float
    n_samples: int
    n_repair: int
    tour_length_m: float | None
    raw_christofides_length_m: float | None
    matching: str
    runtime_ms: float
    feasible: bool
    worst_error: float
    bounds: dict = field(default_factory=dict)

    def flat(self) -> dict:
        d = asdict(self)
        bounds = d.pop("bounds")
        d.update({f"bound_{k}": v for k, v in bounds.items()})
        return d


BOUND_KEYS = [f.name for f in fields(planners.BoundsReport)]
CSV_COLUMNS = [f.name for f in fields(ResultRow) if f.name != "bounds"] + [f"bound_{k}" for k in BOUND_KEYS]


def _row(algo, dims, frac, report: planners.PlanReport, runtime_s: float) -> ResultRow:
    feas = report.feasibility
    tour, raw = report.tour, report.raw_tour
    return ResultRow(
        algorithm=algo,
        width_m=dims[0],
        height_m=dims[1],
        area_m2=dims[0] * dims[1],
        delta_fraction=frac,
        n_samples=len(report.samples),
        n_repair=report.samples.count(planners.REPAIR),
        tour_length_m=None if tour is None else tour.length,
        raw_christofides_length_m=None if raw is None else raw.length,
        matching="none" if raw is None else raw.matching,
        runtime_ms=1000.0 * runtime_s,
        feasible=feas.feasible,
        worst_error=feas.worst_error,
        bounds=report.diagnostics.as_dict(),
    )


def run_sweep(config: ExperimentConfig) -> list[ResultRow]:
    """Run every algorithm x environment x tolerance combination.

    Tour variants reuse the placement computed for their base algorithm;
    their runtime includes that placement time. Raises ``SweepError`` on the
    first infeasible plan.
    """
    params = config.params
    rows = []
    for frac in config.delta_fractions:
        delta = frac * params.sigma0_sq
        for dims in config.environments:
            env = geo.Environment.rectangle(*dims)
            placed = {}
            for algo in config.algorithms:
                base = algo.removesuffix("tour")
                if base not in placed:
                    place = planners.hex_cover if base == "hexcover" else planners.disk_cover
                    t0 = time.perf_counter()
                    samples = place(env, params, delta, config.grid_step)
                    t_place = time.perf_counter() - t0
                    feas = check_feasibility(env, samples, params, delta, config.grid_step)
                    placed[base] = (samples, t_place, feas)
                samples, t_place, feas = placed[base]
                t0 = time.perf_counter()
                if algo.endswith("tour"):
                    report = planners.tour_report(
                        env, params, delta, samples, algo, config.matching, config.greedy_threshold,
                        config.two_opt, verify=False, grid_step=config.grid_step,
                    )
                else:
                    report = planners.plan_report(env, params, delta, samples, algo, verify=False)
                # verification is not charged to the planner
                elapsed = t_place + time.perf_counter() - t0
                report.feasibility = feas
                row = _row(algo, dims, frac, report, elapsed)
                if not row.feasible:
                    p = report.feasibility.worst_point
                    raise SweepError(
                        f"{algo} on {dims[0]:g}x{dims[1]:g} at delta fraction {frac:g} is infeasible: "
                        f"error {row.worst_error:.6g} > {delta:.6g} at ({p.x:.4f}, {p.y:.4f})"
                    )
                log.info("%s %.0f m2 frac=%g n=%d", algo, row.area_m2, frac, row.n_samples)
                rows.append(row)
    return rows


def write_results(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.flat().items()})
    return path


def read_results(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# -- plan and tour files ---------------------------------------------------------

PLAN_COLUMNS = ["x", "y", "tag"]
TOUR_COLUMNS = ["sequence", "x", "y"]


def write_plan_csv(samples: planners.MeasurementSet, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(PLAN_COLUMNS)
        for (x, y), tag in zip(samples.points, samples.tags):
            w.writerow([repr(float(x)), repr(float(y)), tag])
    return path


def _check_header(path, header, expected):
    if header != expected:
        raise ConfigError(str(path), f"expected header {','.join(expected)}, got {header}")


def read_plan_csv(path, r_min_used: float = float("nan")) -> planners.MeasurementSet:
    tags_ok = {planners.TILING, planners.PROJECTED, planners.REPAIR}
    pts, tags = [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        _check_header(path, next(reader, None), PLAN_COLUMNS)
        for line, rec in enumerate(reader, start=2):
            if len(rec) != 3 or rec[2] not in tags_ok:
                raise ConfigError(f"{path}:{line}", f"bad plan row {rec!r}")
            try:
                pts.append((float(rec[0]), float(rec[1])))
            except ValueError:
                raise ConfigError(f"{path}:{line}", f"non-numeric coordinate in {rec!r}") from None
            tags.append(rec[2])
    return planners.MeasurementSet(np.array(pts).reshape(-1, 2), tags, r_min_used)


def write_tour_csv(tour: tsp.Tour, points, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pts = geo.as_array(points)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TOUR_COLUMNS)
        for k, i in enumerate(tour.order):
            w.writerow([k, repr(float(pts[i, 0])), repr(float(pts[i, 1]))])
    return path


def read_tour_csv(path) -> np.ndarray:
    """Tour vertices in visiting order."""
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        _check_header(path, next(reader, None), TOUR_COLUMNS)
        for line, rec in enumerate(reader, start=2):
            try:
                rows.append((int(rec[0]), float(rec[1]), float(rec[2])))
            except (ValueError, IndexError):
                raise ConfigError(f"{path}:{line}", f"bad tour row {rec!r}") from None
    rows.sort()
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ConfigError(str(path), "sequence numbers must be 0..n-1")
    return np.array([(x, y) for _, x, y in rows]).reshape(-1, 2)
