"""Sample placement and tour planners over convex environments.

``hex_cover`` places samples at the centers of a hexagonal tiling whose edge
is the single-sample accuracy radius. ``disk_cover`` is the two-level
baseline: cover the environment with effective-range disks, then cover each
of those with accuracy-radius disks. The ``*_tour`` variants add a
Christofides tour (optionally improved by 2-opt).
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import geometry as geo
from . import tsp
from .field_model import FieldParams, PlanningQuery
from .verification import (
    GRID_DIVISOR,
    BoundsReport,
    FeasibilityResult,
    check_feasibility,
    compute_bounds,
)

log = logging.getLogger(__name__)

TILING, PROJECTED, REPAIR = "tiling", "projected", "repair"


@dataclass
class MeasurementSet:
    """Sample locations inside the environment with per-point provenance."""

    points: np.ndarray
    tags: list[str]
    r_min_used: float

    def __post_init__(self):
        self.points = geo.as_array(self.points)
        if len(self.tags) != len(self.points):
            raise ValueError("one tag per point required")

    def __len__(self):
        return len(self.points)

    def as_points(self) -> list[geo.Point2]:
        return [geo.Point2(float(x), float(y)) for x, y in self.points]

    def count(self, tag: str) -> int:
        return sum(t == tag for t in self.tags)


@dataclass
class PlanReport:
    samples: MeasurementSet
    tour: tsp.Tour | None
    diagnostics: BoundsReport
    feasibility: FeasibilityResult | None
    raw_tour: tsp.Tour | None = None
    algorithm: str = ""
    timings: dict = field(default_factory=dict)


def spacing_radius(query: PlanningQuery) -> float:
    """Accuracy radius, capped at the effective range."""
    if query.r_min > query.r_max:
        warnings.warn(
            f"r_min={query.r_min:.4g} exceeds r_max={query.r_max:.4g}; capping spacing at r_max",
            stacklevel=3,
        )
        return query.r_max
    return query.r_min


class _GridCoverage:
    """Counts how many samples cover each point of a fixed grid."""

    def __init__(self, env: geo.Environment, radius: float, grid_step: float):
        self.grid = geo.grid_points(env, grid_step)
        self.tree = cKDTree(self.grid)
        self.radius = radius * (1 + 1e-12)

    def counts(self, pts: np.ndarray) -> np.ndarray:
        if len(pts) == 0:
            return np.zeros(len(self.grid), dtype=int)
        return np.asarray(cKDTree(pts).query_ball_point(self.grid, self.radius, return_length=True))

    def around(self, p) -> list[int]:
        return self.tree.query_ball_point(p, self.radius)


def _dedupe(points: np.ndarray, tags: list[str], scale: float) -> tuple[np.ndarray, list[str]]:
    if len(points) < 2:
        return points, tags
    key = np.round(points / max(scale, 1e-300) * 1e9)
    _, first = np.unique(key, axis=0, return_index=True)
    keep = np.sort(first)
    return points[keep], [tags[i] for i in keep]


def remove_redundant(points: np.ndarray, tags: list[str], coverage: _GridCoverage,
                     candidates=None) -> tuple[np.ndarray, list[str]]:
    """Drop points whose removal leaves every grid point covered, in insertion order.

    Only indices in ``candidates`` are considered (all points by default).
    """
    counts = coverage.counts(points)
    keep = np.ones(len(points), dtype=bool)
    order = range(len(points)) if candidates is None else candidates
    for i in order:
        near = coverage.around(points[i])
        if near and np.all(counts[near] >= 2):
            counts[near] -= 1
            keep[i] = False
        elif not near:
            keep[i] = False
    return points[keep], [t for t, k in zip(tags, keep) if k]


def _repair(env, points, tags, coverage: _GridCoverage):
    d, _ = (cKDTree(points).query(coverage.grid, k=1) if len(points)
            else (np.full(len(coverage.grid), np.inf), None))
    uncovered = d > coverage.radius
    added = []
    for g in np.nonzero(uncovered)[0]:
        if not uncovered[g]:
            continue
        added.append(coverage.grid[g])
        uncovered[coverage.around(coverage.grid[g])] = False
    if not added:
        return points, tags
    extra = np.array(added)
    return np.vstack([points, extra]) if len(points) else extra, tags + [REPAIR] * len(added)


def boundary_repair(env: geo.Environment, samples: MeasurementSet, query: PlanningQuery,
                    grid_step: float | None = None) -> MeasurementSet:
    """Add grid points as samples until every grid point is within the radius.

    Grid points are visited in scan order; each still-uncovered one becomes a
    new sample tagged ``"repair"``. Each addition covers at least itself, so
    the loop ends after at most one pass.
    """
    radius = samples.r_min_used
    step = grid_step if grid_step is not None else radius / GRID_DIVISOR
    coverage = _GridCoverage(env, radius, step)
    pts, tags = _repair(env, samples.points, list(samples.tags), coverage)
    return MeasurementSet(pts, tags, radius)


def _query(params: FieldParams, delta: float) -> PlanningQuery:
    return PlanningQuery(params, delta)


def hex_cover(env: geo.Environment, params: FieldParams, delta: float,
              grid_step: float | None = None) -> MeasurementSet:
    """Hexagonal-tiling sample placement.

    Tiling centers outside the environment are projected onto it (projection
    onto a convex set never moves a point away from the set, so coverage is
    kept), projected points that the grid shows to be redundant are dropped,
    and any grid point still uncovered is repaired with an extra sample.
    """
    query = _query(params, delta)
    radius = spacing_radius(query)
    step = grid_step if grid_step is not None else radius / GRID_DIVISOR
    centers = geo.hexagonal_tiling_array(env, radius)
    inside = geo.contains_many(env, centers)
    projected = geo.project_many(env, centers[~inside])
    pts = np.vstack([centers[inside], projected])
    tags = [TILING] * int(inside.sum()) + [PROJECTED] * len(projected)
    pts, tags = _dedupe(pts, tags, env.scale)
    coverage = _GridCoverage(env, radius, step)
    first_projected = tags.index(PROJECTED) if PROJECTED in tags else len(tags)
    pts, tags = remove_redundant(pts, tags, coverage, range(first_projected, len(tags)))
    pts, tags = _repair(env, pts, tags, coverage)
    return MeasurementSet(pts, tags, radius)


def disk_cover(env: geo.Environment, params: FieldParams, delta: float,
               grid_step: float | None = None) -> MeasurementSet:
    """Two-level disk-cover baseline.

    1. Cover ``env`` with effective-range disks at hexagonal-tiling centers.
    2. Cover each such disk with its own hexagonal tiling of accuracy-radius
       disks, anchored at the disk's bounding box.
    3. Drop sub-centers outside ``env``, repair uncovered grid points, then
       remove redundant points in insertion order.
    """
    query = _query(params, delta)
    radius = spacing_radius(query)
    big = query.r_max
    step = grid_step if grid_step is not None else radius / GRID_DIVISOR
    chunks = []
    for cx, cy in geo.hexagonal_tiling_array(env, big):
        sub = geo.lattice_centers((cx - big, cy - big, cx + big, cy + big), radius)
        keep = np.hypot(sub[:, 0] - cx, sub[:, 1] - cy) <= big + radius
        chunks.append(sub[keep])
    pts = np.vstack(chunks)
    pts = pts[geo.contains_many(env, pts)]
    tags = [TILING] * len(pts)
    pts, tags = _dedupe(pts, tags, env.scale)
    coverage = _GridCoverage(env, radius, step)
    pts, tags = _repair(env, pts, tags, coverage)
    pts, tags = remove_redundant(pts, tags, coverage)
    return MeasurementSet(pts, tags, radius)


def tour_report(env, params, delta, samples: MeasurementSet, algorithm: str = "", matching: str = "exact",
                greedy_threshold: int = tsp.DEFAULT_GREEDY_THRESHOLD, improve: bool = True,
                verify: bool = True, grid_step=None, timings: dict | None = None) -> PlanReport:
    """Christofides tour (plus optional 2-opt), bounds and feasibility for ``samples``."""
    query = _query(params, delta)
    timings = {} if timings is None else timings
    t0 = time.perf_counter()
    raw = tsp.christofides(samples.points, matching=matching, greedy_threshold=greedy_threshold)
    timings["christofides_s"] = time.perf_counter() - t0
    tour = raw
    if improve:
        t0 = time.perf_counter()
        tour = tsp.two_opt(raw, samples.points)
        timings["two_opt_s"] = time.perf_counter() - t0
    feas = None
    if verify:
        t0 = time.perf_counter()
        feas = check_feasibility(env, samples, params, delta, grid_step)
        timings["verify_s"] = time.perf_counter() - t0
    bounds = compute_bounds(env, query, samples, raw)
    return PlanReport(samples, tour, bounds, feas, raw, algorithm, timings)


def plan_report(env, params, delta, samples: MeasurementSet, algorithm: str = "",
                verify: bool = True, grid_step=None) -> PlanReport:
    """Bounds and (optionally) feasibility for a sample set without a tour."""
    query = _query(params, delta)
    feas = check_feasibility(env, samples, params, delta, grid_step) if verify else None
    return PlanReport(samples, None, compute_bounds(env, query, samples), feas, None, algorithm)


def hex_cover_tour(env: geo.Environment, params: FieldParams, delta: float, matching: str = "exact",
                   greedy_threshold: int = tsp.DEFAULT_GREEDY_THRESHOLD, improve: bool = True,
                   verify: bool = True, grid_step: float | None = None) -> PlanReport:
    """HexCover samples joined by a Christofides tour.

    The report keeps both the raw Christofides tour (used for the bound
    diagnostics) and the 2-opt improved one.
    """
    t0 = time.perf_counter()
    samples = hex_cover(env, params, delta, grid_step)
    timings = {"placement_s": time.perf_counter() - t0}
    return tour_report(env, params, delta, samples, "hexcovertour", matching, greedy_threshold,
                       improve, verify, grid_step, timings)


def disk_cover_tour(env: geo.Environment, params: FieldParams, delta: float, matching: str = "exact",
                    greedy_threshold: int = tsp.DEFAULT_GREEDY_THRESHOLD, improve: bool = True,
                    verify: bool = True, grid_step: float | None = None) -> PlanReport:
    t0 = time.perf_counter()
    samples = disk_cover(env, params, delta, grid_step)
    timings = {"placement_s": time.perf_counter() - t0}
    return tour_report(env, params, delta, samples, "diskcovertour", matching, greedy_threshold,
                       improve, verify, grid_step, timings)


def repair_slack(samples: MeasurementSet) -> float:
    """Tour-length allowance for repaired samples: one out-and-back hop each."""
    return 2.0 * math.sqrt(3.0) * samples.r_min_used * samples.count(REPAIR)
