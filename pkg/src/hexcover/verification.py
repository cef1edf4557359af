"""Feasibility certification, bound diagnostics and stochastic cross-checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import linalg
from scipy.spatial import cKDTree

from . import geometry as geo
from .field_model import (
    FieldParams,
    PlanningQuery,
    SingularSystemError,
    compute_r_max,
    compute_r_min,
    covariance,
    estimation_error,
    pairwise_distances,
)

# error values are compared with this slack relative to sigma0^2
ERROR_RTOL = 1e-9
DEFAULT_MAX_NEIGHBORS = 32
GRID_DIVISOR = 20

TOUR_UPPER_CONSTANT = 15.6
TOUR_RATIO_CONSTANT = 70.2


@dataclass
class FeasibilityResult:
    feasible: bool
    worst_point: geo.Point2
    worst_error: float
    grid_step: float
    points_checked: int
    delta: float
    max_neighbors: int

    def as_dict(self) -> dict:
        d = asdict(self)
        d["worst_point"] = list(self.worst_point)
        return d


def default_grid_step(params: FieldParams, delta: float) -> float:
    return min(compute_r_min(params, delta), compute_r_max(params)) / GRID_DIVISOR


def check_feasibility(env: geo.Environment, samples, params: FieldParams, delta: float,
                      grid_step: float | None = None,
                      max_neighbors: int = DEFAULT_MAX_NEIGHBORS) -> FeasibilityResult:
    """Worst kriging error over a boundary-inclusive grid of ``env``.

    Grid points are grouped by their nearest sample. Each group is evaluated
    with the exact kernel against a local neighbourhood: that nearest sample
    plus the samples around it (at most ``max_neighbors`` in total, nearest
    first, restricted to the effective range). One Cholesky factor per
    neighbourhood serves the whole group. Leaving samples out can only raise
    the error, so the values are upper bounds on the full-set error and a
    pass certifies every grid point.
    """
    pts = geo.as_array(samples.points if hasattr(samples, "points") else samples)
    step = grid_step if grid_step is not None else default_grid_step(params, delta)
    grid = geo.grid_points(env, step)
    s0 = params.sigma0_sq
    tol = ERROR_RTOL * s0
    if len(pts) == 0:
        p = geo.Point2(float(grid[0, 0]), float(grid[0, 1]))
        return FeasibilityResult(s0 <= delta + tol, p, s0, step, len(grid), delta, max_neighbors)
    if params.noise_var == 0.0 and len(np.unique(pts, axis=0)) != len(pts):
        raise SingularSystemError("duplicate sample points with zero noise variance")
    tree = cKDTree(pts)
    _, nearest = tree.query(grid, k=1)
    k = min(max_neighbors, len(pts))
    nd, nbrs = tree.query(pts, k=k)
    nd, nbrs = nd.reshape(len(pts), k), nbrs.reshape(len(pts), k)
    r_max = compute_r_max(params)
    order = np.argsort(nearest, kind="stable")
    bounds = np.searchsorted(nearest[order], np.arange(len(pts) + 1))
    worst, worst_at = -math.inf, 0
    for s in range(len(pts)):
        members = order[bounds[s]:bounds[s + 1]]
        if len(members) == 0:
            continue
        local = nbrs[s][nd[s] <= r_max]
        near = pts[local]
        gram = covariance(pairwise_distances(near, near), params) + params.noise_var * np.eye(len(local))
        try:
            chol = linalg.cholesky(gram, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
        cross = covariance(pairwise_distances(near, grid[members]), params)
        y = linalg.solve_triangular(chol, cross, lower=True, check_finite=False)
        errs = np.clip(s0 - np.einsum("km,km->m", y, y), 0.0, s0)
        j = int(np.argmax(errs))
        if errs[j] > worst:
            worst, worst_at = float(errs[j]), int(members[j])
    p = geo.Point2(float(grid[worst_at, 0]), float(grid[worst_at, 1]))
    return FeasibilityResult(worst <= delta + tol, p, worst, step, len(grid), delta, max_neighbors)


# -- counterexample -----------------------------------------------------------

def prior_radius_bound(params: FieldParams, delta: float) -> float:
    """Radius from the disproved necessary condition: L * sqrt(-log(1 - delta / sigma0^2))."""
    return params.length_scale * math.sqrt(-math.log(1.0 - delta / params.sigma0_sq))


def counterexample_check() -> dict:
    """Four samples outside the claimed radius still beat the tolerance.

    Unit hyperparameters, unit noise, tolerance 0.5 at the origin; samples
    sit on the axes one unit beyond the claimed radius. Uses the exact kernel.
    """
    params = FieldParams(1.0, 1.0, 1.0)
    delta = 0.5
    rhs = prior_radius_bound(params, delta)
    r_used = 0.93255461
    samples = [(r_used, 0.0), (-r_used, 0.0), (0.0, r_used), (0.0, -r_used)]
    value = estimation_error((0.0, 0.0), samples, params, truncated=False)
    return {
        "rhs_bound": rhs,
        "r_used": r_used,
        "error_value": value,
        "delta": delta,
        "contradiction": bool(r_used > rhs and value < delta),
    }


# -- bounds -------------------------------------------------------------------

@dataclass
class BoundsReport:
    sample_lower_bound: int
    sample_upper_bound: float
    tour_lower_bound: float
    tour_upper_bound: float
    realized_sample_ratio: float
    realized_tour_ratio: float | None
    alpha_samples: float
    alpha_tour: float

    def as_dict(self) -> dict:
        return asdict(self)


def compute_bounds(env: geo.Environment, query: PlanningQuery, samples, tour=None) -> BoundsReport:
    """Leading-constant bounds on samples and tour length for ``env``.

    ``tour`` is the raw Christofides tour (or its length). The lower bounds
    hold for any feasible solution; the upper bounds are what the hexagonal
    construction guarantees when the boundary needs no repair.
    """
    a = geo.area(env)
    r_min, r_max = query.r_min, query.r_max
    n = len(samples.points if hasattr(samples, "points") else geo.as_array(samples))
    lower = max(1, math.ceil(a / (math.pi * r_max * r_max)))
    tour_lower = (2.0 / 9.0) * a / (math.pi * r_max)
    tour_len = None
    if tour is not None:
        tour_len = float(tour.length if hasattr(tour, "length") else tour)
    return BoundsReport(
        sample_lower_bound=lower,
        sample_upper_bound=3.0 * a / (math.pi * r_min * r_min),
        tour_lower_bound=tour_lower,
        tour_upper_bound=TOUR_UPPER_CONSTANT * a / (math.pi * r_min),
        realized_sample_ratio=n / lower,
        realized_tour_ratio=None if tour_len is None else tour_len / max(tour_lower, np.finfo(float).eps),
        alpha_samples=3.0 * r_max * r_max / (r_min * r_min),
        alpha_tour=TOUR_RATIO_CONSTANT * r_max / r_min,
    )


# -- Monte Carlo oracle ---------------------------------------------------------

def monte_carlo_mse(x, samples, params: FieldParams, trials: int = 20000, seed: int = 0,
                    chunk: int = 10000) -> dict:
    """Empirical mean squared error of the linear kriging predictor.

    Simulates the field jointly at ``x`` and the sample locations, adds
    measurement noise to the samples, predicts with the kriging weights and
    averages the squared prediction error. Uses a counter-based Philox
    generator so results are reproducible from ``seed``.
    """
    if trials < 1000:
        raise ValueError("monte_carlo_mse needs at least 1000 trials")
    pts = geo.as_array(samples)
    if len(pts) > 200:
        raise ValueError("too many samples for dense simulation (max 200)")
    x = np.asarray(x, dtype=float).reshape(1, 2)
    rng = np.random.Generator(np.random.Philox(seed))
    n = len(pts)
    allp = np.vstack([x, pts])
    joint = covariance(pairwise_distances(allp, allp), params)
    try:
        chol = np.linalg.cholesky(joint + 1e-12 * params.sigma0_sq * np.eye(n + 1))
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    if n:
        gram = joint[1:, 1:] + params.noise_var * np.eye(n)
        try:
            weights = linalg.cho_solve(linalg.cho_factor(gram, lower=True), joint[1:, 0])
        except linalg.LinAlgError as exc:
            raise SingularSystemError(str(exc)) from exc
    total = total_sq = 0.0
    noise_sd = math.sqrt(params.noise_var)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        z = rng.standard_normal((m, n + 1)) @ chol.T
        if n:
            obs = z[:, 1:] + noise_sd * rng.standard_normal((m, n))
            err = obs @ weights - z[:, 0]
        else:
            err = -z[:, 0]
        sq = err * err
        total += float(sq.sum())
        total_sq += float((sq * sq).sum())
        done += m
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) * trials / (trials - 1)
    return {"empirical_mse": mean, "standard_error": math.sqrt(var / trials), "trials": trials, "seed": seed}
