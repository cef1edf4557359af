"""Squared-exponential random field model and kriging estimation error.

All quantities are in SI units: distances in meters, variances in
field-units squared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg


class InfeasibleToleranceError(ValueError):
    """Raised when the requested tolerance cannot be met by any sample set."""


class SingularSystemError(ArithmeticError):
    """Raised when a kriging system cannot be factorized."""


@dataclass(frozen=True)
class FieldParams:
    """Kernel hyperparameters and measurement-noise variance.

    Args:
        sigma0_sq: prior field variance.
        length_scale: kernel length scale L in meters.
        noise_var: variance of the additive measurement noise.
    """

    sigma0_sq: float
    length_scale: float
    noise_var: float = 0.0

    def __post_init__(self):
        for name in ("sigma0_sq", "length_scale", "noise_var"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.sigma0_sq <= 0:
            raise ValueError(f"sigma0_sq must be > 0, got {self.sigma0_sq}")
        if self.length_scale <= 0:
            raise ValueError(f"length_scale must be > 0, got {self.length_scale}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")

    @classmethod
    def from_sigma0(cls, sigma0: float, length_scale: float, noise_var: float = 0.0) -> "FieldParams":
        if not (math.isfinite(sigma0) and sigma0 > 0):
            raise ValueError(f"sigma0 must be > 0, got {sigma0!r}")
        return cls(sigma0 * sigma0, length_scale, noise_var)

    @property
    def sigma0(self) -> float:
        return math.sqrt(self.sigma0_sq)


# Hyperparameters fitted to the organic-matter dataset used in the experiments.
EXPERIMENT_PARAMS = FieldParams.from_sigma0(12.87, 8.33, 0.0361)


def compute_r_max(params: FieldParams) -> float:
    """Effective range sqrt(6) * L, where the covariance drops to 5% of sigma0^2."""
    return math.sqrt(6.0) * params.length_scale


def noise_floor(params: FieldParams) -> float:
    """Smallest error reachable with a single collocated noisy sample."""
    s0 = params.sigma0_sq
    return s0 * params.noise_var / (s0 + params.noise_var)


def covariance(r, params: FieldParams, truncated: bool = False):
    """Squared-exponential covariance at distance ``r``.

    Accepts scalars or arrays. With ``truncated`` the covariance is zero
    beyond the effective range.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise ValueError("distance must be non-negative")
    L = params.length_scale
    out = params.sigma0_sq * np.exp(-(r_arr * r_arr) / (2.0 * L * L))
    if truncated:
        out = np.where(r_arr > compute_r_max(params), 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def compute_r_min(params: FieldParams, delta: float) -> float:
    """Radius within which one sample brings the error down to ``delta``.

    r_min = L * sqrt(-log((s0 - delta) * (s0 + s2) / s0^2)).

    Raises:
        InfeasibleToleranceError: if ``delta`` is outside (noise floor, sigma0^2).
    """
    s0 = params.sigma0_sq
    if not (0.0 < delta < s0):
        raise InfeasibleToleranceError(f"delta must lie in (0, sigma0_sq={s0:g}), got {delta:g}")
    arg = (s0 - delta) * (s0 + params.noise_var) / (s0 * s0)
    if arg >= 1.0:
        raise InfeasibleToleranceError(
            f"delta={delta:g} is at or below the noise floor {noise_floor(params):g}; "
            "even a collocated sample cannot reach it"
        )
    return params.length_scale * math.sqrt(-math.log(arg))


@dataclass(frozen=True)
class PlanningQuery:
    """Error tolerance together with the radii it induces."""

    params: FieldParams
    delta: float
    r_min: float = field(init=False)
    r_max: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "r_min", compute_r_min(self.params, self.delta))
        object.__setattr__(self, "r_max", compute_r_max(self.params))

    @classmethod
    def from_fraction(cls, params: FieldParams, delta_fraction: float) -> "PlanningQuery":
        return cls(params, delta_fraction * params.sigma0_sq)

    @property
    def delta_fraction(self) -> float:
        return self.delta / self.params.sigma0_sq


@dataclass(frozen=True)
class KrigingSystem:
    """Cross-covariance vector and noisy Gram matrix for one test point."""

    cross_cov: np.ndarray
    gram: np.ndarray


def _as_points(samples) -> np.ndarray:
    pts = np.asarray(samples, dtype=float)
    if pts.size == 0:
        return np.zeros((0, 2))
    return pts.reshape(-1, 2)


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def kriging_system(x, samples, params: FieldParams, truncated: bool = False) -> KrigingSystem:
    pts = _as_points(samples)
    x = np.asarray(x, dtype=float).reshape(1, 2)
    b = covariance(pairwise_distances(x, pts)[0], params, truncated)
    gram = covariance(pairwise_distances(pts, pts), params, truncated)
    gram = np.asarray(gram) + params.noise_var * np.eye(len(pts))
    return KrigingSystem(np.asarray(b), gram)


def _check_duplicates(pts: np.ndarray) -> None:
    if len(pts) < 2:
        return
    uniq = np.unique(pts, axis=0)
    if len(uniq) != len(pts):
        raise SingularSystemError("duplicate sample points with zero noise variance")


def estimation_error(x, samples, params: FieldParams, truncated: bool = False) -> float:
    """Kriging estimation error f_x(S) = phi(0) - b' C^{-1} b.

    Solved through a Cholesky factorization of the Gram matrix. In truncated
    mode only samples within the effective range of ``x`` enter the system,
    which is exact there because the rest have zero cross-covariance.
    """
    pts = _as_points(samples)
    s0 = params.sigma0_sq
    if truncated and len(pts):
        d = np.hypot(*(pts - np.asarray(x, dtype=float)).T)
        pts = pts[d <= compute_r_max(params)]
    if len(pts) == 0:
        return s0
    if params.noise_var == 0.0:
        _check_duplicates(pts)
    system = kriging_system(x, pts, params, truncated)
    try:
        factor = linalg.cho_factor(system.gram, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    w = linalg.cho_solve(factor, system.cross_cov, check_finite=False)
    value = s0 - float(system.cross_cov @ w)
    return min(max(value, 0.0), s0)


def single_sample_error(rho, params: FieldParams):
    """Closed-form error with a single sample at distance ``rho``."""
    s0 = params.sigma0_sq
    L = params.length_scale
    rho = np.asarray(rho, dtype=float)
    return s0 - s0 * s0 * np.exp(-(rho * rho) / (L * L)) / (s0 + params.noise_var)
