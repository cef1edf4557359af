"""Convex planar environments, hexagonal tilings and covering/packing checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree

SQRT3 = math.sqrt(3.0)

# relative slack for boundary-inclusive membership tests
_CONTAINS_RTOL = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


def as_array(points) -> np.ndarray:
    """Coerce a point or sequence of points to an (n, 2) float array."""
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 2))
    arr = arr.reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True, eq=False)
class Environment:
    """Compact convex region stored as a counter-clockwise vertex list.

    Use :meth:`rectangle` or :meth:`polygon` to build one.
    """

    vertices: np.ndarray
    kind: str = "polygon"

    @classmethod
    def rectangle(cls, width: float, height: float, origin: Sequence[float] = (0.0, 0.0)) -> "Environment":
        if not (width > 0 and height > 0):
            raise ValueError(f"rectangle needs positive sides, got {width} x {height}")
        x0, y0 = float(origin[0]), float(origin[1])
        verts = np.array([[x0, y0], [x0 + width, y0], [x0 + width, y0 + height], [x0, y0 + height]])
        return cls(verts, "rectangle")

    @classmethod
    def polygon(cls, vertices: Iterable[Sequence[float]]) -> "Environment":
        verts = as_array(list(vertices))
        if len(verts) < 3:
            raise ValueError("a polygon needs at least three vertices")
        cross = _edge_cross(verts)
        if np.all(cross < 0):
            verts = verts[::-1].copy()
            cross = _edge_cross(verts)
        if not np.all(cross > 0):
            raise ValueError("polygon must be strictly convex with non-empty interior")
        return cls(verts, "polygon")

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @property
    def width(self) -> float:
        x0, _, x1, _ = self.bounds
        return x1 - x0

    @property
    def height(self) -> float:
        _, y0, _, y1 = self.bounds
        return y1 - y0

    @property
    def scale(self) -> float:
        return max(self.width, self.height)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        start = self.vertices
        end = np.roll(self.vertices, -1, axis=0)
        return start, end


def _edge_cross(verts: np.ndarray) -> np.ndarray:
    e = np.roll(verts, -1, axis=0) - verts
    f = np.roll(e, -1, axis=0)
    return e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0]


def area(env: Environment) -> float:
    if env.kind == "rectangle":
        return env.width * env.height
    x, y = env.vertices[:, 0], env.vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def perimeter(env: Environment) -> float:
    start, end = env.edges()
    return float(np.hypot(*(end - start).T).sum())


def minkowski_area(env: Environment, radius: float) -> float:
    """Area of the convex set dilated by a disk of the given radius (Steiner formula)."""
    return area(env) + perimeter(env) * radius + math.pi * radius * radius


def _signed_offsets(env: Environment, pts: np.ndarray) -> np.ndarray:
    # (m, n_edges) cross products; >= 0 on the inner side of every edge
    start, end = env.edges()
    e = end - start
    rel = pts[:, None, :] - start[None, :, :]
    lengths = np.hypot(e[:, 0], e[:, 1])
    return (e[None, :, 0] * rel[..., 1] - e[None, :, 1] * rel[..., 0]) / lengths[None, :]


def contains_many(env: Environment, points) -> np.ndarray:
    pts = as_array(points)
    if env.kind == "rectangle":
        x0, y0, x1, y1 = env.bounds
        tol = _CONTAINS_RTOL * env.scale
        return (
            (pts[:, 0] >= x0 - tol) & (pts[:, 0] <= x1 + tol) & (pts[:, 1] >= y0 - tol) & (pts[:, 1] <= y1 + tol)
        )
    return np.all(_signed_offsets(env, pts) >= -_CONTAINS_RTOL * env.scale, axis=1)


def contains(env: Environment, p) -> bool:
    """Closed-region membership, boundary inclusive."""
    return bool(contains_many(env, p)[0])


def project_many(env: Environment, points) -> np.ndarray:
    pts = as_array(points)
    if env.kind == "rectangle":
        x0, y0, x1, y1 = env.bounds
        return np.column_stack([np.clip(pts[:, 0], x0, x1), np.clip(pts[:, 1], y0, y1)])
    out = pts.copy()
    inside = contains_many(env, pts)
    outside = pts[~inside]
    if len(outside):
        start, end = env.edges()
        e = end - start
        rel = outside[:, None, :] - start[None, :, :]
        t = np.clip(np.einsum("mkd,kd->mk", rel, e) / np.einsum("kd,kd->k", e, e)[None, :], 0.0, 1.0)
        cand = start[None, :, :] + t[..., None] * e[None, :, :]
        d = np.hypot(*(cand - outside[:, None, :]).transpose(2, 0, 1))
        best = np.argmin(d, axis=1)
        out[~inside] = cand[np.arange(len(outside)), best]
    return out


def project_to(env: Environment, p) -> Point2:
    """Nearest point of the environment to ``p`` (``p`` itself when inside)."""
    q = project_many(env, p)[0]
    return Point2(float(q[0]), float(q[1]))


def distance_to_env(env: Environment, points) -> np.ndarray:
    pts = as_array(points)
    return np.hypot(*(project_many(env, pts) - pts).T)


def fits_ball(env: Environment, radius: float) -> bool:
    """Whether a closed disk of ``radius`` fits inside the environment."""
    if env.kind == "rectangle":
        return min(env.width, env.height) >= 2.0 * radius
    # Chebyshev center: maximise r subject to n_i . x + r <= c_i
    start, end = env.edges()
    e = end - start
    normals = np.column_stack([e[:, 1], -e[:, 0]]) / np.hypot(e[:, 0], e[:, 1])[:, None]
    rhs = np.einsum("kd,kd->k", normals, start)
    res = linprog([0.0, 0.0, -1.0], A_ub=np.column_stack([normals, np.ones(len(e))]), b_ub=rhs,
                  bounds=[(None, None), (None, None), (0, None)], method="highs")
    return bool(res.success and -res.fun >= radius)


# -- hexagonal tiling -------------------------------------------------------

def _hexagon_hits_env(env: Environment, centers: np.ndarray, edge: float) -> np.ndarray:
    # separating-axis test between flat-topped hexagons and the convex polygon
    angles = np.deg2rad([0, 60, 120, 180, 240, 300])
    hex_offsets = edge * np.column_stack([np.cos(angles), np.sin(angles)])
    start, end = env.edges()
    e = end - start
    axes = [np.array([math.cos(a), math.sin(a)]) for a in np.deg2rad([30, 90, 150])]
    axes += [np.array([v[1], -v[0]]) / math.hypot(*v) for v in e]
    hit = np.ones(len(centers), dtype=bool)
    tol = 1e-12 * max(env.scale, edge)
    for axis in axes:
        env_proj = env.vertices @ axis
        lo_e, hi_e = env_proj.min(), env_proj.max()
        c_proj = centers @ axis
        h_proj = hex_offsets @ axis
        lo_h = c_proj + h_proj.min()
        hi_h = c_proj + h_proj.max()
        hit &= (hi_h >= lo_e - tol) & (lo_h <= hi_e + tol)
    return hit


def lattice_centers(bounds: tuple[float, float, float, float], edge: float) -> np.ndarray:
    """Flat-topped hexagonal lattice centers spanning ``bounds`` with one cell of margin.

    Columns sit 1.5*edge apart with rows sqrt(3)*edge apart; odd columns are
    shifted up by half a row. The lattice is anchored at the lower-left corner
    plus (edge, sqrt(3)*edge/2).
    """
    x0, y0, x1, y1 = bounds
    row = SQRT3 * edge
    ax, ay = x0 + edge, y0 + row / 2.0
    c_lo = math.floor((x0 - 2 * edge - ax) / (1.5 * edge))
    c_hi = math.ceil((x1 + 2 * edge - ax) / (1.5 * edge))
    k_lo = math.floor((y0 - 2 * row - ay) / row)
    k_hi = math.ceil((y1 + 2 * row - ay) / row)
    cols = np.arange(c_lo, c_hi + 1)
    rows = np.arange(k_lo, k_hi + 1)
    cc, kk = np.meshgrid(cols, rows, indexing="ij")
    xs = ax + 1.5 * edge * cc
    ys = ay + row * (kk + 0.5 * np.mod(cc, 2))
    return np.column_stack([xs.ravel(), ys.ravel()])


def hexagonal_tiling(env: Environment, edge: float, keep: str = "circle") -> list[Point2]:
    """Centers of a hexagonal tiling with the given edge length laid over ``env``.

    ``keep="circle"`` retains every center whose circumscribed circle meets
    the environment; ``keep="hexagon"`` retains only centers whose hexagon
    meets it (the minimal subset that still tiles the environment). Either way
    the radius-``edge`` disks around the returned centers cover ``env``.
    Centers may lie outside ``env``.
    """
    return [Point2(float(x), float(y)) for x, y in hexagonal_tiling_array(env, edge, keep)]


def hexagonal_tiling_array(env: Environment, edge: float, keep: str = "circle") -> np.ndarray:
    if not edge > 0:
        raise ValueError(f"edge must be positive, got {edge}")
    centers = lattice_centers(env.bounds, edge)
    if keep == "circle":
        mask = distance_to_env(env, centers) <= edge * (1 + 1e-12)
    elif keep == "hexagon":
        mask = _hexagon_hits_env(env, centers, edge)
    else:
        raise ValueError(f"unknown keep rule {keep!r}")
    return centers[mask]


# -- grids, covering and packing --------------------------------------------

def grid_points(env: Environment, step: float) -> np.ndarray:
    """Boundary-inclusive grid over ``env`` in row-major scan order.

    The spacing along each axis is at most ``step``. Polygon boundaries are
    additionally sampled at spacing at most ``step``.
    """
    if not step > 0:
        raise ValueError(f"grid step must be positive, got {step}")
    x0, y0, x1, y1 = env.bounds
    xs = np.linspace(x0, x1, max(2, math.ceil((x1 - x0) / step) + 1))
    ys = np.linspace(y0, y1, max(2, math.ceil((y1 - y0) / step) + 1))
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    if env.kind == "rectangle":
        return pts
    pts = pts[contains_many(env, pts)]
    start, end = env.edges()
    border = [pts]
    for a, b in zip(start, end):
        n = max(1, math.ceil(math.hypot(*(b - a)) / step))
        t = np.arange(n)[:, None] / n
        border.append(a[None, :] + t * (b - a)[None, :])
    pts = np.vstack(border)
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    return pts[order]


@dataclass(frozen=True, eq=False)
class Cover:
    centers: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "centers", as_array(self.centers))
        if not self.radius > 0:
            raise ValueError(f"cover radius must be positive, got {self.radius}")


def uncovered_mask(centers, radius: float, pts: np.ndarray) -> np.ndarray:
    """True where a query point is farther than ``radius`` from every center."""
    centers = as_array(centers)
    if len(centers) == 0:
        return np.ones(len(pts), dtype=bool)
    d, _ = cKDTree(centers).query(pts, k=1)
    return d > radius * (1 + 1e-12)


def is_covering(cover: Cover, env: Environment, grid_step: float) -> bool:
    """Grid check that every point of ``env`` is within ``cover.radius`` of a center."""
    pts = grid_points(env, grid_step)
    return not bool(uncovered_mask(cover.centers, cover.radius, pts).any())


def is_packing(points, r: float) -> bool:
    """True iff all pairwise distances strictly exceed ``r``."""
    pts = as_array(points)
    if len(pts) < 2:
        return True
    return not cKDTree(pts).query_pairs(r)


def min_pairwise_distance(points) -> float:
    pts = as_array(points)
    if len(pts) < 2:
        return math.inf
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(d[:, 1].min())


def maximal_packing(points, r: float) -> list[Point2]:
    """Greedy maximal ``r``-packing drawn from ``points`` in input order."""
    return [Point2(float(x), float(y)) for x, y in as_array(points)[maximal_packing_indices(points, r)]]


def maximal_packing_indices(points, r: float) -> list[int]:
    pts = as_array(points)
    cells: dict[tuple[int, int], list[int]] = {}
    chosen: list[int] = []
    cell = r if r > 0 else 1.0
    for i, (x, y) in enumerate(pts):
        cx, cy = math.floor(x / cell), math.floor(y / cell)
        ok = True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for j in cells.get((cx + dx, cy + dy), ()):
                    if math.hypot(x - pts[j, 0], y - pts[j, 1]) <= r:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            chosen.append(i)
            cells.setdefault((cx, cy), []).append(i)
    return chosen
