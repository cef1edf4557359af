"""Euclidean TSP tours: Christofides, 2-opt improvement and a Held-Karp oracle."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import as_array

log = logging.getLogger(__name__)

HELD_KARP_LIMIT = 15
DEFAULT_GREEDY_THRESHOLD = 5000


class TourSizeError(ValueError):
    pass


@dataclass
class Tour:
    """Closed tour over point indices.

    ``matching`` records how the odd-vertex matching was computed
    ("exact", "greedy", or "none" when the tour did not come from
    Christofides), since only the exact mode carries the 3/2 guarantee.
    """

    order: list[int]
    length: float
    matching: str = "none"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.order)


def tour_length(order, points) -> float:
    """Length of the closed cycle visiting ``points`` in ``order``."""
    pts = as_array(points)
    order = [int(i) for i in order]
    if sorted(order) != list(range(len(pts))):
        raise ValueError("order must be a permutation of the point indices")
    if len(order) < 2:
        return 0.0
    seq = pts[order]
    diff = np.roll(seq, -1, axis=0) - seq
    return float(np.hypot(diff[:, 0], diff[:, 1]).sum())


def euclidean_mst(points) -> list[tuple[int, int]]:
    """Minimum spanning tree of the complete Euclidean graph (dense Prim)."""
    pts = as_array(points)
    n = len(pts)
    if n < 2:
        return []
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1)
    best[0] = 0.0
    edges = []
    for _ in range(n):
        u = int(np.argmin(np.where(in_tree, np.inf, best)))
        in_tree[u] = True
        if parent[u] >= 0:
            edges.append((int(parent[u]), u))
        d = np.hypot(pts[:, 0] - pts[u, 0], pts[:, 1] - pts[u, 1])
        closer = ~in_tree & (d < best)
        best[closer] = d[closer]
        parent[closer] = u
    return edges


def odd_degree_vertices(n: int, edges) -> list[int]:
    deg = np.zeros(n, dtype=int)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    odd = [int(i) for i in np.nonzero(deg % 2)[0]]
    assert len(odd) % 2 == 0, "handshake lemma violated"
    return odd


def exact_matching(points) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching on the complete Euclidean graph.

    Delegates to the sparse-blossom solver in ``pymatching``. Every point is
    flagged, so the solver pairs them all; because Euclidean distance obeys
    the triangle inequality the shortest path between two vertices is the
    direct edge, and the result is a perfect matching of minimum weight.
    """
    import pymatching

    pts = as_array(points)
    n = len(pts)
    if n % 2:
        raise ValueError("perfect matching needs an even number of vertices")
    if n == 0:
        return []
    if n == 2:
        return [(0, 1)]
    matcher = pymatching.Matching()
    for i in range(n - 1):
        d = np.hypot(pts[i + 1:, 0] - pts[i, 0], pts[i + 1:, 1] - pts[i, 1])
        for j, w in enumerate(d.tolist(), start=i + 1):
            matcher.add_edge(i, j, weight=w, merge_strategy="replace")
    pairs = matcher.decode_to_matched_dets_array(np.ones(n, dtype=np.uint8))
    return [(int(a), int(b)) for a, b in pairs]


def greedy_matching(points, k: int = 10) -> list[tuple[int, int]]:
    """Greedy shortest-edge perfect matching over k-nearest-neighbour candidates.

    No approximation guarantee; used only above the exact-matching threshold.
    """
    pts = as_array(points)
    n = len(pts)
    if n % 2:
        raise ValueError("perfect matching needs an even number of vertices")
    free = np.arange(n)
    pairs = []
    while len(free):
        if len(free) == 2:
            pairs.append((int(free[0]), int(free[1])))
            break
        sub = pts[free]
        kk = min(k + 1, len(free))
        d, idx = cKDTree(sub).query(sub, k=kk)
        cand = sorted(
            (float(d[i, j]), int(i), int(idx[i, j])) for i in range(len(free)) for j in range(1, kk) if i < idx[i, j]
        )
        used = np.zeros(len(free), dtype=bool)
        for _, a, b in cand:
            if not used[a] and not used[b]:
                used[a] = used[b] = True
                pairs.append((int(free[a]), int(free[b])))
        free = free[~used]
    return pairs


def euler_circuit(n: int, edges, start: int = 0) -> list[int]:
    """Hierholzer's algorithm on a connected multigraph with all degrees even."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for eid, (a, b) in enumerate(edges):
        adj[a].append((b, eid))
        adj[b].append((a, eid))
    used = [False] * len(edges)
    ptr = [0] * n
    stack = [start]
    circuit = []
    while stack:
        v = stack[-1]
        while ptr[v] < len(adj[v]) and used[adj[v][ptr[v]][1]]:
            ptr[v] += 1
        if ptr[v] == len(adj[v]):
            circuit.append(stack.pop())
        else:
            w, eid = adj[v][ptr[v]]
            used[eid] = True
            stack.append(w)
    circuit.reverse()
    return circuit


def shortcut(circuit) -> list[int]:
    seen = set()
    order = []
    for v in circuit:
        if v not in seen:
            seen.add(v)
            order.append(v)
    return order


def christofides(points, matching: str = "exact", greedy_threshold: int = DEFAULT_GREEDY_THRESHOLD) -> Tour:
    """Christofides tour: MST, odd-vertex matching, Euler circuit, shortcut.

    With ``matching="exact"`` the odd vertices are matched optimally and the
    tour is within 3/2 of optimal, unless there are more than
    ``greedy_threshold`` odd vertices, in which case the greedy matching is
    used instead and the returned tour is labelled accordingly.
    """
    pts = as_array(points)
    n = len(pts)
    if n == 0:
        raise ValueError("christofides needs at least one point")
    if n == 1:
        return Tour([0], 0.0, "exact")
    if n == 2:
        return Tour([0, 1], tour_length([0, 1], pts), "exact")
    mst = euclidean_mst(pts)
    odd = odd_degree_vertices(n, mst)
    mode = matching
    if mode == "exact" and len(odd) > greedy_threshold:
        log.warning("%d odd vertices exceed threshold %d; using greedy matching, 3/2 bound forfeited",
                    len(odd), greedy_threshold)
        mode = "greedy"
    if mode == "exact":
        pairs = exact_matching(pts[odd])
    elif mode == "greedy":
        pairs = greedy_matching(pts[odd])
    else:
        raise ValueError(f"unknown matching mode {matching!r}")
    multigraph = list(mst) + [(odd[a], odd[b]) for a, b in pairs]
    order = shortcut(euler_circuit(n, multigraph))
    return Tour(order, tour_length(order, pts), mode, {"odd_vertices": len(odd)})


def two_opt(tour: Tour, points, neighbors: int = 12, max_rounds: int = 50) -> Tour:
    """2-opt local search over nearest-neighbour candidate moves.

    Only strictly improving moves are applied, so the length never increases.
    Stops at a local optimum (for the candidate lists) or after ``max_rounds``
    sweeps.
    """
    pts = as_array(points)
    n = len(pts)
    order = list(tour.order)
    if n < 4:
        return Tour(order, tour_length(order, pts), tour.matching, dict(tour.meta))
    xs, ys = pts[:, 0].tolist(), pts[:, 1].tolist()

    def dist(a, b):
        return math.hypot(xs[a] - xs[b], ys[a] - ys[b])

    kk = min(neighbors + 1, n)
    _, nbr = cKDTree(pts).query(pts, k=kk)
    nbr = [[int(j) for j in row[1:]] for row in nbr]
    pos = [0] * n
    for i, v in enumerate(order):
        pos[v] = i
    eps = 1e-10 * max(1.0, float(np.ptp(pts, axis=0).max()))

    def reverse(i, j):
        # reverse order[i..j] inclusive, i <= j
        order[i:j + 1] = order[i:j + 1][::-1]
        for k in range(i, j + 1):
            pos[order[k]] = k

    for _ in range(max_rounds):
        improved = False
        for a in range(n):
            moved = False
            for direction in (1, -1):
                i = pos[a]
                b = order[(i + direction) % n]
                d_ab = dist(a, b)
                for c in nbr[a]:
                    d_ac = dist(a, c)
                    if d_ac >= d_ab - eps:
                        break
                    j = pos[c]
                    d = order[(j + direction) % n]
                    if c == a or c == b or d == a:
                        continue
                    if d_ab + dist(c, d) - d_ac - dist(b, d) > eps:
                        if direction == 1:
                            lo, hi = (i + 1, j) if i < j else (j + 1, i)
                        else:
                            lo, hi = (j, i - 1) if j < i else (i, j - 1)
                        reverse(lo, hi)
                        moved = True
                        break
                if moved:
                    break
            improved |= moved
        if not improved:
            break
    return Tour(order, tour_length(order, pts), tour.matching, dict(tour.meta))


def held_karp_exact(points) -> Tour:
    """Optimal tour by dynamic programming over vertex subsets (n <= 15)."""
    pts = as_array(points)
    n = len(pts)
    if n > HELD_KARP_LIMIT:
        raise TourSizeError(f"held_karp_exact supports at most {HELD_KARP_LIMIT} points, got {n}")
    if n == 0:
        raise ValueError("need at least one point")
    if n <= 3:
        order = list(range(n))
        return Tour(order, tour_length(order, pts))
    D = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1]).tolist()
    m = n - 1  # vertex 0 is the fixed start; subsets range over 1..n-1
    full = 1 << m
    cost = [[math.inf] * m for _ in range(full)]
    back = [[-1] * m for _ in range(full)]
    for j in range(m):
        cost[1 << j][j] = D[0][j + 1]
    for mask in range(1, full):
        row = cost[mask]
        for j in range(m):
            cj = row[j]
            if cj == math.inf or not (mask >> j) & 1:
                continue
            Dj = D[j + 1]
            for k in range(m):
                if (mask >> k) & 1:
                    continue
                nm = mask | (1 << k)
                val = cj + Dj[k + 1]
                if val < cost[nm][k]:
                    cost[nm][k] = val
                    back[nm][k] = j
    last = full - 1
    best_j = min(range(m), key=lambda j: cost[last][j] + D[j + 1][0])
    order = []
    mask, j = last, best_j
    while j != -1:
        order.append(j + 1)
        pj = back[mask][j]
        mask ^= 1 << j
        j = pj
    order.append(0)
    order.reverse()
    return Tour(order, tour_length(order, pts))
