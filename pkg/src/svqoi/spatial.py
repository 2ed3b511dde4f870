"""Distributions over street-grid cells and the distance measures between
them: Jensen-Shannon divergence, exact earth mover's distance via a dense
transportation simplex, and a seeded sliced-Wasserstein approximation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

EXACT_CELL_LIMIT = 1024
DEFAULT_DIRECTIONS = 128

_MASS_TOL = 1e-9


class SpatialError(ValueError):
    """Invalid distribution, metric, or solver request."""


@dataclass(frozen=True)
class Distribution:
    """Mass over a region's grid cells: sums to 1, or to 0 when empty."""

    region_id: str
    mass: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        object.__setattr__(self, "mass", m)
        if m.ndim != 1:
            raise SpatialError("mass must be a vector")
        if (m < 0).any():
            raise SpatialError("negative mass")
        total = float(m.sum())
        if total != 0.0 and abs(total - 1.0) > _MASS_TOL:
            raise SpatialError(f"mass sums to {total!r}; expected 1 (or all zero)")

    @property
    def empty(self) -> bool:
        return float(self.mass.sum()) == 0.0

    def __len__(self) -> int:
        return len(self.mass)


@dataclass(frozen=True)
class SpatialResult:
    region_id: str
    metric: str  # canonical: jsd | wasserstein_exact | wasserstein_sliced
    distance: float


_METRIC_ALIASES = {
    "jsd": "jsd",
    "emd": "wasserstein_exact",
    "wasserstein_exact": "wasserstein_exact",
    "sliced": "wasserstein_sliced",
    "wasserstein_sliced": "wasserstein_sliced",
}


def observed_histogram(counts, region_id: str = "") -> Distribution:
    """Per-cell sample counts normalized to total mass 1; all-zero counts
    yield the empty distribution."""
    c = np.asarray(counts, dtype=float)
    if (c < 0).any():
        raise SpatialError("negative count")
    total = float(c.sum())
    return Distribution(region_id, c / total if total > 0 else np.zeros_like(c))


def reference_uniform(grid, region_id: str | None = None) -> Distribution:
    """Uniform mass 1/N over the cells of `grid` (a StreetGrid or a cell count)."""
    n = getattr(grid, "n_cells", None)
    if n is None:
        n = int(grid)
    if region_id is None:
        region_id = getattr(grid, "region_id", "")
    if n <= 0:
        raise SpatialError("reference_uniform: empty grid")
    return Distribution(region_id, np.full(n, 1.0 / n))


def jsd(p, q) -> float:
    """Jensen-Shannon divergence in bits: 1/2 KL(P||M) + 1/2 KL(Q||M) with
    M = (P+Q)/2, base-2 logs, and 0*log0 := 0. Range [0, 1]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise SpatialError("jsd: length mismatch")
    m = 0.5 * (p + q)

    def kl(a):
        nz = a > 0
        return float((a[nz] * np.log2(a[nz] / m[nz])).sum())

    v = 0.5 * kl(p) + 0.5 * kl(q)
    return min(1.0, max(0.0, v))


# ---------------------------------------------------------------------------
# Exact earth mover's distance


def emd_exact(p, q, centroids_xy, limit: int = EXACT_CELL_LIMIT) -> float:
    """Exact W1 between histograms sharing support points `centroids_xy`,
    under Euclidean ground cost, by the transportation simplex."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    xy = np.asarray(centroids_xy, dtype=float)
    if xy.ndim == 1:
        xy = xy[:, None]
    if not (len(p) == len(q) == len(xy)):
        raise SpatialError("emd_exact: length mismatch")
    if len(p) > limit:
        raise SpatialError(
            f"emd_exact: {len(p)} cells exceeds the exact-solver limit {limit}; "
            "use the sliced variant"
        )
    sp, sq = float(p.sum()), float(q.sum())
    if abs(sp - sq) > _MASS_TOL:
        raise SpatialError(f"emd_exact: unbalanced mass ({sp} vs {sq})")
    if sp <= 0.0 or sq <= 0.0:
        raise SpatialError("emd_exact: zero total mass")
    ip = np.flatnonzero(p > 0)
    iq = np.flatnonzero(q > 0)
    # rescale away the <= 1e-9 imbalance so the problem is exactly feasible
    a = p[ip]
    b = q[iq] * (sp / sq)
    cost = cdist(xy[ip], xy[iq])
    return _transport_simplex(a, b, cost)


def _transport_simplex(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> float:
    """Minimal transport cost moving supplies `a` to demands `b` (balanced,
    all entries > 0). Dense transportation simplex: northwest-corner start,
    u-v potentials by BFS over the basis tree, most-negative entering cell
    with a Bland fallback against cycling."""
    n, m = len(a), len(b)
    if n == 1:
        return float((b * cost[0]).sum())
    if m == 1:
        return float((a * cost[:, 0]).sum())

    x = np.zeros((n, m))
    basis: list[tuple[int, int]] = []
    ar, br = a.copy(), b.copy()
    i = j = 0
    while True:
        basis.append((i, j))
        t = ar[i] if ar[i] <= br[j] else br[j]
        x[i, j] = t
        ar[i] -= t
        br[j] -= t
        if i == n - 1 and j == m - 1:
            break
        # advance exactly one index per step: the staircase path then has
        # n + m - 1 cells and is a spanning tree even under degeneracy
        if j == m - 1:
            i += 1
        elif i == n - 1:
            j += 1
        elif ar[i] == 0.0:
            i += 1
        else:
            j += 1

    tol = 1e-12 * max(1.0, float(cost.max()))
    bland_after = 50 * (n + m) + 500
    max_iter = 1_000_000
    for it in range(max_iter):
        u, v = _potentials(basis, cost, n, m)
        red = cost - u[:, None] - v[None, :]
        if it < bland_after:
            e = int(np.argmin(red))
            if red.flat[e] >= -tol:
                break
        else:  # Bland's rule: guaranteed finite termination
            negs = np.flatnonzero(red.ravel() < -tol)
            if len(negs) == 0:
                break
            e = int(negs[0])
        ei, ej = divmod(e, m)
        cycle = _pivot_cycle(basis, ei, ej, n)
        minus = cycle[1::2]
        theta = min(x[c] for c in minus)
        leave = min(c for c in minus if x[c] == theta)
        for k, c in enumerate(cycle):
            if k % 2 == 0:
                x[c] += theta
            else:
                x[c] -= theta
        x[leave] = 0.0
        basis.remove(leave)
        basis.append((ei, ej))
    else:
        raise SpatialError("transportation simplex failed to converge")
    return float((x * cost).sum())


def _potentials(basis, cost, n, m):
    """Solve u_i + v_j = cost_ij over the basis tree, anchored at u_0 = 0."""
    adj: list[list[int]] = [[] for _ in range(n + m)]
    for (i, j) in basis:
        adj[i].append(n + j)
        adj[n + j].append(i)
    u = np.empty(n)
    v = np.empty(m)
    seen = np.zeros(n + m, dtype=bool)
    u[0] = 0.0
    seen[0] = True
    dq = deque([0])
    while dq:
        node = dq.popleft()
        for nb in adj[node]:
            if seen[nb]:
                continue
            seen[nb] = True
            if node < n:
                v[nb - n] = cost[node, nb - n] - u[node]
            else:
                u[nb] = cost[nb, node - n] - v[node - n]
            dq.append(nb)
    return u, v


def _pivot_cycle(basis, ei, ej, n):
    """Cells of the unique cycle created by adding (ei, ej) to the basis
    tree, starting with the entering cell; signs alternate +,-,+,-,..."""
    adj: dict[int, list[int]] = {}
    for (i, j) in basis:
        adj.setdefault(i, []).append(n + j)
        adj.setdefault(n + j, []).append(i)
    target = n + ej
    parent = {ei: -1}
    dq = deque([ei])
    while dq:
        node = dq.popleft()
        if node == target:
            break
        for nb in adj.get(node, ()):
            if nb not in parent:
                parent[nb] = node
                dq.append(nb)
    path = [target]
    while path[-1] != ei:
        path.append(parent[path[-1]])
    path.reverse()  # row ei ... col target, alternating row/col nodes
    cells = [(ei, ej)]
    for k in range(len(path) - 1):
        s, t = path[k], path[k + 1]
        cells.append((s, t - n) if s < n else (t, s - n))
    return cells


# ---------------------------------------------------------------------------
# Sliced approximation


def sliced_wasserstein(p, q, centroids_xy, n_directions: int = DEFAULT_DIRECTIONS,
                       seed: int = 0) -> float:
    """Mean 1D W1 over `n_directions` seeded random projections, scaled by
    pi/2 so pure translations match the exact 2D distance in expectation.
    Deterministic for a fixed seed."""
    if n_directions < 1:
        raise SpatialError("sliced_wasserstein: need at least one direction")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    xy = np.asarray(centroids_xy, dtype=float).reshape(len(p), -1)
    if not (len(p) == len(q) == len(xy)):
        raise SpatialError("sliced_wasserstein: length mismatch")
    if len(p) < 2:
        return 0.0
    sq = float(q.sum())
    diff = p - (q * (float(p.sum()) / sq) if sq > 0 else q)

    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, int(n_directions))
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    proj = xy @ dirs.T  # (cells, K)
    order = np.argsort(proj, axis=0, kind="stable")
    t_sorted = np.take_along_axis(proj, order, axis=0)
    cum = np.cumsum(diff[order], axis=0)[:-1]
    gaps = np.diff(t_sorted, axis=0)
    w1 = (np.abs(cum) * gaps).sum(axis=0)  # fixed direction order
    return float(w1.mean() * (np.pi / 2.0))


# ---------------------------------------------------------------------------
# Dispatch


def spatial_distance(P: Distribution, Q: Distribution, metric: str, grid=None, *,
                     n_directions: int = DEFAULT_DIRECTIONS, seed: int = 0,
                     exact_limit: int = EXACT_CELL_LIMIT) -> SpatialResult:
    """Distance between reference P and observed Q under the chosen metric.

    An empty observed distribution scores the defined maximum — 1.0 for JSD,
    the grid diameter in meters for the Wasserstein variants — so a window
    with no data ranks strictly worst.
    """
    canon = _METRIC_ALIASES.get(metric)
    if canon is None:
        raise SpatialError(f"unknown metric {metric!r}")
    rid = P.region_id or Q.region_id
    if canon != "jsd" and grid is None:
        raise SpatialError(f"metric {metric!r} requires a grid")
    if P.empty or Q.empty:
        d = 1.0 if canon == "jsd" else float(grid.diameter_m())
        return SpatialResult(rid, canon, d)
    if canon == "jsd":
        d = jsd(P.mass, Q.mass)
    elif canon == "wasserstein_exact":
        d = emd_exact(P.mass, Q.mass, grid.centroid_xy, limit=exact_limit)
    else:
        d = sliced_wasserstein(P.mass, Q.mass, grid.centroid_xy, n_directions, seed)
    return SpatialResult(rid, canon, d)
