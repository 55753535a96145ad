"""Torus metric, torus-ball areas, nearest-node lookup and Euclidean MSTs.

All distances on the synthetic deployment are wraparound distances on an
``L x L`` torus.  Spanning trees are computed under the same metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

EARTH_RADIUS_KM = 6371.0
STEINER_RATIO = 2.0 / math.sqrt(3.0)

# Above this many points emst_length switches from dense Prim to Borůvka.
PRIM_MAX_POINTS = 256

TIE_RTOL = 1e-12


def _check_side(L: float) -> None:
    if not L > 0:
        raise ValueError(f"torus side must be positive, got {L!r}")


def torus_delta(ax, ay, bx, by, L):
    """Elementwise torus distance between coordinate arrays.

    Every distance in the package goes through this function so that
    different MST routes see bit-identical edge lengths.
    """
    dx = np.abs(np.asarray(ax, dtype=float) - bx)
    dy = np.abs(np.asarray(ay, dtype=float) - by)
    dx = np.minimum(dx, L - dx)
    dy = np.minimum(dy, L - dy)
    return np.sqrt(dx * dx + dy * dy)


def torus_distance(a, b, L: float) -> float:
    """Wraparound distance between points ``a`` and ``b`` on an ``L``-torus."""
    _check_side(L)
    return float(torus_delta(a[0], a[1], b[0], b[1], L))


def pairwise_torus(points: np.ndarray, L: float) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return torus_delta(pts[:, None, 0], pts[:, None, 1], pts[None, :, 0], pts[None, :, 1], L)


def wrap(points: np.ndarray, L: float) -> np.ndarray:
    """Map coordinates into ``[0, L)``."""
    out = np.mod(points, L)
    # np.mod can round tiny negatives up to exactly L
    out[out >= L] = 0.0
    return out


def max_torus_distance(L: float) -> float:
    return L / math.sqrt(2.0)


def _ball_area(r: np.ndarray, L: float) -> np.ndarray:
    half = 0.5 * L
    area = math.pi * r * r
    big = r > half
    if np.any(big):
        rb = r[big]
        h = np.minimum(half / rb, 1.0)
        segment = rb * rb * np.arccos(h) - half * np.sqrt(np.maximum(rb * rb - half * half, 0.0))
        area[big] = area[big] - 4.0 * segment
    return np.minimum(area, L * L)


def torus_ball_area(r, L: float):
    """Area of the set of torus points within distance ``r`` of a fixed point.

    This is ``pi r^2`` while the disk fits in the fundamental square and the
    disk minus four circular segments once ``r`` passes ``L/2``.  At
    ``r = L/sqrt(2)`` the ball is the whole torus.
    """
    _check_side(L)
    arr = np.asarray(r, dtype=float)
    rmax = max_torus_distance(L)
    if np.any(arr < 0) or np.any(arr > rmax * (1 + 1e-12)):
        raise ValueError(f"radius must lie in [0, {rmax}] for L={L}")
    out = _ball_area(np.minimum(np.atleast_1d(arr), rmax), L)
    return float(out[0]) if arr.ndim == 0 else out


def torus_ball_area_inverse(u, L: float, tol: float | None = None):
    """Radius whose torus-ball area equals ``u``; vectorised bisection."""
    _check_side(L)
    arr = np.asarray(u, dtype=float)
    total = L * L
    if np.any(arr < 0) or np.any(arr > total * (1 + 1e-12)):
        raise ValueError(f"area must lie in [0, {total}] for L={L}")
    flat = np.minimum(np.atleast_1d(arr), total)
    tol = 1e-9 * L if tol is None else tol
    half = 0.5 * L
    r = np.sqrt(flat / math.pi)
    seg = flat > math.pi * half * half
    if np.any(seg):
        target = flat[seg]
        lo = np.full(target.shape, half)
        hi = np.full(target.shape, max_torus_distance(L))
        while np.max(hi - lo) > tol * 1e-3:
            mid = 0.5 * (lo + hi)
            below = _ball_area(mid, L) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        r[seg] = 0.5 * (lo + hi)
    return float(r[0]) if arr.ndim == 0 else r


@dataclass(frozen=True)
class GridIndex:
    """Bucket grid over the torus with ``ncell x ncell`` cells.

    ``buckets`` maps a cell coordinate to the ids of the nodes inside it.  A
    periodic kd-tree over the same points serves batched queries.
    """

    L: float
    cell: float
    ncell: int
    buckets: dict = field(repr=False)
    tree: cKDTree = field(repr=False)

    @classmethod
    def build(cls, positions: np.ndarray, L: float, cell_side: float = 1.0) -> "GridIndex":
        _check_side(L)
        pos = np.asarray(positions, dtype=float)
        ncell = max(1, int(L // cell_side))
        cell = L / ncell
        cells = cls._cells_of(pos, cell, ncell)
        keys = cells[:, 0] * ncell + cells[:, 1]
        order = np.argsort(keys, kind="stable")
        uniq, starts = np.unique(keys[order], return_index=True)
        groups = np.split(order, starts[1:])
        buckets = {(int(k // ncell), int(k % ncell)): g for k, g in zip(uniq, groups)}
        return cls(L=L, cell=cell, ncell=ncell, buckets=buckets, tree=cKDTree(pos, boxsize=L))

    @staticmethod
    def _cells_of(pos: np.ndarray, cell: float, ncell: int) -> np.ndarray:
        return np.minimum((pos // cell).astype(np.int64), ncell - 1)

    def cell_of(self, p) -> tuple[int, int]:
        c = self._cells_of(np.asarray(p, dtype=float)[None, :], self.cell, self.ncell)[0]
        return int(c[0]), int(c[1])

    def ring(self, center: tuple[int, int], radius: int):
        """Cells at Chebyshev distance exactly ``radius`` (wrapped, deduplicated)."""
        cx, cy = center
        if radius == 0:
            return {(cx, cy)}
        out = set()
        for d in range(-radius, radius + 1):
            for a, b in ((d, -radius), (d, radius), (-radius, d), (radius, d)):
                out.add(((cx + a) % self.ncell, (cy + b) % self.ncell))
        return out


def _pick_tied(dists: np.ndarray, ids: np.ndarray, rng) -> int:
    dmin = dists.min()
    tied = ids[dists <= dmin * (1 + TIE_RTOL)]
    if len(tied) == 1 or rng is None:
        return int(tied.min())
    return int(rng.choice(tied))


def nearest_node(p, index: GridIndex, positions: np.ndarray, rng=None) -> int:
    """Id of the node closest to ``p``; near-ties are broken uniformly at random.

    Searches grid rings outward until no unvisited cell can hold a closer node.
    """
    pos = np.asarray(positions, dtype=float)
    if len(pos) == 0:
        raise ValueError("empty deployment")
    p = np.asarray(p, dtype=float)
    center = index.cell_of(p)
    seen: set = set()
    cand: list[np.ndarray] = []
    best = math.inf
    max_ring = index.ncell // 2 + 1
    for radius in range(max_ring + 1):
        for c in index.ring(center, radius) - seen:
            seen.add(c)
            ids = index.buckets.get(c)
            if ids is not None:
                cand.append(ids)
        if cand:
            ids = np.concatenate(cand)
            d = torus_delta(p[0], p[1], pos[ids, 0], pos[ids, 1], index.L)
            best = float(d.min())
        # any node outside the searched rings is at least radius*cell away
        if best * (1 + TIE_RTOL) < radius * index.cell:
            break
    ids = np.concatenate(cand)
    d = torus_delta(p[0], p[1], pos[ids, 0], pos[ids, 1], index.L)
    return _pick_tied(d, ids, rng)


def nearest_nodes(points: np.ndarray, index: GridIndex, positions: np.ndarray, rng=None) -> np.ndarray:
    """Batched :func:`nearest_node` through the periodic kd-tree."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    pos = np.asarray(positions, dtype=float)
    if len(pos) == 0:
        raise ValueError("empty deployment")
    if len(pts) == 0:
        return np.empty(0, dtype=np.int64)
    pts = wrap(pts, index.L)
    if len(pos) == 1:
        return np.zeros(len(pts), dtype=np.int64)
    _, j = index.tree.query(pts, k=2)
    j = j.astype(np.int64)
    # recompute with the package metric so tie detection is consistent
    d0 = torus_delta(pts[:, 0], pts[:, 1], pos[j[:, 0], 0], pos[j[:, 0], 1], index.L)
    d1 = torus_delta(pts[:, 0], pts[:, 1], pos[j[:, 1], 0], pos[j[:, 1], 1], index.L)
    out = np.where(d1 < d0, j[:, 1], j[:, 0])
    close = np.abs(d1 - d0) <= TIE_RTOL * np.minimum(d0, d1)
    for row in np.flatnonzero(close):
        out[row] = nearest_node(pts[row], index, pos, rng)
    return out


@dataclass(frozen=True)
class Emst:
    """Minimum spanning tree: parallel arrays of endpoints and edge lengths."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    total_length: float

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for a, b, c in zip(self.u, self.v, self.w)]

    def __len__(self) -> int:
        return len(self.w)


def _make_emst(u, v, points: np.ndarray, L: float) -> Emst:
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    w = torus_delta(points[u, 0], points[u, 1], points[v, 0], points[v, 1], L)
    return Emst(u, v, w, math.fsum(w))


def emst_prim(points, L: float) -> Emst:
    """Dense O(k^2) Prim under the torus metric."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    k = len(pts)
    if k == 0:
        raise ValueError("EMST needs at least one point")
    if k == 1:
        return Emst(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0), 0.0)
    dist = pairwise_torus(pts, L)
    best = dist[0].copy()
    parent = np.zeros(k, dtype=np.int64)
    done = np.zeros(k, dtype=bool)
    done[0] = True
    best[0] = np.inf
    us, vs = [], []
    for _ in range(k - 1):
        j = int(np.argmin(best))
        us.append(int(parent[j]))
        vs.append(j)
        done[j] = True
        best[j] = np.inf
        row = dist[j]
        closer = (row < best) & ~done
        best[closer] = row[closer]
        parent[closer] = j
    return _make_emst(us, vs, pts, L)


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def emst_boruvka(points, L: float, first_k: int = 8) -> Emst:
    """Borůvka rounds with nearest-foreign-neighbour search on a periodic kd-tree.

    Each round finds, for every component, its shortest edge to another
    component.  Points whose k nearest neighbours all share their component
    are re-queried with doubled k, unless the k-th neighbour distance already
    exceeds the component's best candidate (no farther point can improve it).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    k = len(pts)
    if k == 0:
        raise ValueError("EMST needs at least one point")
    if k == 1:
        return Emst(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0), 0.0)
    _check_side(L)
    pts_w = wrap(pts, L)
    tree = cKDTree(pts_w, boxsize=L)
    comp = np.arange(k)
    dsu = _DisjointSet(k)
    us: list[int] = []
    vs: list[int] = []
    ncomp = k
    while ncomp > 1:
        best_d = np.full(k, np.inf)
        best_j = np.full(k, -1, dtype=np.int64)
        comp_best = np.full(k, np.inf)
        active = np.arange(k)
        kq = min(first_k, k)
        while active.size:
            d, j = tree.query(pts_w[active], k=kq)
            d = np.atleast_2d(d)
            j = np.atleast_2d(j)
            foreign = comp[j] != comp[active][:, None]
            has = foreign.any(axis=1)
            first = foreign.argmax(axis=1)
            rows = np.flatnonzero(has)
            hit = active[rows]
            best_d[hit] = d[rows, first[rows]]
            best_j[hit] = j[rows, first[rows]]
            np.minimum.at(comp_best, comp[hit], best_d[hit])
            if kq >= k:
                break
            miss = np.flatnonzero(~has)
            rest = active[miss]
            active = rest[d[miss, -1] < comp_best[comp[rest]]]
            kq = min(2 * kq, k)
        cand = np.flatnonzero(best_j >= 0)
        # exact lengths decide between candidates of one component
        cd = torus_delta(pts[cand, 0], pts[cand, 1], pts[best_j[cand], 0], pts[best_j[cand], 1], L)
        order = np.lexsort((cand, cd, comp[cand]))
        cand_c = comp[cand][order]
        lead = np.ones(len(order), dtype=bool)
        lead[1:] = cand_c[1:] != cand_c[:-1]
        pick = order[lead]
        pick = pick[np.lexsort((cand[pick], cd[pick]))]
        for a, b in zip(cand[pick], best_j[cand[pick]]):
            if dsu.union(int(a), int(b)):
                us.append(int(a))
                vs.append(int(b))
                ncomp -= 1
        comp = np.array([dsu.find(i) for i in range(k)])
    return _make_emst(us, vs, pts, L)


def emst_length(points, L: float) -> Emst:
    """Exact torus-metric EMST; dense Prim for small sets, Borůvka above."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) <= PRIM_MAX_POINTS:
        return emst_prim(pts, L)
    return emst_boruvka(pts, L)


def emst_totals_batched(points: np.ndarray, L: float) -> np.ndarray:
    """Total EMST length of each of ``B`` equal-sized point sets, shape (B, k, 2).

    Runs Prim on all sets at once; sums use ``math.fsum`` so each total
    matches :func:`emst_prim` bit for bit.
    """
    pts = np.asarray(points, dtype=float)
    B, k = pts.shape[:2]
    if k <= 1:
        return np.zeros(B)
    if k == 2:
        return torus_delta(pts[:, 0, 0], pts[:, 0, 1], pts[:, 1, 0], pts[:, 1, 1], L)
    dist = torus_delta(pts[:, :, None, 0], pts[:, :, None, 1], pts[:, None, :, 0], pts[:, None, :, 1], L)
    rows = np.arange(B)
    best = dist[:, 0, :].copy()
    done = np.zeros((B, k), dtype=bool)
    done[:, 0] = True
    best[:, 0] = np.inf
    weights = np.empty((B, k - 1))
    for step in range(k - 1):
        j = np.argmin(best, axis=1)
        weights[:, step] = best[rows, j]
        done[rows, j] = True
        best[rows, j] = np.inf
        cand = dist[rows, j]
        np.minimum(best, np.where(done, np.inf, cand), out=best)
    return np.array([math.fsum(w) for w in weights])


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in km on a sphere of radius 6371 km."""
    lat1, lon1, lat2, lon2 = (np.asarray(a, dtype=float) for a in (lat1, lon1, lat2, lon2))
    for lat in (lat1, lat2):
        if np.any(np.abs(lat) > 90):
            raise ValueError("latitude outside [-90, 90]")
    for lon in (lon1, lon2):
        if np.any(np.abs(lon) > 180):
            raise ValueError("longitude outside [-180, 180]")
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(lon2 - lon1)
    a = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2) ** 2
    out = 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    return float(out) if out.ndim == 0 else out
