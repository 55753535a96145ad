"""Physical deployment and social-relationship layers.

Nodes are dropped uniformly on a ``sqrt(n) x sqrt(n)`` torus (unit density).
Each node draws a Zipf-distributed friend count, then places that many anchor
points with density proportional to ``(A(d) + 1) ** -beta`` where ``A(d)`` is
the torus-ball area at distance ``d`` (the expected population within ``d``
under unit density).  The friend behind an anchor is the node nearest to it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate

from .geometry import (
    GridIndex,
    max_torus_distance,
    nearest_nodes,
    torus_ball_area,
    torus_ball_area_inverse,
    wrap,
)

GRAPH_FORMAT = "osnsim.social-graph"
MAX_RESAMPLE_ROUNDS = 10_000


@dataclass(frozen=True)
class ModelConfig:
    n: int
    gamma: float
    beta: float
    phi: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        for name in ("gamma", "beta", "phi"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a finite number >= 0, got {value!r}")


@dataclass(frozen=True)
class TorusDeployment:
    L: float
    positions: np.ndarray
    index: GridIndex

    @property
    def n(self) -> int:
        return len(self.positions)

    @classmethod
    def from_positions(cls, positions, L: float | None = None) -> "TorusDeployment":
        pos = np.asarray(positions, dtype=float).reshape(-1, 2)
        L = math.sqrt(len(pos)) if L is None else float(L)
        if np.any(pos < 0) or np.any(pos >= L):
            raise ValueError("positions must lie in [0, L)")
        return cls(L=L, positions=pos, index=GridIndex.build(pos, L))


def sample_deployment(n: int, rng: np.random.Generator) -> TorusDeployment:
    """``n`` i.i.d. uniform nodes on the torus of side ``sqrt(n)``."""
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    L = math.sqrt(n)
    pos = wrap(rng.uniform(0.0, L, size=(int(n), 2)), L)
    return TorusDeployment(L=L, positions=pos, index=GridIndex.build(pos, L))


# --- friend counts -------------------------------------------------------------


@lru_cache(maxsize=64)
def _zipf_weights(m: int, exponent: float) -> np.ndarray:
    return np.arange(1, m + 1, dtype=float) ** -exponent


@lru_cache(maxsize=64)
def zipf_normalizer(m: int, exponent: float) -> float:
    """``sum_{j=1}^{m} j^-exponent``, summed exactly (fsum)."""
    return math.fsum(_zipf_weights(m, exponent))


def zipf_pmf(l: int, n: int, gamma: float) -> float:
    """Probability that a node has exactly ``l`` friends (support 1..n-1)."""
    if not 1 <= l <= n - 1:
        raise ValueError(f"l={l} outside support 1..{n - 1}")
    return float(l) ** -gamma / zipf_normalizer(n - 1, float(gamma))


@lru_cache(maxsize=64)
def zipf_cdf_table(m: int, exponent: float) -> np.ndarray:
    """Cumulative Zipf probabilities over 1..m; last entry pinned to 1."""
    w = _zipf_weights(m, exponent)
    cdf = np.cumsum(w) / zipf_normalizer(m, exponent)
    cdf[-1] = 1.0
    return cdf


def sample_degrees(n: int, gamma: float, size: int, rng: np.random.Generator) -> np.ndarray:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    cdf = zipf_cdf_table(int(n) - 1, float(gamma))
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="right").astype(np.int64) + 1


def sample_degree(n: int, gamma: float, rng: np.random.Generator) -> int:
    return int(sample_degrees(n, gamma, 1, rng)[0])


# --- anchor placement ----------------------------------------------------------


def _log_ratio_term(u, one_minus_beta: float):
    """``((u+1)^(1-beta) - 1) / (1-beta)``, continuous through beta = 1."""
    lu = np.log1p(u)
    if one_minus_beta == 0.0:
        return lu
    return np.expm1(one_minus_beta * lu) / one_minus_beta


def normalizer_phi(beta: float, L: float) -> float:
    """Constant making ``phi * (A(d)+1)^-beta`` a probability density on the torus."""
    if not L > 0:
        raise ValueError(f"torus side must be positive, got {L!r}")
    return 1.0 / float(_log_ratio_term(L * L, 1.0 - beta))


def anchor_radial_cdf(r, beta: float, L: float):
    """Probability that an anchor lies within torus distance ``r`` of its source."""
    area = torus_ball_area(r, L)
    out = _log_ratio_term(area, 1.0 - beta) / _log_ratio_term(L * L, 1.0 - beta)
    return float(out) if np.ndim(out) == 0 else out


def anchor_area_ppf(p, beta: float, L: float):
    """Inverse of the anchor CDF expressed in ball area ``u = A(r)``."""
    p = np.asarray(p, dtype=float)
    omb = 1.0 - beta
    total = _log_ratio_term(L * L, omb)
    if omb == 0.0:
        u = np.expm1(p * total)
    else:
        u = np.expm1(np.log1p(omb * p * total) / omb)
    return np.clip(u, 0.0, L * L)


def sample_anchor_radii(size: int, beta: float, L: float, rng: np.random.Generator) -> np.ndarray:
    return torus_ball_area_inverse(anchor_area_ppf(rng.random(size), beta, L), L)


def _place_at_radius(sources: np.ndarray, r: np.ndarray, L: float, rng) -> np.ndarray:
    """Uniform point on the torus circle of radius ``r`` around each source.

    An angle is accepted only when the planar offset stays inside the
    source-centred fundamental square, i.e. its torus distance is exactly r.
    """
    half = 0.5 * L
    theta = rng.uniform(0.0, 2 * math.pi, size=len(r))
    pending = np.flatnonzero(r > half)
    while pending.size:
        off = r[pending, None] * np.column_stack((np.cos(theta[pending]), np.sin(theta[pending])))
        bad = pending[np.any(np.abs(off) >= half, axis=1)]
        theta[bad] = rng.uniform(0.0, 2 * math.pi, size=len(bad))
        pending = bad
    offsets = r[:, None] * np.column_stack((np.cos(theta), np.sin(theta)))
    return wrap(sources + offsets, L)


def sample_anchors(sources, beta: float, L: float, rng: np.random.Generator):
    """One anchor per row of ``sources``; returns ``(points, radii)``."""
    src = np.atleast_2d(np.asarray(sources, dtype=float))
    r = sample_anchor_radii(len(src), beta, L, rng)
    return _place_at_radius(src, r, L, rng), r


def sample_anchor(source, beta: float, L: float, rng: np.random.Generator) -> np.ndarray:
    return sample_anchors(np.asarray(source, dtype=float)[None, :], beta, L, rng)[0][0]


def anchors_for_owners(
    deployment: TorusDeployment, owners: np.ndarray, beta: float, rng: np.random.Generator
):
    """Anchors and their nearest nodes for the given owner sequence.

    An anchor whose nearest node is its own source is redrawn until it maps
    to some other node.
    """
    pos = deployment.positions
    points, radii = sample_anchors(pos[owners], beta, deployment.L, rng)
    nodes = nearest_nodes(points, deployment.index, pos, rng)
    redo = np.flatnonzero(nodes == owners)
    rounds = 0
    while redo.size:
        rounds += 1
        if rounds > MAX_RESAMPLE_ROUNDS:
            raise RuntimeError("anchor resampling did not terminate")
        p, r = sample_anchors(pos[owners[redo]], beta, deployment.L, rng)
        points[redo] = p
        radii[redo] = r
        nodes[redo] = nearest_nodes(p, deployment.index, pos, rng)
        redo = redo[nodes[redo] == owners[redo]]
    return points, radii, nodes


# --- social graph --------------------------------------------------------------


def _offsets(counts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=out[1:])
    return out


def _collapse_friends(owners: np.ndarray, nodes: np.ndarray, n: int):
    """Distinct friends per owner, in order of first appearance."""
    keys = owners.astype(np.int64) * n + nodes
    _, first = np.unique(keys, return_index=True)
    first.sort()
    counts = np.bincount(owners[first], minlength=n)
    return _offsets(counts), nodes[first]


@dataclass(frozen=True)
class SocialGraph:
    """Per-node friend sets and the anchor points that produced them (CSR layout).

    ``anchor_points[anchor_offsets[k]:anchor_offsets[k+1]]`` are the ``q_k``
    anchors of node ``k``; ``anchor_nodes`` holds each anchor's nearest node.
    Friends are those nodes with repeats collapsed.
    """

    degrees: np.ndarray
    anchor_offsets: np.ndarray
    anchor_points: np.ndarray
    anchor_nodes: np.ndarray
    anchor_radii: np.ndarray
    friend_offsets: np.ndarray
    friend_ids: np.ndarray

    @property
    def n(self) -> int:
        return len(self.degrees)

    @classmethod
    def from_anchors(cls, degrees, anchor_points, anchor_nodes, anchor_radii) -> "SocialGraph":
        degrees = np.asarray(degrees, dtype=np.int64)
        offsets = _offsets(degrees)
        owners = np.repeat(np.arange(len(degrees)), degrees)
        f_off, f_ids = _collapse_friends(owners, np.asarray(anchor_nodes, dtype=np.int64), len(degrees))
        return cls(
            degrees=degrees,
            anchor_offsets=offsets,
            anchor_points=np.asarray(anchor_points, dtype=float).reshape(-1, 2),
            anchor_nodes=np.asarray(anchor_nodes, dtype=np.int64),
            anchor_radii=np.asarray(anchor_radii, dtype=float),
            friend_offsets=f_off,
            friend_ids=f_ids,
        )

    def friends(self, k: int) -> np.ndarray:
        return self.friend_ids[self.friend_offsets[k] : self.friend_offsets[k + 1]]

    def anchors(self, k: int) -> np.ndarray:
        return self.anchor_points[self.anchor_offsets[k] : self.anchor_offsets[k + 1]]

    @property
    def friend_lists(self) -> list[np.ndarray]:
        return [self.friends(k) for k in range(self.n)]

    @property
    def anchor_owners(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), self.degrees)

    def to_json(self, path, deployment: TorusDeployment, config: ModelConfig | None = None) -> None:
        doc = {
            "format": GRAPH_FORMAT,
            "version": 1,
            "n": self.n,
            "L": deployment.L,
            "config": asdict(config) if config is not None else None,
            "positions": deployment.positions.tolist(),
            "nodes": [
                {
                    "id": k,
                    "degree": int(self.degrees[k]),
                    "friends": self.friends(k).tolist(),
                    "anchors": self.anchors(k).tolist(),
                    "anchor_nodes": self.anchor_nodes[
                        self.anchor_offsets[k] : self.anchor_offsets[k + 1]
                    ].tolist(),
                }
                for k in range(self.n)
            ],
        }
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def from_json(cls, path) -> tuple["SocialGraph", TorusDeployment]:
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != GRAPH_FORMAT:
            raise ValueError(f"{path}: not a social-graph file")
        dep = TorusDeployment.from_positions(doc["positions"], doc["L"])
        nodes = sorted(doc["nodes"], key=lambda d: d["id"])
        degrees = [d["degree"] for d in nodes]
        points = [p for d in nodes for p in d["anchors"]]
        anchor_nodes = [a for d in nodes for a in d["anchor_nodes"]]
        owners = np.repeat(np.arange(len(nodes)), degrees)
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        radii = _torus_norm(pts - dep.positions[owners], dep.L)
        return cls.from_anchors(degrees, pts, anchor_nodes, radii), dep


def _torus_norm(delta: np.ndarray, L: float) -> np.ndarray:
    d = np.abs(delta)
    d = np.minimum(d, L - d)
    return np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2)


def form_social_graph(
    deployment: TorusDeployment, config: ModelConfig, rng: np.random.Generator | None = None
) -> SocialGraph:
    """Zipf friend counts, population-distance anchors, nearest-node friends."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n = deployment.n
    if n != config.n:
        raise ValueError(f"deployment has {n} nodes but config.n={config.n}")
    degrees = sample_degrees(n, config.gamma, n, rng)
    owners = np.repeat(np.arange(n), degrees)
    points, radii, nodes = anchors_for_owners(deployment, owners, config.beta, rng)
    return SocialGraph.from_anchors(degrees, points, nodes, radii)


def mean_radial_distance(beta: float, L: float, grid: int = 20001) -> float:
    """Expected source-to-anchor torus distance (numeric, trapezoid in area).

    Ignores the self-friend redraw, which only touches the innermost cell.
    """
    rmax = max_torus_distance(L)
    r = np.linspace(0.0, rmax, grid)
    cdf = anchor_radial_cdf(r, beta, L)
    return float(integrate.trapezoid(1.0 - cdf, r))
