"""Empirical transport load: per-session EMST lengths and their totals.

A session's load is its rate times the EMST length over the source and its
destinations.  The "node" variant spans the destination nodes; the "anchor"
variant spans the anchor points that selected them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    STEINER_RATIO,
    emst_length,
    emst_totals_batched,
    torus_delta,
)
from .model import TorusDeployment, _offsets
from .sessions import DisseminationSession, SessionSet
from .tables import (
    AsymptoticOrder,
    cross_table_mismatches,
    predicted_emst_sum_lower,
    predicted_G,
    predicted_H,
    predicted_LP,
    predicted_mean_anchor_distance,
    predicted_Q,
    predicted_W,
)

__all__ = [
    "AsymptoticOrder",
    "SessionLoad",
    "SteinerRatioBound",
    "TransportReport",
    "anchor_offset_sum",
    "cross_table_mismatches",
    "decile_breakdown",
    "emst_lengths_csr",
    "predicted_G",
    "predicted_H",
    "predicted_LP",
    "predicted_Q",
    "predicted_W",
    "predicted_emst_sum_lower",
    "predicted_mean_anchor_distance",
    "session_emst_lengths",
    "session_load",
    "total_transport_complexity",
]

VARIANTS = ("node", "anchor")
BATCH_MAX_POINTS = 64
BATCH_BYTES = 64 * 2**20


@dataclass(frozen=True)
class SessionLoad:
    session_id: int
    emst_length: float
    rate: float = 1.0

    @property
    def load(self) -> float:
        """Bit-meters per second carried by the session's spanning tree."""
        return self.rate * self.emst_length


@dataclass(frozen=True)
class SteinerRatioBound:
    ratio: float = STEINER_RATIO

    def steiner_lower(self, emst_total: float) -> float:
        """Smallest Steiner-tree length consistent with an EMST of this length."""
        return emst_total / self.ratio


def _session_points(session: DisseminationSession, deployment: TorusDeployment, variant: str):
    n = deployment.n
    src = session.source
    if not 0 <= src < n:
        raise ValueError(f"source id {src} outside 0..{n - 1}")
    if variant == "node":
        dest = np.asarray(session.destinations, dtype=np.int64)
        if dest.size == 0:
            raise ValueError(f"session from node {src} has no destinations")
        if dest.min() < 0 or dest.max() >= n:
            raise ValueError(f"destination id out of range 0..{n - 1}")
        ids = np.concatenate(([src], np.unique(dest[dest != src])))
        return deployment.positions[ids]
    if variant == "anchor":
        anchors = np.asarray(session.anchor_subset, dtype=float).reshape(-1, 2)
        if anchors.size == 0:
            raise ValueError(f"session from node {src} has no anchors")
        return np.vstack((deployment.positions[src], anchors))
    raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def session_load(
    session: DisseminationSession, deployment: TorusDeployment, variant: str = "node", session_id: int | None = None
) -> SessionLoad:
    pts = _session_points(session, deployment, variant)
    length = emst_length(pts, deployment.L).total_length
    return SessionLoad(session.source if session_id is None else session_id, length, session.rate)


def emst_lengths_csr(points: np.ndarray, offsets: np.ndarray, L: float) -> np.ndarray:
    """EMST length of every row ``points[offsets[i]:offsets[i+1]]``.

    Rows are grouped by size: tiny rows go through the batched Prim, larger
    ones through :func:`emst_length`.
    """
    sizes = np.diff(offsets)
    out = np.zeros(len(sizes))
    for s in np.unique(sizes):
        if s < 2:
            continue
        rows = np.flatnonzero(sizes == s)
        if s == 2:
            a = points[offsets[rows]]
            b = points[offsets[rows] + 1]
            out[rows] = torus_delta(a[:, 0], a[:, 1], b[:, 0], b[:, 1], L)
        elif s <= BATCH_MAX_POINTS:
            chunk = max(1, BATCH_BYTES // (8 * 4 * s * s))
            for lo in range(0, len(rows), chunk):
                r = rows[lo : lo + chunk]
                idx = offsets[r][:, None] + np.arange(s)
                out[r] = emst_totals_batched(points[idx], L)
        else:
            for r in rows:
                out[r] = emst_length(points[offsets[r] : offsets[r + 1]], L).total_length
    return out


def _csr_session_points(sessions: SessionSet, deployment: TorusDeployment, variant: str):
    """Concatenated per-session point sets with the source first in each row."""
    pos = deployment.positions
    srcs = sessions.sources
    if variant == "anchor":
        tail = sessions.destination_anchors
        sizes = sessions.sizes
    elif variant == "node":
        # drop repeated friends; EMST over a repeated point adds nothing
        n = deployment.n
        row = np.repeat(np.arange(len(srcs)), sessions.sizes)
        keys = np.unique(row * n + sessions.destination_nodes)
        row, node = np.divmod(keys, n)
        sizes = np.bincount(row, minlength=len(srcs))
        tail = pos[node]
    else:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    offsets = _offsets(sizes + 1)
    pts = np.empty((offsets[-1], 2))
    pts[offsets[:-1]] = pos[srcs]
    slot = np.ones(offsets[-1], dtype=bool)
    slot[offsets[:-1]] = False
    pts[slot] = tail
    return pts, offsets


def session_emst_lengths(sessions: SessionSet, deployment: TorusDeployment, variant: str = "node") -> np.ndarray:
    pts, offsets = _csr_session_points(sessions, deployment, variant)
    return emst_lengths_csr(pts, offsets, deployment.L)


@dataclass
class TransportReport:
    total: float
    variant: str
    session_count: int
    per_session: np.ndarray = field(repr=False)
    deciles: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "variant": self.variant,
            "session_count": self.session_count,
            "deciles": self.deciles,
        }


def decile_breakdown(sizes: np.ndarray, loads: np.ndarray, parts: int = 10) -> list[dict]:
    """Sessions ranked by destination count, split into equal-count groups."""
    order = np.argsort(sizes, kind="stable")
    out = []
    for i, grp in enumerate(np.array_split(order, parts)):
        if grp.size == 0:
            continue
        out.append({
            "decile": i + 1,
            "sessions": int(grp.size),
            "min_destinations": int(sizes[grp].min()),
            "max_destinations": int(sizes[grp].max()),
            "load": math.fsum(loads[grp]),
        })
    return out


def total_transport_complexity(sessions, deployment: TorusDeployment, variant: str = "node") -> TransportReport:
    """Sum of session loads, with a breakdown by destination-count decile."""
    if len(sessions) == 0:
        raise ValueError("need at least one session")
    if isinstance(sessions, SessionSet):
        lengths = session_emst_lengths(sessions, deployment, variant)
        sizes = sessions.sizes
        rates = np.ones(len(sessions))
    else:
        loads = [session_load(s, deployment, variant, i) for i, s in enumerate(sessions)]
        lengths = np.array([s.emst_length for s in loads])
        rates = np.array([s.rate for s in loads])
        sizes = np.array([len(s.destinations) for s in sessions])
    per = rates * lengths
    return TransportReport(
        total=math.fsum(per),
        variant=variant,
        session_count=len(sessions),
        per_session=per,
        deciles=decile_breakdown(sizes, per),
    )


def anchor_offset_sum(sessions: SessionSet, deployment: TorusDeployment) -> float:
    """Total distance from every destination anchor to the node it selected."""
    a = sessions.destination_anchors
    v = deployment.positions[sessions.destination_nodes]
    return math.fsum(torus_delta(a[:, 0], a[:, 1], v[:, 0], v[:, 1], deployment.L))
