"""Dissemination sessions: broadcast to every friend, or multicast to a subset.

Sessions are kept in a compact CSR layout (:class:`SessionSet`), one session
per source node.  Each destination slot refers back to the anchor that
produced it, so both node-level and anchor-level EMSTs can be measured.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .model import SocialGraph, _offsets, anchors_for_owners

SESSION_RATE = 1.0
SESSIONS_FORMAT = "osnsim.sessions"


@dataclass(frozen=True)
class DisseminationSession:
    source: int
    destinations: tuple[int, ...]
    anchor_subset: np.ndarray
    rate: float = SESSION_RATE

    def __post_init__(self):
        if len(self.destinations) == 0:
            raise ValueError(f"session from node {self.source} has no destinations")
        if self.rate != SESSION_RATE:
            raise ValueError("session rate is fixed at 1.0")


@dataclass(frozen=True)
class SessionSet(Sequence):
    """All sessions of one run.

    ``anchor_index[offsets[k]:offsets[k+1]]`` indexes the graph's anchor
    arrays for the session sourced at ``sources[k]``.  Destination node ids
    are the anchors' nearest nodes (repeats allowed; the EMST is unaffected).
    """

    graph: SocialGraph
    sources: np.ndarray
    offsets: np.ndarray
    anchor_index: np.ndarray
    pattern: str = "broadcast"

    def __len__(self) -> int:
        return len(self.sources)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        idx = self.anchor_index[self.offsets[i] : self.offsets[i + 1]]
        dest = tuple(dict.fromkeys(self.graph.anchor_nodes[idx].tolist()))
        return DisseminationSession(int(self.sources[i]), dest, self.graph.anchor_points[idx])

    def __iter__(self) -> Iterator[DisseminationSession]:
        return (self[i] for i in range(len(self)))

    @property
    def sizes(self) -> np.ndarray:
        """Destination-slot count per session (``q_k`` or ``d_k``)."""
        return np.diff(self.offsets)

    @property
    def destination_nodes(self) -> np.ndarray:
        return self.graph.anchor_nodes[self.anchor_index]

    @property
    def destination_anchors(self) -> np.ndarray:
        return self.graph.anchor_points[self.anchor_index]

    @property
    def slot_sources(self) -> np.ndarray:
        return np.repeat(self.sources, self.sizes)

    def to_json(self, path) -> None:
        doc = {
            "format": SESSIONS_FORMAT,
            "version": 1,
            "pattern": self.pattern,
            "sessions": [
                {
                    "source": int(self.sources[i]),
                    "rate": SESSION_RATE,
                    "anchor_index": self.anchor_index[self.offsets[i] : self.offsets[i + 1]].tolist(),
                    "destinations": self.graph.anchor_nodes[
                        self.anchor_index[self.offsets[i] : self.offsets[i + 1]]
                    ].tolist(),
                }
                for i in range(len(self))
            ],
        }
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def from_json(cls, path, graph: SocialGraph) -> "SessionSet":
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != SESSIONS_FORMAT:
            raise ValueError(f"{path}: not a sessions file")
        sess = doc["sessions"]
        sizes = np.array([len(s["anchor_index"]) for s in sess], dtype=np.int64)
        idx = np.array([a for s in sess for a in s["anchor_index"]], dtype=np.int64)
        srcs = np.array([s["source"] for s in sess], dtype=np.int64)
        return cls(graph, srcs, _offsets(sizes), idx, doc.get("pattern", "broadcast"))


def gen_broadcast_sessions(graph: SocialGraph) -> SessionSet:
    """One session per node carrying every one of its anchors."""
    return SessionSet(
        graph=graph,
        sources=np.arange(graph.n, dtype=np.int64),
        offsets=graph.anchor_offsets.copy(),
        anchor_index=np.arange(len(graph.anchor_nodes), dtype=np.int64),
        pattern="broadcast",
    )


@lru_cache(maxsize=32)
def _conditional_cumsum(m: int, phi: float) -> np.ndarray:
    return np.cumsum(np.arange(1, m + 1, dtype=float) ** -phi)


def sample_destination_counts(l, phi: float, rng: np.random.Generator) -> np.ndarray:
    """Vectorized draw of ``d`` in ``{1..l}`` with ``Pr(d) ~ d^-phi``."""
    l = np.asarray(l, dtype=np.int64)
    if l.size and l.min() < 1:
        raise ValueError("friend count l must be >= 1")
    if l.size == 0:
        return np.zeros(0, dtype=np.int64)
    c = _conditional_cumsum(int(l.max()), float(phi))
    target = rng.random(l.shape) * c[l - 1]
    d = np.searchsorted(c, target, side="right") + 1
    return np.minimum(d, l)


def sample_destination_count(l: int, phi: float, rng: np.random.Generator) -> int:
    if l < 1:
        raise ValueError(f"friend count l must be >= 1, got {l}")
    return int(sample_destination_counts(np.array([l]), phi, rng)[0])


def _choose_subset(offsets: np.ndarray, counts: np.ndarray, rng) -> np.ndarray:
    """Uniform ``counts[k]``-subset of each CSR row, returned as global positions."""
    sizes = np.diff(offsets)
    owner = np.repeat(np.arange(len(sizes)), sizes)
    keys = rng.random(len(owner))
    order = np.lexsort((keys, owner))
    rank = np.arange(len(owner)) - offsets[owner]
    keep = order[rank < counts[owner]]
    return np.sort(keep)


def gen_multicast_sessions(graph: SocialGraph, phi: float, rng: np.random.Generator) -> SessionSet:
    """One session per node with ``d_k`` anchors drawn uniformly without replacement."""
    counts = sample_destination_counts(graph.degrees, phi, rng)
    chosen = _choose_subset(graph.anchor_offsets, counts, rng)
    return SessionSet(
        graph=graph,
        sources=np.arange(graph.n, dtype=np.int64),
        offsets=_offsets(counts),
        anchor_index=chosen,
        pattern="multicast",
    )


def sample_multicast_sessions(
    deployment, counts: np.ndarray, beta: float, rng: np.random.Generator
) -> SessionSet:
    """Multicast sessions drawn without materializing unused anchors.

    A uniform ``d``-subset of ``q`` i.i.d. anchors is itself ``d`` i.i.d.
    anchors, so only the chosen ones are sampled.  ``counts`` holds the
    ``d_k``; the returned set's graph carries only the chosen anchors.
    """
    counts = np.asarray(counts, dtype=np.int64)
    owners = np.repeat(np.arange(len(counts)), counts)
    points, radii, nodes = anchors_for_owners(deployment, owners, beta, rng)
    thin = SocialGraph.from_anchors(counts, points, nodes, radii)
    return SessionSet(
        graph=thin,
        sources=np.arange(len(counts), dtype=np.int64),
        offsets=thin.anchor_offsets.copy(),
        anchor_index=np.arange(len(nodes), dtype=np.int64),
        pattern="multicast",
    )
