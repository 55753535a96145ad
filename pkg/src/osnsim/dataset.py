"""Location-based social network data: parsing, user location, exponent fits.

Input files follow the SNAP loc-gowalla layout:

* edges: ``user<TAB>friend`` per line (both directions listed);
* check-ins: ``user<TAB>timestamp<TAB>lat<TAB>lon<TAB>location_id``.

Two fits are provided: the friend-count exponent from the raw degree
histogram, and the formation exponent from the rank-distance experiment
(how often the user nearest to a random position is a friend of ``u``, as a
function of how many users are closer to ``u`` than that position).
"""

from __future__ import annotations

import gzip
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from .geometry import EARTH_RADIUS_KM, haversine_km
from .model import ModelConfig, form_social_graph, sample_deployment

NORTH_AMERICA = (7.0, 72.0, -170.0, -50.0)  # lat_min, lat_max, lon_min, lon_max
MIN_FIT_POINTS = 10
MIN_BIN_DENOMINATOR = 30
MIN_DEGREE_COUNT = 10


def _open_text(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


# --- parsing --------------------------------------------------------------------


def parse_edges(path) -> list[tuple[int, int]]:
    """Friendship edges in file order, exact duplicates dropped."""
    seen: dict[tuple[int, int], None] = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two user ids, got {line.rstrip()!r}")
            try:
                seen.setdefault((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer user id in {line.rstrip()!r}") from None
    return list(seen)


def undirected_edge_count(edges) -> int:
    """Distinct unordered pairs, self-loops excluded."""
    return len({(a, b) if a < b else (b, a) for a, b in edges if a != b})


def write_edges(path, edges) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in edges:
            fh.write(f"{a}\t{b}\n")


@dataclass
class Checkins:
    """Check-in columns; ``skipped`` counts records with out-of-range coordinates."""

    user: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    timestamp: list[str] = field(repr=False)
    location_id: list[str] = field(repr=False)
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.user)

    def by_user(self) -> dict[int, np.ndarray]:
        """Per-user ``(k, 2)`` arrays of (lat, lon)."""
        order = np.argsort(self.user, kind="stable")
        users, starts = np.unique(self.user[order], return_index=True)
        bounds = np.append(starts, len(order))
        pts = np.column_stack((self.lat, self.lon))[order]
        return {int(u): pts[bounds[i] : bounds[i + 1]] for i, u in enumerate(users)}


def parse_checkins(path) -> Checkins:
    users, lats, lons, times, locs = [], [], [], [], []
    skipped = 0
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 tab-separated fields, got {len(parts)}")
            try:
                u, lat, lon = int(parts[0]), float(parts[2]), float(parts[3])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad user id or coordinate") from None
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                skipped += 1
                continue
            users.append(u)
            lats.append(lat)
            lons.append(lon)
            times.append(parts[1])
            locs.append(parts[4])
    return Checkins(
        np.array(users, dtype=np.int64), np.array(lats, dtype=float), np.array(lons, dtype=float),
        times, locs, skipped,
    )


def write_checkins(path, checkins: Checkins) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, t, la, lo, loc in zip(checkins.user, checkins.timestamp, checkins.lat, checkins.lon, checkins.location_id):
            fh.write(f"{int(u)}\t{t}\t{float(la)!r}\t{float(lo)!r}\t{loc}\n")


# --- users ----------------------------------------------------------------------


@dataclass(frozen=True)
class GeoUser:
    user_id: int
    lat: float
    lon: float
    out_degree: int


def estimate_user_location(points) -> tuple[float, float]:
    """Coordinate-wise median of a user's check-ins, as (lat, lon)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("user has no check-ins")
    lat, lon = np.median(pts, axis=0)
    return float(lat), float(lon)


def in_bbox(lat, lon, bbox=NORTH_AMERICA):
    lat_min, lat_max, lon_min, lon_max = bbox
    lat = np.asarray(lat)
    lon = np.asarray(lon)
    return (lat >= lat_min) & (lat <= lat_max) & (lon >= lon_min) & (lon <= lon_max)


def out_degrees(edges) -> dict[int, int]:
    deg: dict[int, int] = {}
    for a, b in edges:
        if a != b:
            deg[a] = deg.get(a, 0) + 1
    return deg


def locate_users(checkins: Checkins, edges, bbox=NORTH_AMERICA) -> list[GeoUser]:
    """Users with at least one check-in whose estimated location is inside ``bbox``.

    Out-degree counts every listed friend, wherever that friend lives.
    """
    deg = out_degrees(edges)
    users = []
    for u, pts in checkins.by_user().items():
        lat, lon = estimate_user_location(pts)
        if in_bbox(lat, lon, bbox):
            users.append(GeoUser(u, lat, lon, deg.get(u, 0)))
    return users


# --- fits -----------------------------------------------------------------------


@dataclass
class FitResult:
    slope: float
    intercept: float
    r2: float
    points: int
    binning: str
    exponent: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def _line_fit(x, y, binning: str, min_points: int = MIN_FIT_POINTS) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < min_points:
        raise ValueError(f"need at least {min_points} points for a fit, got {len(x)}")
    res = stats.linregress(x, y)
    return FitResult(float(res.slope), float(res.intercept), float(res.rvalue**2), len(x), binning, -float(res.slope))


def degree_histogram(degrees) -> tuple[np.ndarray, np.ndarray]:
    """Distinct positive degrees K and their user counts N(K)."""
    d = np.asarray(degrees, dtype=np.int64)
    k, n = np.unique(d[d > 0], return_counts=True)
    return k, n


def fit_degree_exponent(users, min_count: int = MIN_DEGREE_COUNT) -> FitResult:
    """Slope of lg N(K) against lg K; exponent = -slope.

    Degrees held by fewer than ``min_count`` users are left out: the sparse
    tail is flat at N(K) = 1 and drags the slope toward zero.  ``min_count=1``
    keeps every observed degree.
    """
    degrees = [u.out_degree if isinstance(u, GeoUser) else int(u) for u in users]
    k, n = degree_histogram(degrees)
    keep = n >= min_count
    if keep.sum() < MIN_FIT_POINTS:
        raise ValueError(
            f"need at least {MIN_FIT_POINTS} distinct degrees held by >= {min_count} users, got {int(keep.sum())}"
        )
    return _line_fit(np.log10(k[keep]), np.log10(n[keep]), f"raw degree histogram, N(K) >= {min_count}")


@dataclass
class FormationPoints:
    """Per-bin ratio-of-sums for the formation experiment."""

    x: np.ndarray  # lg of mean N in the bin
    y: np.ndarray  # lg(num / den)
    num: np.ndarray
    den: np.ndarray
    n_lo: np.ndarray
    n_hi: np.ndarray
    positions_sampled: int = 0
    positions_retained: int = 0
    users_used: int = 0
    bins_per_decade: int = 8

    def rows(self):
        return zip(self.n_lo, self.n_hi, self.x, self.y, self.num, self.den)


def _unit_vectors(lat, lon) -> np.ndarray:
    la = np.radians(lat)
    lo = np.radians(lon)
    return np.column_stack((np.cos(la) * np.cos(lo), np.cos(la) * np.sin(lo), np.sin(la)))


def _chord(km: float) -> float:
    return 2.0 * math.sin(min(km / EARTH_RADIUS_KM, math.pi) / 2.0)


def log_bin_ids(counts, bins_per_decade: int = 8) -> np.ndarray:
    """Integer log bin of each positive count; edges are rounded up to integers."""
    c = np.asarray(counts, dtype=float)
    return np.floor(np.log10(c) * bins_per_decade + 1e-9).astype(np.int64)


def population_counts(u_lat, u_lon, lat, lon, plat, plon) -> np.ndarray:
    """For each position, how many users are no farther from ``u`` than it is.

    One sort of the user distances, then a binary search per position.
    """
    d_users = np.sort(haversine_km(u_lat, u_lon, lat, lon))
    d_pos = haversine_km(u_lat, u_lon, plat, plon)
    return np.searchsorted(d_users, d_pos, side="right")


def population_distance_experiment(
    users,
    edges,
    sample_count: int = 120_000,
    d_f_km: float = 200.0,
    subsample_users=3000,
    max_positions: int | None = 20_000,
    bbox=NORTH_AMERICA,
    rng: np.random.Generator | None = None,
    bins_per_decade: int = 8,
) -> FormationPoints:
    """Binned friend-hit ratio against population distance.

    ``subsample_users`` is a count drawn at random, an explicit sequence of
    user ids, or None for everyone.

    For position ``p`` and user ``u``, ``N(u, p)`` is the number of users no
    farther from ``u`` than ``p`` is (``u`` included).  The hit indicator is
    whether the user nearest to ``p`` is a friend of ``u``.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    explicit = subsample_users is not None and not isinstance(subsample_users, (int, np.integer))
    if not explicit and subsample_users is not None and subsample_users < 1:
        raise ValueError("subsample_users must be >= 1")
    ids = np.array([u.user_id for u in users], dtype=np.int64)
    lat = np.array([u.lat for u in users], dtype=float)
    lon = np.array([u.lon for u in users], dtype=float)
    if len(ids) == 0:
        raise ValueError("no located users")
    index_of = {int(u): i for i, u in enumerate(ids)}
    friends: list[set[int]] = [set() for _ in ids]
    for a, b in edges:
        ia = index_of.get(a)
        ib = index_of.get(b)
        if ia is not None and ib is not None and ia != ib:
            friends[ia].add(ib)
    friend_arrays = [np.fromiter(sorted(f), dtype=np.int64, count=len(f)) for f in friends]

    lat_min, lat_max, lon_min, lon_max = bbox
    plat = rng.uniform(lat_min, lat_max, sample_count)
    plon = rng.uniform(lon_min, lon_max, sample_count)
    tree = cKDTree(_unit_vectors(lat, lon))
    dist, nearest = tree.query(_unit_vectors(plat, plon))
    keep = np.flatnonzero(dist <= _chord(d_f_km))
    if keep.size == 0:
        raise ValueError(f"no sampled position lies within {d_f_km} km of a user")
    if max_positions is not None and keep.size > max_positions:
        keep = np.sort(rng.choice(keep, max_positions, replace=False))
    plat, plon, nearest = plat[keep], plon[keep], nearest[keep]

    if explicit:
        missing = [u for u in subsample_users if int(u) not in index_of]
        if missing or len(subsample_users) == 0:
            raise ValueError(f"subsample users not among located users: {missing[:5]}")
        chosen = np.array(sorted({index_of[int(u)] for u in subsample_users}), dtype=np.int64)
    elif subsample_users is None or subsample_users >= len(ids):
        chosen = np.arange(len(ids))
    else:
        chosen = np.sort(rng.choice(len(ids), subsample_users, replace=False))

    nbins = int(math.floor(math.log10(len(ids)) * bins_per_decade + 1e-9)) + 1
    num = np.zeros(nbins)
    den = np.zeros(nbins)
    nsum = np.zeros(nbins)
    for i in chosen:
        n_up = population_counts(lat[i], lon[i], lat, lon, plat, plon)
        b = log_bin_ids(n_up, bins_per_decade)
        hit = np.isin(nearest, friend_arrays[i])
        den += np.bincount(b, minlength=nbins)
        num += np.bincount(b, weights=hit, minlength=nbins)
        nsum += np.bincount(b, weights=n_up, minlength=nbins)

    occupied = np.flatnonzero(den > 0)
    lo_edges = np.ceil(10 ** (np.arange(nbins) / bins_per_decade) - 1e-9).astype(np.int64)
    hi_edges = np.append(lo_edges[1:] - 1, len(ids))
    with np.errstate(divide="ignore"):
        y = np.log10(num[occupied] / den[occupied])
    return FormationPoints(
        x=np.log10(nsum[occupied] / den[occupied]),
        y=y,
        num=num[occupied],
        den=den[occupied],
        n_lo=lo_edges[occupied],
        n_hi=hi_edges[occupied],
        positions_sampled=sample_count,
        positions_retained=int(keep.size),
        users_used=int(len(chosen)),
        bins_per_decade=bins_per_decade,
    )


def fit_formation_exponent(points, min_denominator: int = MIN_BIN_DENOMINATOR) -> FitResult:
    """Line through the binned points; bins with few samples or no hits are dropped.

    ``points`` is a :class:`FormationPoints` or an iterable of ``(x, y)``.
    """
    if isinstance(points, FormationPoints):
        ok = (points.den >= min_denominator) & (points.num > 0)
        x, y = points.x[ok], points.y[ok]
        desc = f"log bins, {points.bins_per_decade}/decade, den >= {min_denominator}"
    else:
        arr = np.asarray(list(points), dtype=float).reshape(-1, 2)
        x, y = arr[:, 0], arr[:, 1]
        desc = "given points"
    if len(x) < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} usable bins, got {len(x)}")
    return _line_fit(x, y, desc)


# --- synthetic data -------------------------------------------------------------

KM_PER_DEG_LAT = math.pi * EARTH_RADIUS_KM / 180.0


def torus_to_geo(positions, L: float, spacing_km: float, center=(40.0, -100.0)) -> tuple[np.ndarray, np.ndarray]:
    """Lay the torus square flat on a local patch; one unit becomes ``spacing_km``."""
    pos = np.asarray(positions, dtype=float) - L / 2.0
    lat0, lon0 = center
    lat = lat0 + pos[:, 1] * spacing_km / KM_PER_DEG_LAT
    lon = lon0 + pos[:, 0] * spacing_km / (KM_PER_DEG_LAT * math.cos(math.radians(lat0)))
    return lat, lon


def synthetic_geo_dataset(
    n_users: int,
    gamma: float,
    beta: float,
    seed: int = 0,
    spacing_km: float = 10.0,
    center=(40.0, -100.0),
    checkins_per_user: int = 3,
):
    """Model-generated users projected onto a lat/lon patch.

    Returns ``(edges, checkins)`` in the same shape the parsers produce.  Each
    distinct friend gives one directed edge; each user gets a few check-ins
    scattered within a few hundred meters of their location.
    """
    rng = np.random.default_rng(seed)
    dep = sample_deployment(n_users, rng)
    graph = form_social_graph(dep, ModelConfig(n_users, gamma, beta, 0.0, seed), rng)
    lat, lon = torus_to_geo(dep.positions, dep.L, spacing_km, center)
    owners = np.repeat(np.arange(n_users), np.diff(graph.friend_offsets))
    edges = list(zip(owners.tolist(), graph.friend_ids.tolist()))
    users = np.repeat(np.arange(n_users), checkins_per_user)
    jitter = rng.normal(0.0, 0.002, size=(len(users), 2))
    stamps = [f"2010-01-01T00:00:{i % 60:02d}Z" for i in range(len(users))]
    checkins = Checkins(
        users.astype(np.int64), lat[users] + jitter[:, 0], lon[users] + jitter[:, 1],
        stamps, [str(10_000 + u) for u in users.tolist()], 0,
    )
    return edges, checkins
