import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osnsim.geometry import (
    EARTH_RADIUS_KM,
    GridIndex,
    emst_boruvka,
    emst_length,
    emst_prim,
    emst_totals_batched,
    haversine_km,
    max_torus_distance,
    nearest_node,
    nearest_nodes,
    torus_ball_area,
    torus_ball_area_inverse,
    torus_distance,
)

from oracles import ball_area_by_arcs, cayley_min_spanning_length, linear_scan_nearest

# 10^7 uniform points in the 10x10 torus, rng seed 20261015, counted within
# torus distance 6 of the origin; frozen because the run takes ~2 s.
MC_AREA_R6_L10 = 95.0877


def coords(L):
    return st.tuples(
        st.floats(0, L, exclude_max=True, allow_nan=False),
        st.floats(0, L, exclude_max=True, allow_nan=False),
    )


# --- distance -----------------------------------------------------------------


@pytest.mark.parametrize(
    "a, b, expected",
    [((0, 0), (9, 0), 1.0), ((0, 0), (3, 4), 5.0), ((1, 1), (1, 1), 0.0)],
)
def test_torus_distance_examples(a, b, expected):
    assert torus_distance(a, b, 10.0) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("L", [0.0, -1.0])
def test_torus_distance_rejects_bad_side(L):
    with pytest.raises(ValueError):
        torus_distance((0, 0), (0, 0), L)


@settings(max_examples=300)
@given(coords(10.0), coords(10.0), coords(10.0))
def test_torus_distance_is_a_metric(a, b, c):
    L = 10.0
    ab = torus_distance(a, b, L)
    assert ab == torus_distance(b, a, L)
    assert ab <= max_torus_distance(L) + 1e-12
    assert ab <= torus_distance(a, c, L) + torus_distance(c, b, L) + 1e-9


def test_triangle_inequality_on_many_triples():
    rng = np.random.default_rng(3)
    L = 7.5
    p = rng.uniform(0, L, size=(3, 10_000, 2))
    from osnsim.geometry import torus_delta

    d = lambda u, v: torus_delta(u[:, 0], u[:, 1], v[:, 0], v[:, 1], L)
    assert np.all(d(p[0], p[1]) <= d(p[0], p[2]) + d(p[2], p[1]) + 1e-12)
    assert np.array_equal(d(p[0], p[1]), d(p[1], p[0]))


# --- ball area ----------------------------------------------------------------


def test_ball_area_examples():
    assert torus_ball_area(0.0, 10.0) == 0.0
    assert torus_ball_area(5.0, 10.0) == pytest.approx(25 * math.pi, rel=1e-14)
    assert torus_ball_area(10 / math.sqrt(2), 10.0) == pytest.approx(100.0, rel=1e-12)


def test_ball_area_matches_monte_carlo_to_three_digits():
    value = torus_ball_area(6.0, 10.0)
    assert f"{value:.3g}" == f"{MC_AREA_R6_L10:.3g}"
    assert value == pytest.approx(MC_AREA_R6_L10, rel=5e-4)


@pytest.mark.parametrize("r", [0.3, 4.9, 5.0, 5.5, 6.0, 6.9, 7.0])
def test_ball_area_matches_arc_quadrature(r):
    assert torus_ball_area(r, 10.0) == pytest.approx(ball_area_by_arcs(r, 10.0), rel=1e-10)


@pytest.mark.parametrize("r", [-0.1, 7.2])
def test_ball_area_rejects_out_of_range(r):
    with pytest.raises(ValueError):
        torus_ball_area(r, 10.0)


def test_ball_area_monotone_and_slope_bounded():
    L = 10.0
    r = np.linspace(0, max_torus_distance(L), 20001)
    a = torus_ball_area(r, L)
    da = np.diff(a)
    assert np.all(da >= 0)
    # secant slope never exceeds the disk's 2*pi*r (using the right endpoint)
    assert np.all(da / np.diff(r) <= 2 * math.pi * r[1:] + 1e-9)


def test_area_inverse_examples():
    assert torus_ball_area_inverse(0.0, 10.0) == 0.0
    assert torus_ball_area_inverse(25 * math.pi, 10.0) == pytest.approx(5.0, abs=1e-9)
    with pytest.raises(ValueError):
        torus_ball_area_inverse(100.5, 10.0)
    with pytest.raises(ValueError):
        torus_ball_area_inverse(-1.0, 10.0)


def test_area_round_trip_on_random_values():
    rng = np.random.default_rng(11)
    for L in (1.0, 10.0, 128.0):
        u = rng.uniform(0, L * L, 1000)
        r = torus_ball_area_inverse(u, L)
        assert np.max(np.abs(torus_ball_area(r, L) - u)) < 1e-6


@settings(max_examples=200)
@given(st.floats(0.0, 1.0), st.floats(0.5, 300.0))
def test_area_inverse_tolerance(frac, L):
    u = frac * L * L
    r = torus_ball_area_inverse(u, L)
    assert 0.0 <= r <= max_torus_distance(L) + 1e-12
    # recovered radius within 1e-9 L of any radius with that area
    lo = torus_ball_area(max(r - 1e-9 * L, 0.0), L)
    hi = torus_ball_area(min(r + 1e-9 * L, max_torus_distance(L)), L)
    assert lo - 1e-9 <= u <= hi + 1e-9


# --- nearest node ---------------------------------------------------------------


def test_grid_index_buckets_cover_every_node_once():
    rng = np.random.default_rng(5)
    L = 20.0
    pos = rng.uniform(0, L, size=(400, 2))
    idx = GridIndex.build(pos, L)
    ids = np.concatenate(list(idx.buckets.values()))
    assert sorted(ids.tolist()) == list(range(400))
    for k in range(400):
        assert k in idx.buckets[idx.cell_of(pos[k])]


def test_nearest_node_single_and_coincident():
    pos = np.array([[0.5, 0.5]])
    idx = GridIndex.build(pos, 3.0)
    assert nearest_node((2.9, 2.9), idx, pos) == 0
    pos = np.array([[0.5, 0.5], [1.7, 2.2], [2.5, 0.1]])
    idx = GridIndex.build(pos, 3.0)
    assert nearest_node(pos[1], idx, pos) == 1
    with pytest.raises(ValueError):
        nearest_node((0, 0), idx, np.empty((0, 2)))


def test_nearest_node_matches_linear_scan():
    rng = np.random.default_rng(8)
    L = 30.0
    pos = rng.uniform(0, L, size=(900, 2))
    idx = GridIndex.build(pos, L)
    q = rng.uniform(0, L, size=(1000, 2))
    batched = nearest_nodes(q, idx, pos)
    for p, b in zip(q, batched):
        k, d = linear_scan_nearest(p, pos, L)
        assert nearest_node(p, idx, pos) == k
        assert b == k


def test_nearest_node_ties_are_random():
    pos = np.array([[1.0, 2.0], [3.0, 2.0]])
    idx = GridIndex.build(pos, 4.0)
    rng = np.random.default_rng(0)
    picks = [nearest_node((2.0, 2.0), idx, pos, rng) for _ in range(400)]
    assert 150 < sum(picks) < 250


# --- spanning trees --------------------------------------------------------------


def test_emst_small_examples():
    assert emst_length([(3.0, 3.0)], 10.0).total_length == 0.0
    assert emst_length([(0.0, 0.0), (3.0, 0.0)], 10.0).total_length == pytest.approx(3.0)
    sq = [(5, 5), (6, 5), (6, 6), (5, 6)]
    tree = emst_length(sq, 100.0)
    assert tree.total_length == pytest.approx(3.0)
    assert len(tree) == 3
    with pytest.raises(ValueError):
        emst_length(np.empty((0, 2)), 10.0)


def _is_spanning_tree(tree, k):
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v, _ in tree.edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return len(tree) == k - 1


def test_emst_matches_cayley_enumeration():
    rng = np.random.default_rng(42)
    for _ in range(100):
        k = int(rng.integers(1, 7))
        L = float(rng.uniform(1, 10))
        pts = rng.uniform(0, L, size=(k, 2))
        best = cayley_min_spanning_length(pts.tolist(), L)
        assert emst_prim(pts, L).total_length == pytest.approx(best, rel=1e-12, abs=1e-12)
        assert emst_boruvka(pts, L).total_length == pytest.approx(best, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("k", [10, 57, 300, 1000])
def test_prim_and_boruvka_agree_exactly(k):
    rng = np.random.default_rng(k)
    L = math.sqrt(k)
    pts = rng.uniform(0, L, size=(k, 2))
    a = emst_prim(pts, L)
    b = emst_boruvka(pts, L)
    assert a.total_length == b.total_length
    assert sorted(a.w.tolist()) == sorted(b.w.tolist())
    assert _is_spanning_tree(a, k) and _is_spanning_tree(b, k)
    assert a.total_length == math.fsum(a.w)


@pytest.mark.slow
def test_boruvka_large_instance_against_prim():
    rng = np.random.default_rng(1)
    k = 10_000
    L = math.sqrt(k)
    pts = rng.uniform(0, L, size=(k, 2))
    assert emst_boruvka(pts, L).total_length == emst_prim(pts, L).total_length


def test_prim_and_boruvka_agree_on_many_random_sizes():
    rng = np.random.default_rng(99)
    for _ in range(100):
        k = int(rng.integers(10, 400))
        L = math.sqrt(k) * rng.uniform(0.5, 2)
        pts = rng.uniform(0, L, size=(k, 2))
        assert emst_prim(pts, L).total_length == emst_boruvka(pts, L).total_length


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.floats(0.5, 20), st.integers(0, 2**31), coords(1.0))
def test_emst_routes_agree_and_translation_invariant(k, L, seed, shift):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, L, size=(k, 2))
    base = emst_prim(pts, L).total_length
    assert emst_boruvka(pts, L).total_length == base
    assert emst_totals_batched(pts[None], L)[0] == base
    moved = np.mod(pts + np.array(shift) * L, L)
    assert emst_prim(moved, L).total_length == pytest.approx(base, rel=1e-9, abs=1e-12)


def test_batched_totals_match_prim():
    rng = np.random.default_rng(4)
    pts = rng.uniform(0, 6, size=(50, 9, 2))
    totals = emst_totals_batched(pts, 6.0)
    assert all(totals[i] == emst_prim(pts[i], 6.0).total_length for i in range(50))


def test_emst_uses_wraparound():
    # two clusters near opposite edges are close through the seam
    pts = [(0.1, 5.0), (9.9, 5.0)]
    assert emst_length(pts, 10.0).total_length == pytest.approx(0.2)


# --- great circle -----------------------------------------------------------------


def test_haversine_examples():
    assert haversine_km(12.5, 45.0, 12.5, 45.0) == 0.0
    assert haversine_km(0, 0, 0, 180) == pytest.approx(math.pi * EARTH_RADIUS_KM, rel=1e-12)
    assert round(haversine_km(0, 0, 0, 180), 1) == 20015.1


def test_haversine_city_pair():
    # New York to London; reference ~5570 km from a standard spherical
    # great-circle calculator (R = 6371 km).
    d = haversine_km(40.7128, -74.0060, 51.5074, -0.1278)
    assert d == pytest.approx(5570.0, rel=0.005)


@pytest.mark.parametrize("args", [(91, 0, 0, 0), (0, 0, -90.5, 0), (0, 181, 0, 0), (0, 0, 0, -200)])
def test_haversine_rejects_out_of_range(args):
    with pytest.raises(ValueError):
        haversine_km(*args)
