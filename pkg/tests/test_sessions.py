import numpy as np
import pytest
from scipy import stats

from osnsim.model import ModelConfig, form_social_graph, sample_degrees, sample_deployment
from osnsim.sessions import (
    DisseminationSession,
    SessionSet,
    gen_broadcast_sessions,
    gen_multicast_sessions,
    sample_destination_count,
    sample_destination_counts,
    sample_multicast_sessions,
)


@pytest.fixture(scope="module")
def small_graph():
    cfg = ModelConfig(800, 1.3, 1.0, phi=1.0)
    dep = sample_deployment(cfg.n, np.random.default_rng(21))
    return dep, form_social_graph(dep, cfg, np.random.default_rng(22))


def test_session_rejects_empty_and_bad_rate():
    with pytest.raises(ValueError):
        DisseminationSession(0, (), np.empty((0, 2)))
    with pytest.raises(ValueError):
        DisseminationSession(0, (1,), np.zeros((1, 2)), rate=2.0)


def test_broadcast_one_session_per_node(small_graph):
    dep, g = small_graph
    s = gen_broadcast_sessions(g)
    assert len(s) == g.n
    assert np.array_equal(s.sizes, g.degrees)
    for k in range(0, g.n, 53):
        sess = s[k]
        assert sess.source == k and sess.rate == 1.0
        assert set(sess.destinations) == set(g.friends(k).tolist())
        assert np.array_equal(sess.anchor_subset, g.anchors(k))
    single = np.flatnonzero(g.degrees == 1)[0]
    assert len(s[int(single)].destinations) == 1


def test_destination_count_degenerate_and_errors():
    rng = np.random.default_rng(0)
    assert all(sample_destination_count(1, 2.5, rng) == 1 for _ in range(50))
    with pytest.raises(ValueError):
        sample_destination_count(0, 1.0, rng)
    with pytest.raises(ValueError):
        sample_destination_counts(np.array([3, 0]), 1.0, rng)


def test_destination_count_uniform_when_phi_zero():
    d = sample_destination_counts(np.full(1_000_000, 4), 0.0, np.random.default_rng(1))
    share = np.bincount(d, minlength=5)[1:] / d.size
    assert np.all(np.abs(share - 0.25) < 0.01)


def test_destination_count_large_phi_is_unicast():
    d = sample_destination_counts(np.full(100_000, 100), 50.0, np.random.default_rng(2))
    assert np.mean(d == 1) > 0.999


def test_conditional_law_pooled_by_friend_count():
    n, gamma, phi = 10_000, 1.5, 1.2
    pooled = {l: [] for l in (2, 3, 5, 8)}
    for seed in range(20):
        rng = np.random.default_rng(seed)
        q = sample_degrees(n, gamma, n, rng)
        d = sample_destination_counts(q, phi, rng)
        for l in pooled:
            pooled[l].append(d[q == l])
    for l, parts in pooled.items():
        obs = np.bincount(np.concatenate(parts), minlength=l + 1)[1:]
        w = np.arange(1, l + 1, dtype=float) ** -phi
        assert stats.chisquare(obs, obs.sum() * w / w.sum()).pvalue > 0.01


def test_multicast_subset_of_broadcast(small_graph):
    dep, g = small_graph
    b = gen_broadcast_sessions(g)
    m = gen_multicast_sessions(g, 1.0, np.random.default_rng(5))
    assert len(m) == g.n
    assert np.all((m.sizes >= 1) & (m.sizes <= g.degrees))
    for k in range(g.n):
        ms, bs = m[k], b[k]
        assert set(ms.destinations) <= set(bs.destinations)
        assert set(ms.destinations) <= set(g.friends(k).tolist())
        assert 1 <= len(ms.destinations) <= g.degrees[k]
        rows = {tuple(p) for p in bs.anchor_subset.tolist()}
        assert {tuple(p) for p in ms.anchor_subset.tolist()} <= rows


def test_multicast_phi_zero_mean_fraction():
    # heavy degrees so many distinct l values are populated
    l = np.repeat(np.arange(1, 21), 20_000)
    d = sample_destination_counts(l, 0.0, np.random.default_rng(3))
    for v in (1, 2, 7, 20):
        frac = d[l == v] / v
        assert frac.mean() == pytest.approx((v + 1) / (2 * v), abs=0.01)


def test_direct_multicast_sampling(small_graph):
    dep, g = small_graph
    counts = np.minimum(g.degrees, 3)
    s = sample_multicast_sessions(dep, counts, 1.0, np.random.default_rng(4))
    assert np.array_equal(s.sizes, counts)
    assert s.pattern == "multicast"
    assert not np.any(s.destination_nodes == s.slot_sources)


def test_session_json_round_trip(tmp_path, small_graph):
    dep, g = small_graph
    s = gen_multicast_sessions(g, 2.0, np.random.default_rng(7))
    s.to_json(tmp_path / "s.json")
    t = SessionSet.from_json(tmp_path / "s.json", g)
    assert t.pattern == "multicast"
    assert np.array_equal(t.offsets, s.offsets)
    assert np.array_equal(t.anchor_index, s.anchor_index)
    assert [x.destinations for x in t] == [x.destinations for x in s]
    (tmp_path / "x.json").write_text("{}")
    with pytest.raises(ValueError):
        SessionSet.from_json(tmp_path / "x.json", g)


def test_indexing(small_graph):
    _, g = small_graph
    s = gen_broadcast_sessions(g)
    assert s[-1].source == g.n - 1
    assert len(s[2:5]) == 3
    with pytest.raises(IndexError):
        s[g.n]
