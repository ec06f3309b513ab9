import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgex import graphlimit as gl
from edgex.errors import DimensionError, ParameterDomainError, UndefinedStatisticError
from edgex.rng import stream
from edgex.sampler import SimpleGraph


def _complete(n):
    return SimpleGraph([(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)])


def _brute_cut(delta, measures):
    n = len(measures)
    w = np.asarray(delta) * np.outer(measures, measures)
    best = 0.0
    for s in itertools.product([0, 1], repeat=n):
        for t in itertools.product([0, 1], repeat=n):
            best = max(best, abs(np.asarray(s) @ w @ np.asarray(t)))
    return best


def test_empirical_graphon_of_small_graphs():
    w = gl.empirical_graphon(_complete(2))
    assert np.array_equal(w.dense(), [[0, 1], [1, 0]])
    assert w.block_measures == pytest.approx([0.5, 0.5])
    k3 = gl.empirical_graphon(_complete(3)).dense()
    assert np.array_equal(k3, np.ones((3, 3)) - np.eye(3))
    with pytest.raises(UndefinedStatisticError):
        gl.empirical_graphon(SimpleGraph())


def test_stretched_graphon_measures():
    g = SimpleGraph([(1, 2)])
    w1 = gl.stretched_graphon(g, 1.0)
    assert w1.block_measures == pytest.approx([1.0, 1.0])
    assert w1.value(0.5, 1.5) == 1.0 and w1.value(0.5, 0.5) == 0.0
    w2 = gl.stretched_graphon(_complete(4), 2.0)
    assert w2.block_measures == pytest.approx([0.5] * 4)
    assert w2.total_measure == pytest.approx(4 / 2.0)
    with pytest.raises(ParameterDomainError):
        gl.stretched_graphon(g, 0.0)


def test_step_graphon_text_round_trip():
    w = gl.empirical_graphon(SimpleGraph([(1, 2), (2, 3)]))
    back = gl.StepGraphon.from_text(w.to_text())
    assert np.array_equal(back.dense(), w.dense())
    assert back.block_measures == pytest.approx(w.block_measures)


def test_step_graphon_validation():
    with pytest.raises(ValueError):
        gl.StepGraphon(np.array([[0, 1], [0, 0]]), [0.5, 0.5])
    with pytest.raises(DimensionError):
        gl.StepGraphon(np.zeros((2, 2)), [1.0])


def test_cut_norm_simple_cases():
    m = np.array([0.5, 0.5])
    assert gl.cut_norm_estimate(np.zeros((2, 2)), m, rng=stream(0)).lower_bound == 0.0
    assert gl.cut_norm_estimate(np.full((2, 2), 0.3), m, rng=stream(0)).lower_bound == pytest.approx(0.3)
    a = 0.8
    d = np.array([[a, -a], [-a, a]])
    assert _brute_cut(d, m) == pytest.approx(a / 4)
    assert gl.cut_norm_exact(d, m).lower_bound == pytest.approx(a / 4)
    assert gl.cut_norm_estimate(d, m, rng=stream(0)).lower_bound == pytest.approx(a / 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_cut_norm_heuristic_below_exact(n, seed):
    rng = np.random.default_rng(seed)
    d = rng.uniform(-1, 1, (n, n))
    d = (d + d.T) / 2
    m = rng.dirichlet(np.ones(n))
    exact = gl.cut_norm_exact(d, m).lower_bound
    assert exact == pytest.approx(_brute_cut(d, m), abs=1e-12)
    assert gl.cut_norm_estimate(d, m, rng=stream(seed)).lower_bound <= exact + 1e-12


def test_cut_norm_exact_size_limit():
    with pytest.raises(DimensionError):
        gl.cut_norm_exact(np.zeros((30, 30)), np.full(30, 1 / 30))


def test_dcut_self_distance_zero():
    w = gl.empirical_graphon(SimpleGraph([(1, 2), (2, 3), (3, 4), (1, 4)]))
    assert gl.dcut_upper(w, w)["dcut_upper"] == 0.0


def test_complete_graph_against_constant():
    one = gl.AnalyticGraphon("constant", c=1.0)
    for n in (3, 5, 8, 20):
        d = gl.dcut_upper(gl.empirical_graphon(_complete(n)), one)
        assert d["dcut_upper"] <= 1.0 / n + 1e-12
        assert d["l1_bound"] == pytest.approx(1.0 / n)


def test_half_graph_against_half_graphon():
    half = gl.AnalyticGraphon.half()
    vals = []
    for n in range(4, 13):
        i, j = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
        adj = ((i + j <= n) & (i != j)).astype(float)
        w = gl.StepGraphon(adj, np.full(n, 1.0 / n))
        d = gl.dcut_upper(w, half)
        assert d["cut_exact"]
        vals.append(d["dcut_upper"])
    vals = np.array(vals)
    assert np.all(np.diff(vals) <= 1e-12)
    assert np.max(vals * np.arange(4, 13)) <= 3.0


def _graphs_on_labels(max_v=8):
    pairs = st.tuples(st.integers(1, max_v), st.integers(1, max_v)).filter(lambda p: p[0] != p[1])
    return st.lists(pairs, min_size=1, max_size=14)


@settings(max_examples=40, deadline=None)
@given(_graphs_on_labels(), st.integers(1, 3))
def test_blowup_has_zero_distance(edges, m):
    g = SimpleGraph(edges).relabel()
    d = gl.dcut_upper(gl.empirical_graphon(g), gl.empirical_graphon(gl.blowup(g, m)))
    assert d["dcut_upper"] == pytest.approx(0.0, abs=1e-15)


def test_dcut_bounds_are_ordered():
    rng = stream(40)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        e = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1) if rng.random() < 0.5] or [(1, 2)]
        g = SimpleGraph(e).relabel()
        d = gl.dcut_upper(gl.empirical_graphon(g), gl.AnalyticGraphon("constant", c=0.5))
        assert 0.0 <= d["cutnorm_lb"] <= d["dcut_upper"] + 1e-12 <= d["l1_bound"] + 2e-12


def test_dcut_rejects_mismatched_domains():
    a = gl.StepGraphon(np.zeros((2, 2)), [0.5, 0.5])
    b = gl.StepGraphon(np.zeros((2, 2)), [1.0, 1.0])
    with pytest.raises(DimensionError):
        gl.dcut_upper(a, b)
    with pytest.raises(DimensionError):
        gl.dcut_upper(a, a, alignment="sideways")


def test_distance_report_keys():
    w = gl.empirical_graphon(_complete(3))
    rep = json.loads(gl.distance_report(["a", "b"], gl.dcut_upper(w, w)))
    assert set(rep) == {"pair", "alignment", "l1_bound", "cutnorm_lb", "dcut_upper"}


def test_analytic_cell_averages():
    half = gl.AnalyticGraphon.half()
    assert half.cell_integral(0, 1, 0, 1) == pytest.approx(0.5)
    assert half.cell_integral(0, 0.5, 0, 0.5) == pytest.approx(0.25)
    corner = gl.AnalyticGraphon("gamma_corner", gamma=2.0)
    assert corner.cell_integral(0, 1, 0, 1) == pytest.approx(np.pi / 4, abs=1e-6)
    with pytest.raises(ParameterDomainError):
        gl.AnalyticGraphon("power_tail", c=1.0, gamma=2.0)


def test_gr_window_trivial_graphons():
    zero = gl.AnalyticGraphon("constant", c=0.0)
    g, x = gl.sample_gr_window(zero, 3.0, 2.0, stream(41))
    assert g.e == 0
    one = gl.AnalyticGraphon("constant", c=1.0)
    rng = stream(42)
    for _ in range(10_000):
        g, x = gl.sample_gr_window(one, 2.0, 1.0, rng)
        if x.size >= 2:
            assert g.e == x.size * (x.size - 1) // 2


def test_gr_window_power_tail_edge_mean():
    w = gl.AnalyticGraphon.power(1.0, 2.0)
    rng = stream(43)
    es = [gl.sample_gr_window(w, 1.0, 5.0, rng)[0].e for _ in range(10_000)]
    assert np.mean(es) == pytest.approx(gl.expected_gr_edges(w, 1.0, 5.0), rel=0.05)


def test_subgraph_stats_identical_samples():
    gs = [_complete(3), SimpleGraph([(1, 2)])]
    out = gl.subgraph_stats_distance(gs, gs)
    assert all(v["rel_diff"] == 0 and v["ks"] == 0 for v in out.values())
    empty = [SimpleGraph(), SimpleGraph()]
    out = gl.subgraph_stats_distance(empty, empty)
    assert all(v["rel_diff"] == 0 for v in out.values())
    with pytest.raises(UndefinedStatisticError):
        gl.subgraph_stats_distance([], gs)
