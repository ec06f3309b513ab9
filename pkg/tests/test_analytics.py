import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgex import analytics as an
from edgex import intensity as it
from edgex import sampler as sp
from edgex.acceptance import power_law_rank1
from edgex.errors import UndefinedStatisticError
from edgex.rng import stream


def _brute(mu_matrix, t):
    """Pure-Python sums over stored pairs."""
    v_rate, e, var = {}, 0.0, 0.0
    for a, b, lam in zip(mu_matrix.rows.tolist(), mu_matrix.cols.tolist(), mu_matrix.values.tolist()):
        if a == b:
            continue
        for x in (a, b):
            v_rate[x] = v_rate.get(x, 0.0) + lam
        p = 1 - math.exp(-t * lam)
        e += p
        var += p * (1 - p)
    v = sum(1 - math.exp(-t * r) for r in v_rate.values())
    return v, e, var


def test_single_pair_closed_forms():
    mu = it.IntensityMatrix.from_dict({(1, 2): 1.0})
    t = math.log(2)
    assert an.expected_edges(mu, t) == pytest.approx(0.5)
    assert an.edge_count_variance(mu, t) == pytest.approx(0.25)
    for lam, tt in [(0.3, 2.0), (5.0, 0.1)]:
        m = it.IntensityMatrix.from_dict({(1, 2): lam})
        assert an.expected_vertices(m, tt) == pytest.approx(2 * (1 - math.exp(-lam * tt)))


def test_single_pair_vertex_variance_under_bound():
    mu = it.IntensityMatrix.from_dict({(1, 2): 1.0})
    for t in (0.1, 1.0, 5.0):
        p = 1 - math.exp(-t)
        exact = 4 * p * (1 - p)
        assert exact <= an.vertex_count_variance_bound(mu, t) == pytest.approx(4 * p)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1e-3, 1.0), min_size=2, max_size=30), st.booleans(),
       st.floats(1e-3, 1e4))
def test_rank1_sums_match_pairwise(raw, loops, t):
    q = np.sort(np.asarray(raw))[::-1]
    ws = it.WeightSeq(q / q.sum())
    mu = it.build_rank1(ws, loops)
    v, e, var = _brute(mu.to_matrix(), t)
    assert an.expected_edges(mu, t) == pytest.approx(e, rel=1e-9, abs=1e-12)
    assert an.edge_count_variance(mu, t) == pytest.approx(var, rel=1e-7, abs=1e-10)
    assert an.expected_vertices(mu, t) == pytest.approx(v, rel=1e-9, abs=1e-12)


def test_rank1_large_sequence_against_direct_sum():
    ws = it.weights_family(it.WeightFamilySpec("power_law", gamma=2.0, truncation_count=3000))
    mu = it.build_rank1(ws, loops=False)
    q = ws.weights
    for t in (10.0, 1e3, 1e5):
        lam = 2 * t * np.outer(q, q)
        iu = np.triu_indices(q.size, 1)
        p = -np.expm1(-lam[iu])
        assert an.expected_edges(mu, t) == pytest.approx(math.fsum(p), rel=1e-10)
        assert an.edge_count_variance(mu, t) == pytest.approx(math.fsum(p * (1 - p)), rel=1e-8)


def test_blip_rates_enter_expectations():
    mu = it.IntensityMatrix.from_dict({(0, 1): 0.5, (-1, 0): 0.25, (0, 0): 1.0})
    t = 2.0
    # star edges: t * 0.5 edges, each adding one fresh vertex and touching vertex 1
    assert an.expected_edges(mu, t) == pytest.approx(t * 0.75)
    assert an.expected_vertices(mu, t) == pytest.approx((1 - math.exp(-t * 0.5)) + t * 0.5 + 2 * t * 0.25)


def test_vertex_variance_bound_monte_carlo():
    mu = power_law_rank1()
    t = 1e3
    rng = stream(30)
    vs = np.array([sp.sample_presence(mu, t, rng).v for _ in range(10_000)])
    assert vs.var(ddof=1) <= an.vertex_count_variance_bound(mu, t)
    assert vs.mean() == pytest.approx(an.expected_vertices(mu, t), rel=0.01)


def test_power_law_edge_growth_band():
    mu = power_law_rank1()
    ts = np.logspace(2, 6, 9)
    r = np.array([an.expected_edges(mu, t) / (math.sqrt(t) * math.log(t)) for t in ts])
    assert r.max() / r.min() <= 3.0


def test_degree_tail_of_star():
    g = sp.SimpleGraph([(1, k) for k in range(2, 6)])
    tail = an.degree_tail(g, t=1.0)
    assert tail.v_total == 5
    assert tail.pi_ge_k[:5] == pytest.approx([1.0, 0.2, 0.2, 0.2, 0.0])
    assert tail.to_csv().splitlines()[0] == "k,pi_ge_k,v_total"
    with pytest.raises(UndefinedStatisticError):
        an.degree_tail(sp.SimpleGraph())


def test_band_check_needs_enough_snapshots():
    g = sp.SimpleGraph([(1, 2)])
    v = an.powerlaw_band_check([an.degree_tail(g, 1.0)])
    assert v.status == "inconclusive" and v.passed is None


def _curve(t, v, e):
    t = np.asarray(t, float)
    z = np.zeros_like(t)
    return an.GrowthCurve(t, v, e, np.asarray(v, float), z, np.asarray(e, float), z, z + 1)


def test_density_classes_on_synthetic_curves():
    t = np.logspace(2, 6, 5)
    v = np.sqrt(t)
    assert an.density_classify(_curve(t, v, v ** 2 / 2)) == "dense"
    assert an.density_classify(_curve(t, v, 1.7 * v)) == "extremely_sparse"
    assert an.density_classify(_curve(t, v, v * np.log(t))) == "sparse"
    assert an.density_classify(_curve(t[:2], v[:2], v[:2])) == "inconclusive"


def test_density_class_from_closed_forms():
    ts = np.logspace(2, 6, 5)

    def expected_curve(mu):
        v = [an.expected_vertices(mu, t) for t in ts]
        e = [an.expected_edges(mu, t) for t in ts]
        return _curve(ts, np.array(v), np.array(e))

    band = it.band_intensity(2, None, lambda i, j: 1.0 / (i * j.astype(float)))
    assert an.density_classify(expected_curve(band)) == "extremely_sparse"
    assert an.density_classify(expected_curve(power_law_rank1())) == "sparse"
    fact = it.factorial_intensity(9)
    tf = np.array([it.factorial_schedule(n) for n in range(3, 9)])
    v = np.array([an.expected_vertices(fact, t) for t in tf])
    e = np.array([an.expected_edges(fact, t) for t in tf])
    assert an.density_classify(_curve(tf, v, e)) == "dense"


def test_growth_curve_csv_shape():
    mu = it.IntensityMatrix.from_dict({(1, 2): 1.0, (2, 3): 0.5})
    c = an.convergence_ratio_curve(mu, [0.5, 1.0, 2.0], 5, stream(31))
    rows = c.to_csv().splitlines()
    assert rows[0] == "t,v_exp,v_obs_mean,v_obs_se,e_exp,e_obs_mean,e_obs_se"
    assert len(rows) == 4 and all(len(r.split(",")) == 7 for r in rows)
    with pytest.raises(ValueError):
        an.convergence_ratio_curve(mu, [2.0, 1.0], 2)


def test_normality_inconclusive_when_variance_small():
    mu = it.IntensityMatrix.from_dict({(1, 2): 1.0})
    v = an.normality_check(mu, 1.0, 50, stream(0))
    assert v.status == "inconclusive" and v.passed is None


def test_bernoulli_sum_is_nearly_normal():
    v = an.bernoulli_sum_normality(np.full(400, 0.3), 4000, stream(32))
    assert v.passed


def test_verdict_json_keys():
    v = an.Verdict("x", {"a": 1}, np.float64(0.5), 1.0, np.bool_(True))
    d = json.loads(v.to_json())
    assert d["pass"] is True and d["statistic"] == 0.5 and d["check"] == "x"


def test_blip_share():
    g = sp.MultiGraph([(1, 2)], [1], [(1, 10**6), (10**6 + 1, 10**6 + 2), (10**6 + 3, 10**6 + 4)], 10**6)
    assert an.blip_share(g) == pytest.approx(0.75)
