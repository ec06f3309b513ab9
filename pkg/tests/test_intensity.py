import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgex import intensity as it
from edgex.errors import (
    CapacityError,
    DegenerateSpecError,
    MassDivergenceError,
    ParameterDomainError,
    UnsupportedFamilyError,
)
from edgex.rng import stream


def _power_law_tail(gamma, start, terms=2_000_000):
    # direct series with an integral remainder estimate
    i = np.arange(start, start + terms, dtype=float)
    s = float(np.sum(i[::-1] ** -gamma))
    end = start + terms
    return s + end ** (1 - gamma) / (gamma - 1) - 0.5 * end ** -gamma


def test_power_law_tail_after_two_labels():
    ws = it.weights_family(it.WeightFamilySpec("power_law", gamma=2.0, truncation_count=2))
    norm = math.pi ** 2 / 6
    assert ws.weights * norm == pytest.approx([1.0, 0.25], rel=1e-12)
    assert ws.tail_mass * norm == pytest.approx(_power_law_tail(2.0, 3), abs=1e-12)
    assert ws.tail_mass * norm == pytest.approx(math.pi ** 2 / 6 - 1.25, abs=1e-12)


def test_geometric_weights_and_tail():
    ws = it.weights_family(it.WeightFamilySpec("geometric", b=2.0, truncation_count=3))
    assert ws.weights == pytest.approx([0.5, 0.25, 0.125])
    assert ws.tail_mass == pytest.approx(0.125)
    assert ws.total == pytest.approx(1.0)


def test_slow_log_tail_fraction_small():
    ws = it.weights_family(it.WeightFamilySpec("slow_log", truncation_count=10**6))
    assert ws.tail_mass / ws.total <= 0.08
    # weights decrease and sum with the tail to one
    assert np.all(np.diff(ws.weights) <= 0)
    assert ws.total == pytest.approx(1.0, abs=1e-9)


def test_mass_budget_truncation():
    ws = it.weights_family(it.WeightFamilySpec("geometric", b=2.0, truncation_mass_budget=1e-3))
    assert ws.tail_mass <= 1e-3
    assert len(ws) == 10


@pytest.mark.parametrize("spec,err", [
    (it.WeightFamilySpec("power_law", gamma=1.0, truncation_count=5), ParameterDomainError),
    (it.WeightFamilySpec("geometric", b=1.0, truncation_count=5), ParameterDomainError),
    (it.WeightFamilySpec("power_law", gamma=2.0), DegenerateSpecError),
    (it.WeightFamilySpec("power_law", gamma=2.0, truncation_count=0), DegenerateSpecError),
    (it.WeightFamilySpec("zipfish", truncation_count=3), UnsupportedFamilyError),
])
def test_family_spec_rejects(spec, err):
    with pytest.raises(err):
        it.weights_family(spec)


def test_family_spec_round_trip():
    spec = it.WeightFamilySpec("power_law", gamma=2.5, truncation_count=100)
    assert it.WeightFamilySpec.from_dict(spec.to_dict()) == spec


def test_gem_first_weight_mean():
    vals = np.array([it.stick_break_gem(0.0, 1.0, 1e-3, stream(7, s)).weights[0] for s in range(20_000)])
    # first stick of GEM(0, 1) is Beta(1, 1)
    assert abs(vals.mean() - 0.5) < 0.01


def test_gem_geometric_decay_rate():
    slopes = []
    for s in range(40):
        w = it.stick_break_gem(0.0, 2.0, 1e-300, stream(11, s), min_count=200).weights[:200]
        i = np.arange(1, 201)
        slopes.append(np.polyfit(i, np.log(w), 1)[0])
    assert np.mean(slopes) == pytest.approx(-0.5, abs=0.05)


def test_gem_mass_accounting():
    ws = it.stick_break_gem(0.5, 1.0, 1e-4, stream(1))
    assert ws.total == pytest.approx(1.0, abs=1e-9)
    assert ws.tail_mass <= 1e-4


def test_gem_rejects_bad_parameters():
    with pytest.raises(ParameterDomainError):
        it.stick_break_gem(0.5, -0.6, 1e-3, stream(0))


def test_dirichlet_moments():
    # Dirichlet(1, 1) marginal is Beta(1, 1): mean 1/2, variance 1/12
    q1 = np.array([it.polya_dirichlet_weights(2, 2.0, stream(3, s)).weights[0] for s in range(20_000)])
    assert q1.mean() == pytest.approx(0.5, abs=0.01)
    assert q1.var() == pytest.approx(1 / 12, abs=0.005)


def test_rank1_vertex_intensity_with_loops():
    q = it.WeightSeq(np.array([0.5, 0.3, 0.2]))
    mu = it.build_rank1(q, loops=True)
    assert mu.vertex_intensity(1) == pytest.approx(0.75)
    mu2 = it.build_rank1(it.WeightSeq(np.array([0.5, 0.5])), loops=True)
    assert mu2.vertex_intensity(1) == pytest.approx(0.75)
    assert mu2.total_mass() == pytest.approx(1.0)


def test_rank1_lookup_matches_matrix():
    q = it.WeightSeq(np.array([0.4, 0.3, 0.2, 0.1]))
    for loops in (True, False):
        mu = it.build_rank1(q, loops)
        m = mu.to_matrix()
        for i in range(1, 5):
            for j in range(i, 5):
                assert mu.lookup(i, j) == pytest.approx(m.lookup(i, j))
        assert mu.total_mass() == pytest.approx(m.total_mass())


def test_rank1_blip_tail_mass_is_kept():
    ws = it.weights_family(it.WeightFamilySpec("geometric", b=2.0, truncation_count=4))
    mu = it.build_rank1(ws, loops=False, tail="blips")
    S, tau = ws.weights.sum(), ws.tail_mass
    expect = sum(2 * a * b for k, a in enumerate(ws.weights) for b in ws.weights[k + 1:])
    assert mu.total_mass() == pytest.approx(expect + 2 * S * tau + tau ** 2)
    assert mu.discarded_mass == 0.0


def test_matrix_validation():
    with pytest.raises(ParameterDomainError):
        it.IntensityMatrix.from_dict({(1, 2): -0.1})
    m = it.IntensityMatrix.from_dict({(2, 1): 0.5, (3, 3): 0.25})
    assert m.lookup(1, 2) == m.lookup(2, 1) == 0.5
    assert m.total_mass() == pytest.approx(0.75)
    # loops count once toward the vertex intensity
    assert m.vertex_intensity(3) == pytest.approx(0.25)


def test_matrix_text_round_trip():
    m = it.IntensityMatrix.from_dict({(1, 2): 0.5, (2, 3): 1e-300, (4, 4): 2.0})
    back = it.IntensityMatrix.from_text(m.to_text())
    for key in [(1, 2), (2, 3), (4, 4)]:
        assert back.lookup(*key) == pytest.approx(m.lookup(*key), rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(1, 8), st.integers(1, 8)),
                       st.floats(1e-6, 10.0), min_size=1, max_size=12))
def test_vertex_intensities_sum_to_twice_offdiag(entries):
    m = it.IntensityMatrix.from_dict({(min(a, b), max(a, b)): v for (a, b), v in entries.items()})
    off = sum(v for (a, b), v in zip(zip(m.rows, m.cols), m.values) if a != b)
    diag = sum(v for (a, b), v in zip(zip(m.rows, m.cols), m.values) if a == b)
    total_vertex = sum(m.vertex_intensity(i) for i in range(1, 9))
    assert total_vertex == pytest.approx(2 * off + diag)


def test_factorial_entries_and_dominance():
    mu = it.factorial_intensity(6)
    assert mu.lookup(1, 2) == pytest.approx(1 / 16)
    assert mu.lookup(2, 3) == pytest.approx(1 / 1296)
    assert mu.lookup(1, 6) == pytest.approx(float(Fraction(1, math.factorial(6) ** 4)))
    assert it.factorial_dominance_holds(mu)
    # sup_l mu_{3,l} = 1/1296 against 2^-4 min_{i<3} mu_{2,i} = 1/256
    assert max(mu.lookup(3, l) for l in range(1, 7) if l != 3) == pytest.approx(1 / 1296)
    assert 1 / 1296 <= 2 ** -4 * min(mu.lookup(2, 1), 1.0)


def test_factorial_schedule():
    for n in (2, 4, 6):
        a_next = math.factorial(n + 1) ** -4.0
        assert it.factorial_schedule(n) == pytest.approx(1 / (n ** 3 * a_next), rel=1e-12)


def test_band_finite():
    mu = it.band_intensity(2, n_max=5)
    assert len(mu) == 4
    assert mu.total_mass() == pytest.approx(4.0)
    assert mu.max_row_support() == 2
    mu4 = it.band_intensity(4, n_max=5)
    assert len(mu4) == 4 + 3


def test_band_geometric_profile_mass():
    prof = lambda i, j: 2.0 ** -np.maximum(i, j).astype(float)  # noqa: E731
    mu = it.band_intensity(2, None, prof, mass_budget=1e-12)
    # pairs (k, k+1) carry 2^-(k+1); the sum over k >= 1 is 1/2
    assert mu.total_mass() == pytest.approx(0.5, abs=1e-9)


def test_band_divergence_detected():
    with pytest.raises(MassDivergenceError):
        it.band_intensity(2, None, None, max_labels=4096)
    with pytest.raises(ParameterDomainError):
        it.band_intensity(3, n_max=10)


def test_graph_enumeration_counts():
    graphs = it.graphs_without_isolated(4)
    counts = {}
    for v, edges in graphs:
        counts[v] = counts.get(v, 0) + 1
    # unlabelled graphs without isolated vertices on 2, 3, 4 vertices
    assert counts == {2: 1, 3: 2, 4: 7}
    assert graphs[0] == (2, ((0, 1),))


def test_round_robin_repeats_each_graph():
    seq = it.round_robin(["a", "b", "c"], 6)
    assert seq == ["a", "a", "b", "a", "b", "c"]
    with pytest.raises(CapacityError):
        it.round_robin(["a", "b"], 4)


def test_chameleon_first_shell():
    mu, shells = it.chameleon_intensity(1)
    assert shells.N == [1, 2]
    assert math.exp(shells.log_a[0]) == pytest.approx(1 / 16)
    assert mu.lookup(1, 2) == pytest.approx(1 / 16)
    assert shells.probe_times[0] == pytest.approx(32.0)


def test_chameleon_capacity_error_names_safe_k():
    with pytest.raises(CapacityError, match="maximal safe k"):
        it.chameleon_intensity(8)


def test_truncation_index_power_law():
    spec = it.WeightFamilySpec("power_law", gamma=2.0, truncation_count=10)
    c = 6 / math.pi ** 2
    M = it.truncation_index(spec, 100.0, 0.01)
    assert 200 * c / M <= 0.01 < 200 * c / (M - 1)


def test_truncation_index_geometric():
    spec = it.WeightFamilySpec("geometric", b=2.0, truncation_count=10)
    for t, eps in [(10.0, 0.1), (1e4, 1e-3), (1e6, 0.5)]:
        M = it.truncation_index(spec, t, eps)
        tail = lambda k: sum(2.0 ** -i for i in range(k + 1, k + 200))  # noqa: E731
        assert 2 * t * tail(M) <= eps < 2 * t * tail(M - 1) or M == 1
        assert abs(M - math.log2(t / eps)) <= 2


def test_truncation_index_edges():
    spec = it.WeightFamilySpec("geometric", b=2.0, truncation_count=10)
    assert it.truncation_index(spec, 0.0, 0.1) == 1
    with pytest.raises(ParameterDomainError):
        it.truncation_index(spec, -1.0, 0.1)
    with pytest.raises(ParameterDomainError):
        it.truncation_index(spec, 1.0, 1.5)
