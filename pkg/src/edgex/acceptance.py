"""The acceptance battery: one function per criterion, each returning a Verdict."""
from __future__ import annotations

import math
import time
from collections import Counter

import numpy as np
from scipy import stats
from scipy.special import zeta

from . import analytics as an
from . import graphlimit as gl
from . import intensity as it
from . import sampler as sp
from .analytics import Verdict
from .rng import stream

POWER_LAW_LABELS = 10**6


def _power_law_rank1(gamma=2.0, n=POWER_LAW_LABELS):
    ws = it.weights_family(it.WeightFamilySpec("power_law", gamma=gamma, truncation_count=n))
    return it.build_rank1(ws, loops=False)


_CACHE = {}


def power_law_rank1():
    if "pl2" not in _CACHE:
        _CACHE["pl2"] = _power_law_rank1()
    return _CACHE["pl2"]


def _tv(keys_a, keys_b):
    ca, cb = Counter(keys_a), Counter(keys_b)
    na, nb = len(keys_a), len(keys_b)
    return 0.5 * sum(abs(ca[k] / na - cb[k] / nb) for k in set(ca) | set(cb))


def _chi2_p(keys_a, keys_b, min_expected=5):
    """Two-sample chi-square p-value, pooling rare outcomes into one cell."""
    ca, cb = Counter(keys_a), Counter(keys_b)
    keys = sorted(set(ca) | set(cb), key=lambda k: -(ca[k] + cb[k]))
    rows, rare_a, rare_b = [], 0, 0
    for k in keys:
        if ca[k] + cb[k] >= 2 * min_expected:
            rows.append((ca[k], cb[k]))
        else:
            rare_a += ca[k]
            rare_b += cb[k]
    if rare_a + rare_b:
        rows.append((rare_a, rare_b))
    if len(rows) < 2:
        return 1.0
    return float(stats.chi2_contingency(np.array(rows).T, correction=False)[1])


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def _random_matrix(rng):
    n_lab = int(rng.integers(3, 46))
    pairs = {}
    target = int(rng.integers(2, 1001))
    while len(pairs) < target and len(pairs) < n_lab * (n_lab + 1) // 2:
        i, j = sorted(int(x) for x in rng.integers(1, n_lab + 1, size=2))
        pairs[(i, j)] = float(10 ** rng.uniform(-4, 1))
    return pairs


def _brute_force(pairs, t):
    rate = {}
    e = var = 0.0
    for (i, j), m in pairs.items():
        if i == j:
            continue
        rate[i] = rate.get(i, 0.0) + m
        rate[j] = rate.get(j, 0.0) + m
        p = -math.expm1(-t * m)
        e += p
        var += math.exp(-t * m) * p
    v = sum(-math.expm1(-t * r) for r in rate.values())
    return v, e, var


def criterion_formula_oracles(seed):
    rng = stream(seed, 1)
    worst = 0.0
    for _ in range(50):
        pairs = _random_matrix(rng)
        log_space = bool(rng.random() < 0.5)
        if log_space:
            mu = it.IntensityMatrix.from_dict({k: math.log(v) for k, v in pairs.items()}, log_space=True)
        else:
            mu = it.IntensityMatrix.from_dict(pairs)
        t = float(10 ** rng.uniform(-2, 3))
        got = (an.expected_vertices(mu, t), an.expected_edges(mu, t), an.edge_count_variance(mu, t))
        want = _brute_force(pairs, t)
        for g, w in zip(got, want):
            if w == 0:
                err = abs(g)
            else:
                err = abs(g - w) / abs(w)
            worst = max(worst, err)
    return Verdict("formula_oracles", {"matrices": 50}, worst, 1e-12, worst <= 1e-12)


THREE_PAIRS = {(1, 2): 0.5, (1, 3): 0.3, (2, 3): 0.2}


def _count_key(g: sp.MultiGraph, cap=4):
    mult = g.multiplicities
    return tuple(min(mult.get(k, 0), cap) for k in THREE_PAIRS)


def criterion_sampler_bridges(seed, draws=100_000, t=1.0):
    mu = it.IntensityMatrix.from_dict(THREE_PAIRS)
    rng = stream(seed, 2)
    norm = mu.total_mass()
    fixed, pois, simp, pres = [], [], [], []
    proc_counts = rng.poisson(t * norm, size=draws)
    for k in range(draws):
        fixed.append(_count_key(sp.sample_iid_multigraph(mu, int(proc_counts[k]), rng)))
        g = sp.sample_poisson_multigraph(mu, t, rng)
        pois.append(_count_key(g))
        simp.append(tuple(sorted(sp.simplify(g).edge_set())))
        pres.append(tuple(sorted(sp.sample_presence(mu, t, rng).edge_set())))
    p_a = _chi2_p(fixed, pois)
    p_b = _chi2_p(simp, pres)
    stat = min(p_a, p_b)
    return Verdict("sampler_bridges", {"draws": draws, "t": t}, stat, 0.01, stat > 0.01,
                   details={"p_fixed_vs_poisson": p_a, "p_simplify_vs_presence": p_b})


def criterion_configuration_model(seed, seeds=100_000):
    out = {}
    worst = 0.0
    for k, q in enumerate(((0.5, 0.5), (0.6, 0.3, 0.1))):
        mu = it.build_rank1(it.WeightSeq(np.array(q)), loops=True)
        rep = sp.verify_config_equivalence(mu, 2, seeds, stream(seed, 3, k))
        out[str(q)] = {"tv": rep["tv"], "p_value": rep["p_value"], "max_bin_tv": rep["max_bin_tv"]}
        worst = max(worst, rep["tv"])
    return Verdict("configuration_model", {"m": 2, "seeds": seeds}, worst, 0.02, worst <= 0.02, details=out)


def _pittel_key(g: sp.MultiGraph):
    seq = [x for (a, b), c in zip(g.pairs, g.counts) for _ in range(c) for x in (a, b)]
    return seq


def criterion_hollywood_pittel(seed, seeds=100_000, N=2, alpha=1.0, m=2):
    rng = stream(seed, 4)
    spec = sp.HollywoodSpec(-alpha, N * alpha, m)
    holly, pitt = [], []
    for _ in range(seeds):
        holly.append(sp.multiset_key(sp.hollywood_sample(spec, rng).edges))
        seats = pittel_seats(N, alpha, m, rng)
        lab = sp.relabel_first_occurrence(seats)
        pitt.append(sp.multiset_key(zip(lab[0::2], lab[1::2])))
    tv = _tv(holly, pitt)
    return Verdict("hollywood_pittel", {"N": N, "alpha": alpha, "m": m, "seeds": seeds}, tv, 0.02, tv <= 0.02)


def pittel_seats(N, alpha, m, rng):
    """Seat sequence of the Pittel urn in seating order (0-based tables)."""
    g = sp.pittel_sample(N, alpha, m, rng)
    return g.seat_order


def criterion_law_of_large_numbers(seed, t=1e5, replicates=30):
    mu = power_law_rank1()
    rng = stream(seed, 5)
    ve, ee = an.expected_vertices(mu, t), an.expected_edges(mu, t)
    dv, de = [], []
    for _ in range(replicates):
        g = sp.sample_presence(mu, t, rng)
        dv.append(abs(g.v / ve - 1))
        de.append(abs(g.e / ee - 1))
    stat = max(np.mean(dv), np.mean(de))
    return Verdict("ratio_convergence", {"t": t, "replicates": replicates}, float(stat), 0.1, stat <= 0.1,
                   details={"v_dev": float(np.mean(dv)), "e_dev": float(np.mean(de))})


def criterion_powerlaw_bands(seed, grid=(1e3, 1e4, 1e5)):
    mu = power_law_rank1()
    tails = [an.degree_tail(sp.sample_presence(mu, t, stream(seed, 6, k)), t=t) for k, t in enumerate(grid)]
    v = an.powerlaw_band_check(tails, c_frac=0.05, ratio_cap=50.0)
    v.params["grid"] = list(grid)
    return v


def criterion_growth_exponents(seed, grid=(1e3, 1e4, 1e5, 1e6), replicates=10):
    mu = power_law_rank1()
    vs, es = [], []
    for k, t in enumerate(grid):
        rng = stream(seed, 7, k)
        gs = [sp.sample_presence(mu, t, rng) for _ in range(replicates)]
        vs.append(np.mean([g.v for g in gs]) * t ** -0.5)
        es.append(np.mean([g.e for g in gs]) * t ** -0.5 / math.log(t))
    rv, re_ = max(vs) / min(vs), max(es) / min(es)
    stat = max(rv, re_)
    return Verdict("growth_exponents", {"grid": list(grid), "replicates": replicates}, float(stat), 3.0,
                   stat <= 3.0, details={"v_scaled": vs, "e_scaled": es})


def criterion_complete_graph(seed, n=6, seeds=100):
    mu = it.factorial_intensity(n)
    t = it.factorial_schedule(n)
    full = n * (n - 1) // 2
    hits = sum(sp.sample_presence(mu, t, stream(seed, 8, r)).e == full for r in range(seeds))
    return Verdict("complete_graph", {"n": n, "seeds": seeds, "t": t}, hits / seeds, 0.99, hits >= 0.99 * seeds)


def half_graphon_distance(n, rng, truncation=64):
    ws = it.weights_family(it.WeightFamilySpec("geometric", b=2.0, truncation_count=truncation))
    mu = it.build_rank1(ws, loops=False)
    g = sp.sample_presence(mu, 2.0 ** n, rng)
    return gl.dcut_upper(gl.empirical_graphon(g), gl.AnalyticGraphon.half())["dcut_upper"]


def criterion_half_graphon(seed, replicates=5):
    small = [half_graphon_distance(12, stream(seed, 9, 12, r)) for r in range(replicates)]
    large = [half_graphon_distance(20, stream(seed, 9, 20, r)) for r in range(replicates)]
    m_small, m_large = float(np.mean(small)), float(np.mean(large))
    ok = m_large <= 0.25 and m_large < m_small
    return Verdict("half_graphon", {"n": [12, 20], "replicates": replicates}, m_large, 0.25, ok,
                   details={"mean_n12": m_small, "mean_n20": m_large})


def chameleon_probe(k, shells, g: sp.SimpleGraph):
    """Does G restricted to pairs outside I_{k-1}^2 equal the blow-up of F_k there?"""
    v_k, edges = shells.graphs[k - 1]
    block = k * shells.N[k - 1]
    f = sp.SimpleGraph(np.array(edges, dtype=np.int64) + 1)
    star = gl.blowup(f, block)
    lo = shells.N[k - 1]
    want = star.edges[star.edges.max(axis=1) > lo]
    got = g.edges[g.edges.max(axis=1) > lo] if g.e else g.edges
    return np.array_equal(np.unique(want, axis=0), got)


def criterion_chameleon(seed, k=3, seeds=100):
    mu, shells = it.chameleon_intensity(k)
    t = shells.probe_times[k - 1]
    hits = sum(chameleon_probe(k, shells, sp.sample_presence(mu, t, stream(seed, 10, r))) for r in range(seeds))
    return Verdict("chameleon", {"k": k, "seeds": seeds, "t": t}, hits / seeds, 0.95, hits >= 0.95 * seeds)


def criterion_clt(seed, t=1e4, replicates=500):
    v = an.normality_check(power_law_rank1(), t, replicates, stream(seed, 11), threshold=0.08)
    return v


def band_matrix():
    return it.band_intensity(2, None, profile=lambda i, j: 1.0 / (i * j))


def slow_log_rank1(n=10**6):
    ws = it.weights_family(it.WeightFamilySpec("slow_log", truncation_count=n))
    return it.build_rank1(ws, loops=False, tail="blips")


def criterion_extremely_sparse(seed, slow_t=1e6, slow_reps=3, hub_labels=100):
    band = band_matrix()
    ratios = []
    for k, t in enumerate(10.0 ** np.arange(1, 7)):
        rng = stream(seed, 12, 0, k)
        for _ in range(5):
            g = sp.sample_presence(band, t, rng)
            if g.e:
                ratios.append(g.e / g.v)
    band_ok = min(ratios) >= 0.5 and max(ratios) <= 1.0
    mu = slow_log_rank1()
    rng = stream(seed, 12, 1)
    ev, share = [], []
    for _ in range(slow_reps):
        g = sp.sample_presence(mu, slow_t, rng)
        ev.append(g.e / g.v)
        share.append(float(np.mean(g.edges.min(axis=1) <= hub_labels)))
    slow_ok = 1.0 <= min(ev) and max(ev) <= 1.3 and min(share) >= 0.5
    return Verdict("extremely_sparse", {"slow_t": slow_t, "hub_labels": hub_labels}, float(np.mean(ev)), 1.3,
                   band_ok and slow_ok,
                   details={"band_e_over_v": [min(ratios), max(ratios)], "slow_e_over_v": ev,
                            "slow_hub_share": share, "collision_bound": mu.collision_bound(slow_t)})


def criterion_graphex(seed, t=1e6, window=5.0, r=1.0, seeds=1000, gamma=2.0):
    mu = power_law_rank1()
    c = 1.0 / float(zeta(gamma))
    limit = gl.AnalyticGraphon.power(c, gamma)
    s = t ** (1.0 / (2.0 * gamma))
    a, b = [], []
    for k in range(seeds):
        g = sp.sample_presence(mu, t, stream(seed, 13, 0, k))
        w = gl.stretched_graphon(g, s, relabel=False)
        # both windows read the same Poisson points and uniforms
        a.append(gl.sample_gr_window(w, r, window, stream(seed, 13, 1, k))[0])
        b.append(gl.sample_gr_window(limit, r, window, stream(seed, 13, 1, k))[0])
    d = gl.subgraph_stats_distance(a, b)
    stat = max(d["edges"]["rel_diff"], d["vertices"]["rel_diff"])
    return Verdict("graphex", {"t": t, "window": window, "r": r, "seeds": seeds}, stat, 0.15, stat <= 0.15,
                   details=d)


def criterion_cut_norm(seed, matrices=100, max_blocks=12):
    rng = stream(seed, 14)
    worst = 0.0
    for _ in range(matrices):
        n = int(rng.integers(1, max_blocks + 1))
        d = rng.uniform(-1, 1, size=(n, n))
        d = (d + d.T) / 2
        m = rng.uniform(0.1, 1.0, size=n)
        exact = gl.cut_norm_exact(d, m).lower_bound
        heur = gl.cut_norm_estimate(d, m, rng=rng).lower_bound
        worst = max(worst, abs(exact - heur))
    return Verdict("cut_norm", {"matrices": matrices, "max_blocks": max_blocks}, worst, 1e-12, worst <= 1e-12)


def dust_matrix(central=0.01, n=10):
    entries = {(1, 0): 1.0}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            entries[(i, j)] = central
    return it.IntensityMatrix.from_dict(entries)


def criterion_dust(seed, t=1e4, replicates=10):
    mu = dust_matrix()
    rng = stream(seed, 15)
    shares = []
    for _ in range(replicates):
        g = sp.simplify(sp.sample_poisson_multigraph(mu, t, rng))
        base = sp.blip_base_for(mu.label_max)
        shares.append(float(np.mean(g.edges.max(axis=1) >= base)))
    stat = min(shares)
    return Verdict("dust", {"t": t, "replicates": replicates}, stat, 0.9, stat >= 0.9)


CRITERIA = [
    (1, "formula_oracles", criterion_formula_oracles, True),
    (2, "sampler_bridges", criterion_sampler_bridges, True),
    (3, "configuration_model", criterion_configuration_model, True),
    (4, "hollywood_pittel", criterion_hollywood_pittel, True),
    (5, "ratio_convergence", criterion_law_of_large_numbers, True),
    (6, "powerlaw_band", criterion_powerlaw_bands, True),
    (7, "growth_exponents", criterion_growth_exponents, False),
    (8, "complete_graph", criterion_complete_graph, True),
    (9, "half_graphon", criterion_half_graphon, True),
    (10, "chameleon", criterion_chameleon, True),
    (11, "normality", criterion_clt, True),
    (12, "extremely_sparse", criterion_extremely_sparse, False),
    (13, "graphex", criterion_graphex, False),
    (14, "cut_norm", criterion_cut_norm, True),
    (15, "dust", criterion_dust, True),
]

SUITES = {"quick": [c for c in CRITERIA if c[3]], "full": CRITERIA}


def run_criterion(number, seed=0):
    for num, name, fn, _ in CRITERIA:
        if num == number:
            start = time.perf_counter()
            v = fn(seed)
            v.details["seconds"] = round(time.perf_counter() - start, 3)
            v.params["criterion"] = num
            return v
    raise KeyError(number)


def verify_suite(name, seed=0, report=None):
    """Run a named battery; ``report`` is called with each verdict as it completes."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    out = []
    for num, _, _, _ in SUITES[name]:
        v = run_criterion(num, seed)
        out.append(v)
        if report is not None:
            report(v)
    return out
