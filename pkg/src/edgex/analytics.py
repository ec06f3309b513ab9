"""Expected counts, variances and statistical verdicts for G_t."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .errors import UndefinedStatisticError
from .intensity import Rank1Intensity
from .rng import as_generator
from .sampler import SimpleGraph, sample_presence

SERIES_CUTOFF = 0.25
SERIES_TERMS = 18


@dataclass
class Verdict:
    check: str
    params: dict
    statistic: float | None
    threshold: float | None
    passed: bool | None
    status: str = "ok"
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"check": self.check, "params": self.params, "statistic": self.statistic,
                "threshold": self.threshold, "pass": self.passed, "status": self.status,
                "details": self.details}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, default=_json_default)


def _json_default(x):
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def _blip_rates(mu):
    """(star rate, dust-edge rate) of an explicit matrix; loops in dust are deleted."""
    if isinstance(mu, Rank1Intensity):
        return mu.star_rate, mu.dust_rate
    v = mu.values
    star = (mu.rows == 0) & (mu.cols >= 1)
    dust = mu.rows == -1
    return float(v[star].sum()), float(v[dust].sum())


def _loopfree_vertex_rates(mu):
    """Rate of non-loop edges at each positive label (star edges included)."""
    if isinstance(mu, Rank1Intensity):
        return mu.vertex_intensities(include_diagonal=False)[1]
    v = mu.values
    off = (mu.rows != mu.cols) & (mu.cols >= 1)
    labs = np.concatenate([mu.rows[off], mu.cols[off]])
    vals = np.concatenate([v[off], v[off]])
    pos = labs >= 1
    labs, vals = labs[pos], vals[pos]
    _, inv = np.unique(labs, return_inverse=True)
    return np.bincount(inv.reshape(-1), weights=vals)


def expected_vertices(mu, t, with_error=False):
    """v(t) = sum_i (1 - exp(-t mu_i)) plus expected blip vertices.

    With ``with_error=True`` also returns ``t * 2 * discarded_mass``, a bound
    on the expected number of vertices lost to truncation.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    rates = _loopfree_vertex_rates(mu)
    star, dust = _blip_rates(mu)
    val = float(-np.expm1(-t * rates).sum()) + t * (star + 2.0 * dust)
    if with_error:
        return val, 2.0 * t * mu.discarded_mass
    return val


def _pair_terms(lam, kind):
    if kind == "mean":
        return -np.expm1(-lam)
    return np.exp(-lam) * -np.expm1(-lam)


def _rank1_pair_sum(q, t, kind):
    """sum_{i<j} f(2 t q_i q_j) for f(x) = 1 - e^-x ("mean") or e^-x (1 - e^-x) ("var").

    Pairs with 2 t q_i q_j above a cutoff are summed directly; the rest use
    the power series of f with suffix power sums of q, so nothing quadratic
    in len(q) is formed.  ``q`` must be nonincreasing.
    """
    n = q.size
    if n < 2 or t == 0:
        return 0.0
    if np.any(np.diff(q) > 0):
        order = np.argsort(-q, kind="stable")
        q = q[order]
    a = 2.0 * t * q
    # first j (0-based) with a_i q_j <= cutoff, at least i + 1
    thresh = SERIES_CUTOFF / np.where(a > 0, a, np.inf)
    j0 = np.searchsorted(-q, -thresh, side="right")
    j0 = np.maximum(j0, np.arange(1, n + 1))
    total = 0.0
    # direct part
    cnt = j0 - np.arange(1, n + 1)
    if cnt.sum() > 0:
        rows = np.repeat(np.arange(n), cnt)
        starts = np.repeat(np.arange(1, n + 1) - np.concatenate([[0], np.cumsum(cnt)[:-1]]), cnt)
        cols = np.arange(rows.size) + starts
        total += float(_pair_terms(a[rows] * q[cols], kind).sum())
    # series part: sum_k c_k a_i^k P_k(j0_i), P_k(j) = sum_{l >= j} q_l^k
    pw = np.ones(n)
    ai_pow = np.ones(n)
    has = j0 < n
    if not has.any():
        return total
    series = np.zeros(n)
    for k in range(1, SERIES_TERMS + 1):
        pw = pw * q
        suffix = np.concatenate([np.cumsum(pw[::-1])[::-1], [0.0]])
        ai_pow = ai_pow * a
        coef = (-1) ** (k + 1) / math.factorial(k)
        if kind == "var":
            # e^-x - e^-2x = sum_k (-1)^(k+1) (2^k - 1) x^k / k!
            coef *= 2 ** k - 1
        series += coef * ai_pow * suffix[j0]
    return total + float(series[has].sum())


def expected_edges(mu, t):
    """e(t) = sum over distinct positive pairs of (1 - exp(-t mu_ij)), plus blip edges."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    star, dust = _blip_rates(mu)
    if isinstance(mu, Rank1Intensity):
        return _rank1_pair_sum(mu.weights, float(t), "mean") + t * (star + dust)
    off = (mu.rows != mu.cols) & (mu.rows >= 1)
    lam = t * mu.values[off]
    return float(_pair_terms(lam, "mean").sum()) + t * (star + dust)


def edge_count_variance(mu, t):
    """Var e(G_t) = sum over distinct pairs of e^{-t mu}(1 - e^{-t mu}), plus blip Poisson variance."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    star, dust = _blip_rates(mu)
    if isinstance(mu, Rank1Intensity):
        return _rank1_pair_sum(mu.weights, float(t), "var") + t * (star + dust)
    off = (mu.rows != mu.cols) & (mu.rows >= 1)
    lam = t * mu.values[off]
    return float(_pair_terms(lam, "var").sum()) + t * (star + dust)


def vertex_count_variance_bound(mu, t):
    """Certified bound Var v(G_t) <= 2 v(t)."""
    return 2.0 * expected_vertices(mu, t)


# ---------------------------------------------------------------------------
# degree tails and power-law bands
# ---------------------------------------------------------------------------

@dataclass
class DegreeTail:
    k_grid: np.ndarray
    pi_ge_k: np.ndarray
    v_total: int
    t: float | None = None

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "pi_ge_k", "v_total"])
        for k, p in zip(self.k_grid, self.pi_ge_k):
            w.writerow([int(k), repr(float(p)), self.v_total])
        return buf.getvalue()


def degree_tail(g: SimpleGraph, t=None) -> DegreeTail:
    """Fraction of vertices with degree >= k for k = 1 .. max degree + 1."""
    if g.e == 0:
        raise UndefinedStatisticError("degree tail of an empty graph")
    _, deg = g.degrees()
    hist = np.bincount(deg)
    ge = np.cumsum(hist[::-1])[::-1]
    k = np.arange(1, deg.max() + 2)
    pi = np.concatenate([ge[1:], [0]]) / deg.size
    return DegreeTail(k, pi.astype(float), int(deg.size), t)


def powerlaw_band_check(tails, c_frac=0.05, ratio_cap=50.0, min_decades=2.0):
    """Fit c/k <= pi_{>=k} <= C/k over k <= c_frac v for every snapshot."""
    params = {"c_frac": c_frac, "ratio_cap": ratio_cap, "snapshots": len(tails)}
    ts = [tl.t for tl in tails if tl.t is not None]
    if len(tails) < 3 or len(ts) < len(tails) or math.log10(max(ts) / min(ts)) < min_decades:
        return Verdict("powerlaw_band", params, None, ratio_cap, None, status="inconclusive")
    lo_val, hi_val = math.inf, 0.0
    lo_at = hi_at = None
    for tl in tails:
        kmax = max(1, int(math.floor(c_frac * tl.v_total)))
        ks = tl.k_grid[tl.k_grid <= kmax]
        prod = ks * tl.pi_ge_k[: ks.size]
        i_lo, i_hi = int(np.argmin(prod)), int(np.argmax(prod))
        if prod[i_lo] < lo_val:
            lo_val, lo_at = float(prod[i_lo]), (tl.t, int(ks[i_lo]))
        if prod[i_hi] > hi_val:
            hi_val, hi_at = float(prod[i_hi]), (tl.t, int(ks[i_hi]))
    ratio = hi_val / lo_val if lo_val > 0 else math.inf
    ok = ratio <= ratio_cap
    details = {"c": lo_val, "C": hi_val, "c_at": lo_at, "C_at": hi_at}
    return Verdict("powerlaw_band", params, ratio, ratio_cap, ok, details=details)


# ---------------------------------------------------------------------------
# growth curves and classification
# ---------------------------------------------------------------------------

@dataclass
class GrowthCurve:
    grid: np.ndarray
    v_expected: np.ndarray
    e_expected: np.ndarray
    v_observed_mean: np.ndarray
    v_observed_se: np.ndarray
    e_observed_mean: np.ndarray
    e_observed_se: np.ndarray
    replicate_count: np.ndarray
    v_ratio_mean: np.ndarray | None = None
    e_ratio_mean: np.ndarray | None = None

    HEADER = ("t", "v_exp", "v_obs_mean", "v_obs_se", "e_exp", "e_obs_mean", "e_obs_se")

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for row in zip(self.grid, self.v_expected, self.v_observed_mean, self.v_observed_se,
                       self.e_expected, self.e_observed_mean, self.e_observed_se):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def to_dict(self):
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    se = x.std(ddof=1) / math.sqrt(x.size) if x.size > 1 else 0.0
    return float(x.mean()), float(se)


def convergence_ratio_curve(mu, t_grid, replicates, rng=None, sampler=sample_presence) -> GrowthCurve:
    """Observed v(G_t), e(G_t) against v(t), e(t) along an increasing grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be nonempty and increasing")
    rng = as_generator(rng)
    cols = {k: [] for k in ("ve", "ee", "vm", "vs", "em", "es", "vr", "er")}
    for t in t_grid:
        vs, es = [], []
        for _ in range(replicates):
            g = sampler(mu, t, rng)
            vs.append(g.v)
            es.append(g.e)
        ve, ee = expected_vertices(mu, t), expected_edges(mu, t)
        vm, vse = _mean_se(vs)
        em, ese = _mean_se(es)
        cols["ve"].append(ve)
        cols["ee"].append(ee)
        cols["vm"].append(vm)
        cols["vs"].append(vse)
        cols["em"].append(em)
        cols["es"].append(ese)
        cols["vr"].append(float(np.mean(np.asarray(vs) / ve)) if ve > 0 else math.nan)
        cols["er"].append(float(np.mean(np.asarray(es) / ee)) if ee > 0 else math.nan)
    a = {k: np.asarray(v) for k, v in cols.items()}
    return GrowthCurve(t_grid, a["ve"], a["ee"], a["vm"], a["vs"], a["em"], a["es"],
                       np.full(t_grid.size, replicates), a["vr"], a["er"])


def _slope(x, y):
    return float(np.polyfit(x, y, 1)[0])


def density_classify(curve: GrowthCurve, drift_tol=0.1, min_decades=2.0, use_observed=True):
    """Classify the sequence as dense, sparse, extremely_sparse or mixed.

    The log ratios ln(e/v^2) and ln(e/v) are regressed on log10 t; a ratio
    counts as stable when its slope is within ``drift_tol`` per decade and
    its log-range is below ``2 * drift_tol`` per decade spanned.
    """
    t = np.asarray(curve.grid, dtype=float)
    if t.size < 3 or math.log10(t[-1] / t[0]) < min_decades:
        return "inconclusive"
    v = np.asarray(curve.v_observed_mean if use_observed else curve.v_expected, dtype=float)
    e = np.asarray(curve.e_observed_mean if use_observed else curve.e_expected, dtype=float)
    ok = (v > 0) & (e > 0)
    if ok.sum() < 3:
        return "inconclusive"
    x = np.log10(t[ok])
    dense = np.log(e[ok] / v[ok] ** 2)
    light = np.log(e[ok] / v[ok])
    span = x[-1] - x[0]
    sd, sl = _slope(x, dense), _slope(x, light)

    def stable(y, s):
        return abs(s) <= drift_tol and np.ptp(y) <= 2 * drift_tol * span

    if stable(dense, sd):
        return "dense"
    if stable(light, sl):
        return "extremely_sparse"
    # sparse needs both monotone trends to hold step by step, not only on average
    if sd < -drift_tol and sl > drift_tol and np.all(np.diff(dense) < 0) and np.all(np.diff(light) > -drift_tol):
        return "sparse"
    return "mixed"


# ---------------------------------------------------------------------------
# normality
# ---------------------------------------------------------------------------

def normality_check(mu, t, replicates, rng=None, threshold=0.08, min_variance=25.0, statistic="edges"):
    """KS distance of standardised e(G_t) (or v(G_t), report only) to N(0, 1)."""
    params = {"t": t, "replicates": replicates, "statistic": statistic}
    var = edge_count_variance(mu, t)
    if var < min_variance:
        return Verdict("normality", params, None, threshold, None, status="inconclusive",
                       details={"variance": var})
    rng = as_generator(rng)
    obs = np.empty(replicates)
    for r in range(replicates):
        g = sample_presence(mu, t, rng)
        obs[r] = g.e if statistic == "edges" else g.v
    if statistic == "edges":
        z = (obs - expected_edges(mu, t)) / math.sqrt(var)
    else:
        z = (obs - obs.mean()) / obs.std(ddof=1)
    ks = float(stats.kstest(z, "norm").statistic)
    passed = ks <= threshold if statistic == "edges" else None
    return Verdict("normality", params, ks, threshold, passed, details={"variance": var})


def bernoulli_sum_normality(probs, replicates, rng=None, threshold=0.05):
    """KS distance for a sum of independent Bernoulli indicators, standardised exactly."""
    rng = as_generator(rng)
    p = np.asarray(probs, dtype=float)
    draws = (rng.random((replicates, p.size)) < p).sum(axis=1)
    z = (draws - p.sum()) / math.sqrt((p * (1 - p)).sum())
    ks = float(stats.kstest(z, "norm").statistic)
    return Verdict("bernoulli_normality", {"pairs": int(p.size), "replicates": replicates},
                   ks, threshold, ks <= threshold)


def blip_share(g, mu=None):
    """Fraction of edges of a multigraph lying in attached stars or dust."""
    total = g.edge_total
    if total == 0:
        raise UndefinedStatisticError("no edges")
    return g.blip_edges.shape[0] / total
