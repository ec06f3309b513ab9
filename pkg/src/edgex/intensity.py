"""Intensity measures: weight sequences and symmetric intensity matrices.

Labels are integers ``>= -1``.  Positive labels are ordinary vertices; the
labels 0 and -1 stand for blips (vertices that occur in one edge only).  The
only admissible pair involving -1 is ``{0, -1}`` (an isolated dust edge).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, permutations

import numpy as np
from scipy.special import logsumexp, zeta

from .alias import AliasTable
from .errors import (
    CapacityError,
    DegenerateMatrixError,
    DegenerateSpecError,
    MassDivergenceError,
    ParameterDomainError,
    UnsupportedFamilyError,
)
from .rng import as_generator

PROB_TOL = 1e-12
MAX_TRUNCATION = 10**8


# ---------------------------------------------------------------------------
# weight sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSeq:
    """Finite nonnegative weights ``q_1..q_n`` plus the mass cut off beyond ``n``."""

    weights: np.ndarray
    tail_mass: float = 0.0
    family_tag: dict = field(default_factory=dict)
    probability: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1:
            raise DegenerateSpecError("weights must be one-dimensional")
        if np.any(w < 0) or not np.isfinite(w).all():
            raise ParameterDomainError("weights must be finite and nonnegative")
        if self.tail_mass < 0:
            raise ParameterDomainError("tail_mass must be nonnegative")
        total = float(w.sum()) + self.tail_mass
        if not (0 < total < math.inf):
            raise DegenerateSpecError("weights have no mass")
        if self.probability and abs(total - 1.0) > PROB_TOL:
            raise DegenerateSpecError(f"probability weights sum to {total!r}")

    def __len__(self):
        return self.weights.size

    @property
    def total(self):
        return float(self.weights.sum()) + self.tail_mass

    def tail_beyond(self, m):
        """Mass of indices ``> m`` (retained and truncated)."""
        m = max(int(m), 0)
        return float(self.weights[m:].sum()) + self.tail_mass


@dataclass(frozen=True)
class WeightFamilySpec:
    """Deterministic weight family with its truncation rule.

    ``family`` is one of ``power_law`` (``gamma``), ``geometric`` (``b``),
    ``slow_log`` or ``explicit`` (``values``).  Exactly one of
    ``truncation_count`` and ``truncation_mass_budget`` is used; the count
    wins when both are given.
    """

    family: str
    gamma: float | None = None
    b: float | None = None
    values: tuple | None = None
    truncation_count: int | None = None
    truncation_mass_budget: float | None = None

    def validate(self):
        if self.family == "power_law":
            if self.gamma is None or not self.gamma > 1:
                raise ParameterDomainError("power_law needs gamma > 1")
        elif self.family == "geometric":
            if self.b is None or not self.b > 1:
                raise ParameterDomainError("geometric needs b > 1")
        elif self.family == "slow_log":
            pass
        elif self.family == "explicit":
            vals = np.asarray(self.values if self.values is not None else [], dtype=float)
            if vals.size == 0 or np.any(vals < 0) or vals.sum() <= 0:
                raise ParameterDomainError("explicit weights must be nonnegative with positive sum")
        else:
            raise UnsupportedFamilyError(f"unknown weight family {self.family!r}")
        if self.family != "explicit":
            if self.truncation_count is None and self.truncation_mass_budget is None:
                raise DegenerateSpecError("a truncation bound is required")
            if self.truncation_count is not None and int(self.truncation_count) < 1:
                raise DegenerateSpecError("truncation bound retains no mass")
            if self.truncation_count is None and not (0 < self.truncation_mass_budget < 1):
                raise ParameterDomainError("truncation_mass_budget must lie in (0, 1)")

    def to_dict(self):
        d = {"family": self.family}
        for key in ("gamma", "b", "truncation_count", "truncation_mass_budget"):
            val = getattr(self, key)
            if val is not None:
                d[key] = val
        if self.values is not None:
            d["values"] = list(self.values)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "values" in d and d["values"] is not None:
            d["values"] = tuple(float(x) for x in d["values"])
        return cls(**d)


def _slow_log_f(x):
    return 1.0 / (x * np.log(x) ** 2)


_SLOW_LOG_DIRECT = 10**5


def _slow_log_tail_raw(M):
    """sum_{i > M} 1/(i log^2 i) for M >= 2, Euler-Maclaurin beyond 10**5."""
    M = int(M)
    if M < _SLOW_LOG_DIRECT:
        head = _slow_log_f(np.arange(M + 1, _SLOW_LOG_DIRECT + 1, dtype=float)).sum()
        return float(head) + _slow_log_tail_raw(_SLOW_LOG_DIRECT)
    lm = math.log(M)
    f = 1.0 / (M * lm * lm)
    df = -(lm + 2.0) / (M * M * lm ** 3)
    return 1.0 / lm - f / 2.0 - df / 12.0


_SLOW_LOG_TOTAL = None


def _slow_log_total_raw():
    global _SLOW_LOG_TOTAL
    if _SLOW_LOG_TOTAL is None:
        _SLOW_LOG_TOTAL = float(_slow_log_f(2.0)) + _slow_log_tail_raw(2)
    return _SLOW_LOG_TOTAL


def _raw_family(spec, n):
    """Unnormalised retained weights for labels 1..n and the raw tail mass."""
    idx = np.arange(1, n + 1, dtype=float)
    if spec.family == "power_law":
        g = spec.gamma
        return idx ** (-g), float(zeta(g, n + 1)), float(zeta(g, 1))
    if spec.family == "geometric":
        b = spec.b
        w = b ** (-idx)
        return w, float(b ** (-n) / (b - 1)), 1.0 / (b - 1)
    if spec.family == "slow_log":
        # label k carries c/((k+1) log^2 (k+1)) so that label 1 is the heaviest
        return _slow_log_f(idx + 1.0), _slow_log_tail_raw(n + 1), _slow_log_total_raw()
    raise UnsupportedFamilyError(spec.family)


def _raw_tail_fraction(spec, n):
    """Normalised mass beyond index n for an analytic family."""
    if spec.family == "power_law":
        return float(zeta(spec.gamma, n + 1) / zeta(spec.gamma, 1))
    if spec.family == "geometric":
        return float(spec.b ** (-n))
    if spec.family == "slow_log":
        return _slow_log_tail_raw(n + 1) / _slow_log_total_raw()
    raise UnsupportedFamilyError(spec.family)


def _count_for_budget(spec, budget):
    if spec.family == "geometric":
        return max(1, math.ceil(math.log(1.0 / budget) / math.log(spec.b) - 1e-12))
    lo, hi = 1, 1
    while _raw_tail_fraction(spec, hi) > budget:
        hi *= 2
        if hi > MAX_TRUNCATION:
            raise CapacityError(
                f"{spec.family} needs more than {MAX_TRUNCATION} weights for tail budget {budget}")
    while lo < hi:
        mid = (lo + hi) // 2
        if _raw_tail_fraction(spec, mid) <= budget:
            hi = mid
        else:
            lo = mid + 1
    return lo


def weights_family(spec: WeightFamilySpec) -> WeightSeq:
    """Build the normalised, truncated weight sequence of a named family."""
    spec.validate()
    if spec.family == "explicit":
        vals = np.asarray(spec.values, dtype=float)
        return WeightSeq(vals / vals.sum(), 0.0, spec.to_dict())
    n = int(spec.truncation_count) if spec.truncation_count is not None else \
        _count_for_budget(spec, spec.truncation_mass_budget)
    if n > MAX_TRUNCATION:
        raise CapacityError(f"truncation count {n} exceeds {MAX_TRUNCATION}")
    w, tail, total = _raw_family(spec, n)
    if w.sum() <= 0:
        raise DegenerateSpecError("truncation retains zero mass")
    tag = spec.to_dict()
    tag.update(normalizer=1.0 / total, raw_tail=tail)
    # exact normalisation up to rounding; tail absorbs the residual
    q = w / total
    tail_n = max(0.0, 1.0 - float(q.sum()))
    return WeightSeq(q, tail_n, tag)


def stick_break_gem(alpha, theta, mass_epsilon, rng=None, min_count=0) -> WeightSeq:
    """Two-parameter GEM weights by residual allocation.

    The i-th stick proportion is Beta(1 - alpha, theta + i*alpha); breaking
    stops once the remaining stick drops below ``mass_epsilon`` (and at least
    ``min_count`` weights exist).  The remaining stick is the tail mass.
    """
    if not (0 <= alpha < 1) or not (theta > -alpha):
        raise ParameterDomainError("GEM needs 0 <= alpha < 1 and theta > -alpha")
    if not (0 < mass_epsilon < 1):
        raise ParameterDomainError("mass_epsilon must lie in (0, 1)")
    rng = as_generator(rng)
    log_eps = math.log(mass_epsilon)
    logs = []
    log_rest = 0.0
    i = 0
    chunk = 64
    while log_rest >= log_eps or i < min_count:
        idx = np.arange(i + 1, i + chunk + 1, dtype=float)
        v = rng.beta(1.0 - alpha, theta + idx * alpha)
        log_v = np.log(v)
        log_1mv = np.log1p(-v)
        prefix = log_rest + np.concatenate(([0.0], np.cumsum(log_1mv)[:-1]))
        piece = prefix + log_v
        rest_after = log_rest + np.cumsum(log_1mv)
        stop = np.nonzero((rest_after < log_eps) & (idx >= min_count))[0]
        if stop.size:
            k = stop[0] + 1
            logs.append(piece[:k])
            log_rest = rest_after[k - 1]
            i += k
            break
        logs.append(piece)
        log_rest = rest_after[-1]
        i += chunk
        chunk = min(chunk * 2, 1 << 20)
        if i > MAX_TRUNCATION:
            raise CapacityError("stick breaking did not reach mass_epsilon")
    q = np.exp(np.concatenate(logs))
    tail = max(0.0, 1.0 - float(q.sum()))
    return WeightSeq(q, tail, {"family": "gem", "alpha": alpha, "theta": theta,
                               "mass_epsilon": mass_epsilon, "log_tail": float(log_rest)})


def polya_dirichlet_weights(N, alpha, rng=None) -> WeightSeq:
    """Symmetric Dirichlet(alpha/N, ..., alpha/N) weights on N labels."""
    if int(N) != N or N < 2 or not alpha > 0:
        raise ParameterDomainError("Dirichlet weights need N >= 2 and alpha > 0")
    rng = as_generator(rng)
    a = alpha / N
    # gamma draws in log space survive tiny shape parameters
    g = rng.gamma(a + 1.0, size=int(N))
    logx = np.log(g) + np.log(rng.random(int(N))) / a
    q = np.exp(logx - logsumexp(logx))
    q /= q.sum()
    return WeightSeq(q, 0.0, {"family": "dirichlet", "N": int(N), "alpha": alpha})


# ---------------------------------------------------------------------------
# intensity matrices
# ---------------------------------------------------------------------------

class Intensity:
    """Behaviour shared by explicit and rank-1 intensities."""

    discarded_mass = 0.0

    def total_mass(self):
        raise NotImplementedError

    def vertex_intensity(self, i):
        raise NotImplementedError


class IntensityMatrix(Intensity):
    """Sparse symmetric intensity matrix keyed by unordered label pairs.

    Entries are stored as parallel arrays ``rows <= cols`` with either plain
    values or log-values.  Zero entries are never stored.
    """

    def __init__(self, rows, cols, values=None, log_values=None, discarded_mass=0.0, meta=None):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if (values is None) == (log_values is None):
            raise ValueError("give exactly one of values and log_values")
        self.log_space = log_values is not None
        vals = np.asarray(log_values if self.log_space else values, dtype=float)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise ValueError("rows, cols and values must be equal-length vectors")
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        if lo.size and lo.min() < -1:
            raise ValueError("labels must be >= -1")
        if np.any((lo == -1) & (hi != 0)):
            raise ValueError("label -1 may only pair with label 0")
        if np.any(lo == hi) and np.any(lo[lo == hi] == -1):
            raise ValueError("label -1 may only pair with label 0")
        keep = (vals > -np.inf) if self.log_space else (vals > 0)
        if not self.log_space and np.any(vals < 0):
            raise ParameterDomainError("intensities must be nonnegative")
        lo, hi, vals = lo[keep], hi[keep], vals[keep]
        order = np.lexsort((hi, lo))
        lo, hi, vals = lo[order], hi[order], vals[order]
        if lo.size > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if dup.any():
                raise ValueError("duplicate label pair")
        self.rows = lo
        self.cols = hi
        self._vals = vals
        self.discarded_mass = float(discarded_mass)
        self.meta = dict(meta or {})
        self._mass = None
        self._index = None
        self._alias = None
        if self.rows.size == 0:
            raise DegenerateMatrixError("intensity matrix has no entries")

    @classmethod
    def from_dict(cls, entries, log_space=False, **kw):
        keys = list(entries)
        rows = [k[0] for k in keys]
        cols = [k[1] for k in keys]
        vals = [entries[k] for k in keys]
        if log_space:
            return cls(rows, cols, log_values=vals, **kw)
        return cls(rows, cols, values=vals, **kw)

    def __len__(self):
        return self.rows.size

    @property
    def values(self):
        return np.exp(self._vals) if self.log_space else self._vals

    @property
    def log_values(self):
        if self.log_space:
            return self._vals
        with np.errstate(divide="ignore"):
            return np.log(self._vals)

    @property
    def label_max(self):
        return int(max(self.rows.max(), self.cols.max(), 0))

    @property
    def weights(self):
        """Per-pair share of a single edge draw: each unordered pair counted once."""
        return self.values

    def lookup(self, i, j):
        if self._index is None:
            self._index = {(int(a), int(b)): k for k, (a, b) in enumerate(zip(self.rows, self.cols))}
        a, b = (i, j) if i <= j else (j, i)
        k = self._index.get((int(a), int(b)))
        if k is None:
            return 0.0
        return float(math.exp(self._vals[k])) if self.log_space else float(self._vals[k])

    def log_total_mass(self):
        return float(logsumexp(self.log_values))

    def total_mass(self):
        # unordered keys: 1/2 sum_{i != j} mu_ij + sum_i mu_ii is the plain key sum
        if self._mass is None:
            mass = math.exp(self.log_total_mass()) if self.log_space else float(self._vals.sum())
            if not mass > 0:
                raise DegenerateMatrixError("intensity has zero total mass")
            self._mass = mass
        return self._mass

    def vertex_intensities(self, include_diagonal=True):
        """Labels >= 1 with their total intensity mu_i = sum_j mu_ij."""
        v = self.values
        diag = self.rows == self.cols
        labs = np.concatenate([self.rows[~diag], self.cols[~diag], self.rows[diag]])
        vals = np.concatenate([v[~diag], v[~diag], v[diag] if include_diagonal else np.zeros(int(diag.sum()))])
        pos = labs >= 1
        labs, vals = labs[pos], vals[pos]
        uniq, inv = np.unique(labs, return_inverse=True)
        return uniq, np.bincount(inv, weights=vals, minlength=uniq.size)

    def vertex_intensity(self, i):
        if i < 1:
            raise ValueError("vertex_intensity is defined for labels >= 1")
        hit = (self.rows == i) | (self.cols == i)
        return float(self.values[hit].sum())

    def max_row_support(self):
        off = self.rows != self.cols
        labs = np.concatenate([self.rows[off], self.cols[off], self.rows[~off]])
        labs = labs[labs >= 1]
        return int(np.bincount(labs).max()) if labs.size else 0

    def alias_table(self):
        if self._alias is None:
            self._alias = AliasTable(self.log_values, log_weights=True)
        return self._alias

    def offdiag(self):
        """Index mask of stored pairs between two distinct positive labels."""
        return (self.rows != self.cols) & (self.rows >= 1)

    # serialisation: header then one line per pair
    def to_text(self):
        lines = [f"# mass\t{self.total_mass()!r}\tlabel_max\t{self.label_max}\tdiscarded\t{self.discarded_mass!r}"]
        flag = 1 if self.log_space else 0
        for a, b, v in zip(self.rows, self.cols, self._vals):
            lines.append(f"{a}\t{b}\t{flag}\t{float(v)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        rows, cols, vals, logs = [], [], [], []
        discarded = 0.0
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if "discarded" in parts:
                    discarded = float(parts[parts.index("discarded") + 1])
                continue
            a, b, flag, v = line.split("\t")
            rows.append(int(a))
            cols.append(int(b))
            vals.append(float(v))
            logs.append(int(flag))
        if logs and all(logs):
            return cls(rows, cols, log_values=vals, discarded_mass=discarded)
        if any(logs):
            vals = [math.exp(v) if f else v for v, f in zip(vals, logs)]
        return cls(rows, cols, values=vals, discarded_mass=discarded)


class Rank1Intensity(Intensity):
    """Implicit rank-1 intensity mu_ij = 2 q_i q_j (i != j), mu_ii = q_i^2 or 0.

    Nothing quadratic in the number of weights is ever materialised, so
    truncations with millions of weights are cheap to hold and sample.

    ``tail="drop"`` discards the mass of truncated labels.  ``tail="blips"``
    keeps it by treating each truncated label as a fresh vertex: label i
    gets a star column mu_i0 = 2 q_i tau and the tail-tail mass tau^2 becomes
    dust edges, tau being the tail mass.  This is exact as long as no
    truncated label is hit twice; ``collision_bound(t)`` bounds the expected
    number of such labels.
    """

    def __init__(self, q: WeightSeq, loops: bool, tail="drop"):
        if tail not in ("drop", "blips"):
            raise ValueError("tail must be 'drop' or 'blips'")
        self.q = q
        self.loops = bool(loops)
        self.tail_mode = tail
        w = q.weights
        self._w = w
        self._S = float(w.sum())
        self._S2 = float(np.dot(w, w))
        self.tau = float(q.tail_mass) if tail == "blips" else 0.0
        # mass involving truncated labels, an upper bound when loops are dropped
        self.discarded_mass = 0.0 if tail == "blips" else q.total ** 2 - self._S ** 2
        self._alias = None
        self._range_tables = {}
        if not self.loops and np.count_nonzero(w) < 2:
            raise DegenerateMatrixError("rank-1 without loops needs two positive weights")
        if self.total_mass() <= 0:
            raise DegenerateMatrixError("rank-1 intensity has zero mass")

    @property
    def weights(self):
        return self._w

    @property
    def label_max(self):
        nz = np.nonzero(self._w)[0]
        return int(nz[-1] + 1) if nz.size else 0

    def __len__(self):
        n = np.count_nonzero(self._w)
        return n * (n - 1) // 2 + (n if self.loops else 0)

    @property
    def star_rate(self):
        return 2.0 * self._S * self.tau

    @property
    def dust_rate(self):
        return self.tau ** 2

    def lookup(self, i, j):
        n = self._w.size
        i, j = min(i, j), max(i, j)
        if self.tau and i == 0 and 1 <= j <= n:
            return float(2.0 * self._w[j - 1] * self.tau)
        if self.tau and (i, j) == (-1, 0):
            return self.dust_rate
        if not (1 <= i <= n and 1 <= j <= n):
            return 0.0
        if i == j:
            return float(self._w[i - 1] ** 2) if self.loops else 0.0
        return float(2.0 * self._w[i - 1] * self._w[j - 1])

    def total_mass(self):
        base = self._S ** 2 if self.loops else self._S ** 2 - self._S2
        return base + self.star_rate + self.dust_rate

    def vertex_intensities(self, include_diagonal=True):
        w = self._w
        mu = 2.0 * w * (self._S + self.tau) - (1.0 if (self.loops and include_diagonal) else 2.0) * w * w
        labs = np.arange(1, w.size + 1)
        pos = w > 0
        return labs[pos], mu[pos]

    def vertex_intensity(self, i):
        if i < 1:
            raise ValueError("vertex_intensity is defined for labels >= 1")
        if i > self._w.size:
            return 0.0
        qi = float(self._w[i - 1])
        return 2 * qi * (self._S + self.tau) - (qi * qi if self.loops else 2 * qi * qi)

    def collision_bound(self, t):
        """Expected number of truncated labels with two or more edges, bounded above.

        Uses P(Po(x) >= 2) <= x^2 / 2 and sum_{i > n} q_i^2 <= q_n * tau.
        """
        if not self.tau:
            return 0.0
        rate = 2.0 * t * (self._S + self.tau)
        return 0.5 * rate ** 2 * float(self._w[-1]) * self.tau

    def alias_table(self):
        if self._alias is None:
            self._alias = AliasTable(self._w)
        return self._alias

    def range_table(self, lo, hi):
        """Cached alias table over the 0-based weight slice ``[lo, hi)``."""
        key = (int(lo), int(hi))
        if key == (0, self._w.size):
            return self.alias_table()
        tab = self._range_tables.get(key)
        if tab is None:
            tab = self._range_tables[key] = AliasTable(self._w[key[0]:key[1]])
        return tab

    def to_matrix(self, floor=0.0, max_entries=5 * 10**7):
        """Explicit matrix; entries below ``floor`` are dropped into the discard ledger."""
        w = self._w
        n = w.size
        count = n * (n - 1) // 2 + n
        if count > max_entries:
            raise CapacityError(f"rank-1 matrix with {n} weights has {count} entries")
        i, j = np.triu_indices(n, k=0 if self.loops else 1)
        vals = np.where(i == j, w[i] * w[j], 2.0 * w[i] * w[j])
        small = vals < floor
        dropped = float(vals[small].sum())
        keep = ~small & (vals > 0)
        rows, cols, vals = i[keep] + 1, j[keep] + 1, vals[keep]
        if self.tau:
            rows = np.concatenate([rows, np.zeros(n, dtype=rows.dtype), [-1]])
            cols = np.concatenate([cols, np.arange(1, n + 1), [0]])
            vals = np.concatenate([vals, 2.0 * w * self.tau, [self.dust_rate]])
        return IntensityMatrix(rows, cols, values=vals,
                               discarded_mass=self.discarded_mass + dropped,
                               meta={"family": "rank1", "loops": self.loops})


def build_rank1(q: WeightSeq, loops: bool, tail="drop") -> Rank1Intensity:
    return Rank1Intensity(q, loops, tail)


def factorial_intensity(n_max) -> IntensityMatrix:
    """mu_ij = ((i v j)!)^-4 for 1 <= i < j <= n_max, stored as log-values."""
    n_max = int(n_max)
    if n_max < 2:
        raise ParameterDomainError("factorial intensity needs n_max >= 2")
    i, j = np.triu_indices(n_max, k=1)
    i, j = i + 1, j + 1
    lg = np.array([math.lgamma(k + 1) for k in range(n_max + 2)])
    mu = IntensityMatrix(i, j, log_values=-4.0 * lg[j], meta={"family": "factorial", "n_max": n_max})
    if not factorial_dominance_holds(mu):
        raise AssertionError("factorial intensity violates the dominance condition")
    return mu


def factorial_dominance_holds(mu: IntensityMatrix) -> bool:
    """Check sup_l mu_{k+1,l} <= k^-4 min_{i<k} mu_{k,i} for all k in range (log space)."""
    n = mu.label_max
    lv = mu.log_values
    for k in range(2, n):
        row_next = lv[(mu.rows == k + 1) | (mu.cols == k + 1)]
        sel = ((mu.rows == k) & (mu.cols < k)) | ((mu.cols == k) & (mu.rows < k))
        row_k = lv[sel]
        if row_next.size == 0 or row_k.size == 0:
            continue
        if row_next.max() > -4.0 * math.log(k) + row_k.min() + 1e-12:
            return False
    return True


def factorial_schedule(n) -> float:
    """Probe time t_n = (n^3 a_{n+1})^-1 with a_{n+1} = ((n+1)!)^-4."""
    return math.exp(4.0 * math.lgamma(n + 2) - 3.0 * math.log(n))


def band_intensity(d, n_max=None, profile=None, mass_budget=1e-6, max_labels=10**7) -> IntensityMatrix:
    """Band matrix: mu_ij = profile(i, j) when 0 < |i - j| <= d/2.

    ``profile`` is vectorised over arrays ``i < j``; ``None`` means the
    constant 1.  With ``n_max=None`` the band is grown in doubling blocks
    until the newest block carries at most ``mass_budget`` of the mass; the
    mass of that last block is the recorded tail estimate.
    """
    d = int(d)
    if d < 2 or d % 2:
        raise ParameterDomainError("band width d must be a positive even integer")
    half = d // 2
    if profile is None:
        profile = lambda i, j: np.ones_like(i, dtype=float)  # noqa: E731

    def block(lo, hi):
        # pairs with larger label j in (lo, hi]
        j = np.repeat(np.arange(lo + 1, hi + 1), half)
        off = np.tile(np.arange(1, half + 1), hi - lo)
        i = j - off
        ok = i >= 1
        i, j = i[ok], j[ok]
        v = np.asarray(profile(i, j), dtype=float)
        if np.any(v < 0) or not np.isfinite(v).all():
            raise ParameterDomainError("band profile must be finite and nonnegative")
        return i, j, v

    if n_max is not None and math.isfinite(n_max):
        i, j, v = block(0, int(n_max))
        return IntensityMatrix(i, j, values=v, meta={"family": "band", "d": d, "n_max": int(n_max)})

    parts = []
    total = 0.0
    lo, hi = 0, 64
    tail = 0.0
    while True:
        i, j, v = block(lo, hi)
        m = float(v.sum())
        parts.append((i, j, v))
        total += m
        if total > 0 and m <= mass_budget * total and lo > 0:
            tail = m
            break
        if hi >= max_labels:
            raise MassDivergenceError(
                f"band profile mass not summable within {max_labels} labels")
        lo, hi = hi, min(2 * hi, max_labels)
    i = np.concatenate([p[0] for p in parts])
    j = np.concatenate([p[1] for p in parts])
    v = np.concatenate([p[2] for p in parts])
    return IntensityMatrix(i, j, values=v, discarded_mass=tail,
                           meta={"family": "band", "d": d, "n_max": int(hi)})


# ---------------------------------------------------------------------------
# chameleon construction
# ---------------------------------------------------------------------------

def _canonical_key(n, edges):
    best = None
    for perm in permutations(range(n)):
        key = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges))
        if best is None or key < best:
            best = key
    return best


def graphs_without_isolated(max_vertices):
    """Isomorphism classes of simple graphs without isolated vertices.

    Ordered by vertex count, then edge count, then the lexicographically
    smallest sorted edge list over all relabellings.  Each graph is a tuple
    ``(v, edges)`` with 0-based vertices.
    """
    out = []
    for n in range(2, max_vertices + 1):
        pairs = list(combinations(range(n), 2))
        seen = set()
        found = []
        for mask in range(1, 1 << len(pairs)):
            edges = [pairs[k] for k in range(len(pairs)) if mask >> k & 1]
            touched = {x for e in edges for x in e}
            if len(touched) != n:
                continue
            key = _canonical_key(n, edges)
            if key in seen:
                continue
            seen.add(key)
            found.append((len(key), key))
        found.sort()
        out.extend((n, key) for _, key in found)
    return out


def round_robin(graphs, k):
    """First k terms of g1; g1 g2; g1 g2 g3; ... so every graph recurs forever."""
    seq = []
    r = 1
    while len(seq) < k:
        if r > len(graphs):
            raise CapacityError("enumeration too short for the requested k")
        seq.extend(graphs[:r])
        r += 1
    return seq[:k]


@dataclass(frozen=True)
class ChameleonShells:
    graphs: list
    N: list
    log_a: list

    @property
    def log_probe_times(self):
        return [math.log(n) - la for n, la in zip(self.N[1:], self.log_a)]

    @property
    def probe_times(self):
        return [math.exp(x) for x in self.log_probe_times]


def chameleon_intensity(k_max, enumeration=None, max_entries=2 * 10**7):
    """Chameleon matrix on [1, N_{k_max}] and its shell data.

    N_0 = 1, N_k = k v_k N_{k-1}, a_k = prod_{j<=k} N_j^-4 and, on shell k
    (N_{k-1} < i v j <= N_k), mu_ij = a_k f_k(ceil(i / (k N_{k-1})), ceil(j / (k N_{k-1}))).
    """
    k_max = int(k_max)
    if k_max < 1:
        raise ParameterDomainError("k_max must be positive")
    if enumeration is None:
        enumeration = round_robin(graphs_without_isolated(5), k_max)
    if len(enumeration) < k_max:
        raise ParameterDomainError("enumeration shorter than k_max")
    N = [1]
    log_a = []
    acc = 0.0
    for k in range(1, k_max + 1):
        v_k = enumeration[k - 1][0]
        nk = k * v_k * N[-1]
        if nk > 2**62:
            raise CapacityError(f"N_{k} overflows; maximal safe k is {k - 1}")
        pairs = sum(len(enumeration[j][1]) for j in range(k)) * (nk // v_k) ** 2
        if pairs > max_entries:
            raise CapacityError(f"shell {k} needs ~{pairs} entries; maximal safe k is {k - 1}")
        N.append(nk)
        acc += -4.0 * math.log(nk)
        log_a.append(acc)
    rows, cols, logs = [], [], []
    for k in range(1, k_max + 1):
        v_k, edges = enumeration[k - 1]
        size = k * N[k - 1]
        lo_shell = N[k - 1]
        for p, q in edges:
            # blocks p, q are 0-based; block p covers labels p*size+1 .. (p+1)*size
            for a_blk, b_blk in ((p, q), (q, p)):
                ia = np.arange(a_blk * size + 1, (a_blk + 1) * size + 1)
                jb = np.arange(b_blk * size + 1, (b_blk + 1) * size + 1)
                I, J = np.meshgrid(ia, jb, indexing="ij")
                I, J = I.ravel(), J.ravel()
                sel = (I < J) & (J > lo_shell)
                rows.append(I[sel])
                cols.append(J[sel])
                logs.append(np.full(int(sel.sum()), log_a[k - 1]))
    shells = ChameleonShells([g for g in enumeration[:k_max]], N, log_a)
    mu = IntensityMatrix(np.concatenate(rows), np.concatenate(cols), log_values=np.concatenate(logs),
                         meta={"family": "chameleon", "k_max": k_max})
    return mu, shells


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------

def vertex_intensity(mu: Intensity, i) -> float:
    return mu.vertex_intensity(i)


def total_mass(mu: Intensity) -> float:
    return mu.total_mass()


def _tail_function(obj):
    """Return (tail(M), M_cap): normalised mass of weights beyond index M."""
    if isinstance(obj, WeightSeq):
        w = obj.weights
        suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        tot = obj.total

        def tail(M):
            M = min(max(int(M), 0), w.size)
            return (float(suffix[M]) + obj.tail_mass) / tot
        return tail, w.size
    spec = obj
    spec.validate()
    if spec.family == "power_law":
        g = spec.gamma
        c = 1.0 / float(zeta(g, 1))
        # integral bound: sum_{i > M} i^-g <= M^(1-g) / (g - 1)
        return (lambda M: c * float(M) ** (1 - g) / (g - 1) if M >= 1 else 1.0), MAX_TRUNCATION
    if spec.family == "geometric":
        return (lambda M: spec.b ** (-float(M))), MAX_TRUNCATION
    if spec.family == "slow_log":
        return (lambda M: _raw_tail_fraction(spec, int(M)) if M >= 1 else 1.0), MAX_TRUNCATION
    if spec.family == "explicit":
        return _tail_function(weights_family(spec))
    raise UnsupportedFamilyError(spec.family)


def truncation_index(mu_family, t, epsilon) -> int:
    """Smallest M with 2 t tail(M) <= epsilon.

    ``2 t tail(M)`` bounds the expected number of edge endpoints beyond M up
    to time t, so the truncated sampler differs from the ideal one with
    probability at most ``epsilon``.
    """
    if t < 0:
        raise ParameterDomainError("t must be nonnegative")
    if not (0 < epsilon < 1):
        raise ParameterDomainError("epsilon must lie in (0, 1)")
    if t == 0:
        return 1
    tail, cap = _tail_function(mu_family)
    ok = lambda M: 2.0 * t * tail(M) <= epsilon  # noqa: E731
    if ok(1):
        return 1
    hi = 2
    while not ok(hi):
        if hi >= cap:
            if isinstance(mu_family, WeightSeq):
                raise CapacityError("weight sequence too short for the requested epsilon")
            raise CapacityError(f"truncation beyond {cap} weights needed")
        hi = min(hi * 2, cap)
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
