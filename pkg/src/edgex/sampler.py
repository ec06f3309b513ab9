"""Random multigraphs from an intensity, process models and reductions.

Blip vertices (labels 0 and -1 in an intensity) are realised as fresh
integer labels drawn from a counter that starts at ``2 * label_max + 10**6``.
A multigraph keeps them apart from the positive-label pairs so every blip
label provably occurs in a single edge.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse, stats

from .alias import AliasTable
from .errors import CapacityError, ParameterDomainError, ParityError
from .intensity import IntensityMatrix, Rank1Intensity
from .rng import as_generator

COUNT_MAX = np.iinfo(np.int64).max
_EMPTY2 = np.empty((0, 2), dtype=np.int64)


def blip_base_for(label_max):
    return 2 * int(label_max) + 10**6


# ---------------------------------------------------------------------------
# graph containers
# ---------------------------------------------------------------------------

def _pairs_array(pairs):
    a = np.asarray(pairs, dtype=np.int64)
    return a.reshape(-1, 2) if a.size else _EMPTY2.copy()


def _merge_pairs(pairs, counts):
    """Sort ``lo <= hi`` pairs, sum counts of duplicates and drop zeros."""
    pairs = _pairs_array(pairs)
    counts = np.asarray(counts, dtype=np.int64).reshape(-1)
    if pairs.shape[0] == 0:
        return _EMPTY2.copy(), np.empty(0, dtype=np.int64)
    pairs = np.sort(pairs, axis=1)
    uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
    tot = np.bincount(inv.reshape(-1), weights=counts, minlength=uniq.shape[0]).astype(np.int64)
    keep = tot > 0
    return uniq[keep], tot[keep]


class MultiGraph:
    """Edge multiset: positive-label pairs with multiplicities plus blip edges.

    ``blip_edges`` is an (B, 2) array.  A star edge is ``(i, b)`` with ``i``
    a positive label, a dust edge is ``(b1, b2)`` and a dust loop ``(b, b)``;
    every ``b`` is a fresh label ``>= blip_base``.
    """

    def __init__(self, pairs=None, counts=None, blip_edges=None, blip_base=10**6):
        if pairs is None:
            pairs, counts = _EMPTY2, []
        self.pairs, self.counts = _merge_pairs(pairs, counts)
        if self.pairs.size and self.pairs.min() < 1:
            raise ValueError("pair labels must be positive; blips go in blip_edges")
        self.blip_edges = _pairs_array(blip_edges if blip_edges is not None else _EMPTY2)
        self.blip_base = int(blip_base)
        self._check_blips()

    def _check_blips(self):
        b = self.blip_edges
        if b.shape[0] == 0:
            return
        if self.pairs.size and self.pairs.max() >= self.blip_base:
            raise ValueError("positive labels collide with the blip range")
        loops = b[:, 0] == b[:, 1]
        labs = np.concatenate([b[:, 0], b[~loops, 1]])
        labs = labs[labs >= self.blip_base]
        if np.unique(labs).size != labs.size:
            raise ValueError("a blip label occurs in more than one edge")

    @property
    def edge_total(self):
        return int(self.counts.sum()) + self.blip_edges.shape[0]

    @property
    def multiplicities(self):
        return {(int(a), int(b)): int(c) for (a, b), c in zip(self.pairs, self.counts)}

    def __eq__(self, other):
        return (isinstance(other, MultiGraph) and np.array_equal(self.pairs, other.pairs)
                and np.array_equal(self.counts, other.counts)
                and np.array_equal(self.blip_edges, other.blip_edges))

    def is_blip(self, labels):
        return np.asarray(labels) >= self.blip_base

    def vertices(self):
        return np.unique(np.concatenate([self.pairs.ravel(), self.blip_edges.ravel()]))

    def degrees(self):
        """Degree per vertex label (a loop adds 2), as ``(labels, degrees)``."""
        ends = np.concatenate([np.repeat(self.pairs[:, 0], self.counts), np.repeat(self.pairs[:, 1], self.counts),
                               self.blip_edges[:, 0], self.blip_edges[:, 1]])
        labs, deg = np.unique(ends, return_counts=True)
        return labs, deg

    def summary(self):
        s = simplify(self)
        out = s.summary()
        out["edge_total"] = self.edge_total
        return out

    def _fmt(self, x):
        return f"b{x - self.blip_base}" if x >= self.blip_base else str(int(x))

    def to_text(self):
        lines = [f"{a}\t{b}\t{c}" for (a, b), c in zip(self.pairs, self.counts)]
        lines += [f"{self._fmt(a)}\t{self._fmt(b)}\t1" for a, b in self.blip_edges]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text, blip_base=10**6):
        pairs, counts, blips = [], [], []

        def lab(tok):
            return (blip_base + int(tok[1:]), True) if tok.startswith("b") else (int(tok), False)
        for line in text.splitlines():
            if not line.strip():
                continue
            a, b, c = line.split("\t")
            (x, bx), (y, by) = lab(a), lab(b)
            if bx or by:
                blips.extend([(x, y)] * int(c))
            else:
                pairs.append((x, y))
                counts.append(int(c))
        return cls(pairs, counts, blips, blip_base)


class SimpleGraph:
    """Loop-free graph without parallel edges; vertices are edge endpoints."""

    def __init__(self, edges=None):
        e = _pairs_array(edges if edges is not None else _EMPTY2)
        if e.shape[0]:
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("simple graphs have no loops")
            e = np.unique(np.sort(e, axis=1), axis=0)
        self.edges = e
        self._degree_cache = None

    @property
    def e(self):
        return int(self.edges.shape[0])

    @property
    def v(self):
        return int(self.vertices().size)

    def __len__(self):
        return self.e

    def __eq__(self, other):
        return isinstance(other, SimpleGraph) and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash(self.edges.tobytes())

    def edge_set(self):
        return {(int(a), int(b)) for a, b in self.edges}

    def vertices(self):
        return np.unique(self.edges.ravel())

    def degrees(self):
        if self._degree_cache is None:
            self._degree_cache = np.unique(self.edges.ravel(), return_counts=True)
        return self._degree_cache

    def max_degree(self):
        return int(self.degrees()[1].max()) if self.e else 0

    def adjacency(self):
        """Sparse 0/1 adjacency in ascending-label vertex order, with the labels."""
        labs = self.vertices()
        idx = np.searchsorted(labs, self.edges)
        n = labs.size
        a = sparse.coo_matrix((np.ones(self.e), (idx[:, 0], idx[:, 1])), shape=(n, n))
        a = (a + a.T).tocsr()
        return a, labs

    def triangles(self):
        if self.e < 3:
            return 0
        a, _ = self.adjacency()
        a = a.astype(np.int64)
        # every triangle is counted once per oriented edge of it
        return int((a @ a).multiply(a).sum() // 6)

    def restrict(self, keep_edge_mask):
        return SimpleGraph(self.edges[np.asarray(keep_edge_mask, dtype=bool)])

    def relabel(self):
        """Same graph on labels 1..v in ascending label order."""
        labs = self.vertices()
        return SimpleGraph(np.searchsorted(labs, self.edges) + 1)

    def summary(self):
        _, deg = self.degrees()
        hist = Counter(int(d) for d in deg)
        return {"v": self.v, "e": self.e, "edge_total": self.e,
                "degree_histogram": {str(k): hist[k] for k in sorted(hist)}}

    def to_text(self):
        return "".join(f"{a}\t{b}\t1\n" for a, b in self.edges)


@dataclass
class MultiHyperGraph:
    """Multiset hyperedges; positive labels are shared vertices."""

    edges: list = field(default_factory=list)

    def __post_init__(self):
        for e in self.edges:
            if len(e) < 1:
                raise ValueError("hyperedges have at least one vertex")

    def tables(self):
        return {x for e in self.edges for x in e}

    def to_multigraph(self):
        if any(len(e) != 2 for e in self.edges):
            raise ValueError("only size-2 hyperedges form a graph")
        labs = [x for e in self.edges for x in e]
        return MultiGraph(self.edges, [1] * len(self.edges), blip_base=blip_base_for(max(labs, default=0)))


def simplify(g) -> SimpleGraph:
    """Merge parallel edges and delete loops."""
    if isinstance(g, SimpleGraph):
        return g
    p = g.pairs[g.pairs[:, 0] != g.pairs[:, 1]]
    b = g.blip_edges[g.blip_edges[:, 0] != g.blip_edges[:, 1]]
    return SimpleGraph(np.concatenate([p, b]))


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def _blip_layout(mu: IntensityMatrix):
    """Split stored pairs into positive pairs and the three blip kinds."""
    r, c = mu.rows, mu.cols
    central = r >= 1
    star = (r == 0) & (c >= 1)
    dust_edge = r == -1
    dust_loop = (r == 0) & (c == 0)
    return central, star, dust_edge, dust_loop


class _BlipCounter:
    def __init__(self, base):
        self.next = int(base)
        self.base = int(base)

    def take(self, n):
        out = np.arange(self.next, self.next + n, dtype=np.int64)
        self.next += n
        return out


def _realise_blips(kinds, centres, counter):
    """Blip edges for draws of kind 1 (star), 2 (dust edge), 3 (dust loop), in draw order."""
    kinds = np.asarray(kinds)
    centres = np.asarray(centres, dtype=np.int64)
    out = np.empty((kinds.size, 2), dtype=np.int64)
    if kinds.size == 0:
        return out
    first = counter.take(kinds.size)
    second = first.copy()
    star = kinds == 1
    out[:, 0] = np.where(star, centres, first)
    dust = kinds == 2
    if dust.any():
        second[dust] = counter.take(int(dust.sum()))
    out[:, 1] = np.where(star, first, second)
    return out


class EdgeProcess:
    """The growing multigraph of i.i.d. edges: one object realises every prefix."""

    def __init__(self, mu, rng=None):
        self.mu = mu
        self.rng = as_generator(rng)
        self.m = 0
        self.counter = _BlipCounter(blip_base_for(mu.label_max))
        self._blips = []
        if isinstance(mu, Rank1Intensity):
            # one extra outcome stands for "some truncated label"
            self._alias = mu.alias_table() if not mu.tau else AliasTable(np.append(mu.weights, mu.tau))
            self._codes = []
            self._n = mu.weights.size
        else:
            self._alias = mu.alias_table()
            self._pair_counts = np.zeros(len(mu), dtype=np.int64)
            self._kind = np.zeros(len(mu), dtype=np.int8)
            central, star, dust_edge, dust_loop = _blip_layout(mu)
            self._kind[star] = 1
            self._kind[dust_edge] = 2
            self._kind[dust_loop] = 3

    def extend(self, k):
        k = int(k)
        if k < 0:
            raise ValueError("cannot remove edges")
        if self.m + k > COUNT_MAX:
            raise CapacityError("edge count exceeds the 64-bit count range")
        if k == 0:
            return self
        if isinstance(self.mu, Rank1Intensity):
            self._extend_rank1(k)
        else:
            idx = self._alias.draw(self.rng, k)
            kinds = self._kind[idx]
            blip = kinds > 0
            self._pair_counts += np.bincount(idx[~blip], minlength=self._pair_counts.size)
            if blip.any():
                self._blips.append(_realise_blips(kinds[blip], self.mu.cols[idx[blip]], self.counter))
        self.m += k
        return self

    def _extend_rank1(self, k):
        n = self._n
        got = 0
        while got < k:
            need = k - got
            a = self._alias.draw(self.rng, need) + 1
            b = self._alias.draw(self.rng, need) + 1
            tail_a, tail_b = a > n, b > n
            if not self.mu.loops:
                ok = (a != b) | tail_a
                a, b, tail_a, tail_b = a[ok], b[ok], tail_a[ok], tail_b[ok]
            blip = tail_a | tail_b
            if blip.any():
                # kind 1: star at the retained endpoint, kind 2: both endpoints truncated
                kinds = np.where(tail_a & tail_b, 2, 1).astype(np.int8)[blip]
                centres = np.where(tail_a, b, a)[blip]
                self._blips.append(_realise_blips(kinds, centres, self.counter))
            # keep draw order inside the prefix: append codes of central draws only
            a, b = a[~blip], b[~blip]
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            self._codes.append(lo * (n + 1) + hi)
            got += lo.size + int(blip.sum())

    def graph(self) -> MultiGraph:
        base = self.counter.base
        blips = np.concatenate(self._blips) if self._blips else _EMPTY2
        if isinstance(self.mu, Rank1Intensity):
            codes = np.concatenate(self._codes) if self._codes else np.empty(0, dtype=np.int64)
            u, c = np.unique(codes, return_counts=True)
            n1 = self._n + 1
            return MultiGraph(np.stack([u // n1, u % n1], axis=1), c, blips, base)
        nz = self._pair_counts > 0
        central = self.mu.rows >= 1
        sel = nz & central
        return MultiGraph(np.stack([self.mu.rows[sel], self.mu.cols[sel]], axis=1),
                          self._pair_counts[sel], blips, base)


def sample_iid_multigraph(mu, m, rng=None) -> MultiGraph:
    """m i.i.d. edges drawn from mu / ||mu||."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return EdgeProcess(mu, rng).extend(m).graph()


def arrival_times(norm_mu, m, rng=None) -> np.ndarray:
    """Partial sums of m i.i.d. Exp(norm_mu) variables."""
    if not norm_mu > 0:
        raise ParameterDomainError("total mass must be positive")
    rng = as_generator(rng)
    return np.cumsum(rng.exponential(1.0 / norm_mu, size=int(m)))


def _scaled(mu: IntensityMatrix, t):
    """t * mu_ij for stored pairs, evaluated in log space."""
    if t == 0:
        return np.zeros(len(mu))
    return np.exp(math.log(t) + mu.log_values)


def _rank1_split(q, t, loops, max_block=3000, draw_budget=2e6):
    """Pick a head size L: pairs inside [1, L]^2 are handled one by one."""
    n = q.size
    S = q.sum()
    cand = np.arange(0, min(n, max_block) + 1)
    head = np.concatenate([[0.0], np.cumsum(q[: cand[-1]])])
    tail = S - head
    draws = t * tail * (S + head)
    cost = cand * (cand + 1) / 2.0 + draws
    ok = draws <= draw_budget
    if not ok.any():
        return int(cand[-1])
    cost[~ok] = np.inf
    return int(cand[np.argmin(cost)])


def _rank1_poisson(mu: Rank1Intensity, t, rng, presence):
    """Pairs and counts of the Poissonized rank-1 multigraph.

    Pairs inside a head block [1, L]^2 get their own Poisson (or Bernoulli)
    draw; the rest come from ordered endpoint draws split as
    {first > L} and {first <= L, second > L}, which is exact.
    """
    q = mu.weights
    n = q.size
    L = _rank1_split(q, t, mu.loops)
    out_pairs, out_counts = [], []
    if L >= 1:
        i, j = np.triu_indices(L, k=0 if mu.loops else 1)
        lam = np.where(i == j, t * q[i] * q[j], 2.0 * t * q[i] * q[j])
        if presence:
            off = i != j
            i, j, lam = i[off], j[off], lam[off]
            hit = rng.random(lam.size) < -np.expm1(-lam)
            cnt = hit.astype(np.int64)
        else:
            cnt = rng.poisson(lam)
        nz = cnt > 0
        out_pairs.append(np.stack([i[nz] + 1, j[nz] + 1], axis=1))
        out_counts.append(cnt[nz])
    if L < n:
        S = q.sum()
        head = q[:L].sum()
        tail_tab = mu.range_table(L, n)
        full_tab = mu.alias_table()
        n1 = rng.poisson(t * (S - head) * S)
        a1 = tail_tab.draw(rng, n1) + L + 1
        b1 = full_tab.draw(rng, n1) + 1
        if L >= 1 and head > 0:
            n2 = rng.poisson(t * head * (S - head))
            a2 = mu.range_table(0, L).draw(rng, n2) + 1
            b2 = tail_tab.draw(rng, n2) + L + 1
        else:
            a2 = b2 = np.empty(0, dtype=np.int64)
        a = np.concatenate([a1, a2])
        b = np.concatenate([b1, b2])
        if not mu.loops or presence:
            ok = a != b
            a, b = a[ok], b[ok]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        code = lo * (n + 1) + hi
        u, c = np.unique(code, return_counts=True)
        if presence:
            c = np.ones_like(c)
        out_pairs.append(np.stack([u // (n + 1), u % (n + 1)], axis=1))
        out_counts.append(c)
    if not out_pairs:
        return _EMPTY2.copy(), np.empty(0, dtype=np.int64)
    return np.concatenate(out_pairs), np.concatenate(out_counts)


def _rank1_tail_blips(mu: Rank1Intensity, t, rng, counter):
    """Star and dust edges standing in for the truncated labels."""
    if not mu.tau:
        return _EMPTY2
    n_star = rng.poisson(t * mu.star_rate)
    n_dust = rng.poisson(t * mu.dust_rate)
    centres = mu.alias_table().draw(rng, n_star) + 1
    kinds = np.concatenate([np.ones(n_star), np.full(n_dust, 2)]).astype(np.int8)
    return _realise_blips(kinds, np.concatenate([centres, np.zeros(n_dust, dtype=np.int64)]), counter)


def sample_poisson_multigraph(mu, t, rng=None) -> MultiGraph:
    """Independent Poisson(t mu_ij) multiplicities for all pairs."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    rng = as_generator(rng)
    base = blip_base_for(mu.label_max)
    if isinstance(mu, Rank1Intensity):
        pairs, counts = _rank1_poisson(mu, float(t), rng, presence=False)
        blips = _rank1_tail_blips(mu, float(t), rng, _BlipCounter(base))
        return MultiGraph(pairs, counts, blips, base)
    cnt = rng.poisson(_scaled(mu, t))
    central, star, dust_edge, dust_loop = _blip_layout(mu)
    pairs = np.stack([mu.rows[central], mu.cols[central]], axis=1)
    blips = _blip_edges_from_counts(mu, cnt, star, dust_edge, dust_loop, _BlipCounter(base))
    return MultiGraph(pairs, cnt[central], blips, base)


def _blip_edges_from_counts(mu, cnt, star, dust_edge, dust_loop, counter):
    kinds = np.concatenate([np.full(int(cnt[star].sum()), 1), np.full(int(cnt[dust_edge].sum()), 2),
                            np.full(int(cnt[dust_loop].sum()), 3)]).astype(np.int8)
    centres = np.concatenate([np.repeat(mu.cols[star], cnt[star]),
                              np.zeros(int(cnt[dust_edge].sum() + cnt[dust_loop].sum()), dtype=np.int64)])
    return _realise_blips(kinds, centres, counter)


def sample_presence(mu, t, rng=None) -> SimpleGraph:
    """The simple graph G_t directly: pair ij present with probability 1 - exp(-t mu_ij)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    rng = as_generator(rng)
    if isinstance(mu, Rank1Intensity):
        pairs, _ = _rank1_poisson(mu, float(t), rng, presence=True)
        blips = _rank1_tail_blips(mu, float(t), rng, _BlipCounter(blip_base_for(mu.label_max)))
        return SimpleGraph(np.concatenate([pairs, blips]))
    central, star, dust_edge, dust_loop = _blip_layout(mu)
    off = central & (mu.rows != mu.cols)
    lam = _scaled(mu, t)
    hit = rng.random(int(off.sum())) < -np.expm1(-lam[off])
    edges = np.stack([mu.rows[off][hit], mu.cols[off][hit]], axis=1)
    if star.any() or dust_edge.any():
        cnt = np.zeros(len(mu), dtype=np.int64)
        sel = star | dust_edge
        cnt[sel] = rng.poisson(lam[sel])
        counter = _BlipCounter(blip_base_for(mu.label_max))
        blips = _blip_edges_from_counts(mu, cnt, star, dust_edge, np.zeros_like(star), counter)
        edges = np.concatenate([edges, blips])
    return SimpleGraph(edges)


def sample_gamma_m(mu, m, rng=None, exact=False) -> SimpleGraph:
    """G_m exactly (small m) or through the G_t surrogate at t = m / ||mu||."""
    if exact:
        return simplify(sample_iid_multigraph(mu, m, rng))
    return sample_presence(mu, m / mu.total_mass(), rng)


# ---------------------------------------------------------------------------
# process models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HollywoodSpec:
    """Two-parameter CRP grouped into edges whose sizes follow ``edge_size``.

    ``edge_size`` is either a constant positive integer or a mapping
    ``{size: probability}``.
    """

    alpha: float
    theta: float
    m: int
    edge_size: object = 2

    def validate(self):
        a, th = self.alpha, self.theta
        if 0 <= a <= 1 and th > -a:
            pass
        elif a < 0 and th > 0 and abs(th / -a - round(th / -a)) < 1e-9:
            pass
        else:
            raise ParameterDomainError(
                "CRP needs 0 <= alpha <= 1 and theta > -alpha, or alpha < 0 and theta = N|alpha|")
        if self.m < 0:
            raise ParameterDomainError("m must be nonnegative")
        if isinstance(self.edge_size, dict):
            sizes = np.array(list(self.edge_size), dtype=int)
            probs = np.array(list(self.edge_size.values()), dtype=float)
            if np.any(sizes < 1) or np.any(probs < 0) or abs(probs.sum() - 1) > 1e-9:
                raise ParameterDomainError("edge-size law must be a distribution on positive integers")
        elif int(self.edge_size) < 1:
            raise ParameterDomainError("edge size must be positive")

    def draw_sizes(self, rng):
        if isinstance(self.edge_size, dict):
            sizes = np.array(list(self.edge_size), dtype=int)
            probs = np.array(list(self.edge_size.values()), dtype=float)
            return rng.choice(sizes, size=self.m, p=probs / probs.sum())
        return np.full(self.m, int(self.edge_size))


def crp_seating(n, alpha, theta, rng):
    """Table numbers (1-based, by first occupancy) of n CRP customers."""
    counts = []
    out = np.empty(n, dtype=np.int64)
    u = rng.random(n)
    for c in range(n):
        k = len(counts)
        # customer c joins table i w.p. (n_i - alpha)/(c + theta), new w.p. (theta + k alpha)/(c + theta)
        x = u[c] * (c + theta)
        acc = 0.0
        chosen = k
        for i in range(k):
            acc += counts[i] - alpha
            if x < acc:
                chosen = i
                break
        if chosen == k:
            counts.append(1)
        else:
            counts[chosen] += 1
        out[c] = chosen + 1
    return out


def hollywood_sample(spec: HollywoodSpec, rng=None) -> MultiHyperGraph:
    spec.validate()
    rng = as_generator(rng)
    sizes = spec.draw_sizes(rng)
    seats = crp_seating(int(sizes.sum()), spec.alpha, spec.theta, rng)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    return MultiHyperGraph([tuple(int(x) for x in seats[bounds[i]:bounds[i + 1]]) for i in range(spec.m)])


def pittel_sample(N, alpha, m, rng=None) -> MultiGraph:
    """Urn on tables 1..N: seat with probability (n_i + alpha)/(n + N alpha), pair consecutive seats."""
    if int(N) != N or N < 2 or not alpha > 0:
        raise ParameterDomainError("Pittel urn needs N >= 2 and alpha > 0")
    rng = as_generator(rng)
    N = int(N)
    counts = np.zeros(N)
    seats = np.empty(2 * m, dtype=np.int64)
    u = rng.random(2 * m)
    for c in range(2 * m):
        cum = np.cumsum(counts + alpha)
        seats[c] = int(np.searchsorted(cum, u[c] * cum[-1], side="right"))
        counts[seats[c]] += 1
    pairs = seats.reshape(-1, 2) + 1
    g = MultiGraph(pairs, np.ones(m, dtype=np.int64), None, blip_base_for(N))
    g.seat_order = tuple(int(x) for x in seats + 1)
    return g


def configuration_model(degrees, rng=None) -> MultiGraph:
    """Uniform matching of half-edges; vertex k (1-based) gets degrees[k-1] half-edges."""
    d = np.asarray(degrees, dtype=np.int64)
    if np.any(d < 0):
        raise ParameterDomainError("degrees must be nonnegative")
    if int(d.sum()) % 2:
        raise ParityError("degree sum is odd")
    rng = as_generator(rng)
    half = rng.permutation(np.repeat(np.arange(1, d.size + 1), d))
    pairs = half.reshape(-1, 2)
    return MultiGraph(pairs, np.ones(pairs.shape[0], dtype=np.int64), None, blip_base_for(d.size))


def decompose(g: MultiGraph, mu=None):
    """Split into central part, attached stars (centre -> edge count) and dust counts."""
    b = g.blip_edges
    centre_is_pos = b[:, 0] < g.blip_base
    star_centres = b[centre_is_pos, 0]
    rest = b[~centre_is_pos]
    loops = int(np.sum(rest[:, 0] == rest[:, 1]))
    central = MultiGraph(g.pairs, g.counts, None, g.blip_base)
    stars = {int(k): int(v) for k, v in zip(*np.unique(star_centres, return_counts=True))}
    return {"central": central, "stars": stars,
            "dust": {"edges": int(rest.shape[0] - loops), "loops": loops}}


# ---------------------------------------------------------------------------
# configuration-model equivalence
# ---------------------------------------------------------------------------

def _canonical_rows(a, b, n):
    """One row per sample: its sorted edge codes lo*(n+1)+hi."""
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return np.sort(lo * (n + 1) + hi, axis=1)


def _degree_rows(a, b, n):
    S = a.shape[0]
    deg = np.zeros((S, n + 1), dtype=np.int64)
    rows = np.repeat(np.arange(S), a.shape[1])
    np.add.at(deg, (rows, a.ravel()), 1)
    np.add.at(deg, (rows, b.ravel()), 1)
    return deg[:, 1:]


def _tv_and_table(x_rows, y_rows):
    both = np.concatenate([x_rows, y_rows])
    uniq, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    cx = np.bincount(inv[: x_rows.shape[0]], minlength=uniq.shape[0])
    cy = np.bincount(inv[x_rows.shape[0]:], minlength=uniq.shape[0])
    tv = 0.5 * np.abs(cx / cx.sum() - cy / cy.sum()).sum()
    return float(tv), np.stack([cx, cy])


def verify_config_equivalence(mu_rank1: Rank1Intensity, m, seeds, rng=None, min_bin=200, tv_threshold=0.02):
    """Compare G_m given its degree sequence with the configuration model.

    Each degree-sequence bin with at least ``min_bin`` samples gets as many
    fresh configuration-model draws; the report carries the per-bin total
    variation, a frequency-weighted TV and a pooled chi-square p-value.
    """
    if not isinstance(mu_rank1, Rank1Intensity) or not mu_rank1.loops:
        raise ParameterDomainError("the equivalence holds for rank-1 intensities with loops")
    rng = as_generator(rng)
    n = mu_rank1.weights.size
    tab = mu_rank1.alias_table()
    a = tab.draw(rng, seeds * m).reshape(seeds, m) + 1
    b = tab.draw(rng, seeds * m).reshape(seeds, m) + 1
    graphs = _canonical_rows(a, b, n)
    degs = _degree_rows(a, b, n)
    dkeys, dinv = np.unique(degs, axis=0, return_inverse=True)
    dinv = dinv.reshape(-1)
    bins = []
    chi2_total, dof_total = 0.0, 0
    weighted, covered = 0.0, 0
    for k, dseq in enumerate(dkeys):
        members = np.nonzero(dinv == k)[0]
        entry = {"degrees": [int(x) for x in dseq], "count": int(members.size)}
        if members.size < min_bin:
            entry["status"] = "inconclusive"
            bins.append(entry)
            continue
        half = np.repeat(np.arange(1, n + 1), dseq)
        perm = rng.permuted(np.tile(half, (members.size, 1)), axis=1)
        cfg = _canonical_rows(perm[:, 0::2], perm[:, 1::2], n)
        tv, table = _tv_and_table(graphs[members], cfg)
        entry.update(tv=tv, outcomes=int(table.shape[1]), status="ok")
        if table.shape[1] > 1:
            chi2, _, dof, _ = stats.chi2_contingency(table, correction=False)
            chi2_total += chi2
            dof_total += dof
            entry["chi2"] = float(chi2)
        bins.append(entry)
        weighted += tv * members.size
        covered += members.size
    if covered == 0:
        return {"status": "inconclusive", "bins": bins, "tv": None, "p_value": None}
    tv = weighted / covered
    p = float(stats.chi2.sf(chi2_total, dof_total)) if dof_total else 1.0
    return {"status": "pass" if tv <= tv_threshold else "fail", "tv": tv, "p_value": p,
            "max_bin_tv": max(b["tv"] for b in bins if b["status"] == "ok"), "bins": bins,
            "coverage": covered / seeds}


def relabel_first_occurrence(seq):
    """Relabel a label sequence so labels appear as 1, 2, 3, ... in order."""
    seen = {}
    return tuple(seen.setdefault(x, len(seen) + 1) for x in seq)


def multiset_key(edges):
    return tuple(sorted(tuple(sorted(e)) for e in edges))


def graph_to_json(g):
    return json.dumps(g.summary(), sort_keys=True)
