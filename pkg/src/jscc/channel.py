"""Correlated sources, memoryless MACs, joint decoding and simulation.

Every model probability is an exact rational.  Decoding works with per-letter
log tables derived from the per-letter joint law

    P(v, x, y) = P(v) * prod_i P(x_i | v_i) * W(y | x)

and the threshold test for a nonempty subset A of terminals

    sum_t ln W(y_t|x_t) - ln P(y_t|x_Ac,t, v_Ac,t) + sum_s ln P(v_A,s|v_Ac,s)
        > m * (gamma + rho_A)

where m is the channel blocklength.  When source and channel blocklengths
differ every terminal must be v-independent and the two sums run over their
own letters.
"""
from __future__ import annotations

import configparser
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations, product
from pathlib import Path

import numpy as np

from .algebra import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    DimensionError,
    DomainError,
    ParseError,
    all_sequences,
    check_budget,
    make_rng,
    read_matrix,
)
from .codes import CodeEnsemble, LinearCode, log_fraction, randomize
from .encoder import ConditionalPMF, JsccEncoder, build_quantizer, parse_target

TOL = 1e-9


def _frac(text) -> Fraction:
    return Fraction(str(text).strip())


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceModel:
    """Memoryless K-terminal source with an exact per-letter joint pmf."""

    alphabets: tuple
    pmf: dict

    def __post_init__(self):
        alph = tuple(int(a) for a in self.alphabets)
        pmf = {}
        for key, p in self.pmf.items():
            key = tuple(int(s) for s in key)
            if len(key) != len(alph) or any(not 0 <= s < a for s, a in zip(key, alph)):
                raise DomainError(f"source letter {key} outside {alph}")
            p = Fraction(p)
            if p < 0:
                raise DomainError("negative probability")
            if p:
                pmf[key] = pmf.get(key, Fraction(0)) + p
        if sum(pmf.values(), Fraction(0)) != 1:
            raise DomainError("source pmf does not sum to 1")
        object.__setattr__(self, "alphabets", alph)
        object.__setattr__(self, "pmf", pmf)

    @property
    def K(self) -> int:
        return len(self.alphabets)

    @classmethod
    def dsbs(cls, p) -> "SourceModel":
        """Doubly symmetric binary source with crossover ``p``."""
        p = Fraction(p)
        return cls((2, 2), {(0, 0): (1 - p) / 2, (1, 1): (1 - p) / 2, (0, 1): p / 2, (1, 0): p / 2})

    @classmethod
    def independent(cls, *dists) -> "SourceModel":
        dists = [[Fraction(p) for p in d] for d in dists]
        pmf = {}
        for key in product(*(range(len(d)) for d in dists)):
            pmf[key] = math.prod((d[k] for d, k in zip(dists, key)), start=Fraction(1))
        return cls(tuple(len(d) for d in dists), pmf)

    @classmethod
    def point(cls, alphabets, letter) -> "SourceModel":
        return cls(tuple(alphabets), {tuple(letter): Fraction(1)})

    def array(self) -> np.ndarray:
        out = np.full(self.alphabets, Fraction(0), dtype=object)
        for key, p in self.pmf.items():
            out[key] = p
        return out

    def marginal(self, i: int) -> list:
        out = [Fraction(0)] * self.alphabets[i]
        for key, p in self.pmf.items():
            out[key[i]] += p
        return out

    @cached_property
    def _sampler(self):
        keys = sorted(self.pmf)
        cdf = np.cumsum([float(self.pmf[k]) for k in keys])
        cdf[-1] = 1.0
        return np.array(keys, dtype=np.int64), cdf

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """(K, n) array of i.i.d. letters."""
        if n < 1:
            raise DomainError("n must be positive")
        keys, cdf = self._sampler
        idx = np.searchsorted(cdf, rng.random(n), side="right")
        return keys[np.minimum(idx, len(keys) - 1)].T.copy()


@dataclass(frozen=True)
class MacModel:
    """Memoryless MAC: W[x tuple] is the exact law over output indices 0..outputs-1."""

    inputs: tuple
    outputs: int
    W: dict

    def __post_init__(self):
        inputs = tuple(int(a) for a in self.inputs)
        W = {}
        for x in product(*(range(a) for a in inputs)):
            if x not in self.W:
                raise DomainError(f"channel law missing input {x}")
            row = tuple(Fraction(p) for p in self.W[x])
            if len(row) != self.outputs or sum(row) != 1 or any(p < 0 for p in row):
                raise DomainError(f"W(.|{x}) is not a distribution over {self.outputs} outputs")
            W[x] = row
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "W", W)

    @property
    def K(self) -> int:
        return len(self.inputs)

    @classmethod
    def from_function(cls, f, inputs, outputs: int) -> "MacModel":
        """Deterministic channel y = f(x_1, ..., x_K)."""
        W = {}
        for x in product(*(range(a) for a in inputs)):
            row = [Fraction(0)] * outputs
            row[f(*x)] = Fraction(1)
            W[x] = row
        return cls(tuple(inputs), outputs, W)

    @classmethod
    def identity(cls, q: int) -> "MacModel":
        return cls.from_function(lambda x: x, (q,), q)

    @classmethod
    def adder(cls, K: int = 2, q: int = 2) -> "MacModel":
        """Integer sum of K inputs over {0..q-1}."""
        return cls.from_function(lambda *x: sum(x), (q,) * K, K * (q - 1) + 1)

    @classmethod
    def bsc(cls, p) -> "MacModel":
        p = Fraction(p)
        return cls((2,), 2, {(0,): (1 - p, p), (1,): (p, 1 - p)})

    def array(self) -> np.ndarray:
        out = np.empty(self.inputs + (self.outputs,), dtype=object)
        for x, row in self.W.items():
            out[x] = np.array(row, dtype=object)
        return out

    @cached_property
    def _cdf(self) -> np.ndarray:
        rows = [np.cumsum([float(p) for p in self.W[x]]) for x in product(*(range(a) for a in self.inputs))]
        cdf = np.array(rows)
        cdf[:, -1] = 1.0
        return cdf

    def flat_input(self, X: np.ndarray) -> np.ndarray:
        """Flatten a (K, ...) stack of inputs into C-order tuple indices."""
        flat = np.zeros(X.shape[1:], dtype=np.int64)
        for i, a in enumerate(self.inputs):
            flat = flat * a + X[i]
        return flat


def sample_sources(model: SourceModel, n: int, rng: np.random.Generator) -> tuple:
    """K source words of length n, one array per terminal."""
    return tuple(model.sample(n, rng))


def transmit(mac: MacModel, x_tuple, rng: np.random.Generator) -> np.ndarray:
    """Pass K equal-length input words through the memoryless channel."""
    X = [np.asarray(x, dtype=np.int64) for x in x_tuple]
    if len(X) != mac.K:
        raise DimensionError(f"channel has {mac.K} inputs, got {len(X)}")
    if len({x.shape for x in X}) != 1:
        raise DimensionError("input words have different lengths")
    for x, a in zip(X, mac.inputs):
        if x.size and (x.min() < 0 or x.max() >= a):
            raise DomainError("channel input symbol out of range")
    flat = mac.flat_input(np.stack(X))
    cdf = mac._cdf[flat]
    u = rng.random(flat.shape)
    return (u[..., None] >= cdf[..., :-1]).sum(axis=-1).astype(np.int64)


# ---------------------------------------------------------------------------
# Per-letter tables
# ---------------------------------------------------------------------------


def subsets(K: int) -> list:
    """Nonempty subsets of terminals as sorted 0-based tuples, by bitmask."""
    return [tuple(i for i in range(K) if mask >> i & 1) for mask in range(1, 2 ** K)]


def subset_label(A) -> str:
    return "{" + ",".join(str(i + 1) for i in A) + "}"


def _div(a, b):
    return None if b is None or b == 0 else a / b


_vdiv = np.frompyfunc(_div, 2, 1)


def _ln(x) -> float:
    return -math.inf if x is None or x == 0 else log_fraction(x)


_vln = np.vectorize(_ln, otypes=[float])


def _letter_joint(Pv: np.ndarray, rows: list, W: np.ndarray) -> np.ndarray:
    """Exact J[v_1..v_K, x_1..x_K, y]."""
    K = Pv.ndim
    shape = Pv.shape + tuple(r.shape[1] for r in rows) + (W.shape[-1],)
    J = np.empty(shape, dtype=object)
    for idx in product(*(range(s) for s in shape)):
        v, x, y = idx[:K], idx[K:2 * K], idx[-1]
        p = Pv[v]
        if p:
            for i in range(K):
                p = p * rows[i][v[i], x[i]]
        J[idx] = p * W[x + (y,)] if p else Fraction(0)
    return J


@dataclass
class SubsetTables:
    """Exact and log tables for one subset A (flattened letter indices)."""

    A: tuple
    chan_ratio: np.ndarray  # (NVc, NX, NY) W / P(y | x_Ac, v_Ac), None where undefined
    src_ratio: np.ndarray  # (NV,) P(v_A | v_Ac)
    chan: np.ndarray  # logs of chan_ratio, -inf where undefined
    src: np.ndarray
    log_den: np.ndarray  # (NVc, NX, NY) ln P(y | x_Ac, v_Ac)


class LetterTables:
    """Everything the decoders and bounds need about one system, per letter.

    ``coupled`` means source and channel blocklengths agree, so the channel
    term of a letter may depend on that letter's source symbols.  Otherwise
    every encoder pmf must be v-independent and channel tables are built
    against a one-letter dummy source.
    """

    def __init__(self, source: SourceModel, pmfs, mac: MacModel, coupled: bool = True):
        if len(pmfs) != source.K or mac.K != source.K:
            raise DimensionError("source, encoders and channel disagree on K")
        for i, p in enumerate(pmfs):
            if not p.factorized:
                raise DomainError("letter tables need per-symbol factorized pmfs")
            if p.qV != source.alphabets[i] or p.qX != mac.inputs[i]:
                raise DimensionError(f"terminal {i + 1} pmf alphabets do not match")
            if coupled and not p.v_independent and p.m != p.n:
                raise DimensionError("v-dependent pmf needs equal blocklengths")
            if not coupled and not p.v_independent:
                raise DomainError("unequal blocklengths need v-independent pmfs")
        self.source, self.mac, self.pmfs, self.coupled = source, mac, tuple(pmfs), coupled
        self.K = source.K
        self.qV = source.alphabets
        self.qX = mac.inputs
        self.NY = mac.outputs
        self.NV = math.prod(self.qV)
        self.NX = math.prod(self.qX)
        self.Pv = source.array()
        self.Wa = mac.array()
        rows = [np.array([p.letter_row(a) for a in range(p.qV)], dtype=object) for p in pmfs]
        self.rows = rows
        if coupled:
            Pc, rows_c = self.Pv, rows
        else:
            Pc = np.full((1,) * self.K, Fraction(1), dtype=object)
            rows_c = [r[:1] for r in rows]
        self.J = _letter_joint(Pc, rows_c, self.Wa)
        self.NVc = self.NV if coupled else 1
        self.subsets = subsets(self.K)
        self.tables = {A: self._subset(A) for A in self.subsets}
        self.lnW = _vln(self.Wa.reshape(self.NX, self.NY))
        self.lnPv = _vln(self.Pv.reshape(self.NV))

    def _subset(self, A: tuple) -> SubsetTables:
        K, J = self.K, self.J
        axes = tuple(A) + tuple(K + i for i in A)
        m = J.sum(axis=axes, keepdims=True)
        den = _vdiv(m, m.sum(axis=-1, keepdims=True))
        den = np.broadcast_to(den, J.shape)
        W = np.broadcast_to(self.Wa.reshape((1,) * K + self.Wa.shape), J.shape)
        chan_ratio = _vdiv(W, den).reshape(self.NVc, self.NX, self.NY)
        marg = self.Pv.sum(axis=tuple(A), keepdims=True)
        src_ratio = _vdiv(self.Pv, np.broadcast_to(marg, self.Pv.shape)).reshape(self.NV)
        # a zero conditional is stored as an impossible letter
        src_ratio = np.array([None if r == 0 else r for r in src_ratio], dtype=object)
        chan_ratio = np.where(chan_ratio == 0, None, chan_ratio)
        return SubsetTables(
            A,
            chan_ratio,
            src_ratio,
            _vln(chan_ratio),
            _vln(src_ratio),
            _vln(den.reshape(self.NVc, self.NX, self.NY)),
        )

    # flattening helpers -------------------------------------------------

    def flat_v(self, V: np.ndarray) -> np.ndarray:
        """V has the terminal axis first: (K, ...) -> (...)."""
        flat = np.zeros(V.shape[1:], dtype=np.int64)
        for i, a in enumerate(self.qV):
            flat = flat * a + V[i]
        return flat

    def flat_x(self, X: np.ndarray) -> np.ndarray:
        flat = np.zeros(X.shape[1:], dtype=np.int64)
        for i, a in enumerate(self.qX):
            flat = flat * a + X[i]
        return flat

    def scores(self, vflat: np.ndarray, xflat: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Per-subset sums for candidates; returns (len(subsets), ...)."""
        vc = vflat if self.coupled else np.zeros_like(xflat)
        out = []
        for A in self.subsets:
            t = self.tables[A]
            out.append(t.chan[vc, xflat, y].sum(axis=-1) + t.src[vflat].sum(axis=-1))
        return np.stack(out)

    def thresholds(self, spec: "DecoderSpec", m: int) -> np.ndarray:
        return np.array([m * (spec.gamma + spec.rho_of(A)) for A in self.subsets])


def letter_tables(source: SourceModel, encoders, mac: MacModel) -> LetterTables:
    """Tables for sample encoders, using their realized per-symbol pmfs."""
    pmfs = [e.quantizer.realized_pmf() for e in encoders]
    n = {e.n for e in encoders}
    m = {e.m for e in encoders}
    if len(n) != 1 or len(m) != 1:
        raise DimensionError("all terminals must share blocklengths")
    return LetterTables(source, pmfs, mac, coupled=n == m)


# ---------------------------------------------------------------------------
# Information densities
# ---------------------------------------------------------------------------


def _seq_product(values) -> Fraction | None:
    p = Fraction(1)
    for r in values:
        if r is None:
            return None
        p *= r
    return p


def info_density(tables: LetterTables, A, x_tuple, y, v_tuple) -> float:
    """i(x_A; y | x_Ac, v_Ac) in nats per channel letter.

    Returns -inf when W(y|x) = 0 and +inf when the conditional output
    probability given (x_Ac, v_Ac) vanishes; decoders treat both as atypical.
    """
    A = tuple(sorted(A))
    X = np.array([np.asarray(x) for x in x_tuple])
    V = np.array([np.asarray(v) for v in v_tuple])
    y = np.asarray(y)
    m = len(y)
    xf = tables.flat_x(X)
    vc = tables.flat_v(V) if tables.coupled else np.zeros(m, dtype=np.int64)
    W = tables.Wa.reshape(tables.NX, tables.NY)
    num = math.prod((W[a, b] for a, b in zip(xf, y)), start=Fraction(1))
    if num == 0:
        return -math.inf
    t = tables.tables[A]
    den = Fraction(1)
    for a, b, c in zip(vc, xf, y):
        r = t.chan_ratio[a, b, c]
        if r is None:
            return math.inf
        den *= W[b, c] / r
    return log_fraction(num / den) / m


def h_term(tables: LetterTables, A, v_tuple, m: int | None = None) -> float:
    """h(v_A | v_Ac) = (1/m) ln 1 / P(v_A | v_Ac); m defaults to the source length."""
    A = tuple(sorted(A))
    V = np.array([np.asarray(v) for v in v_tuple])
    vf = tables.flat_v(V)
    p = _seq_product(tables.tables[A].src_ratio[vf])
    m = m or V.shape[1]
    return math.inf if p is None else -log_fraction(p) / m


# ---------------------------------------------------------------------------
# Decoders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecoderSpec:
    gamma: float
    mode: str = "typicality"
    tie: str = "lex"
    rho: dict = field(default_factory=dict)  # subset tuple -> rho_A, default 0

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if self.mode not in ("typicality", "map"):
            raise DomainError(f"unknown decoder mode {self.mode!r}")
        if self.tie != "lex":
            raise DomainError("only lexicographic tie breaking is supported")

    def rho_of(self, A) -> float:
        return float(self.rho.get(tuple(A), 0.0))


def gamma_schedule(n: int, c: float = 0.5) -> float:
    """gamma_n = c / sqrt(n)."""
    return c / math.sqrt(n)


@dataclass(frozen=True)
class Decoded:
    v: tuple  # one array per terminal
    ambiguous: bool
    candidates: int


class DecoderSearch:
    """Enumeration scaffolding shared by both decoders at one blocklength.

    Terminals 1..K-1 are enumerated exhaustively ("outer" words); the last
    terminal is expanded letter by letter under a score threshold.  All
    encoder-independent reductions of the letter tables are computed once
    here, so one instance should be reused across trials.
    """

    def __init__(self, tables: LetterTables, n: int, budget: int | None = DEFAULT_BUDGET):
        self.t, self.n, self.budget = tables, n, budget
        t, K = tables, tables.K
        self.outer_sizes = [t.qV[i] ** n for i in range(K - 1)]
        No = math.prod(self.outer_sizes)
        check_budget(No, budget, "outer candidates")
        self.words = [all_sequences(n, t.qV[i], None) for i in range(K)]
        if K > 1:
            self.outer_idx = np.indices(self.outer_sizes).reshape(K - 1, -1)
        else:
            self.outer_idx = np.zeros((0, 1), dtype=np.int64)
        self.No = No
        self.qK, self.qXK = t.qV[-1], t.qX[-1]
        vp = np.zeros((No, n), dtype=np.int64)
        for i in range(K - 1):
            vp = vp * t.qV[i] + self.words[i][self.outer_idx[i]]
        self.vp = vp
        qv = self.qK if t.coupled else 1
        NXp = t.NX // self.qXK

        def split(arr):
            return arr.reshape(arr.shape[0] // qv, qv, NXp, self.qXK, t.NY)

        # optimistic per-letter bounds over the last terminal's letter
        self.cmax = [split(t.tables[A].chan).max(axis=(1, 3)) for A in t.subsets]
        self.smax = [t.tables[A].src.reshape(-1, self.qK).max(axis=1) for A in t.subsets]
        self.jK = t.subsets.index((K - 1,))
        last = t.tables[(K - 1,)]
        self.inner_src = last.src.reshape(-1, self.qK)
        self.den = split(last.log_den)[:, 0, :, 0, :]
        self.wmax = t.lnW.reshape(NXp, self.qXK, t.NY).max(axis=1)
        pv = t.Pv.reshape(-1, self.qK)
        marg = pv.sum(axis=1)
        self.ln_part = _vln(marg)
        cond = np.array([[_div(p, mg) for p in row] for row, mg in zip(pv, marg)], dtype=object)
        self.ln_cond = _vln(cond)
        # encoder-independent sums over the outer words
        self.smax_sum = [sm[vp].sum(axis=1) for sm in self.smax]
        self.inner_scores = self.inner_src[vp]
        self.map_scores = self.ln_cond[vp]
        self.map_base = self.ln_part[vp].sum(axis=1) + self.map_scores.max(axis=2).sum(axis=1)
        self.vp_chan = vp if t.coupled else None

    def outer_x(self, encoders) -> np.ndarray:
        """Flat partial channel letters of every outer word, (No, m)."""
        t = self.t
        m = encoders[0].m
        xp = np.zeros((self.No, m), dtype=np.int64)
        for i in range(t.K - 1):
            X = encoders[i].encode_array(self.words[i])
            xp = xp * t.qX[i] + X[self.outer_idx[i]]
        return xp

    def expand(self, scores: np.ndarray, ids: np.ndarray, thr: np.ndarray):
        """All (outer, inner word) with sum_s scores[o, s, v_s] > thr[o] - TOL."""
        n = scores.shape[1]
        best = scores.max(axis=2)
        suffix = np.zeros((len(best), n + 1))
        suffix[:, :n] = np.cumsum(best[:, ::-1], axis=1)[:, ::-1]
        rows = np.nonzero(suffix[:, 0] > thr - TOL)[0]
        idx = np.zeros(len(rows), dtype=np.int64)
        part = np.zeros(len(rows))
        for s in range(n):
            new = part[:, None] + scores[rows, s, :]
            ok = new + suffix[rows, s + 1][:, None] > thr[rows][:, None] - TOL
            r, a = np.nonzero(ok)
            rows, idx, part = rows[r], idx[r] * self.qK + a, new[r, a]
            if self.budget is not None and len(rows) > self.budget:
                raise BudgetExceeded(len(rows), self.budget, "decoder candidates")
        return ids[rows], idx

    def candidates(self, encoders, o: np.ndarray, k: np.ndarray, xp: np.ndarray):
        """Flat letter indices (v over source letters, x over channel letters)."""
        ku, inv = np.unique(k, return_inverse=True)
        XK = encoders[-1].encode_array(self.words[-1][ku])[inv]
        vflat = self.vp[o] * self.qK + self.words[-1][k]
        xflat = xp[o] * self.qXK + XK
        return vflat, xflat

    def words_of(self, o: int, k: int) -> tuple:
        out = [self.words[i][self.outer_idx[i][o]] for i in range(self.t.K - 1)]
        return tuple(out) + (self.words[-1][k],)

    def zeros(self) -> tuple:
        return tuple(np.zeros(self.n, dtype=np.int64) for _ in range(self.t.K))


def _prepare(tables: LetterTables, encoders, y, budget, search, outer):
    if len(encoders) != tables.K:
        raise DimensionError("one encoder per terminal required")
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1 or len(y) != encoders[0].m:
        raise DimensionError("received word has the wrong length")
    s = search or DecoderSearch(tables, encoders[0].n, budget)
    xp = s.outer_x(encoders) if outer is None else outer
    return y, s, xp


def typicality_decode(spec: DecoderSpec, y, encoders, tables: LetterTables,
                      budget: int | None = DEFAULT_BUDGET, search: DecoderSearch | None = None,
                      outer: np.ndarray | None = None) -> Decoded:
    """Unique candidate whose encoding is jointly typical with y.

    Candidates are pruned with per-subset upper bounds that never discard a
    typical tuple.  Zero or several typical tuples yield the lexicographically
    smallest typical tuple (or all zeros) with the ambiguity flag set.
    """
    y, s, xp = _prepare(tables, encoders, y, budget, search, outer)
    t, m = tables, len(y)
    thr = t.thresholds(spec, m)
    ids = np.arange(s.No)
    for j in range(len(t.subsets)):
        x, yb = xp[ids], np.broadcast_to(y, (len(ids), m))
        vc = s.vp_chan[ids] if t.coupled else 0
        ub = s.cmax[j][vc, x, yb].sum(axis=1) + s.smax_sum[j][ids]
        ids = ids[ub > thr[j] - TOL]
    o = k = np.zeros(0, dtype=np.int64)
    if len(ids):
        x, yb = xp[ids], np.broadcast_to(y, (len(ids), m))
        vc = s.vp_chan[ids] if t.coupled else 0
        with np.errstate(invalid="ignore"):
            slack = (s.wmax[x, yb] - s.den[vc, x, yb]).sum(axis=1)
        good = np.isfinite(slack)
        ids, slack = ids[good], slack[good]
        o, k = s.expand(s.inner_scores[ids], ids, thr[s.jK] - slack)
    hits = np.zeros(0, dtype=np.int64)
    if len(o):
        vflat, xflat = s.candidates(encoders, o, k, xp)
        S = t.scores(vflat, xflat, np.broadcast_to(y, xflat.shape))
        hits = np.nonzero((S > thr[:, None]).all(axis=0))[0]
    if len(hits) == 1:
        return Decoded(s.words_of(int(o[hits[0]]), int(k[hits[0]])), False, 1)
    if len(hits) == 0:
        return Decoded(s.zeros(), True, 0)
    h = hits[np.lexsort((k[hits], o[hits]))[0]]
    return Decoded(s.words_of(int(o[h]), int(k[h])), True, len(hits))


def map_decode(y, encoders, tables: LetterTables, budget: int | None = DEFAULT_BUDGET,
               search: DecoderSearch | None = None, outer: np.ndarray | None = None) -> Decoded:
    """argmax of P(v) W(y | x(v)), ties to the lexicographically smallest tuple.

    Branch and bound: expand every tuple whose optimistic score clears a
    threshold, lowering the threshold until the best exact score beats it.
    """
    y, s, xp = _prepare(tables, encoders, y, budget, search, outer)
    t = tables
    ch = s.wmax[xp, np.broadcast_to(y, xp.shape)].sum(axis=1)
    scores = s.map_scores
    opt = s.map_base + ch
    base = opt - scores.max(axis=2).sum(axis=1)
    finite = np.isfinite(opt)
    if not finite.any():
        return Decoded(s.zeros(), True, 0)
    top = opt[finite].max()
    step = 1.0
    for _ in range(64):
        tau = top - step
        ids = np.nonzero(opt > tau)[0]
        o, k = s.expand(scores[ids], ids, tau - base[ids])
        if len(o):
            vflat, xflat = s.candidates(encoders, o, k, xp)
            total = t.lnPv[vflat].sum(axis=1) + t.lnW[xflat, np.broadcast_to(y, xflat.shape)].sum(axis=1)
            best = total.max()
            if np.isfinite(best) and best - 2 * TOL > tau:
                tied = np.nonzero(total >= best - TOL)[0]
                h = tied[np.lexsort((k[tied], o[tied]))[0]]
                return Decoded(s.words_of(int(o[h]), int(k[h])), len(tied) > 1, len(tied))
        step *= 2
    return Decoded(s.zeros(), True, 0)


def true_scores(tables: LetterTables, v_tuple, x_tuple, y) -> np.ndarray:
    """Per-subset threshold sums of the transmitted tuple."""
    vf = tables.flat_v(np.array(v_tuple))
    xf = tables.flat_x(np.array(x_tuple))
    return tables.scores(vf[None, :], xf[None, :], np.asarray(y)[None, :])[:, 0]


# ---------------------------------------------------------------------------
# Exact joint law, information quantities and the error bound
# ---------------------------------------------------------------------------


def block_joint_law(tables: LetterTables, n: int, budget: int | None = DEFAULT_BUDGET) -> dict:
    """Exact law of (V^n, X^n, Y^n) as a product of per-letter factors.

    Keys are tuples of flat letter indices (v_t, x_t, y_t) per letter; only
    coupled systems are supported.
    """
    if not tables.coupled:
        raise DomainError("block law needs equal blocklengths")
    J = tables.J.reshape(tables.NV, tables.NX, tables.NY)
    support = [(idx, J[idx]) for idx in product(range(tables.NV), range(tables.NX), range(tables.NY)) if J[idx]]
    check_budget(len(support) ** n, budget, "joint law cells")
    law = {}
    for letters in product(support, repeat=n):
        law[tuple(l[0] for l in letters)] = math.prod((l[1] for l in letters), start=Fraction(1))
    return law


@dataclass
class InfoQuantities:
    """Per-subset quantities in nats per letter; margin = I - rho - H."""

    entropy: dict
    information: dict
    rho: dict
    margin: dict

    @property
    def min_margin(self) -> float:
        return min(self.margin.values())

    def rows(self):
        for A in self.entropy:
            yield subset_label(A), self.entropy[A], self.information[A], self.rho[A], self.margin[A]


def _block_model(source: SourceModel, pmfs, mac: MacModel, N: int):
    """Super-letter alphabets for N-blocks (exact)."""
    K = source.K
    Pv1, W1 = source.array(), mac.array()
    Vw = [all_sequences(N, source.alphabets[i], None) for i in range(K)]
    Xw = [all_sequences(N, mac.inputs[i], None) for i in range(K)]
    Yw = np.array(list(product(range(mac.outputs), repeat=N)), dtype=np.int64).reshape(-1, N)
    Pv = np.empty(tuple(len(v) for v in Vw), dtype=object)
    for idx in product(*(range(len(v)) for v in Vw)):
        Pv[idx] = math.prod((Pv1[tuple(Vw[i][idx[i]][t] for i in range(K))] for t in range(N)), start=Fraction(1))
    rows = []
    for i, p in enumerate(pmfs):
        if p.n != N or p.m != N:
            raise DimensionError(f"terminal {i + 1} pmf is not over {N}-blocks")
        r = np.empty((len(Vw[i]), len(Xw[i])), dtype=object)
        for a, v in enumerate(Vw[i]):
            for b, x in enumerate(Xw[i]):
                r[a, b] = p.prob(tuple(int(s) for s in v), tuple(int(s) for s in x))
        rows.append(r)
    W = np.empty(tuple(len(x) for x in Xw) + (len(Yw),), dtype=object)
    for idx in product(*(range(len(x)) for x in Xw)):
        for c, yw in enumerate(Yw):
            W[idx + (c,)] = math.prod(
                (W1[tuple(Xw[i][idx[i]][t] for i in range(K)) + (yw[t],)] for t in range(N)), start=Fraction(1))
    return Pv, rows, W


def single_letter_quantities(source: SourceModel, pmfs, mac: MacModel, N: int = 1,
                             rho: dict | None = None, budget: int | None = DEFAULT_BUDGET) -> InfoQuantities:
    """H(V_A | V_Ac) and (1/N) I(X_A^N; Y^N | X_Ac^N, V_Ac^N) for every A."""
    K = source.K
    size = math.prod(a ** N for a in source.alphabets) * math.prod(a ** N for a in mac.inputs) * mac.outputs ** N
    check_budget(size, budget, "joint law cells")
    if N == 1:
        Pv = source.array()
        rows = [np.array([p.letter_row(a) for a in range(p.qV)], dtype=object) for p in pmfs]
        W = mac.array()
    else:
        Pv, rows, W = _block_model(source, pmfs, mac, N)
    J = _letter_joint(Pv, rows, W)
    rho = rho or {}
    ent, info, rh, margin = {}, {}, {}, {}
    for A in subsets(K):
        axes_v = tuple(A)
        marg = Pv.sum(axis=axes_v, keepdims=True)
        H = 0.0
        for idx in product(*(range(s) for s in Pv.shape)):
            p = Pv[idx]
            if p:
                H -= float(p) * log_fraction(p / marg[tuple(0 if i in A else idx[i] for i in range(K))])
        axes = tuple(A) + tuple(K + i for i in A)
        mj = J.sum(axis=axes, keepdims=True)
        den = _vdiv(mj, mj.sum(axis=-1, keepdims=True))
        den = np.broadcast_to(den, J.shape)
        Wb = np.broadcast_to(W.reshape((1,) * K + W.shape), J.shape)
        I = 0.0
        for idx in zip(*np.nonzero(J != 0)):
            I += float(J[idx]) * log_fraction(Wb[idx] / den[idx])
        ent[A], info[A] = H / N, I / N
        rh[A] = float(rho.get(A, 0.0))
        margin[A] = info[A] - rh[A] - ent[A]
    return InfoQuantities(ent, info, rh, margin)


@dataclass
class DecodingBound:
    """Pr{not typical} + (2^K - 1) e^{-m gamma}, clamped to 1."""

    atypical: float
    atypical_exact: Fraction | None
    stderr: float
    union: float
    method: str

    @property
    def value(self) -> float:
        return min(1.0, self.atypical + self.union)

    def __float__(self):
        return self.value


def _classes(prob: np.ndarray, ratios: list):
    """Merge letters with identical ratio tuples; returns (probs, log matrix)."""
    groups: dict = {}
    for idx in zip(*np.nonzero(prob != 0)):
        key = tuple(r[idx] for r in ratios)
        groups[key] = groups.get(key, Fraction(0)) + prob[idx]
    keys = sorted(groups, key=lambda k: tuple(float(x) if x is not None else -1.0 for x in k))
    logs = np.array([[_ln(x) for x in k] for k in keys]).reshape(len(keys), len(ratios))
    return [groups[k] for k in keys], logs


def _compositions(total: int, parts: int) -> np.ndarray:
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    bars = np.array(list(combinations(range(total + parts - 1), parts - 1)), dtype=np.int64).reshape(-1, parts - 1)
    ext = np.concatenate([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), total + parts - 1)], axis=1)
    return np.diff(ext, axis=1) - 1


def _parts(tables: LetterTables, n: int, m: int):
    """(length, class probabilities, class log ratios) per independent part."""
    subs = tables.subsets
    if tables.coupled:
        J = tables.J.reshape(tables.NV, tables.NX, tables.NY)
        ratios = []
        for A in subs:
            t = tables.tables[A]
            src = t.src_ratio[:, None, None]
            r = np.empty(J.shape, dtype=object)
            for idx in zip(*np.nonzero(J != 0)):
                a, b = t.chan_ratio[idx], src[idx[0], 0, 0]
                r[idx] = None if a is None or b is None else a * b
            ratios.append(r)
        return [(n,) + _classes(J, ratios)]
    Jc = tables.J.reshape(tables.NX, tables.NY)
    chan = [tables.tables[A].chan_ratio.reshape(tables.NX, tables.NY) for A in subs]
    Pv = tables.Pv.reshape(tables.NV)
    src = [tables.tables[A].src_ratio for A in subs]
    return [(n,) + _classes(Pv, src), (m,) + _classes(Jc, chan)]


def _exact_states(length: int, probs: list, logs: np.ndarray, budget: int | None):
    J = len(probs)
    count = math.comb(length + J - 1, J - 1)
    check_budget(count, budget, "bound states")
    comps = _compositions(length, J)
    sums = comps @ logs if J else np.zeros((1, logs.shape[1]))
    den = math.lcm(*(p.denominator for p in probs))
    nums = [p.numerator * (den // p.denominator) for p in probs]
    fact = [math.factorial(k) for k in range(length + 1)]
    masses = []
    for c in comps.tolist():
        w = fact[length]
        for k in c:
            w //= fact[k]
        for a, k in zip(nums, c):
            if k:
                w *= a ** k
        masses.append(w)
    return sums, masses, den ** length


def lemma1_bound(spec: DecoderSpec, tables: LetterTables, n: int, m: int | None = None,
                 method: str = "auto", samples: int = 20000, rng: np.random.Generator | None = None,
                 budget: int | None = DEFAULT_BUDGET) -> DecodingBound:
    """Exact (or Monte Carlo) Pr{(V, X, Y) not in T} plus the union term."""
    m = n if m is None else m
    if tables.coupled and m != n:
        raise DimensionError("coupled tables need m == n")
    thr = tables.thresholds(spec, m)
    union = (2 ** tables.K - 1) * math.exp(-m * spec.gamma)
    parts = _parts(tables, n, m)
    states = 1
    for length, probs, _ in parts:
        states *= math.comb(length + len(probs) - 1, len(probs) - 1)
    if method == "auto":
        method = "exact" if budget is None or states <= budget else "mc"
    if method == "exact":
        check_budget(states, budget, "bound states")
        sums, masses, den = None, None, 1
        for length, probs, logs in parts:
            s2, m2, d2 = _exact_states(length, probs, logs, None)
            if sums is None:
                sums, masses = s2, m2
            else:
                sums = (sums[:, None, :] + s2[None, :, :]).reshape(-1, s2.shape[1])
                masses = [a * b for a in masses for b in m2]
            den *= d2
        typical = (sums > thr[None, :]).all(axis=1)
        bad = sum(w for w, ok in zip(masses, typical.tolist()) if not ok)
        exact = Fraction(bad, den)
        return DecodingBound(float(exact), exact, 0.0, union, "exact")
    if method != "mc":
        raise DomainError(f"unknown bound method {method!r}")
    if rng is None:
        raise DomainError("Monte Carlo bound needs an rng")
    total = np.zeros((samples, len(thr)))
    for length, probs, logs in parts:
        counts = rng.multinomial(length, [float(p) for p in probs], size=samples)
        total += counts @ logs
    bad = ~(total > thr[None, :]).all(axis=1)
    p = float(bad.mean())
    return DecodingBound(p, None, math.sqrt(max(p * (1 - p), 0.0) / samples), union, "mc")


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TerminalSpec:
    """How one terminal's encoder is built at blocklength n.

    ``target`` holds per-letter rows: one row means v-independent.  The code
    maps n source letters to ``m * l0`` codeword symbols with m = n * rate.
    """

    q: int
    target: tuple
    l0: int = 1
    ensemble: str = "rlc"
    density: Fraction | None = None
    matrix: LinearCode | None = None
    rate: Fraction = Fraction(1)

    def lengths(self, n: int) -> tuple:
        m = Fraction(n) * self.rate
        if m.denominator != 1:
            raise DimensionError(f"n={n} times rate {self.rate} is not an integer")
        return int(m), int(m) * self.l0

    def pmf(self, n: int) -> ConditionalPMF:
        m, _ = self.lengths(n)
        rows = [tuple(Fraction(p) for p in r) for r in self.target]
        if len(rows) == 1:
            return ConditionalPMF.independent(rows[0], self.q, n, m)
        return ConditionalPMF.per_symbol(rows, n)

    def build(self, n: int):
        m, l = self.lengths(n)
        if self.matrix is not None:
            if self.matrix.n != n or self.matrix.m != l:
                raise DimensionError(f"fixed code is {self.matrix.n}x{self.matrix.m}, need {n}x{l}")
            ens = CodeEnsemble.deterministic(self.matrix)
        elif self.ensemble == "rlc":
            ens = CodeEnsemble.rlc(self.q, n, l)
        elif self.ensemble == "sparse":
            ens = CodeEnsemble.sparse(self.q, n, l, self.density)
        else:
            raise DomainError(f"unknown ensemble {self.ensemble!r}")
        quant, _ = build_quantizer(self.pmf(n), self.l0, self.q, code_length=l)
        return ens, quant


@dataclass
class SimulationReport:
    n: int
    trials: int
    errors: int
    eps_hat: float
    typ_failures: dict
    bound: float
    seed: int
    map_errors: int | None = None
    ambiguous: int = 0
    bound_method: str = ""

    def __post_init__(self):
        if not 0 <= self.eps_hat <= 1:
            raise DomainError("error rate outside [0, 1]")


@dataclass
class SimulationConfig:
    source: SourceModel
    mac: MacModel
    terminals: tuple
    ns: tuple
    trials: int
    seed: int
    gamma_c: float = 0.5
    gamma_mode: str = "sqrt"
    decoder: str = "typicality"  # typicality | map | both
    randomization: str = "fresh"  # fresh | frozen
    bound: str = "auto"
    bound_samples: int = 20000

    def gamma(self, n: int) -> float:
        return gamma_schedule(n, self.gamma_c) if self.gamma_mode == "sqrt" else self.gamma_c

    def check(self):
        if len(self.terminals) != self.source.K or self.mac.K != self.source.K:
            raise DimensionError("configuration disagrees on the number of terminals")
        for i, ts in enumerate(self.terminals):
            if ts.q != self.source.alphabets[i]:
                raise DimensionError(f"terminal {i + 1} code alphabet differs from its source")
            width = len(ts.target[0])
            if width != self.mac.inputs[i]:
                raise DimensionError(f"terminal {i + 1} target is over {width} symbols, channel takes {self.mac.inputs[i]}")
        if self.decoder not in ("typicality", "map", "both"):
            raise DomainError(f"unknown decoder {self.decoder!r}")
        if self.randomization not in ("fresh", "frozen"):
            raise DomainError(f"unknown randomization mode {self.randomization!r}")
        if self.trials < 1:
            raise DomainError("trials must be positive")


def _draw_one(ens: CodeEnsemble, quant, rng: np.random.Generator) -> JsccEncoder:
    code = ens.sample(rng)
    return JsccEncoder(code, quant, randomize(code, rng))


def run_simulation(cfg: SimulationConfig, threads: int = 1,
                   budget: int | None = DEFAULT_BUDGET) -> list:
    """Monte Carlo estimate of the decoding error rate at each n.

    The seed is split per n and then per trial, so results do not depend on
    the thread count.
    """
    cfg.check()
    per_n = np.random.SeedSequence(cfg.seed).spawn(len(cfg.ns))
    reports = []
    for n, ss in zip(cfg.ns, per_n):
        built = [ts.build(n) for ts in cfg.terminals]
        m = built[0][1].m
        if any(q.m != m for _, q in built):
            raise DimensionError("terminals disagree on channel blocklength")
        pmfs = [q.realized_pmf() for _, q in built]
        tables = LetterTables(cfg.source, pmfs, cfg.mac, coupled=(m == n))
        spec = DecoderSpec(cfg.gamma(n))
        search = DecoderSearch(tables, n, budget)
        frozen_ss, bound_ss, trial_root = ss.spawn(3)
        frozen = None
        if cfg.randomization == "frozen":
            frng = make_rng(frozen_ss)
            frozen = tuple(_draw_one(ens, q, frng) for ens, q in built)
        trial_seeds = trial_root.spawn(cfg.trials)

        def trial(tss):
            rng = make_rng(tss)
            encs = frozen or tuple(_draw_one(ens, q, rng) for ens, q in built)
            V = cfg.source.sample(n, rng)
            X = [e.encode_array(V[i][None, :])[0] for i, e in enumerate(encs)]
            y = transmit(cfg.mac, X, rng)
            fails = true_scores(tables, V, X, y) <= tables.thresholds(spec, m)
            typ_err = map_err = None
            amb = False
            outer = search.outer_x(encs)
            if cfg.decoder in ("typicality", "both"):
                d = typicality_decode(spec, y, encs, tables, budget, search, outer)
                typ_err = any(not np.array_equal(a, b) for a, b in zip(d.v, V))
                amb = d.ambiguous
            if cfg.decoder in ("map", "both"):
                d = map_decode(y, encs, tables, budget, search, outer)
                map_err = any(not np.array_equal(a, b) for a, b in zip(d.v, V))
            return typ_err, map_err, fails, amb

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(trial, trial_seeds))
        else:
            results = [trial(t) for t in trial_seeds]
        typ_failures = {A: 0 for A in tables.subsets}
        errors = map_errors = ambiguous = 0
        for typ_err, map_err, fails, amb in results:
            for A, f in zip(tables.subsets, fails):
                typ_failures[A] += bool(f)
            ambiguous += amb
            if typ_err is not None:
                errors += typ_err
            if map_err is not None:
                map_errors += map_err
        if cfg.decoder == "map":
            errors, map_errors = map_errors, map_errors
        bound = lemma1_bound(spec, tables, n, m, cfg.bound, cfg.bound_samples, make_rng(bound_ss), budget)
        reports.append(SimulationReport(
            n, cfg.trials, int(errors), errors / cfg.trials, typ_failures, bound.value, cfg.seed,
            int(map_errors) if cfg.decoder != "typicality" else None, int(ambiguous), bound.method,
        ))
    return reports


REPORT_COLUMNS = ("n", "trials", "errors", "eps_hat", "bound", "seed")


def report_csv(reports) -> str:
    extra = []
    if reports:
        extra = [f"typ_fail_{''.join(str(i + 1) for i in A)}" for A in reports[0].typ_failures]
    buf = io.StringIO()
    buf.write(",".join(REPORT_COLUMNS + ("map_errors", "ambiguous", "bound_method") + tuple(extra)) + "\n")
    for r in reports:
        cells = [r.n, r.trials, r.errors, repr(r.eps_hat), repr(r.bound), r.seed,
                 "" if r.map_errors is None else r.map_errors, r.ambiguous, r.bound_method]
        cells += list(r.typ_failures.values())
        buf.write(",".join(str(c) for c in cells) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Configuration files
# ---------------------------------------------------------------------------


def _pmf_entries(text: str) -> list:
    """'00 15/32; 01 1/32' -> [((0, 0), 15/32), ((0, 1), 1/32)]."""
    out = []
    for chunk in text.replace("\n", ";").split(";"):
        toks = chunk.split()
        if not toks:
            continue
        if len(toks) != 2:
            raise ParseError(f"bad pmf entry {chunk.strip()!r}")
        sym = tuple(int(c) for c in toks[0].split(",")) if "," in toks[0] else tuple(int(c) for c in toks[0])
        out.append((sym, _frac(toks[1])))
    return out


PRESET_CHANNELS = {
    "adder": lambda inputs: MacModel.adder(len(inputs), inputs[0]),
    "identity": lambda inputs: MacModel.identity(inputs[0]),
    "pair": lambda inputs: MacModel.from_function(lambda *x: int(np.ravel_multi_index(x, inputs)), inputs, math.prod(inputs)),
    "first": lambda inputs: MacModel.from_function(lambda *x: x[0], inputs, inputs[0]),
}


def parse_config(text: str, base: Path | None = None) -> SimulationConfig:
    """Read an INI-style simulation config (see README for the keys)."""
    base = Path(base or ".")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
        src = cp["source"]
        alph = tuple(int(a) for a in src["alphabets"].split())
        source = SourceModel(alph, dict(_pmf_entries(src["pmf"])))
        ch = cp["channel"]
        inputs = tuple(int(a) for a in ch.get("inputs", " ".join(map(str, alph))).split())
        if "preset" in ch:
            if ch["preset"] not in PRESET_CHANNELS:
                raise ParseError(f"unknown channel preset {ch['preset']!r}")
            mac = PRESET_CHANNELS[ch["preset"]](inputs)
        else:
            outputs = int(ch["outputs"])
            W = {}
            for chunk in ch["table"].replace("\n", ";").split(";"):
                toks = chunk.split()
                if not toks:
                    continue
                if len(toks) != 3:
                    raise ParseError(f"bad channel entry {chunk.strip()!r}")
                x = tuple(int(c) for c in toks[0])
                W.setdefault(x, [Fraction(0)] * outputs)[int(toks[1])] += _frac(toks[2])
            mac = MacModel(inputs, outputs, W)
        terminals = []
        for i in range(source.K):
            sec = cp[f"terminal{i + 1}"] if cp.has_section(f"terminal{i + 1}") else {}
            q = alph[i]
            if "target" in sec:
                pmf, _ = parse_target((base / sec["target"]).read_text())
                target = pmf.rows
            else:
                target = ((Fraction(1, inputs[i]),) * inputs[i],)
            matrix = LinearCode(read_matrix(base / sec["matrix"])) if "matrix" in sec else None
            terminals.append(TerminalSpec(
                q, target, int(sec.get("l0", 1)), sec.get("ensemble", "rlc"),
                _frac(sec["density"]) if "density" in sec else None, matrix,
                _frac(sec.get("rate", "1")),
            ))
        run = cp["run"]
        cfg = SimulationConfig(
            source, mac, tuple(terminals),
            tuple(int(n) for n in run["n"].split()),
            int(run["trials"]), int(run["seed"]),
            float(run.get("gamma", 0.5)), run.get("gamma_mode", "sqrt"),
            run.get("decoder", "typicality"), run.get("randomization", "fresh"),
            run.get("bound", "auto"), int(run.get("bound_samples", 20000)),
        )
    except KeyError as exc:
        raise ParseError(f"missing config key or section {exc}") from None
    except (ValueError, configparser.Error, ZeroDivisionError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from None
    cfg.check()
    return cfg


# ---------------------------------------------------------------------------
# Input distribution search
# ---------------------------------------------------------------------------


def simplex_grid(k: int, resolution: int) -> list:
    """All distributions over k symbols with denominators dividing ``resolution``."""
    return [tuple(Fraction(c, resolution) for c in comp) for comp in _compositions(resolution, k).tolist()]


@dataclass
class GridResult:
    pmfs: tuple
    quantities: InfoQuantities
    evaluated: int


def grid_search_pmf(source: SourceModel, mac: MacModel, N: int = 1, resolution: int = 4,
                    v_independent: bool = True, budget: int | None = DEFAULT_BUDGET) -> GridResult:
    """Per-symbol encoder pmfs maximizing the smallest subset margin.

    Ties keep the first point in grid order.
    """
    if resolution < 1:
        raise DomainError("empty grid")
    per_terminal = []
    for i in range(source.K):
        grid = simplex_grid(mac.inputs[i], resolution)
        if v_independent:
            options = [ConditionalPMF.independent(g, source.alphabets[i], N, N) for g in grid]
        else:
            options = [ConditionalPMF.per_symbol(rows, N, mac.inputs[i])
                       for rows in product(grid, repeat=source.alphabets[i])]
        per_terminal.append(options)
    check_budget(math.prod(len(o) for o in per_terminal), budget, "grid points")
    best, best_q, count = None, None, 0
    for combo in product(*per_terminal):
        if N > 1:
            combo = tuple(_blockify(p, N) for p in combo)
        q = single_letter_quantities(source, combo, mac, N, budget=budget)
        count += 1
        if best_q is None or q.min_margin > best_q.min_margin + 1e-12:
            best, best_q = combo, q
    if best is None:
        raise DomainError("empty grid")
    return GridResult(best, best_q, count)


def _blockify(p: ConditionalPMF, N: int) -> ConditionalPMF:
    """Full N-block table of a per-symbol pmf."""
    table = {}
    for v in product(range(p.qV), repeat=N):
        table[v] = p.dist(v)
    return ConditionalPMF.full(table, p.qV, N, p.qX, N)
