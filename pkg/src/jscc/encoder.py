"""Joint source-channel encoders built from a linear code and a quantizer.

The encoder maps a source word v to the channel word

    Phi(v) = quant(v, F_hat(v))

where F_hat is the code composed with random interleavers and a random
offset, and the quantizer assigns each (v, u) slot to a channel word so that
slot counts realize a target conditional pmf P(x | v).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .algebra import (
    DEFAULT_BUDGET,
    DimensionError,
    DomainError,
    ParseError,
    Perm,
    Seq,
    all_sequences,
    as_alphabet,
    check_budget,
    format_matrix,
    format_symbols,
    parse_matrix,
    parse_symbols,
    sequence_index,
)
from .codes import (
    AlphaTable,
    CodeEnsemble,
    LinearCode,
    RandomizedAffineCode,
    alpha_table,
    randomize,
    realization_tables,
)
from .spectra import TypeIndexer, all_types


# ---------------------------------------------------------------------------
# Conditional pmfs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionalPMF:
    """P(x | v) for v in V^n and x in X^m.

    Factorized form: ``rows[a]`` is the per-letter law of x_i given v_i = a
    (m == n), or, when ``v_independent`` is set, ``rows[0]`` is a single law
    used for every output letter regardless of v.  Full form: ``table`` maps
    each v tuple to a dict from x tuples to probabilities.
    """

    qV: int
    n: int
    qX: int
    m: int
    rows: tuple = ()
    table: dict | None = None
    v_independent: bool = False

    def __post_init__(self):
        as_alphabet(self.qV)
        as_alphabet(self.qX)
        if self.table is None:
            rows = tuple(tuple(Fraction(p) for p in r) for r in self.rows)
            expected = 1 if self.v_independent else self.qV
            if len(rows) != expected:
                raise DimensionError(f"need {expected} per-letter rows, got {len(rows)}")
            for r in rows:
                if len(r) != self.qX or sum(r) != 1 or any(p < 0 for p in r):
                    raise DomainError(f"per-letter row {r} is not a distribution over {self.qX} symbols")
            if not self.v_independent and self.m != self.n:
                raise DimensionError("v-dependent per-letter pmf needs m == n")
            object.__setattr__(self, "rows", rows)
        else:
            for v, dist in self.table.items():
                if len(v) != self.n:
                    raise DimensionError("table key has the wrong length")
                total = sum(dist.values(), Fraction(0))
                if total != 1:
                    raise DomainError(f"P(.|{v}) sums to {total}")
                for x in dist:
                    if len(x) != self.m:
                        raise DimensionError("table output has the wrong length")
            if len(self.table) != self.qV ** self.n:
                raise DomainError("full table must define every v")

    @classmethod
    def per_symbol(cls, rows, n: int, qX: int | None = None) -> "ConditionalPMF":
        rows = [list(r) for r in rows]
        return cls(len(rows), n, qX or len(rows[0]), n, rows=tuple(map(tuple, rows)))

    @classmethod
    def independent(cls, dist, qV: int, n: int, m: int) -> "ConditionalPMF":
        return cls(qV, n, len(dist), m, rows=(tuple(dist),), v_independent=True)

    @classmethod
    def full(cls, table: dict, qV: int, n: int, qX: int, m: int) -> "ConditionalPMF":
        t = {tuple(v): {tuple(x): Fraction(p) for x, p in d.items()} for v, d in table.items()}
        return cls(qV, n, qX, m, table=t)

    @property
    def factorized(self) -> bool:
        return self.table is None

    def letter_row(self, a: int) -> tuple:
        return self.rows[0] if self.v_independent else self.rows[a]

    def prob(self, v, x) -> Fraction:
        v, x = tuple(v), tuple(x)
        if self.table is not None:
            return self.table[v].get(x, Fraction(0))
        p = Fraction(1)
        for i, xi in enumerate(x):
            p *= self.letter_row(0 if self.v_independent else v[i])[xi]
        return p

    def dist(self, v) -> dict:
        """Full output law of one v as {x tuple: probability}."""
        v = tuple(v)
        if self.table is not None:
            return dict(self.table[v])
        out = {}
        for x in product(range(self.qX), repeat=self.m):
            p = self.prob(v, x)
            if p:
                out[x] = p
        return out


def apportion(probs, slots: int) -> list:
    """Largest-remainder apportionment of ``slots`` to ``probs``.

    Ties in the remainder go to the earlier index.
    """
    quotas = [Fraction(p) * slots for p in probs]
    base = [q.numerator // q.denominator for q in quotas]
    left = slots - sum(base)
    order = sorted(range(len(probs)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:left]:
        base[i] += 1
    return base


def slot_assignment(probs, slots: int) -> np.ndarray:
    """Output symbol of each slot: contiguous runs in output order."""
    counts = apportion(probs, slots)
    return np.repeat(np.arange(len(probs)), counts)


# ---------------------------------------------------------------------------
# Quantizers
# ---------------------------------------------------------------------------


@dataclass
class QuantizerReport:
    """Exact fidelity of a quantizer against its target."""

    abs_error: dict  # (v key, x key) -> |realized - target|
    tv: dict  # v key -> total variation
    starved: list  # (v key, x key) with target > 0 but no slot

    @property
    def max_tv(self) -> Fraction:
        return max(self.tv.values(), default=Fraction(0))


class BlockQuantizer:
    """Blockwise symbol quantizer.

    Output letter i is read from the slot index of u[i*l0:(i+1)*l0] through
    ``tables[v_i]`` (or ``tables[0]`` when v-independent).  Only the first
    m*l0 coordinates of u are read; the rest of the length-l codeword is
    discarded.
    """

    def __init__(self, qV: int, n: int, qU: int, qX: int, m: int, l0: int,
                 tables, v_independent: bool, l: int | None = None):
        self.qV, self.n, self.qU, self.qX, self.m, self.l0 = qV, n, qU, qX, m, l0
        self.v_independent = v_independent
        self.tables = np.array(tables, dtype=np.int64).reshape(len(tables), qU ** l0)
        self.l = m * l0 if l is None else l
        if self.l < m * l0:
            raise DimensionError(f"codeword length {self.l} < m*l0 = {m * l0}")
        if not v_independent and m != n:
            raise DimensionError("v-dependent block quantizer needs m == n")
        self._powers = qU ** np.arange(l0 - 1, -1, -1, dtype=np.int64)

    def apply_array(self, V: np.ndarray, U: np.ndarray) -> np.ndarray:
        U = np.asarray(U)
        blocks = U[..., : self.m * self.l0].reshape(U.shape[:-1] + (self.m, self.l0))
        slots = blocks @ self._powers
        if self.v_independent:
            return self.tables[0][slots]
        return self.tables[np.asarray(V), slots]

    def __call__(self, v: Seq, u: Seq) -> Seq:
        x = self.apply_array(v.to_array()[None, :], u.to_array()[None, :])[0]
        return Seq.of(x, self.qX)

    def slot_counts(self, a: int) -> np.ndarray:
        return np.bincount(self.tables[0 if self.v_independent else a], minlength=self.qX)

    def realized_pmf(self) -> ConditionalPMF:
        total = self.qU ** self.l0
        rows = [tuple(Fraction(int(c), total) for c in self.slot_counts(a))
                for a in range(1 if self.v_independent else self.qV)]
        return ConditionalPMF(self.qV, self.n, self.qX, self.m, rows=tuple(rows),
                              v_independent=self.v_independent)

    def assignment(self, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
        """x index for every (v index, u index); shape (qV^n, qU^l)."""
        check_budget(self.qV ** self.n * self.qU ** self.l, budget, "quantizer slots")
        V = all_sequences(self.n, self.qV, None)
        U = all_sequences(self.l, self.qU, None)
        shape = (len(V), len(U))
        X = self.apply_array(np.broadcast_to(V[:, None, :], shape + (self.n,)),
                             np.broadcast_to(U[None, :, :], shape + (self.l,)))
        return sequence_index(X, self.qX)

    def preimage(self, v: Seq, x: Seq) -> np.ndarray:
        """All u in U^l with quant(v, u) == x, as rows."""
        U = all_sequences(self.l, self.qU)
        X = self.apply_array(np.broadcast_to(v.to_array(), (len(U), self.n)), U)
        return U[(X == x.to_array()).all(axis=1)]


class TableQuantizer:
    """Full-table quantizer: one slot partition of U^l per source word."""

    def __init__(self, qV: int, n: int, qU: int, l: int, qX: int, m: int, assign: np.ndarray):
        self.qV, self.n, self.qU, self.l, self.qX, self.m = qV, n, qU, l, qX, m
        self._assign = np.asarray(assign, dtype=np.int64)
        if self._assign.shape != (qV ** n, qU ** l):
            raise DimensionError("assignment table has the wrong shape")
        self._X = all_sequences(m, qX, None)

    def assignment(self, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
        return self._assign

    def apply_array(self, V: np.ndarray, U: np.ndarray) -> np.ndarray:
        vi = sequence_index(V, self.qV)
        ui = sequence_index(U, self.qU)
        return self._X[self._assign[vi, ui]]

    def __call__(self, v: Seq, u: Seq) -> Seq:
        return Seq.of(self.apply_array(v.to_array()[None, :], u.to_array()[None, :])[0], self.qX)

    def realized_pmf(self) -> ConditionalPMF:
        total = self.qU ** self.l
        table = {}
        V = all_sequences(self.n, self.qV, None)
        for vi, v in enumerate(V):
            counts = np.bincount(self._assign[vi], minlength=self.qX ** self.m)
            table[tuple(int(s) for s in v)] = {
                tuple(int(s) for s in self._X[xi]): Fraction(int(c), total)
                for xi, c in enumerate(counts) if c
            }
        return ConditionalPMF.full(table, self.qV, self.n, self.qX, self.m)

    def preimage(self, v: Seq, x: Seq) -> np.ndarray:
        vi = int(sequence_index(v.to_array(), self.qV))
        xi = int(sequence_index(x.to_array(), self.qX))
        U = all_sequences(self.l, self.qU)
        return U[self._assign[vi] == xi]


def _report(pairs) -> QuantizerReport:
    abs_error, tv, starved = {}, {}, []
    for vkey, target, realized in pairs:
        total = Fraction(0)
        for xkey in sorted(set(target) | set(realized)):
            t, r = target.get(xkey, Fraction(0)), realized.get(xkey, Fraction(0))
            abs_error[(vkey, xkey)] = abs(r - t)
            total += abs(r - t)
            if t > 0 and r == 0:
                starved.append((vkey, xkey))
        tv[vkey] = total / 2
    return QuantizerReport(abs_error, tv, starved)


def build_quantizer(target: ConditionalPMF, l: int, qU: int | None = None,
                    code_length: int | None = None):
    """Quantizer realizing ``target`` by lexicographic largest-remainder slots.

    For a factorized target ``l`` is the per-letter block size; the quantizer
    reads m*l blocks from a codeword of length ``code_length`` (default m*l).
    For a full-table target ``l`` is the codeword length itself.  Returns the
    quantizer and its exact fidelity report.
    """
    if l < 1:
        raise DomainError("l must be at least 1")
    qU = qU or target.qV
    if target.factorized:
        slots = qU ** l
        levels = 1 if target.v_independent else target.qV
        tables = [slot_assignment(target.rows[a], slots) for a in range(levels)]
        quant = BlockQuantizer(target.qV, target.n, qU, target.qX, target.m, l, tables,
                               target.v_independent, code_length)
        realized = quant.realized_pmf()
        pairs = []
        for a in range(levels):
            t = {(x,): p for x, p in enumerate(target.rows[a])}
            r = {(x,): p for x, p in enumerate(realized.rows[a])}
            pairs.append(((a,), t, r))
        return quant, _report(pairs)
    slots = qU ** l
    V = all_sequences(target.n, target.qV)
    X = all_sequences(target.m, target.qX)
    xkeys = [tuple(int(s) for s in x) for x in X]
    assign = []
    for v in V:
        dist = target.table[tuple(int(s) for s in v)]
        assign.append(slot_assignment([dist.get(x, Fraction(0)) for x in xkeys], slots))
    quant = TableQuantizer(target.qV, target.n, qU, l, target.qX, target.m, np.array(assign))
    realized = quant.realized_pmf()
    pairs = [(v, target.table[v], realized.table[v]) for v in target.table]
    return quant, _report(pairs)


def smallest_block_size(dist, qU: int, tol=0, max_l0: int = 12) -> int:
    """Smallest l0 whose qU^l0 slots realize ``dist`` within TV ``tol``."""
    for l0 in range(1, max_l0 + 1):
        slots = qU ** l0
        counts = apportion(dist, slots)
        tv = sum(abs(Fraction(c, slots) - Fraction(p)) for c, p in zip(counts, dist)) / 2
        if tv <= tol and all(c > 0 for c, p in zip(counts, dist) if p > 0):
            return l0
    raise DomainError(f"no block size up to {max_l0} realizes {list(dist)} within {tol}")


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JsccEncoder:
    """A sample encoder: code, quantizer and one frozen randomization."""

    code: LinearCode
    quantizer: object
    randomization: RandomizedAffineCode

    def __post_init__(self):
        qz = self.quantizer
        if self.code.n != qz.n or self.code.m != qz.l or self.code.q != qz.qU or self.code.q != qz.qV:
            raise DimensionError("code and quantizer dimensions do not match")
        if self.randomization.base != self.code:
            raise DomainError("randomization belongs to a different code")

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def m(self) -> int:
        return self.quantizer.m

    def encode(self, v: Seq) -> Seq:
        if len(v) != self.n:
            raise DimensionError("source word length mismatch")
        return Seq.of(self.encode_array(v.to_array()[None, :])[0], self.quantizer.qX)

    def encode_array(self, V: np.ndarray) -> np.ndarray:
        return self.quantizer.apply_array(V, self.randomization.evaluate_array(V))


def draw_encoder(code: LinearCode, quantizer, rng: np.random.Generator) -> JsccEncoder:
    return JsccEncoder(code, quantizer, randomize(code, rng))


def encode_jscc(enc: JsccEncoder, v: Seq) -> Seq:
    return enc.encode(v)


def build_punctured_encoder(code: LinearCode, per_symbol_target, m: int,
                            rng: np.random.Generator, tol=0, max_l0: int = 12) -> JsccEncoder:
    """Encoder whose output letters are symbol-quantized blocks of F_hat(v)."""
    dist = [Fraction(p) for p in per_symbol_target]
    l0 = smallest_block_size(dist, code.q, tol, max_l0)
    if m * l0 > code.m:
        raise DimensionError(f"codeword length {code.m} too short for m={m} blocks of {l0}")
    target = ConditionalPMF.independent(dist, code.q, code.n, m)
    quant, _ = build_quantizer(target, l0, code.q, code_length=code.m)
    return draw_encoder(code, quant, rng)


# ---------------------------------------------------------------------------
# Pairwise functionals
# ---------------------------------------------------------------------------


def _table(ens: CodeEnsemble | AlphaTable) -> AlphaTable:
    return ens if isinstance(ens, AlphaTable) else alpha_table(ens)


def _as_seq(s, q: int) -> Seq:
    return s if isinstance(s, Seq) else Seq.of(s, q)


def beta(ens: CodeEnsemble | AlphaTable, quantizer, v, v_hat, x, x_hat) -> Fraction:
    """Average of alpha(type(v_hat - v), type(u_hat - u)) over the two preimages."""
    table = _table(ens)
    qV, qU, qX = quantizer.qV, quantizer.qU, quantizer.qX
    v, v_hat = _as_seq(v, qV), _as_seq(v_hat, qV)
    x, x_hat = _as_seq(x, qX), _as_seq(x_hat, qX)
    if v == v_hat:
        raise DomainError("beta needs v != v_hat")
    U = quantizer.preimage(v, x)
    Uh = quantizer.preimage(v_hat, x_hat)
    if len(U) == 0 or len(Uh) == 0:
        raise DomainError("empty quantizer preimage")
    tin = TypeIndexer(quantizer.n, qV)
    tout = TypeIndexer(quantizer.l, qU)
    P = tin.types[int(tin.index_of_rows((v_hat.to_array() - v.to_array()) % qV))]
    diffs = (Uh[None, :, :] - U[:, None, :]) % qU
    hist = np.bincount(tout.index_of_rows(diffs).ravel(), minlength=len(tout))
    total = sum(int(c) * Fraction(table(P, tout.types[t])) for t, c in enumerate(hist) if c)
    return total / (len(U) * len(Uh))


def _beta_prime_from_preimage(table: AlphaTable, Uh: np.ndarray, n: int, qV: int,
                              l: int, qU: int) -> Fraction:
    tout = TypeIndexer(l, qU)
    U = all_sequences(l, qU)
    diffs = (Uh[None, :, :] - U[:, None, :]) % qU
    idx = tout.index_of_rows(diffs)  # (|U|, |Uh|)
    hists = np.stack([np.bincount(r, minlength=len(tout)) for r in idx])
    hists = np.unique(hists, axis=0)
    best = Fraction(0)
    for P in all_types(n, qV):
        if P.is_zero():
            continue
        row = [Fraction(table(P, Q)) for Q in tout.types]
        for h in hists:
            val = sum(int(c) * row[t] for t, c in enumerate(h) if c)
            if val > best:
                best = val
    return best / len(Uh)


def beta_prime(ens: CodeEnsemble | AlphaTable, quantizer, v_hat, x_hat) -> Fraction:
    """max over P != 0 and u of the preimage average of alpha(P, type(u_hat - u))."""
    table = _table(ens)
    v_hat, x_hat = _as_seq(v_hat, quantizer.qV), _as_seq(x_hat, quantizer.qX)
    Uh = quantizer.preimage(v_hat, x_hat)
    if len(Uh) == 0:
        raise DomainError("empty quantizer preimage")
    return _beta_prime_from_preimage(table, Uh, quantizer.n, quantizer.qV, quantizer.l, quantizer.qU)


def rho(ens: CodeEnsemble | AlphaTable, quantizer) -> float:
    """(1/n) ln of the largest beta_prime over all reachable (v_hat, x_hat)."""
    table = _table(ens)
    assign = quantizer.assignment()
    U = all_sequences(quantizer.l, quantizer.qU)
    best = Fraction(0)
    seen = set()
    for vi in range(assign.shape[0]):
        for xi in np.unique(assign[vi]):
            pre = assign[vi] == xi
            key = pre.tobytes()
            if key in seen:
                continue
            seen.add(key)
            b = _beta_prime_from_preimage(table, U[pre], quantizer.n, quantizer.qV,
                                          quantizer.l, quantizer.qU)
            best = max(best, b)
    return (math.log(best.numerator) - math.log(best.denominator)) / quantizer.n


# ---------------------------------------------------------------------------
# Exact encoder laws
# ---------------------------------------------------------------------------


@dataclass
class EncoderLaw:
    """Law of a random encoder as weighted deterministic tables.

    ``rows[r, v]`` is the output index of source word v (lexicographic
    index) under realization r, drawn with probability ``weights[r]``.
    """

    n: int
    qV: int
    rows: np.ndarray
    weights: list

    def marginal(self, v: int) -> dict:
        out: dict = {}
        for r, w in zip(self.rows[:, v], self.weights):
            out[int(r)] = out.get(int(r), Fraction(0)) + w
        return out

    def pair(self, v: int, v_hat: int) -> dict:
        out: dict = {}
        for a, b, w in zip(self.rows[:, v], self.rows[:, v_hat], self.weights):
            k = (int(a), int(b))
            out[k] = out.get(k, Fraction(0)) + w
        return out


def jscc_encoder_law(ens: CodeEnsemble, quantizer, budget: int | None = DEFAULT_BUDGET) -> EncoderLaw:
    """Enumerate every code member, interleaver pair and offset."""
    n, l, q = ens.n, ens.m, ens.q
    if quantizer.n != n or quantizer.l != l or quantizer.qU != q:
        raise DimensionError("quantizer does not fit the ensemble's code dimensions")
    per_member = math.factorial(n) * math.factorial(l) * q ** l
    check_budget(ens.size * per_member, budget, "encoder realizations")
    V = all_sequences(n, q, None)
    assign = quantizer.assignment()
    rows, weights = [], []
    for mats, keys in ens.batches(budget):
        cw = sequence_index(np.einsum("xi,bij->bxj", V, mats) % q, q)
        for b in range(len(mats)):
            R = realization_tables(cw[b:b + 1], n, l, q)
            rows.append(assign[np.arange(len(V))[None, :], R])
            weights += [ens.weight_of(int(keys[b])) / per_member] * len(R)
    return _merged(EncoderLaw(n, q, np.concatenate(rows), weights))


def _merged(law: EncoderLaw) -> EncoderLaw:
    """Collapse identical realization rows, summing their weights."""
    uniq, inv = np.unique(law.rows, axis=0, return_inverse=True)
    acc = [Fraction(0)] * len(uniq)
    for i, w in zip(inv.ravel(), law.weights):
        acc[i] += w
    return EncoderLaw(law.n, law.qV, uniq, acc)


def independent_encoder_law(pmf: ConditionalPMF, budget: int | None = DEFAULT_BUDGET) -> EncoderLaw:
    """Each Phi(v) drawn independently from P(. | v)."""
    V = [tuple(int(s) for s in v) for v in all_sequences(pmf.n, pmf.qV)]
    supports = []
    for v in V:
        d = pmf.dist(v)
        supports.append([(int(sequence_index(np.array(x), pmf.qX)), p) for x, p in sorted(d.items())])
    total = math.prod(len(s) for s in supports)
    check_budget(total, budget, "independent encoder realizations")
    rows, weights = [], []
    for combo in product(*supports):
        rows.append([c[0] for c in combo])
        weights.append(math.prod((c[1] for c in combo), start=Fraction(1)))
    return EncoderLaw(pmf.n, pmf.qV, np.array(rows, dtype=np.int64), weights)


def rho_function(law: EncoderLaw) -> dict:
    """Pairwise dependence exponent for every reachable (v_hat, x_hat).

    max over v != v_hat and reachable x of
    (1/n) ln Pr{Phi(v_hat)=x_hat | Phi(v)=x} / Pr{Phi(v_hat)=x_hat}.
    """
    nv = law.rows.shape[1]
    margs = [law.marginal(v) for v in range(nv)]
    out = {}
    for vh in range(nv):
        for v in range(nv):
            if v == vh:
                continue
            for (x, xh), p in law.pair(v, vh).items():
                ratio = p / (margs[v][x] * margs[vh][xh])
                val = (math.log(ratio.numerator) - math.log(ratio.denominator)) / law.n
                key = (vh, xh)
                if key not in out or val > out[key]:
                    out[key] = val
    return out


def rho_max(law: EncoderLaw, subset_size: int = 1) -> float:
    """Largest pairwise exponent; independent identical terminals add up."""
    vals = rho_function(law).values()
    return subset_size * max(vals, default=0.0)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def parse_target(text: str):
    """Parse a target pmf file; returns (ConditionalPMF, l or None)."""
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParseError("empty target file", 1)
    lineno, head = lines[0]
    if len(head) not in (4, 5):
        raise ParseError("header must be 'qV n qX m [l]'", lineno)
    try:
        nums = [int(t) for t in head]
    except ValueError:
        raise ParseError("header must hold integers", lineno) from None
    qV, n, qX, m = nums[:4]
    l = nums[4] if len(nums) == 5 else None
    try:
        as_alphabet(qV)
        as_alphabet(qX)
    except DomainError as exc:
        raise ParseError(str(exc), lineno) from None
    body = lines[1:]
    if not body:
        raise ParseError("no pmf rows", lineno)
    width = len(body[0][1])
    try:
        if width == 3:
            dist = [Fraction(0)] * qX
            for ln, toks in body:
                if len(toks) != 3:
                    raise ParseError("expected 'x num den'", ln)
                dist[int(toks[0])] += Fraction(int(toks[1]), int(toks[2]))
            return ConditionalPMF.independent(dist, qV, n, m), l
        if width != 4:
            raise ParseError("rows must have 3 or 4 fields", body[0][0])
        full = n > 1 or m > 1
        if full and len(parse_symbols(body[0][1][0], qV)) == 1 and n > 1:
            full = False
        if not full:
            rows = [[Fraction(0)] * qX for _ in range(qV)]
            for ln, toks in body:
                if len(toks) != 4:
                    raise ParseError("expected 'v x num den'", ln)
                rows[int(toks[0])][int(toks[1])] += Fraction(int(toks[2]), int(toks[3]))
            return ConditionalPMF.per_symbol(rows, n, qX), l
        table: dict = {}
        for ln, toks in body:
            if len(toks) != 4:
                raise ParseError("expected 'v_seq x_seq num den'", ln)
            v, x = parse_symbols(toks[0], qV), parse_symbols(toks[1], qX)
            if len(v) != n or len(x) != m:
                raise ParseError("sequence length does not match header", ln)
            d = table.setdefault(v, {})
            d[x] = d.get(x, Fraction(0)) + Fraction(int(toks[2]), int(toks[3]))
        return ConditionalPMF.full(table, qV, n, qX, m), l
    except ParseError:
        raise
    except (ValueError, IndexError, ZeroDivisionError, DomainError, DimensionError) as exc:
        raise ParseError(str(exc)) from None


def format_encoder(enc: JsccEncoder) -> str:
    """Matrix file, then outer and inner permutation images, then the offset."""
    rc = enc.randomization
    lines = [format_matrix(enc.code.generator).rstrip("\n")]
    lines.append(" ".join(str(i) for i in rc.outer.image))
    lines.append(" ".join(str(i) for i in rc.inner.image))
    lines.append(" ".join(str(s) for s in rc.offset.symbols))
    return "\n".join(lines) + "\n"


def parse_encoder(text: str) -> RandomizedAffineCode:
    lines = text.splitlines()
    content = [i for i, ln in enumerate(lines) if ln.strip()]
    if len(content) < 4:
        raise ParseError("encoder file too short", len(lines) + 1)
    head = lines[content[0]].split()
    try:
        n = int(head[1])
    except (IndexError, ValueError):
        raise ParseError("bad matrix header", content[0] + 1) from None
    if len(content) != n + 4:
        raise ParseError(f"expected {n + 4} non-empty lines", len(lines))
    code = LinearCode(parse_matrix("\n".join(lines[i] for i in content[: n + 1])))
    try:
        outer = Perm(tuple(int(t) for t in lines[content[n + 1]].split()))
        inner = Perm(tuple(int(t) for t in lines[content[n + 2]].split()))
        offset = Seq.of((int(t) for t in lines[content[n + 3]].split()), code.q)
        return RandomizedAffineCode(code, outer, inner, offset)
    except (ValueError, DomainError, DimensionError) as exc:
        raise ParseError(str(exc)) from None


def describe_quantizer(quant, report: QuantizerReport) -> str:
    """Human-readable slot allocation and fidelity."""
    lines = []
    if isinstance(quant, BlockQuantizer):
        levels = 1 if quant.v_independent else quant.qV
        slots = all_sequences(quant.l0, quant.qU)
        for a in range(levels):
            tag = "any v" if quant.v_independent else f"v={a}"
            for x in range(quant.qX):
                members = [format_symbols(s, quant.qU) for s, t in zip(slots, quant.tables[a]) if t == x]
                lines.append(f"{tag} x={x}: {{{','.join(members)}}}")
    else:
        assign = quant.assignment()
        V = all_sequences(quant.n, quant.qV)
        X = all_sequences(quant.m, quant.qX)
        for vi, v in enumerate(V):
            counts = np.bincount(assign[vi], minlength=len(X))
            cells = [f"{format_symbols(X[xi], quant.qX)}:{c}" for xi, c in enumerate(counts) if c]
            lines.append(f"v={format_symbols(v, quant.qV)} " + " ".join(cells))
    lines.append(f"max TV error {report.max_tv}")
    for vkey, tv in sorted(report.tv.items()):
        lines.append(f"tv[{format_symbols(vkey, quant.qV)}] = {tv}")
    for vkey, xkey in report.starved:
        lines.append(f"warning: output {format_symbols(xkey, quant.qX)} starved at v={format_symbols(vkey, quant.qV)}")
    return "\n".join(lines) + "\n"
