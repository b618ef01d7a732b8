"""Structural diagnostics for linear codes: entropy distance, GV, density.

Asymptotic statements are checked as finite-n trends or floors.  Slacks and
floors are explicit arguments so a report always says what was compared.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import DEFAULT_BUDGET, DomainError, Matrix, all_sequences
from .codes import (
    CodeEnsemble,
    LinearCode,
    alpha_table,
    goodness_delta,
    log_fraction,
    output_symbol_law,
)
from .spectra import TypeVector, all_types, type_class_size

ENT_TOL = 1e-12


def entropy(P: TypeVector) -> float:
    """Shannon entropy of a type in nats (0 ln 0 = 0)."""
    n = P.n
    if n == 0:
        return 0.0
    return -sum(c / n * math.log(c / n) for c in P.counts if c)


def _row_entropies(counts: np.ndarray) -> np.ndarray:
    """Entropies of many count vectors at once."""
    n = counts.sum(axis=1, keepdims=True)
    p = counts / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(counts > 0, -p * np.log(p), 0.0)
    return terms.sum(axis=1)


def _counts(rows: np.ndarray, q: int) -> np.ndarray:
    return np.stack([(rows == a).sum(axis=1) for a in range(q)], axis=1)


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


# ---------------------------------------------------------------------------
# The B set
# ---------------------------------------------------------------------------


def b_set_size(obj: LinearCode | CodeEnsemble, hX: float, hY: float,
               budget: int | None = DEFAULT_BUDGET):
    """|B(F, hX, hY)| for a code, or its expectation for an ensemble.

    B holds the pairs (x, F(x)) with x != 0, H(P_x) <= hX and H(P_F(x)) <= hY.
    Ensembles with i.i.d. entries use the exact per-input output law, so no
    enumeration over members is needed; explicit ensembles are averaged.
    """
    if isinstance(obj, LinearCode):
        n, q = obj.n, obj.q
        X = all_sequences(n, q, budget)[1:]
        Y = obj.encode_array(X)
        okx = _row_entropies(_counts(X, q)) <= hX + ENT_TOL
        oky = _row_entropies(_counts(Y, q)) <= hY + ENT_TOL
        return int((okx & oky).sum())
    ens = obj
    law = ens.entry_law()
    if law is None:
        total = Fraction(0)
        for w, code in ens.members:
            total += w * b_set_size(code, hX, hY, budget)
        return total
    n, m, q = ens.n, ens.m, ens.q
    good_Q = [Q for Q in all_types(m, q) if entropy(Q) <= hY + ENT_TOL]
    total = Fraction(0)
    for P in all_types(n, q):
        if P.is_zero() or entropy(P) > hX + ENT_TOL:
            continue
        p = output_symbol_law(law, P)
        mass = Fraction(0)
        for Q in good_Q:
            term = Fraction(type_class_size(Q))
            for b, c in enumerate(Q.counts):
                term *= p[b] ** c
            mass += term
        total += type_class_size(P) * mass
    return total


def b_set_mc(ens: CodeEnsemble, hX: float, hY: float, samples: int, rng: np.random.Generator,
             budget: int | None = DEFAULT_BUDGET):
    """Monte Carlo mean and standard error of |B| over sampled codes."""
    vals = np.array([b_set_size(ens.sample(rng), hX, hY, budget) for _ in range(samples)], dtype=float)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0


def distance_bound(n: int, m: int, qX: int, qY: int, hX: float, hY: float, delta: float) -> float:
    """exp{-m (ln|Y| - (hX + delta) R - hY - eps)} with R = n/m.

    eps = (|X| ln(n+1) + |Y| ln(m+1)) / m comes from counting types, which
    makes the bound valid at every n rather than only eventually.
    """
    R = n / m
    eps = (qX * math.log(n + 1) + qY * math.log(m + 1)) / m
    return math.exp(-m * (math.log(qY) - (hX + delta) * R - hY - eps))


@dataclass
class DistanceRow:
    n: int
    m: int
    expected: float
    exact: Fraction | None
    stderr: float
    bound: float
    delta: float


@dataclass
class DistanceReport:
    condition: float  # ln|Y| - (hX + delta) R - hY, must be > 0
    rows: list
    verdict: str

    @property
    def non_increasing(self) -> bool:
        vals = [r.expected for r in self.rows]
        return all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))

    @property
    def within_bound(self) -> bool:
        return all(r.expected <= r.bound for r in self.rows)


def distance_check(ensembles, hX: float, hY: float, delta: float | None = None,
                   mc_samples: int = 0, rng: np.random.Generator | None = None,
                   budget: int | None = DEFAULT_BUDGET) -> DistanceReport:
    """E|B| along a sequence of ensembles with its explicit upper bound.

    ``delta`` defaults to each ensemble's own per-n goodness.  When
    ``mc_samples`` is set the exact value is accompanied by a sampled one.
    """
    ensembles = list(ensembles)
    if not ensembles:
        raise DomainError("no ensembles given")
    R = max(e.n / e.m for e in ensembles)
    d0 = 0.0 if delta is None else delta
    cond = math.log(ensembles[0].q) - (hX + d0) * R - hY
    if cond <= 0:
        return DistanceReport(cond, [], "condition not met: no claim")
    rows = []
    for ens in ensembles:
        d = goodness_delta(ens, budget=budget).delta if delta is None else delta
        exact = b_set_size(ens, hX, hY, budget)
        se = 0.0
        value = float(exact)
        if mc_samples:
            value, se = b_set_mc(ens, hX, hY, mc_samples, rng, budget)
        rows.append(DistanceRow(ens.n, ens.m, value, exact, se,
                                distance_bound(ens.n, ens.m, ens.q, ens.q, hX, hY, max(d, 0.0)), d))
    rep = DistanceReport(cond, rows, "")
    ok = rep.non_increasing and rep.within_bound
    rep.verdict = "non-increasing and within bound" if ok else "trend or bound violated"
    return rep


# ---------------------------------------------------------------------------
# Entropy profile and Gilbert-Varshamov
# ---------------------------------------------------------------------------


@dataclass
class EntropyProfile:
    """Per nonzero input: (H(P_x), H(P_F(x))); minima with arg-min inputs."""

    pairs: np.ndarray  # (q^n - 1, 2), inputs in lexicographic order from 1
    rate: float
    delta: float
    min_value: float
    argmin: tuple
    min_output_entropy: float
    argmin_output: tuple


def min_entropy_profile(code: LinearCode, delta: float = 0.0,
                        budget: int | None = DEFAULT_BUDGET) -> EntropyProfile:
    """min over x != 0 of (H(P_x) + delta) R + H(P_F(x)), R = n/m."""
    n, m, q = code.n, code.m, code.q
    X = all_sequences(n, q, budget)[1:]
    Y = code.encode_array(X)
    hx = _row_entropies(_counts(X, q))
    hy = _row_entropies(_counts(Y, q))
    R = n / m
    score = (hx + delta) * R + hy
    i = int(np.argmin(score))
    j = int(np.argmin(hy))
    return EntropyProfile(np.stack([hx, hy], axis=1), R, delta, float(score[i]),
                          tuple(int(s) for s in X[i]), float(hy[j]), tuple(int(s) for s in X[j]))


def min_distance(code: LinearCode, budget: int | None = DEFAULT_BUDGET):
    """Normalized minimum distance and one nonzero input achieving it."""
    X = all_sequences(code.n, code.q, budget)[1:]
    w = (code.encode_array(X) != 0).sum(axis=1)
    i = int(np.argmin(w))
    return Fraction(int(w[i]), code.m), tuple(int(s) for s in X[i])


@dataclass
class GVSample:
    delta: Fraction
    lhs: float
    rhs: float
    passed: bool
    degenerate: bool
    cross_ok: bool


@dataclass
class GVReport:
    samples: list
    slack: float

    @property
    def pass_count(self) -> int:
        return sum(s.passed for s in self.samples)

    @property
    def pass_fraction(self) -> float:
        return self.pass_count / len(self.samples)

    @property
    def cross_ok(self) -> bool:
        return all(s.cross_ok for s in self.samples)


def gv_lhs(delta: float, q: int) -> float:
    return binary_entropy(delta) + delta * math.log(q - 1) if q > 2 else binary_entropy(delta)


def gv_sample(code: LinearCode, slack: float, budget: int | None = DEFAULT_BUDGET) -> GVSample:
    """Check h(D) + D ln(q-1) >= (1 - R) ln q - slack for one code."""
    q = code.q
    D, _ = min_distance(code, budget)
    lhs = gv_lhs(float(D), q)
    rhs = (1 - code.n / code.m) * math.log(q) - slack
    profile = min_entropy_profile(code, budget=budget)
    # the max-entropy output law with P(0) = 1 - D dominates the entropy minimum
    cross = lhs + 1e-12 >= profile.min_output_entropy
    return GVSample(D, lhs, rhs, lhs >= rhs, float(D) > 1 - 1 / q, cross)


def gv_check(ens: CodeEnsemble, samples: int, slack: float, rng: np.random.Generator,
             budget: int | None = DEFAULT_BUDGET) -> GVReport:
    return GVReport([gv_sample(ens.sample(rng), slack, budget) for _ in range(samples)], slack)


# ---------------------------------------------------------------------------
# Density and sparse ensembles
# ---------------------------------------------------------------------------


@dataclass
class DensityReport:
    density: Fraction
    threshold: Fraction
    verdict: str


def matrix_density(A: Matrix) -> DensityReport:
    """Fraction of nonzero entries against the 1 - 1/q threshold."""
    cells = A.rows * A.cols
    nnz = int((A.array != 0).sum())
    D = Fraction(nnz, cells) if cells else Fraction(0)
    thr = 1 - Fraction(1, A.q)
    verdict = "below threshold" if D < thr else "at or above threshold"
    return DensityReport(D, thr, verdict)


@dataclass
class SparseRow:
    n: int
    m: int
    delta: float
    method: str
    stderr: float
    lower: float  # exact value, or MC estimate minus 3 sigma, on the delta scale
    floor: float  # (m/n) ln(q (1 - d)): alpha at a unit input and zero output
    unit_output_entropy: float


@dataclass
class SparseReport:
    density: Fraction
    rows: list

    def lower_bounds(self) -> list:
        return [r.lower for r in self.rows]

    @property
    def floor_non_decreasing(self) -> bool:
        f = [r.floor for r in self.rows]
        return all(b >= a - 1e-12 for a, b in zip(f, f[1:]))


def expected_unit_output_entropy(ens: CodeEnsemble) -> float:
    """E[H(P_F(x))] for a unit-weight x (its image is one generator row)."""
    law = ens.entry_law()
    total = 0.0
    for Q in all_types(ens.m, ens.q):
        p = Fraction(type_class_size(Q))
        for b, c in enumerate(Q.counts):
            p *= law[b] ** c
        total += float(p) * entropy(Q)
    return total


def sparse_non_goodness_check(q: int, density, ns, m_of=None, mc_from: int | None = None,
                              samples: int = 0, rng: np.random.Generator | None = None,
                              budget: int | None = DEFAULT_BUDGET) -> SparseReport:
    """Per-n goodness of Bernoulli(density) generator ensembles.

    Every n gets the exact delta_n from the per-coordinate law.  From
    ``mc_from`` on, a sampled alpha at the exact arg-max cell is also
    computed, and ``lower`` carries its 3-sigma lower confidence value.
    """
    d = Fraction(density)
    if not 0 <= d <= 1:
        raise DomainError("density must lie in [0, 1]")
    m_of = m_of or (lambda n: n)
    rows = []
    for n in ns:
        m = m_of(n)
        ens = CodeEnsemble.sparse(q, n, m, d)
        method = "enumerate" if budget is None or ens.size <= budget else "factorized"
        rep = goodness_delta(ens, method=method, budget=budget)
        delta, se, lower, used = rep.delta, 0.0, rep.delta, method
        if mc_from is not None and n >= mc_from and samples:
            table = alpha_table(ens, method="mc", samples=samples, rng=rng, budget=budget)
            a, s = table.values[rep.argmax], table.stderr[rep.argmax]
            delta, se, used = math.log(a) / n, s, "mc"
            lower = math.log(a - 3 * s) / n if a - 3 * s > 0 else -math.inf
        floor = (m / n) * math.log(q * (1 - float(d))) if q * (1 - d) > 0 else -math.inf
        rows.append(SparseRow(n, m, delta, used, se, lower, floor, expected_unit_output_entropy(ens)))
    return SparseReport(d, rows)


# ---------------------------------------------------------------------------
# Systematic codes
# ---------------------------------------------------------------------------


@dataclass
class SystematicReport:
    rate: Fraction
    delta: float | None
    floor: float | None
    verdict: str


def _g(p: float, q: int) -> float:
    return binary_entropy(p) + (1 - p) * math.log(q - 1) if q > 2 else binary_entropy(p)


def is_systematic(code: LinearCode, positions) -> bool:
    A = code.generator.array
    pos = list(positions)
    if len(pos) != code.n or len(set(pos)) != code.n or any(not 0 <= p < code.m for p in pos):
        return False
    return bool((A[:, pos] == np.eye(code.n, dtype=A.dtype)).all())


def systematic_rate_check(code: LinearCode, positions=None, tolerance: float = 0.0,
                          budget: int | None = DEFAULT_BUDGET) -> SystematicReport:
    """Systematic codes above rate 1/q cannot be good: confirm delta_n > 0.

    For the input a^n (every symbol a != 0) the output type has at least n
    copies of a, which forces alpha(P_a, Q) = q^m / C(m, Q) at its output
    type Q and gives delta_n >= (m/n)(ln q - g(n/m)) with
    g(p) = h(p) + (1 - p) ln(q - 1).
    """
    R = Fraction(code.n, code.m)
    if positions is None:
        return SystematicReport(R, None, None, "not declared systematic: check skipped")
    if not is_systematic(code, positions):
        raise DomainError("declared positions are not systematic")
    q, n, m = code.q, code.n, code.m
    if R <= Fraction(1, q) + Fraction(tolerance).limit_denominator(10 ** 9):
        return SystematicReport(R, None, None, "rate at or below 1/q: no claim")
    best = -math.inf
    for a in range(1, q):
        x = np.full((1, n), a, dtype=np.int64)
        y = code.encode_array(x)[0]
        Q = TypeVector(q, tuple(int((y == b).sum()) for b in range(q)))
        val = log_fraction(Fraction(q ** m, type_class_size(Q))) / n
        best = max(best, val)
    floor = (m / n) * (math.log(q) - _g(n / m, q))
    verdict = "corollary consistent" if best > 0 and best >= floor - 1e-12 else "inconsistent"
    return SystematicReport(R, best, floor, verdict)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    """12 significant digits, stable across platforms."""
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, float):
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return f"{x:.12g}"
    return str(x)


def analysis_csv(rows, verdicts=()) -> str:
    """Rows of (n, quantity, value) followed by a '# verdict' block."""
    buf = io.StringIO()
    buf.write("n,quantity,value\n")
    for n, name, value in rows:
        buf.write(f"{n},{name},{fmt(value)}\n")
    for v in verdicts:
        buf.write(f"# {v}\n")
    return buf.getvalue()
