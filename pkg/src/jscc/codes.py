"""Linear codes, code ensembles, the alpha functional and goodness checks.

For a random code F the alpha functional compares its expected joint
spectrum with the product of the ambient spectra::

    alpha(P, Q) = E[S(F)(P, Q)] / (S(X^n)(P) * S(Y^m)(Q))

A linear ensemble is good at blocklength n when alpha(P, Q) equals 1 for every
nonzero input type P; the per-blocklength exponent ``(1/n) ln max alpha`` is
what :func:`goodness_delta` reports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .algebra import (
    DEFAULT_BUDGET,
    Alphabet,
    DimensionError,
    DomainError,
    Matrix,
    Perm,
    Seq,
    all_perms,
    all_sequences,
    as_alphabet,
    check_budget,
    mat_vec,
    random_matrix,
    random_perm,
    random_uniform_seq,
    sequence_index,
)
from .spectra import (
    JointSpectrum,
    Spectrum,
    TypeIndexer,
    TypeVector,
    all_types,
    ambient_mass,
)


def matmul_mod(X: np.ndarray, G: np.ndarray, q: int) -> np.ndarray:
    """(X @ G) mod q, through BLAS when the float result is exact."""
    X = np.asarray(X)
    if X.shape[-1] * (q - 1) ** 2 < 2 ** 52:
        return (X.astype(np.float64) @ G.astype(np.float64)).astype(np.int64) % q
    return (X @ G) % q


def log_fraction(x: Fraction) -> float:
    """Natural log of a positive rational without overflowing floats."""
    x = Fraction(x)
    if x <= 0:
        return -math.inf
    return math.log(x.numerator) - math.log(x.denominator)


# ---------------------------------------------------------------------------
# Linear codes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearCode:
    """The map x -> xA for an n x m generator matrix A."""

    generator: Matrix

    @classmethod
    def from_rows(cls, rows, q: int) -> "LinearCode":
        return cls(Matrix.from_array(np.asarray(rows), q))

    @property
    def q(self) -> int:
        return self.generator.q

    @property
    def alphabet(self) -> Alphabet:
        return self.generator.alphabet

    @property
    def n(self) -> int:
        return self.generator.rows

    @property
    def m(self) -> int:
        return self.generator.cols

    @property
    def rate(self) -> Fraction:
        return Fraction(self.n, self.m)

    def encode(self, x: Seq) -> Seq:
        return mat_vec(x, self.generator)

    def encode_array(self, X: np.ndarray) -> np.ndarray:
        return matmul_mod(X, self.generator.array, self.q)

    def codewords(self, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
        """Codeword of every input in lexicographic input order."""
        return self.encode_array(all_sequences(self.n, self.q, budget))


def encode(code: LinearCode, x: Seq) -> Seq:
    return code.encode(x)


def kernel_spectrum(code: LinearCode, budget: int | None = DEFAULT_BUDGET) -> Spectrum:
    X = all_sequences(code.n, code.q, budget)
    Y = code.encode_array(X)
    ker = X[~Y.any(axis=1)]
    return _rows_spectrum(ker, code.n, code.q)


def image_spectrum(code: LinearCode, budget: int | None = DEFAULT_BUDGET) -> Spectrum:
    Y = np.unique(code.codewords(budget), axis=0)
    return _rows_spectrum(Y, code.m, code.q)


def _rows_spectrum(rows: np.ndarray, n: int, q: int) -> Spectrum:
    idx = TypeIndexer(n, q)
    counts = np.bincount(idx.index_of_rows(rows), minlength=len(idx))
    total = len(rows)
    return Spectrum(n, q, {idx.types[i]: Fraction(int(c), total) for i, c in enumerate(counts) if c})


def joint_spectrum_exact(code: LinearCode, budget: int | None = DEFAULT_BUDGET) -> JointSpectrum:
    counts = _joint_counts(code.codewords(budget), code.n, code.m, code.q)
    tin, tout = TypeIndexer(code.n, code.q), TypeIndexer(code.m, code.q)
    total = code.q ** code.n
    masses = {
        (tin.types[i], tout.types[j]): Fraction(int(counts[i, j]), total)
        for i, j in zip(*np.nonzero(counts))
    }
    return JointSpectrum((code.n, code.m), (code.q, code.q), masses)


def _joint_counts(codewords: np.ndarray, n: int, m: int, q: int) -> np.ndarray:
    tin, tout = TypeIndexer(n, q), TypeIndexer(m, q)
    xi = tin.index_of_rows(all_sequences(n, q, None))
    yi = tout.index_of_rows(codewords)
    counts = np.bincount(xi * len(tout) + yi, minlength=len(tin) * len(tout))
    return counts.reshape(len(tin), len(tout))


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CodeEnsemble:
    """A random linear code: explicit weighted list, RLC, or i.i.d. sparse.

    ``rlc`` draws every generator entry uniformly.  ``sparse`` draws each
    entry nonzero with probability ``density`` and then uniformly among the
    nonzero symbols.  ``explicit`` holds (weight, code) pairs; a deterministic
    code is the one-member case.
    """

    kind: str
    q: int
    n: int
    m: int
    members: tuple = ()
    density: Fraction | None = None
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        as_alphabet(self.q)
        if self.kind not in ("explicit", "rlc", "sparse"):
            raise DomainError(f"unknown ensemble kind {self.kind!r}")
        if self.n < 1 or self.m < 1:
            raise DimensionError("code dimensions must be positive")
        if self.kind == "explicit":
            if not self.members:
                raise DomainError("explicit ensemble needs members")
            total = sum((w for w, _ in self.members), Fraction(0))
            if total != 1:
                raise DomainError(f"ensemble weights sum to {total}, not 1")
            for w, c in self.members:
                if w < 0:
                    raise DomainError("negative ensemble weight")
                if (c.q, c.n, c.m) != (self.q, self.n, self.m):
                    raise DimensionError("ensemble member has the wrong shape")
        if self.kind == "sparse":
            d = Fraction(self.density)
            if not 0 <= d <= 1:
                raise DomainError("density must lie in [0, 1]")
            object.__setattr__(self, "density", d)

    @classmethod
    def rlc(cls, q: int, n: int, m: int) -> "CodeEnsemble":
        return cls("rlc", q, n, m)

    @classmethod
    def sparse(cls, q: int, n: int, m: int, density) -> "CodeEnsemble":
        return cls("sparse", q, n, m, density=Fraction(density))

    @classmethod
    def deterministic(cls, code: LinearCode) -> "CodeEnsemble":
        return cls("explicit", code.q, code.n, code.m, members=((Fraction(1), code),))

    @classmethod
    def explicit(cls, members) -> "CodeEnsemble":
        members = tuple((Fraction(w), c) for w, c in members)
        c0 = members[0][1]
        return cls("explicit", c0.q, c0.n, c0.m, members=members)

    @property
    def size(self) -> int:
        if self.kind == "explicit":
            return len(self.members)
        return self.q ** (self.n * self.m)

    def entry_law(self) -> list | None:
        """Law of a single generator entry for i.i.d.-entry ensembles."""
        if self.kind == "rlc":
            return [Fraction(1, self.q)] * self.q
        if self.kind == "sparse":
            d = self.density
            return [1 - d] + [d / (self.q - 1)] * (self.q - 1)
        return None

    def sample(self, rng: np.random.Generator) -> LinearCode:
        if self.kind == "rlc":
            return LinearCode(random_matrix(self.n, self.m, self.q, rng))
        if self.kind == "sparse":
            mask = rng.random((self.n, self.m)) < float(self.density)
            vals = rng.integers(1, self.q, size=(self.n, self.m))
            return LinearCode(Matrix.from_array(np.where(mask, vals, 0), self.q))
        weights = np.array([float(w) for w, _ in self.members])
        k = rng.choice(len(self.members), p=weights / weights.sum())
        return self.members[k][1]

    def sample_matrices(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count`` generator matrices as one (count, n, m) array."""
        shape = (count, self.n, self.m)
        if self.kind == "rlc":
            return rng.integers(0, self.q, size=shape)
        if self.kind == "sparse":
            mask = rng.random(shape) < float(self.density)
            return np.where(mask, rng.integers(1, self.q, size=shape), 0)
        return np.stack([self.sample(rng).generator.array for _ in range(count)])

    def weight_of(self, key: int) -> Fraction:
        """Probability of one member carrying batch key ``key``."""
        if self.kind == "rlc":
            return Fraction(1, self.size)
        if self.kind == "sparse":
            d, cells = self.density, self.n * self.m
            return (1 - d) ** (cells - key) * (d / (self.q - 1)) ** key
        return self.members[key][0]

    def batches(self, budget: int | None = DEFAULT_BUDGET, batch_cells: int = 1 << 21):
        """Yield (matrices, keys) covering every member exactly once.

        Members sharing a key have equal probability :meth:`weight_of`.
        """
        check_budget(self.size, budget, "ensemble members")
        n, m, q = self.n, self.m, self.q
        if self.kind == "explicit":
            mats = np.stack([c.generator.array for _, c in self.members])
            yield mats, np.arange(len(self.members))
            return
        cells = n * m
        step = max(1, batch_cells // max(cells * q ** n, 1))
        powers = q ** np.arange(cells - 1, -1, -1, dtype=np.int64)
        for start in range(0, self.size, step):
            idx = np.arange(start, min(start + step, self.size), dtype=np.int64)
            mats = ((idx[:, None] // powers[None, :]) % q).reshape(-1, n, m)
            if self.kind == "rlc":
                keys = np.zeros(len(idx), dtype=np.int64)
            else:
                keys = (mats != 0).reshape(len(idx), -1).sum(axis=1)
            yield mats, keys


def _weighted_sum(per_key: dict, ens: CodeEnsemble) -> dict:
    """Combine integer count arrays per key into exact weighted cell masses."""
    out: dict = {}
    for key, counts in per_key.items():
        w = ens.weight_of(int(key))
        for cell in np.nonzero(counts)[0]:
            out[int(cell)] = out.get(int(cell), Fraction(0)) + w * int(counts[cell])
    return out


# ---------------------------------------------------------------------------
# Alpha tables
# ---------------------------------------------------------------------------


@dataclass
class AlphaTable:
    """alpha(P, Q) on every (input type, output type) pair.

    Values are exact fractions when ``exact`` is set, otherwise Monte Carlo
    floats with per-cell standard errors in ``stderr``.
    """

    n: int
    m: int
    q: int
    values: dict
    exact: bool
    samples: int = 0
    stderr: dict | None = None
    method: str = "enumerate"

    def __getitem__(self, key) -> Fraction | float:
        return self.values[tuple(key)]

    def __call__(self, P: TypeVector, Q: TypeVector):
        return self.values[(P, Q)]

    def items(self):
        return sorted(self.values.items(), key=lambda kv: (kv[0][0].counts, kv[0][1].counts))

    def header(self) -> str:
        status = "exact" if self.exact else "estimated"
        return f"status={status} method={self.method} samples={self.samples}"


def expected_joint_spectrum(ens: CodeEnsemble, budget: int | None = DEFAULT_BUDGET) -> JointSpectrum:
    """E[S(F)] by enumerating every member of the ensemble."""
    n, m, q = ens.n, ens.m, ens.q
    N = q ** n
    X = all_sequences(n, q, budget)
    tin, tout = TypeIndexer(n, q), TypeIndexer(m, q)
    xi = tin.index_of_rows(X)
    cells = len(tin) * len(tout)
    per_key: dict = {}
    for mats, keys in ens.batches(budget):
        Y = np.einsum("xi,bij->bxj", X, mats) % q
        cell = xi[None, :] * len(tout) + tout.index_of_rows(Y)
        for key in np.unique(keys):
            sel = cell[keys == key].ravel()
            c = np.bincount(sel, minlength=cells)
            per_key[int(key)] = per_key.get(int(key), 0) + c
    masses = {
        (tin.types[c // len(tout)], tout.types[c % len(tout)]): v / N
        for c, v in _weighted_sum(per_key, ens).items()
    }
    return JointSpectrum((n, m), (q, q), masses)


def output_symbol_law(entry_law: list, P: TypeVector) -> list:
    """Law of one coordinate of xA when x has type P and A has i.i.d. entries.

    The coordinate is sum_i x_i a_i; it depends on x only through its type.
    """
    q = P.q
    law = [Fraction(0)] * q
    law[0] = Fraction(1)
    for a in range(1, q):
        scaled = [Fraction(0)] * q
        for b, p in enumerate(entry_law):
            scaled[(a * b) % q] += p
        for _ in range(P.counts[a]):
            nxt = [Fraction(0)] * q
            for s, ps in enumerate(law):
                if ps:
                    for t, pt in enumerate(scaled):
                        if pt:
                            nxt[(s + t) % q] += ps * pt
            law = nxt
    return law


def _factorized_alpha(ens: CodeEnsemble) -> dict:
    law = ens.entry_law()
    q, m = ens.q, ens.m
    values = {}
    for P in all_types(ens.n, q):
        coord = output_symbol_law(law, P)
        for Q in all_types(m, q):
            v = Fraction(q ** m)
            for b, c in enumerate(Q.counts):
                if c:
                    v *= coord[b] ** c
            values[(P, Q)] = v
    return values


def alpha_table(ens: CodeEnsemble, method: str = "auto", samples: int = 0,
                rng: np.random.Generator | None = None,
                budget: int | None = DEFAULT_BUDGET) -> AlphaTable:
    """Tabulate alpha over all type pairs.

    ``enumerate`` averages exact spectra over every member.  ``factorized``
    uses the coordinate law of xA for i.i.d.-entry ensembles, which is exact
    but shares no code with enumeration.  ``mc`` samples codes.  ``auto``
    enumerates when the ensemble fits the budget, else factorizes when it can,
    else samples.
    """
    key = (method, samples, budget)
    if rng is None and key in ens._cache:
        return ens._cache[key]
    n, m, q = ens.n, ens.m, ens.q
    if method == "auto":
        fits = budget is None or ens.size <= budget
        if fits:
            method = "enumerate"
        elif ens.entry_law() is not None:
            method = "factorized"
        else:
            method = "mc"
    if method == "enumerate":
        E = expected_joint_spectrum(ens, budget)
        values = {}
        for P in all_types(n, q):
            for Q in all_types(m, q):
                values[(P, Q)] = E[(P, Q)] / (ambient_mass(P) * ambient_mass(Q))
        table = AlphaTable(n, m, q, values, exact=True, method="enumerate")
    elif method == "factorized":
        if ens.entry_law() is None:
            raise DomainError("factorized alpha needs an i.i.d.-entry ensemble")
        table = AlphaTable(n, m, q, _factorized_alpha(ens), exact=True, method="factorized")
    elif method == "mc":
        if rng is None or samples < 1:
            raise DomainError("Monte Carlo alpha needs an rng and samples >= 1")
        est = joint_spectrum_mc(ens, samples, rng, budget)
        values, stderr = {}, {}
        for P in all_types(n, q):
            for Q in all_types(m, q):
                amb = float(ambient_mass(P) * ambient_mass(Q))
                values[(P, Q)] = est.mean.get((P, Q), 0.0) / amb
                stderr[(P, Q)] = est.stderr.get((P, Q), 0.0) / amb
        table = AlphaTable(n, m, q, values, exact=False, samples=samples, stderr=stderr, method="mc")
    else:
        raise DomainError(f"unknown alpha method {method!r}")
    if rng is None:
        ens._cache[key] = table
    return table


def alpha(ens: CodeEnsemble, P: TypeVector, Q: TypeVector, **kwargs):
    if ambient_mass(P) == 0 or ambient_mass(Q) == 0:
        raise DomainError("zero ambient mass")
    return alpha_table(ens, **kwargs)(P, Q)


@dataclass
class SpectrumEstimate:
    """Monte Carlo estimate of an expected joint spectrum."""

    mean: dict
    stderr: dict
    samples: int
    inputs_sampled: bool


def joint_spectrum_mc(ens: CodeEnsemble, samples: int, rng: np.random.Generator,
                      budget: int | None = DEFAULT_BUDGET) -> SpectrumEstimate:
    """Average of sample-code joint spectra (or of single sampled inputs when
    q^n is over budget, which is flagged in the result)."""
    if samples < 1:
        raise DomainError("need at least one sample")
    n, m, q = ens.n, ens.m, ens.q
    tin, tout = TypeIndexer(n, q), TypeIndexer(m, q)
    cells = len(tin) * len(tout)
    inputs_sampled = budget is not None and q ** n > budget
    s1 = np.zeros(cells)
    s2 = np.zeros(cells)
    if inputs_sampled:
        for _ in range(samples):
            A = ens.sample(rng).generator.array
            x = rng.integers(0, q, size=(1, n))
            c = tin.index_of_rows(x)[0] * len(tout) + tout.index_of_rows((x @ A) % q)[0]
            s1[c] += 1
            s2[c] += 1
    else:
        X = all_sequences(n, q, budget)
        xi = tin.index_of_rows(X)
        N = len(X)
        chunk = max(1, (1 << 20) // (N * m))
        done = 0
        while done < samples:
            k = min(chunk, samples - done)
            mats = ens.sample_matrices(k, rng)
            Y = np.einsum("xi,bij->bxj", X, mats) % q
            cell = xi[None, :] * len(tout) + tout.index_of_rows(Y)
            offs = np.arange(k)[:, None] * cells
            per = np.bincount((cell + offs).ravel(), minlength=k * cells).reshape(k, cells) / N
            s1 += per.sum(axis=0)
            s2 += (per ** 2).sum(axis=0)
            done += k
    mean = s1 / samples
    var = np.maximum(s2 / samples - mean ** 2, 0.0)
    se = np.sqrt(var / samples)
    key = lambda c: (tin.types[c // len(tout)], tout.types[c % len(tout)])
    return SpectrumEstimate(
        {key(c): float(mean[c]) for c in range(cells)},
        {key(c): float(se[c]) for c in range(cells)},
        samples,
        inputs_sampled,
    )


# ---------------------------------------------------------------------------
# Goodness
# ---------------------------------------------------------------------------


@dataclass
class GoodnessReport:
    delta: float
    argmax: tuple
    max_alpha: Fraction | float
    exact: bool
    samples: int = 0

    def __float__(self):
        return self.delta


def _max_nonzero_input(table: AlphaTable):
    best, arg = None, None
    for (P, Q), v in table.items():
        if P.is_zero():
            continue
        if best is None or v > best:
            best, arg = v, (P, Q)
    return best, arg


def goodness_delta(ens: CodeEnsemble | AlphaTable, **kwargs) -> GoodnessReport:
    """(1/n) ln max over P != 0 and all Q of alpha(P, Q).

    Ties go to the lexicographically smallest (P, Q).
    """
    table = ens if isinstance(ens, AlphaTable) else alpha_table(ens, **kwargs)
    best, arg = _max_nonzero_input(table)
    if best is None:
        raise DomainError("no nonzero input type")
    delta = (log_fraction(best) if table.exact else math.log(best)) / table.n
    return GoodnessReport(delta, arg, best, table.exact, table.samples)


# ---------------------------------------------------------------------------
# Randomized affine codes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomizedAffineCode:
    """x -> inner(base(outer(x))) + offset."""

    base: LinearCode
    outer: Perm
    inner: Perm
    offset: Seq

    def __post_init__(self):
        if self.outer.n != self.base.n or self.inner.n != self.base.m or len(self.offset) != self.base.m:
            raise DimensionError("randomization does not match the code dimensions")

    def evaluate(self, x: Seq) -> Seq:
        if len(x) != self.base.n:
            raise DimensionError("input length mismatch")
        X = x.to_array()[None, :]
        return Seq(self.base.alphabet, tuple(self.evaluate_array(X)[0]))

    def evaluate_array(self, X: np.ndarray) -> np.ndarray:
        q = self.base.q
        Y = matmul_mod(np.asarray(X)[..., self.outer.gather], self.base.generator.array, q)
        return (Y[..., self.inner.gather] + np.array(self.offset.symbols)) % q


def randomize(code: LinearCode, rng: np.random.Generator) -> RandomizedAffineCode:
    return RandomizedAffineCode(
        code,
        random_perm(code.n, rng),
        random_perm(code.m, rng),
        random_uniform_seq(code.m, code.q, rng),
    )


def evaluate(rc: RandomizedAffineCode, x: Seq) -> Seq:
    return rc.evaluate(x)


@lru_cache(maxsize=32)
def randomization_tables(n: int, m: int, q: int):
    """Index tables for enumerating interleavers and offsets.

    Returns (perm_in, perm_out, add) where perm_in[s, x] is the index of
    sigma_s(x) over Z_q^n, perm_out likewise over Z_q^m, and add[y, c] is the
    index of y + c.
    """
    X = all_sequences(n, q, None)
    Y = all_sequences(m, q, None)
    perm_in = np.stack([sequence_index(X[:, p.gather], q) for p in all_perms(n)])
    perm_out = np.stack([sequence_index(Y[:, p.gather], q) for p in all_perms(m)])
    add = sequence_index((Y[:, None, :] + Y[None, :, :]) % q, q)
    return perm_in, perm_out, add


def realization_tables(codeword_idx: np.ndarray, n: int, m: int, q: int) -> np.ndarray:
    """Output index of every randomized realization of every given code.

    ``codeword_idx`` has shape (B, q^n).  The result has shape
    (B * n! * m! * q^m, q^n): one row per (code, outer, inner, offset).
    """
    perm_in, perm_out, add = randomization_tables(n, m, q)
    t1 = codeword_idx[:, perm_in]  # (B, n!, N): F(outer(x))
    t2 = perm_out[np.arange(len(perm_out))[None, None, :, None], t1[:, :, None, :]]
    M = q ** m
    t3 = add[t2[:, :, :, None, :], np.arange(M)[None, None, None, :, None]]
    return t3.reshape(-1, q ** n)


@dataclass
class PairwiseReport:
    """Defects of the uniform-marginal and pairwise-conditional identities."""

    marginal_defect: Fraction
    conditional_defect: Fraction
    realizations: int
    cells_checked: int

    @property
    def ok(self) -> bool:
        return self.marginal_defect == 0 and self.conditional_defect == 0


def randomized_pair_law(ens: CodeEnsemble, budget: int | None = DEFAULT_BUDGET):
    """Exact laws of F_hat(x) and of (F_hat(x), F_hat(x_hat)).

    Enumerates every member together with every outer interleaver, inner
    interleaver and offset.  Returns (marg, joint, realizations) where
    marg[x][y] and joint[(x, x_hat)][(y, y_hat)] are Fractions.
    """
    n, m, q = ens.n, ens.m, ens.q
    N, M = q ** n, q ** m
    per_member = math.factorial(n) * math.factorial(m) * M
    realizations = ens.size * per_member
    check_budget(realizations, budget, "randomized realizations")
    X = all_sequences(n, q, None)
    marg_counts: dict = {}
    pair_counts: dict = {}
    for mats, keys in ens.batches(budget, batch_cells=max(1, (1 << 21) // per_member)):
        cw = sequence_index(np.einsum("xi,bij->bxj", X, mats) % q, q)
        for key in np.unique(keys):
            R = realization_tables(cw[keys == key], n, m, q)
            mc = np.stack([np.bincount(R[:, x], minlength=M) for x in range(N)])
            marg_counts[int(key)] = marg_counts.get(int(key), 0) + mc
            pc = np.zeros((N, N, M * M), dtype=np.int64)
            for x in range(N):
                for xh in range(N):
                    if x != xh:
                        pc[x, xh] = np.bincount(R[:, x] * M + R[:, xh], minlength=M * M)
            pair_counts[int(key)] = pair_counts.get(int(key), 0) + pc
    scale = Fraction(1, per_member)
    marg = [[Fraction(0)] * M for _ in range(N)]
    for key, c in marg_counts.items():
        w = ens.weight_of(key) * scale
        for x in range(N):
            for y in range(M):
                if c[x, y]:
                    marg[x][y] += w * int(c[x, y])
    joint: dict = {}
    for key, c in pair_counts.items():
        w = ens.weight_of(key) * scale
        for x, xh, cell in zip(*np.nonzero(c)):
            k = (int(x), int(xh))
            d = joint.setdefault(k, {})
            yy = (int(cell) // M, int(cell) % M)
            d[yy] = d.get(yy, Fraction(0)) + w * int(c[x, xh, cell])
    return marg, joint, realizations


def verify_pairwise_independence(ens: CodeEnsemble, budget: int | None = DEFAULT_BUDGET,
                                 alpha_override: AlphaTable | None = None) -> PairwiseReport:
    """Check uniform marginals and the alpha-governed pairwise law exactly.

    For every x, y: Pr{F_hat(x) = y} = q^-m.  For every x != x_hat and all
    y, y_hat: Pr{F_hat(x_hat) = y_hat | F_hat(x) = y} equals
    q^-m alpha(type(x_hat - x), type(y_hat - y)).
    """
    n, m, q = ens.n, ens.m, ens.q
    N, M = q ** n, q ** m
    marg, joint, realizations = randomized_pair_law(ens, budget)
    table = alpha_override or alpha_table(ens, method="enumerate", budget=budget)
    X = all_sequences(n, q, None)
    Y = all_sequences(m, q, None)
    tin, tout = TypeIndexer(n, q), TypeIndexer(m, q)
    diff_in = tin.index_of_rows((X[None, :, :] - X[:, None, :]) % q)  # [x, xh]
    diff_out = tout.index_of_rows((Y[None, :, :] - Y[:, None, :]) % q)  # [y, yh]
    target = Fraction(1, M)
    mdef = max(abs(p - target) for row in marg for p in row)
    cdef = Fraction(0)
    cells = 0
    for x in range(N):
        for xh in range(N):
            if x == xh:
                continue
            law = joint.get((x, xh), {})
            P = tin.types[diff_in[x, xh]]
            for y in range(M):
                py = marg[x][y]
                for yh in range(M):
                    lhs = law.get((y, yh), Fraction(0)) / py if py else Fraction(0)
                    rhs = Fraction(table(P, tout.types[diff_out[y, yh]])) / M
                    cdef = max(cdef, abs(lhs - rhs))
                    cells += 1
    return PairwiseReport(mdef, cdef, realizations, cells)


# ---------------------------------------------------------------------------
# Sample codes with certified spectra
# ---------------------------------------------------------------------------


class SearchFailure(RuntimeError):
    def __init__(self, tries: int, best_ratio):
        super().__init__(f"no certified code in {tries} tries (best ratio {best_ratio})")
        self.tries = tries
        self.best_ratio = best_ratio


def spectrum_ratio(code: LinearCode, budget: int | None = DEFAULT_BUDGET):
    """max over P != 0 and all Q of S(f)(P, Q) / (ambient(P) ambient(Q)),
    with the lexicographically smallest maximizing pair."""
    J = joint_spectrum_exact(code, budget)
    best, arg = Fraction(0), None
    for (P, Q), v in J.items():
        if P.is_zero():
            continue
        r = v / (ambient_mass(P) * ambient_mass(Q))
        if r > best:
            best, arg = r, (P, Q)
    return best, arg


@dataclass
class CertifiedCode:
    code: LinearCode
    ratio: Fraction
    threshold: float
    tries: int


def certification_threshold(n: int, m: int, c1: float, c2: float) -> float:
    return (n + 1) ** c1 * (m + 1) ** c2


def sample_certified_code(ens: CodeEnsemble, c1: float, c2: float, rng: np.random.Generator,
                          max_tries: int = 100,
                          budget: int | None = DEFAULT_BUDGET) -> CertifiedCode:
    """Draw codes until one has spectrum ratio below (n+1)^c1 (m+1)^c2.

    Markov's inequality bounds the failure probability of a single draw by
    |P_n||P_m| / ((n+1)^c1 (m+1)^c2), so c1, c2 must exceed q.
    """
    if not (c1 > ens.q and c2 > ens.q):
        raise DomainError(f"need c1 > q and c2 > q (q={ens.q})")
    threshold = certification_threshold(ens.n, ens.m, c1, c2)
    best = None
    for tries in range(1, max_tries + 1):
        code = ens.sample(rng)
        ratio, _ = spectrum_ratio(code, budget)
        if best is None or ratio < best:
            best = ratio
        if ratio < threshold:
            return CertifiedCode(code, ratio, threshold, tries)
    raise SearchFailure(max_tries, best)


# ---------------------------------------------------------------------------
# Kernel / image / joint criteria
# ---------------------------------------------------------------------------


@dataclass
class CriterionReport:
    criterion: str
    delta: float
    argmax: tuple | None
    max_ratio: Fraction | float
    verdict: str
    exact: bool = True


def expected_kernel_image(ens: CodeEnsemble, which: str,
                          budget: int | None = DEFAULT_BUDGET) -> Spectrum:
    """E[S(ker F)] or E[S(F(X^n))] over an enumerable ensemble."""
    n, m, q = ens.n, ens.m, ens.q
    length = n if which == "kernel" else m
    idx = TypeIndexer(length, q)
    X = all_sequences(n, q, budget)
    acc: dict = {}
    for mats, keys in ens.batches(budget):
        Y = np.einsum("xi,bij->bxj", X, mats) % q
        for b in range(len(mats)):
            if which == "kernel":
                rows = X[~Y[b].any(axis=1)]
            else:
                rows = np.unique(Y[b], axis=0)
            counts = np.bincount(idx.index_of_rows(rows), minlength=len(idx))
            w = ens.weight_of(int(keys[b]))
            size = len(rows)
            for t in np.nonzero(counts)[0]:
                k = idx.types[t]
                acc[k] = acc.get(k, Fraction(0)) + w * Fraction(int(counts[t]), size)
    return Spectrum(length, q, acc)


def certify_table1(obj: LinearCode | CodeEnsemble, criterion: str,
                   budget: int | None = DEFAULT_BUDGET) -> CriterionReport:
    """Per-blocklength exponent for the kernel, image or joint criterion."""
    ens = CodeEnsemble.deterministic(obj) if isinstance(obj, LinearCode) else obj
    if criterion == "joint":
        g = goodness_delta(ens, budget=budget)
        verdict = "good" if g.delta == 0 else "not good at this blocklength"
        return CriterionReport("joint", g.delta, g.argmax, g.max_alpha, verdict, g.exact)
    if criterion not in ("kernel", "image"):
        raise DomainError(f"unknown criterion {criterion!r}")
    S = expected_kernel_image(ens, criterion, budget)
    length = ens.n if criterion == "kernel" else ens.m
    best, arg = Fraction(0), None
    for t in all_types(length, ens.q):
        if t.is_zero():
            continue
        r = S[t] / ambient_mass(t)
        if r > best:
            best, arg = r, t
    if best == 0:
        return CriterionReport(criterion, -math.inf, None, best, "vacuously good")
    delta = log_fraction(best) / length
    verdict = "good" if delta <= 0 else "not good at this blocklength"
    return CriterionReport(criterion, delta, arg, best, verdict)
