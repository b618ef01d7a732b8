"""Prime-field arithmetic, sequences, permutations and generator matrices.

Everything here is immutable.  Exact probabilities elsewhere in the package
use :class:`fractions.Fraction`; this module only deals with symbols.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from typing import Iterable, Sequence

import numpy as np

DEFAULT_BUDGET = 2 ** 20
MAX_Q = 13


class DimensionError(ValueError):
    """Lengths or shapes of the operands do not fit together."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class BudgetExceeded(RuntimeError):
    """An exhaustive enumeration would exceed the configured budget."""

    def __init__(self, needed: int, budget: int, what: str = "enumeration"):
        super().__init__(f"{what} needs {needed} items, budget is {budget}")
        self.needed = needed
        self.budget = budget


class ParseError(ValueError):
    """A text file could not be parsed; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


def check_budget(needed: int, budget: int | None, what: str = "enumeration") -> None:
    if budget is not None and needed > budget:
        raise BudgetExceeded(needed, budget, what)


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % d for d in range(2, math.isqrt(q) + 1))


@dataclass(frozen=True)
class Alphabet:
    """The prime field Z_q, 2 <= q <= 13."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, (int, np.integer)) or isinstance(self.q, bool):
            raise DomainError(f"alphabet size must be an integer, got {self.q!r}")
        if not 2 <= self.q <= MAX_Q:
            raise DomainError(f"alphabet size {self.q} outside supported range 2..{MAX_Q}")
        if not is_prime(int(self.q)):
            raise DomainError(f"alphabet size {self.q} is not prime")
        object.__setattr__(self, "q", int(self.q))

    def __len__(self):
        return self.q

    def __iter__(self):
        return iter(range(self.q))

    def check(self, a: int) -> int:
        if not 0 <= a < self.q:
            raise DomainError(f"symbol {a} not in [0, {self.q})")
        return int(a)


def as_alphabet(a: Alphabet | int) -> Alphabet:
    return a if isinstance(a, Alphabet) else Alphabet(a)


def field_add(a: int, b: int, alphabet: Alphabet) -> int:
    return (a + b) % alphabet.q


def field_sub(a: int, b: int, alphabet: Alphabet) -> int:
    return (a - b) % alphabet.q


def field_mul(a: int, b: int, alphabet: Alphabet) -> int:
    return (a * b) % alphabet.q


def field_inv(a: int, alphabet: Alphabet) -> int:
    if a % alphabet.q == 0:
        raise DomainError("zero has no multiplicative inverse")
    return pow(int(a), alphabet.q - 2, alphabet.q)


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Seq:
    """A sequence over a prime alphabet."""

    alphabet: Alphabet
    symbols: tuple

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        q = self.alphabet.q
        for s in syms:
            if not 0 <= s < q:
                raise DomainError(f"symbol {s} not in [0, {q})")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def of(cls, symbols: Iterable[int], q: Alphabet | int) -> "Seq":
        return cls(as_alphabet(q), tuple(symbols))

    @classmethod
    def parse(cls, text: str, q: Alphabet | int) -> "Seq":
        return cls.of(parse_symbols(text, as_alphabet(q).q), q)

    @classmethod
    def zeros(cls, n: int, q: Alphabet | int) -> "Seq":
        return cls.of((0,) * n, q)

    @property
    def q(self) -> int:
        return self.alphabet.q

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def _check_peer(self, other: "Seq"):
        if self.alphabet != other.alphabet:
            raise DomainError("sequences over different alphabets")
        if len(self) != len(other):
            raise DimensionError(f"lengths {len(self)} and {len(other)} differ")

    def __add__(self, other: "Seq") -> "Seq":
        self._check_peer(other)
        q = self.q
        return Seq(self.alphabet, tuple((a + b) % q for a, b in zip(self, other)))

    def __sub__(self, other: "Seq") -> "Seq":
        self._check_peer(other)
        q = self.q
        return Seq(self.alphabet, tuple((a - b) % q for a, b in zip(self, other)))

    def is_zero(self) -> bool:
        return not any(self.symbols)

    def to_array(self) -> np.ndarray:
        return np.array(self.symbols, dtype=np.int64)

    def __str__(self):
        return format_symbols(self.symbols, self.q)


def format_symbols(symbols: Sequence[int], q: int) -> str:
    """Digit string for q <= 10, space separated otherwise."""
    if q <= 10:
        return "".join(str(int(s)) for s in symbols)
    return " ".join(str(int(s)) for s in symbols)


def parse_symbols(text: str, q: int) -> tuple:
    text = text.strip()
    if q <= 10 and " " not in text and "," not in text:
        return tuple(int(c) for c in text)
    return tuple(int(t) for t in text.replace(",", " ").split())


def all_sequences(n: int, q: int, budget: int | None = DEFAULT_BUDGET) -> np.ndarray:
    """All of Z_q^n as a (q^n, n) array in lexicographic order."""
    check_budget(q ** n, budget, f"{q}^{n} sequences")
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    idx = np.arange(q ** n, dtype=np.int64)
    powers = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % q


def sequence_index(arr: np.ndarray, q: int) -> np.ndarray:
    """Lexicographic rank of each row of ``arr`` (inverse of all_sequences)."""
    arr = np.asarray(arr, dtype=np.int64)
    n = arr.shape[-1]
    powers = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return arr @ powers


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Perm:
    """Permutation of positions 1..n, stored as its forward image."""

    image: tuple

    def __post_init__(self):
        img = tuple(int(i) for i in self.image)
        if sorted(img) != list(range(1, len(img) + 1)):
            raise DomainError(f"{img} is not a permutation of 1..{len(img)}")
        object.__setattr__(self, "image", img)

    @classmethod
    def identity(cls, n: int) -> "Perm":
        return cls(tuple(range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i - 1]

    @cached_property
    def inverse(self) -> "Perm":
        inv = [0] * self.n
        for i, s in enumerate(self.image, start=1):
            inv[s - 1] = i
        return Perm(tuple(inv))

    def compose(self, other: "Perm") -> "Perm":
        """``self ∘ other``: apply ``other`` first."""
        if self.n != other.n:
            raise DimensionError("permutation lengths differ")
        return Perm(tuple(self(other(i)) for i in range(1, self.n + 1)))

    @cached_property
    def gather(self) -> np.ndarray:
        """0-based index array g with apply_perm(x)[j] == x[g[j]]."""
        return np.array(self.inverse.image, dtype=np.int64) - 1


def apply_perm(sigma: Perm, x: Seq) -> Seq:
    """Position sigma(i) of the output holds x_i."""
    if sigma.n != len(x):
        raise DimensionError(f"permutation of length {sigma.n} applied to length {len(x)}")
    inv = sigma.inverse.image
    return Seq(x.alphabet, tuple(x.symbols[inv[j] - 1] for j in range(len(x))))


def all_perms(n: int) -> list[Perm]:
    return [Perm(tuple(p)) for p in permutations(range(1, n + 1))]


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Matrix:
    """An n x m matrix over a prime field, used as a generator (x -> xA)."""

    alphabet: Alphabet
    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(e) for e in row) for row in self.entries)
        if not rows or not rows[0]:
            raise DimensionError("matrix dimensions must be positive")
        width = len(rows[0])
        q = self.alphabet.q
        for row in rows:
            if len(row) != width:
                raise DimensionError("ragged matrix rows")
            for e in row:
                if not 0 <= e < q:
                    raise DomainError(f"entry {e} not in [0, {q})")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_array(cls, arr, q: Alphabet | int) -> "Matrix":
        return cls(as_alphabet(q), tuple(tuple(int(e) for e in row) for row in np.asarray(arr)))

    @classmethod
    def identity(cls, n: int, q: Alphabet | int) -> "Matrix":
        return cls.from_array(np.eye(n, dtype=np.int64), q)

    @classmethod
    def zeros(cls, n: int, m: int, q: Alphabet | int) -> "Matrix":
        return cls.from_array(np.zeros((n, m), dtype=np.int64), q)

    @property
    def q(self) -> int:
        return self.alphabet.q

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @cached_property
    def array(self) -> np.ndarray:
        a = np.array(self.entries, dtype=np.int64)
        a.setflags(write=False)
        return a


def mat_vec(x: Seq, A: Matrix) -> Seq:
    """Row vector times matrix over Z_q."""
    if len(x) != A.rows:
        raise DimensionError(f"vector of length {len(x)} times {A.rows}x{A.cols} matrix")
    if x.alphabet != A.alphabet:
        raise DomainError("vector and matrix over different alphabets")
    out = (x.to_array() @ A.array) % A.q
    return Seq(A.alphabet, tuple(out))


def parse_matrix(text: str) -> Matrix:
    """Parse the matrix file format: ``q n m`` then n rows of m integers."""
    lines = text.splitlines()
    content = [(i + 1, ln.split()) for i, ln in enumerate(lines) if ln.strip()]
    if not content:
        raise ParseError("empty matrix file", 1)
    lineno, head = content[0]
    if len(head) != 3:
        raise ParseError("header must be 'q n m'", lineno)
    try:
        q, n, m = (int(t) for t in head)
    except ValueError:
        raise ParseError("header must hold three integers", lineno) from None
    try:
        alphabet = Alphabet(q)
    except DomainError as exc:
        raise ParseError(str(exc), lineno) from None
    if n < 1 or m < 1:
        raise ParseError("matrix dimensions must be positive", lineno)
    body = content[1:]
    if len(body) < n:
        raise ParseError(f"expected {n} rows, found {len(body)}", len(lines) + 1)
    rows = []
    for lineno, toks in body[:n]:
        if len(toks) != m:
            raise ParseError(f"expected {m} entries, found {len(toks)}", lineno)
        try:
            row = [int(t) for t in toks]
        except ValueError:
            raise ParseError("non-integer entry", lineno) from None
        if any(not 0 <= e < q for e in row):
            raise ParseError(f"entry outside [0, {q})", lineno)
        rows.append(tuple(row))
    if len(body) > n:
        raise ParseError("unexpected trailing rows", body[n][0])
    return Matrix(alphabet, tuple(rows))


def format_matrix(A: Matrix) -> str:
    lines = [f"{A.q} {A.rows} {A.cols}"]
    lines += [" ".join(str(e) for e in row) for row in A.entries]
    return "\n".join(lines) + "\n"


def read_matrix(path) -> Matrix:
    with open(path) as fh:
        return parse_matrix(fh.read())


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Counter-based (Philox) generator; children come from ``rng.spawn``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def random_perm(n: int, rng: np.random.Generator) -> Perm:
    return Perm(tuple(int(i) + 1 for i in rng.permutation(n)))


def random_matrix(n: int, m: int, alphabet: Alphabet | int, rng: np.random.Generator) -> Matrix:
    alphabet = as_alphabet(alphabet)
    return Matrix.from_array(rng.integers(0, alphabet.q, size=(n, m)), alphabet)


def random_uniform_seq(m: int, alphabet: Alphabet | int, rng: np.random.Generator) -> Seq:
    alphabet = as_alphabet(alphabet)
    return Seq(alphabet, tuple(rng.integers(0, alphabet.q, size=m)))
