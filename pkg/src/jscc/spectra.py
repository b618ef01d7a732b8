"""Types of sequences and spectra of sets and relations.

A type is the vector of symbol counts of a sequence.  The spectrum of a set
of sequences is the distribution of types over the set; the joint spectrum of
a relation is the distribution of (input type, output type) pairs.  All masses
are exact fractions.
"""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable

import numpy as np

from .algebra import (
    DEFAULT_BUDGET,
    DimensionError,
    DomainError,
    Perm,
    Seq,
    all_sequences,
    apply_perm,
    check_budget,
)


@dataclass(frozen=True)
class TypeVector:
    """Symbol counts of a length-n sequence over Z_q."""

    q: int
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != self.q:
            raise DimensionError(f"type over q={self.q} needs {self.q} counts")
        if any(c < 0 for c in counts):
            raise DomainError("negative count in type")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    def is_zero(self) -> bool:
        """True for the type of the all-zero sequence."""
        return self.counts[0] == self.n

    def probabilities(self) -> tuple:
        n = self.n
        return tuple(Fraction(c, n) for c in self.counts)

    def __lt__(self, other: "TypeVector") -> bool:
        return self.counts < other.counts

    def __str__(self):
        return "(" + ",".join(str(c) for c in self.counts) + ")"


def zero_type(n: int, q: int) -> TypeVector:
    return TypeVector(q, (n,) + (0,) * (q - 1))


def type_of(x: Seq) -> TypeVector:
    counts = [0] * x.q
    for s in x:
        counts[s] += 1
    return TypeVector(x.q, tuple(counts))


def type_class_size(P: TypeVector) -> int:
    size = math.factorial(P.n)
    for c in P.counts:
        size //= math.factorial(c)
    return size


def all_types(n: int, q: int) -> list[TypeVector]:
    """All types of length n over Z_q, in lexicographic order of counts."""

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    return [TypeVector(q, c) for c in compositions(n, q)]


def count_rows(arr: np.ndarray, q: int) -> np.ndarray:
    """Per-row symbol counts of an integer array, shape (..., q)."""
    return np.stack([(arr == a).sum(axis=-1) for a in range(q)], axis=-1)


class TypeIndexer:
    """Maps count vectors of length-n sequences to dense indices."""

    def __init__(self, n: int, q: int):
        self.n, self.q = n, q
        self.types = all_types(n, q)
        radix = (n + 1) ** np.arange(q, dtype=np.int64)
        self._radix = radix
        keys = np.array([np.dot(t.counts, radix) for t in self.types], dtype=np.int64)
        self._lookup = {int(k): i for i, k in enumerate(keys)}
        if (n + 1) ** q <= 1 << 22:
            table = np.full((n + 1) ** q, -1, dtype=np.int64)
            table[keys] = np.arange(len(keys))
            self._table = table
        else:
            self._table = None

    def __len__(self):
        return len(self.types)

    def index_of_rows(self, arr: np.ndarray) -> np.ndarray:
        """Type index of each row (last axis) of a symbol array."""
        keys = count_rows(arr, self.q) @ self._radix
        if self._table is not None:
            return self._table[keys]
        flat = [self._lookup[int(k)] for k in keys.ravel()]
        return np.array(flat, dtype=np.int64).reshape(keys.shape)

    def index(self, P: TypeVector) -> int:
        return self._lookup[int(np.dot(P.counts, self._radix))]


# ---------------------------------------------------------------------------
# Spectrum containers
# ---------------------------------------------------------------------------


class Spectrum(Mapping):
    """Sparse exact distribution over types of one length; missing keys are 0."""

    def __init__(self, n: int, q: int, masses: dict):
        self.n, self.q = n, q
        self._m = {k: Fraction(v) for k, v in masses.items() if v != 0}
        for k in self._m:
            if k.q != q or k.n != n:
                raise DimensionError(f"type {k} does not belong to length {n} over q={q}")

    def __getitem__(self, key):
        return self._m.get(key, Fraction(0))

    def __iter__(self):
        return iter(sorted(self._m))

    def __len__(self):
        return len(self._m)

    def total(self) -> Fraction:
        return sum(self._m.values(), Fraction(0))

    def __eq__(self, other):
        if isinstance(other, Spectrum):
            return (self.n, self.q, self._m) == (other.n, other.q, other._m)
        return NotImplemented

    def __repr__(self):
        body = ", ".join(f"{k}: {v}" for k, v in self.items())
        return f"Spectrum(n={self.n}, q={self.q}, {{{body}}})"


class JointSpectrum(Mapping):
    """Sparse exact distribution over tuples of types.

    Keys are tuples ``(P_1, ..., P_k)``; ``lengths`` and ``alphabets`` give the
    length and field size of each component.  The two-component case is the
    joint spectrum of a relation between inputs and outputs.
    """

    def __init__(self, lengths: tuple, alphabets: tuple, masses: dict):
        self.lengths = tuple(lengths)
        self.alphabets = tuple(alphabets)
        if len(self.lengths) != len(self.alphabets):
            raise DimensionError("lengths and alphabets differ in arity")
        self._m = {tuple(k): Fraction(v) for k, v in masses.items() if v != 0}
        for k in self._m:
            if len(k) != len(self.lengths):
                raise DimensionError("key arity mismatch")
            for t, n, q in zip(k, self.lengths, self.alphabets):
                if t.n != n or t.q != q:
                    raise DimensionError(f"type {t} does not belong to length {n} over q={q}")

    @property
    def n(self) -> int:
        return self.lengths[0]

    @property
    def m(self) -> int:
        return self.lengths[1]

    def __getitem__(self, key):
        return self._m.get(tuple(key), Fraction(0))

    def __iter__(self):
        return iter(sorted(self._m, key=lambda k: tuple(t.counts for t in k)))

    def __len__(self):
        return len(self._m)

    def total(self) -> Fraction:
        return sum(self._m.values(), Fraction(0))

    def marginal(self, component: int) -> Spectrum:
        acc: dict = {}
        for k, v in self._m.items():
            acc[k[component]] = acc.get(k[component], Fraction(0)) + v
        return Spectrum(self.lengths[component], self.alphabets[component], acc)

    def marginal_x(self) -> Spectrum:
        return self.marginal(0)

    def marginal_y(self) -> Spectrum:
        return self.marginal(1)

    def __eq__(self, other):
        if isinstance(other, JointSpectrum):
            return (self.lengths, self.alphabets, self._m) == (
                other.lengths,
                other.alphabets,
                other._m,
            )
        return NotImplemented

    def __repr__(self):
        body = ", ".join(
            "(" + ", ".join(str(t) for t in k) + f"): {v}" for k, v in self.items()
        )
        return f"JointSpectrum(lengths={self.lengths}, {{{body}}})"


# ---------------------------------------------------------------------------
# Constructions
# ---------------------------------------------------------------------------


def ambient_spectrum(n: int, q: int) -> Spectrum:
    """Spectrum of the whole space Z_q^n: multinomial(n, P) / q^n."""
    if n < 1:
        raise DomainError("n must be at least 1")
    total = q ** n
    return Spectrum(n, q, {P: Fraction(type_class_size(P), total) for P in all_types(n, q)})


def ambient_mass(P: TypeVector) -> Fraction:
    return Fraction(type_class_size(P), P.q ** P.n)


def set_spectrum(A: Iterable[Seq]) -> Spectrum:
    """Spectrum of a finite set of sequences (duplicates collapse)."""
    elems = set(A)
    if not elems:
        raise DomainError("spectrum of an empty set")
    lengths = {len(x) for x in elems}
    qs = {x.q for x in elems}
    if len(lengths) != 1 or len(qs) != 1:
        raise DimensionError("set mixes lengths or alphabets")
    counts: dict = {}
    for x in elems:
        t = type_of(x)
        counts[t] = counts.get(t, 0) + 1
    size = len(elems)
    return Spectrum(lengths.pop(), qs.pop(), {t: Fraction(c, size) for t, c in counts.items()})


def product_spectrum(spectra: list) -> JointSpectrum:
    """Joint spectrum of a Cartesian product from the spectra of its factors."""
    if not spectra:
        raise DomainError("empty product")
    masses = {}
    for combo in product(*(list(s.items()) for s in spectra)):
        key = tuple(t for t, _ in combo)
        value = Fraction(1)
        for _, v in combo:
            value *= v
        masses[key] = value
    return JointSpectrum(
        tuple(s.n for s in spectra), tuple(s.q for s in spectra), masses
    )


def tuple_set_spectrum(elements: Iterable[tuple]) -> JointSpectrum:
    """Joint spectrum of a set of tuples of sequences."""
    elems = set(tuple(e) for e in elements)
    if not elems:
        raise DomainError("spectrum of an empty set")
    first = next(iter(elems))
    lengths = tuple(len(s) for s in first)
    alphabets = tuple(s.q for s in first)
    counts: dict = {}
    for e in elems:
        if tuple(len(s) for s in e) != lengths or tuple(s.q for s in e) != alphabets:
            raise DimensionError("inconsistent component lengths")
        key = tuple(type_of(s) for s in e)
        counts[key] = counts.get(key, 0) + 1
    size = len(elems)
    return JointSpectrum(lengths, alphabets, {k: Fraction(c, size) for k, c in counts.items()})


def relation_joint_spectrum(pairs: Iterable[tuple]) -> JointSpectrum:
    """Joint spectrum of a relation given as (x, y) pairs."""
    pairs = list(pairs)
    if not pairs:
        raise DomainError("joint spectrum of an empty relation")
    for p in pairs:
        if len(p) != 2:
            raise DimensionError("relation elements must be pairs")
    return tuple_set_spectrum(pairs)


def conditional_spectrum(J: JointSpectrum, direction: str = "forward") -> dict:
    """Conditional spectrum as a dict ``(target, given) -> mass``.

    ``forward`` gives S(Q | P) = S(P, Q) / S(P); ``backward`` gives S(P | Q).
    Only conditions with positive marginal appear.
    """
    if direction not in ("forward", "backward"):
        raise DomainError(f"unknown direction {direction!r}")
    given_axis = 0 if direction == "forward" else 1
    marg = J.marginal(given_axis)
    out = {}
    for key, v in J.items():
        given, target = key[given_axis], key[1 - given_axis]
        out[(target, given)] = v / marg[given]
    return out


def conditional_mass(J: JointSpectrum, target: TypeVector, given: TypeVector,
                     direction: str = "forward") -> Fraction:
    given_axis = 0 if direction == "forward" else 1
    denom = J.marginal(given_axis)[given]
    if denom == 0:
        raise DomainError(f"conditioning type {given} has zero mass")
    key = (given, target) if given_axis == 0 else (target, given)
    return J[key] / denom


# ---------------------------------------------------------------------------
# Random binning
# ---------------------------------------------------------------------------


def random_binning_expected_spectrum(n: int, m: int, qx: int, qy: int) -> JointSpectrum:
    """Expected joint spectrum of a uniform random function Z_qx^n -> Z_qy^m.

    Every input is binned independently and uniformly, so the expectation is
    the product of the two ambient spectra.
    """
    return product_spectrum([ambient_spectrum(n, qx), ambient_spectrum(m, qy)])


def exhaustive_binning_spectrum(n: int, m: int, qx: int, qy: int,
                                budget: int | None = DEFAULT_BUDGET) -> JointSpectrum:
    """Average joint spectrum over every function Z_qx^n -> Z_qy^m."""
    n_in, n_out = qx ** n, qy ** m
    n_funcs = n_out ** n_in
    check_budget(n_funcs, budget, "binning functions")
    tin, tout = TypeIndexer(n, qx), TypeIndexer(m, qy)
    in_idx = tin.index_of_rows(all_sequences(n, qx))
    out_idx = tout.index_of_rows(all_sequences(m, qy))
    counts = np.zeros((len(tin), len(tout)), dtype=np.int64)
    # function number f encodes the output of input x as its x-th base-n_out digit
    funcs = all_sequences(n_in, n_out, budget=None)
    for x in range(n_in):
        np.add.at(counts, (in_idx[x], out_idx[funcs[:, x]]), 1)
    denom = n_funcs * n_in
    masses = {
        (tin.types[i], tout.types[j]): Fraction(int(counts[i, j]), denom)
        for i, j in zip(*np.nonzero(counts))
    }
    return JointSpectrum((n, m), (qx, qy), masses)


# ---------------------------------------------------------------------------
# Permutation invariance
# ---------------------------------------------------------------------------


def conjugated_relation(pairs: Iterable[tuple], sigma: Perm, sigma_out: Perm) -> list:
    """Relation of x -> sigma_out(f(sigma(x))) from the pairs of f."""
    inv = sigma.inverse
    return [(apply_perm(inv, x), apply_perm(sigma_out, y)) for x, y in pairs]


def check_perm_invariance(pairs: Iterable[tuple], sigmas: tuple) -> bool:
    """Whether interleaving input and output leaves the joint spectrum unchanged."""
    pairs = list(pairs)
    sigma, sigma_out = sigmas
    if pairs and (sigma.n != len(pairs[0][0]) or sigma_out.n != len(pairs[0][1])):
        raise DimensionError("permutation lengths do not match the relation")
    return relation_joint_spectrum(pairs) == relation_joint_spectrum(
        conjugated_relation(pairs, sigma, sigma_out)
    )


# ---------------------------------------------------------------------------
# CSV reports
# ---------------------------------------------------------------------------


def spectrum_csv(S: Spectrum | JointSpectrum, header: str | None = None) -> str:
    """Rows of counts then num, den; sorted by counts."""
    lines = []
    if header:
        lines.append(f"# {header}")
    if isinstance(S, Spectrum):
        lines.append(",".join([f"c{a}" for a in range(S.q)] + ["num", "den"]))
        for t, v in S.items():
            lines.append(",".join([str(c) for c in t.counts] + [str(v.numerator), str(v.denominator)]))
    else:
        names = []
        for comp, q in enumerate(S.alphabets):
            tag = "xyzw"[comp] if comp < 4 else f"t{comp}_"
            names += [f"{tag}{a}" for a in range(q)]
        lines.append(",".join(names + ["num", "den"]))
        for key, v in S.items():
            cells = [str(c) for t in key for c in t.counts]
            lines.append(",".join(cells + [str(v.numerator), str(v.denominator)]))
    return "\n".join(lines) + "\n"
