import itertools
import math
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from jscc.algebra import DomainError, Seq, all_perms, make_rng, random_perm
from jscc.spectra import (TypeVector, all_types, ambient_spectrum, check_perm_invariance,
                          conditional_mass, conditional_spectrum, exhaustive_binning_spectrum,
                          product_spectrum, random_binning_expected_spectrum,
                          relation_joint_spectrum, set_spectrum, spectrum_csv, tuple_set_spectrum,
                          type_class_size, type_of)


def brute_ambient(n, q):
    """Spectrum of the whole space by counting every sequence."""
    c = Counter(tuple(s.count(a) for a in range(q)) for s in itertools.product(range(q), repeat=n))
    return {k: Fraction(v, q ** n) for k, v in c.items()}


def test_type_examples():
    assert type_of(Seq.zeros(4, 2)).counts == (4, 0)
    assert type_of(Seq.parse("0011", 2)).counts == (2, 2)
    assert type_of(Seq.parse("012", 3)).counts == (1, 1, 1)
    assert type_class_size(TypeVector(2, (4, 0))) == 1
    assert type_class_size(TypeVector(2, (2, 2))) == 6
    assert type_class_size(TypeVector(3, (1, 1, 1))) == 6


def test_ambient_examples():
    S1 = ambient_spectrum(1, 2)
    assert dict((t.counts, v) for t, v in S1.items()) == {(1, 0): Fraction(1, 2), (0, 1): Fraction(1, 2)}
    S2 = ambient_spectrum(2, 2)
    assert dict((t.counts, v) for t, v in S2.items()) == {
        (2, 0): Fraction(1, 4), (1, 1): Fraction(1, 2), (0, 2): Fraction(1, 4)}


@pytest.mark.parametrize("q", [2, 3])
@pytest.mark.parametrize("n", range(1, 7))
def test_ambient_matches_counting(n, q):
    got = {t.counts: v for t, v in ambient_spectrum(n, q).items() if v}
    assert got == brute_ambient(n, q)


def test_ambient_normalized():
    for n in range(1, 11):
        for q in (2, 3, 5):
            assert ambient_spectrum(n, q).total() == 1


def test_type_class_sizes_sum():
    for n in range(1, 7):
        assert sum(type_class_size(t) for t in all_types(n, 3)) == 3 ** n


def test_set_spectrum_cases():
    z = set_spectrum([Seq.zeros(3, 2)])
    assert dict(z) == {TypeVector(2, (3, 0)): 1}
    full = set_spectrum(Seq.of(s, 3) for s in itertools.product(range(3), repeat=3))
    assert full == ambient_spectrum(3, 3)


def test_product_identity_small():
    for n, m in itertools.product(range(1, 4), repeat=2):
        seqs_a = [Seq.of(s, 2) for s in itertools.product(range(2), repeat=n)]
        seqs_b = [Seq.of(s, 2) for s in itertools.product(range(2), repeat=m)]
        lhs = product_spectrum([ambient_spectrum(n, 2), ambient_spectrum(m, 2)])
        assert lhs == tuple_set_spectrum(itertools.product(seqs_a, seqs_b))


def test_relation_examples():
    pairs = [(Seq.of((a,), 2), Seq.of((a,), 2)) for a in range(2)]
    J = relation_joint_spectrum(pairs)
    assert {(k[0].counts, k[1].counts): v for k, v in J.items() if v} == {
        ((1, 0), (1, 0)): Fraction(1, 2), ((0, 1), (0, 1)): Fraction(1, 2)}
    cond = conditional_mass(J, TypeVector(2, (1, 0)), TypeVector(2, (1, 0)))
    assert cond == 1
    const = relation_joint_spectrum((Seq.of(s, 2), Seq.zeros(2, 2)) for s in itertools.product(range(2), repeat=3))
    assert const.marginal_y() == set_spectrum([Seq.zeros(2, 2)])
    assert const.marginal_x() == ambient_spectrum(3, 2)


def test_conditionals_normalize():
    rng = make_rng(4)
    pairs = [(Seq.of(s, 2), Seq.of(rng.integers(0, 2, 2), 2)) for s in itertools.product(range(2), repeat=3)]
    J = relation_joint_spectrum(pairs)
    sums = {}
    for (Q, P), v in conditional_spectrum(J).items():
        sums[P] = sums.get(P, 0) + v
    assert sums and all(v == 1 for v in sums.values())
    # independence: product joint gives conditional equal to marginal
    Jp = product_spectrum([ambient_spectrum(2, 2), ambient_spectrum(2, 2)])
    for (Q, P), v in conditional_spectrum(Jp).items():
        assert v == ambient_spectrum(2, 2)[Q]


@pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_binning_exhaustive(n, m):
    assert random_binning_expected_spectrum(n, m, 2, 2) == exhaustive_binning_spectrum(n, m, 2, 2)


def test_binning_examples():
    J = random_binning_expected_spectrum(1, 1, 2, 2)
    z = TypeVector(2, (1, 0))
    assert J[(z, z)] == Fraction(1, 4)
    J = random_binning_expected_spectrum(3, 2, 3, 2)
    for (P, Q), v in J.items():
        assert v == ambient_spectrum(3, 3)[P] * ambient_spectrum(2, 2)[Q]


def test_perm_invariance_examples():
    rng = make_rng(8)
    table = {s: tuple(rng.integers(0, 2, 2)) for s in itertools.product(range(2), repeat=3)}
    pairs = [(Seq.of(x, 2), Seq.of(y, 2)) for x, y in table.items()]
    ident = (all_perms(3)[0], all_perms(2)[0])
    assert check_perm_invariance(pairs, ident)
    assert check_perm_invariance(pairs, (random_perm(3, rng), random_perm(2, rng)))
    linear = [(Seq.of(x, 2), Seq.of(((x[0] + x[1]) % 2, x[2]), 2)) for x in itertools.product(range(2), repeat=3)]
    assert all(check_perm_invariance(linear, (s, all_perms(2)[1])) for s in all_perms(3))


@given(st.lists(st.lists(st.integers(0, 2), min_size=4, max_size=4), min_size=1, max_size=10))
def test_set_spectrum_is_distribution(rows):
    S = set_spectrum(Seq.of(r, 3) for r in rows)
    assert S.total() == 1
    distinct = {tuple(r) for r in rows}
    for t, v in S.items():
        assert v == Fraction(sum(1 for r in distinct if tuple(r.count(a) for a in range(3)) == t.counts), len(distinct))


def test_bad_type_rejected():
    with pytest.raises(DomainError):
        TypeVector(2, (1, -1))


def test_csv_rows():
    text = spectrum_csv(ambient_spectrum(2, 2), header="status=exact")
    lines = text.splitlines()
    assert lines[0] == "# status=exact"
    assert lines[1] == "c0,c1,num,den"
    assert len(lines) == 5
    assert math.isclose(sum(int(l.split(",")[2]) / int(l.split(",")[3]) for l in lines[2:]), 1)
