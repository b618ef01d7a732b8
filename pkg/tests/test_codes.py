import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jscc.algebra import (BudgetExceeded, DomainError, Matrix, Perm, Seq, all_perms, make_rng,
                          random_matrix)
from jscc.codes import (CodeEnsemble, LinearCode, RandomizedAffineCode, alpha_table,
                        certify_table1, goodness_delta, image_spectrum, joint_spectrum_exact,
                        joint_spectrum_mc, kernel_spectrum, matmul_mod, randomize,
                        randomized_pair_law, sample_certified_code, spectrum_ratio,
                        verify_pairwise_independence)
from jscc.spectra import TypeVector, ambient_spectrum, all_types


def code(rows, q=2):
    return LinearCode(Matrix.from_array(rows, q))


def counts(seq, q):
    return tuple(list(seq).count(a) for a in range(q))


def brute_alpha(matrices, weights, n, m, q):
    """alpha from first principles: average joint type counts over members."""
    acc = {}
    for A, w in zip(matrices, weights):
        for x in itertools.product(range(q), repeat=n):
            y = tuple(sum(x[i] * A[i][j] for i in range(n)) % q for j in range(m))
            k = (counts(x, q), counts(y, q))
            acc[k] = acc.get(k, 0) + w * Fraction(1, q ** n)
    out = {}
    for P in all_types(n, q):
        for Q in all_types(m, q):
            amb = ambient_spectrum(n, q)[P] * ambient_spectrum(m, q)[Q]
            out[(P.counts, Q.counts)] = acc.get((P.counts, Q.counts), 0) / amb
    return out


def all_matrices(n, m, q):
    for e in itertools.product(range(q), repeat=n * m):
        yield [list(e[i * m:(i + 1) * m]) for i in range(n)]


def test_encode_examples():
    assert code([[1, 1]]).encode(Seq.of((1,), 2)).symbols == (1, 1)
    I = code(np.eye(3, dtype=int))
    assert I.encode(Seq.of((1, 0, 1), 2)).symbols == (1, 0, 1)
    G = random_matrix(3, 5, 3, make_rng(0))
    assert LinearCode(G).encode(Seq.zeros(3, 3)).is_zero()


def test_homomorphism_exhaustive():
    for n in range(1, 5):
        G = LinearCode(random_matrix(n, 3, 2, make_rng(n)))
        for a, b in itertools.product(itertools.product(range(2), repeat=n), repeat=2):
            x1, x2 = Seq.of(a, 2), Seq.of(b, 2)
            assert G.encode(x1 + x2) == G.encode(x1) + G.encode(x2)


def test_matmul_mod_matches_integer_product():
    rng = make_rng(3)
    for q in (2, 3, 13):
        X = rng.integers(0, q, (50, 7))
        G = rng.integers(0, q, (7, 9))
        assert np.array_equal(matmul_mod(X, G, q), (X @ G) % q)


def test_kernel_image_examples():
    parity = code([[1], [1]])
    K = kernel_spectrum(parity)
    assert {t.counts: v for t, v in K.items() if v} == {(2, 0): Fraction(1, 2), (0, 2): Fraction(1, 2)}
    I = code(np.eye(3, dtype=int))
    assert {t.counts: v for t, v in kernel_spectrum(I).items() if v} == {(3, 0): 1}
    surj = code([[1, 0], [0, 1], [1, 1]])
    assert image_spectrum(surj) == ambient_spectrum(2, 2)


def test_joint_identity_n1():
    J = joint_spectrum_exact(code([[1]]))
    assert {(k[0].counts, k[1].counts): v for k, v in J.items() if v} == {
        ((1, 0), (1, 0)): Fraction(1, 2), ((0, 1), (0, 1)): Fraction(1, 2)}


@given(st.integers(1, 4), st.integers(1, 4), st.sampled_from([2, 3]), st.integers(0, 10 ** 6))
def test_zero_pair_mass_and_totals(n, m, q, seed):
    J = joint_spectrum_exact(LinearCode(random_matrix(n, m, q, make_rng(seed))))
    z = (TypeVector(q, (n,) + (0,) * (q - 1)), TypeVector(q, (m,) + (0,) * (q - 1)))
    assert J[z] >= Fraction(1, q ** n)
    assert J.total() == 1


@pytest.mark.parametrize("q,n,m", [(2, 1, 1), (2, 2, 2), (2, 2, 3), (2, 3, 2), (3, 1, 2), (3, 2, 2)])
def test_alpha_matches_brute_force(q, n, m):
    mats = list(all_matrices(n, m, q))
    want = brute_alpha(mats, [Fraction(1, len(mats))] * len(mats), n, m, q)
    got = alpha_table(CodeEnsemble.rlc(q, n, m), method="enumerate")
    assert {(P.counts, Q.counts): v for (P, Q), v in got.items()} == want


@pytest.mark.parametrize("q,n,m", [(2, 2, 2), (2, 3, 3), (3, 2, 2)])
def test_rlc_alpha_identically_one(q, n, m):
    t = alpha_table(CodeEnsemble.rlc(q, n, m), method="enumerate")
    for (P, Q), v in t.items():
        if P.is_zero():
            assert v == (q ** m if Q.is_zero() else 0)
        else:
            assert v == 1


@pytest.mark.parametrize("ens", [CodeEnsemble.rlc(2, 2, 3), CodeEnsemble.sparse(2, 3, 2, Fraction(1, 4)),
                                 CodeEnsemble.sparse(3, 2, 2, Fraction(1, 3))])
def test_factorized_route_equals_enumeration(ens):
    a = alpha_table(ens, method="enumerate")
    b = alpha_table(ens, method="factorized")
    assert a.values == b.values and b.exact


def test_sparse_weights_against_brute_force():
    d = Fraction(1, 4)
    mats = list(all_matrices(2, 2, 2))
    w = [math.prod(d if e else 1 - d for r in A for e in r) for A in mats]
    want = brute_alpha(mats, w, 2, 2, 2)
    got = alpha_table(CodeEnsemble.sparse(2, 2, 2, d), method="enumerate")
    assert {(P.counts, Q.counts): v for (P, Q), v in got.items()} == want


def test_identity_alpha_and_goodness():
    t = alpha_table(CodeEnsemble.deterministic(code([[1]])))
    P = TypeVector(2, (1, 0))
    assert t(P, P) == 2
    assert math.isclose(goodness_delta(CodeEnsemble.deterministic(code([[1]]))).delta, math.log(2))
    g = goodness_delta(CodeEnsemble.deterministic(code(np.eye(2, dtype=int))))
    assert g.max_alpha == 4 and math.isclose(g.delta, math.log(2))
    assert goodness_delta(CodeEnsemble.rlc(2, 3, 3)).delta == 0


@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10 ** 6))
def test_goodness_nonnegative(n, m, seed):
    G = LinearCode(random_matrix(n, m, 2, make_rng(seed)))
    assert goodness_delta(CodeEnsemble.deterministic(G)).delta >= 0


def test_interleaving_keeps_joint_spectrum():
    G = LinearCode(random_matrix(3, 3, 2, make_rng(7)))
    J = joint_spectrum_exact(G)
    for s in all_perms(3):
        for t in all_perms(3):
            A = G.generator.array[s.gather][:, t.gather]
            assert joint_spectrum_exact(LinearCode(Matrix.from_array(A, 2))) == J


def test_mc_alpha_within_three_sigma():
    ens = CodeEnsemble.rlc(2, 2, 2)
    exact = alpha_table(ens, method="enumerate")
    est = joint_spectrum_mc(ens, 100000, make_rng(5))
    for (P, Q), v in exact.items():
        amb = float(ambient_spectrum(2, 2)[P] * ambient_spectrum(2, 2)[Q])
        mean, se = est.mean[(P, Q)] / amb, est.stderr[(P, Q)] / amb
        assert abs(mean - float(v)) <= 3 * se + 1e-12


def test_mc_error_shrinks():
    ens = CodeEnsemble.sparse(2, 3, 3, Fraction(1, 4))
    exact = alpha_table(ens, method="factorized")
    errs = []
    for N in (200, 20000):
        t = alpha_table(ens, method="mc", samples=N, rng=make_rng(1))
        errs.append(max(abs(t.values[k] - float(v)) for k, v in exact.items()))
    assert errs[1] < errs[0]


def test_mc_needs_rng():
    with pytest.raises(DomainError):
        alpha_table(CodeEnsemble.rlc(2, 2, 2), method="mc", samples=10)


def test_randomized_code_basics():
    G = code([[1, 0, 1], [0, 1, 1]])
    plain = RandomizedAffineCode(G, Perm.identity(2), Perm.identity(3), Seq.zeros(3, 2))
    for x in itertools.product(range(2), repeat=2):
        assert plain.evaluate(Seq.of(x, 2)) == G.encode(Seq.of(x, 2))
    rc = randomize(G, make_rng(2))
    assert rc.evaluate(Seq.zeros(2, 2)) == rc.offset


def test_randomized_marginal_uniform():
    G = code([[1, 1], [0, 1]])
    marg, _, realizations = randomized_pair_law(CodeEnsemble.deterministic(G))
    assert realizations == 2 * 2 * 4
    assert all(p == Fraction(1, 4) for row in marg for p in row)


@pytest.mark.parametrize("ens", [CodeEnsemble.rlc(2, 2, 2), CodeEnsemble.deterministic(code([[1]])),
                                 CodeEnsemble.deterministic(code([[1, 0, 1], [0, 1, 1]])),
                                 CodeEnsemble.sparse(2, 2, 2, Fraction(1, 3))])
def test_pairwise_identities(ens):
    rep = verify_pairwise_independence(ens)
    assert rep.ok


def test_pairwise_detects_corruption():
    ens = CodeEnsemble.rlc(2, 2, 2)
    t = alpha_table(ens, method="enumerate")
    bad = dict(t.values)
    key = next(k for k in bad if not k[0].is_zero())
    bad[key] = bad[key] + 1
    import dataclasses
    rep = verify_pairwise_independence(ens, alpha_override=dataclasses.replace(t, values=bad))
    assert not rep.ok


def test_pairwise_rlc_conditional_is_uniform():
    _, joint, _ = randomized_pair_law(CodeEnsemble.rlc(2, 2, 2))
    for law in joint.values():
        assert all(p == Fraction(1, 16) for p in law.values()) and len(law) == 16


def test_certified_sample():
    assert spectrum_ratio(code(np.eye(2, dtype=int)))[0] == 4
    cert = sample_certified_code(CodeEnsemble.deterministic(code(np.eye(2, dtype=int))), 3, 3, make_rng(0))
    assert cert.ratio == 4 and cert.ratio < cert.threshold
    with pytest.raises(DomainError):
        sample_certified_code(CodeEnsemble.rlc(2, 2, 2), 2, 3, make_rng(0))
    rng = make_rng(4)
    for _ in range(5):
        c = sample_certified_code(CodeEnsemble.rlc(2, 3, 3), 2.5, 2.5, rng)
        assert spectrum_ratio(c.code)[0] < c.threshold


def test_table_criteria():
    assert certify_table1(CodeEnsemble.rlc(2, 2, 3), "joint").delta == 0
    rep = certify_table1(code([[1, 1, 1, 1]]), "image")
    # image {0000, 1111}: half the mass on a type of ambient mass 1/16
    assert rep.max_ratio == 8 and rep.delta > 0
    rep = certify_table1(code(np.eye(3, dtype=int)), "kernel")
    assert rep.verdict == "vacuously good" and rep.delta == -math.inf
    with pytest.raises(DomainError):
        certify_table1(code([[1]]), "other")


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        alpha_table(CodeEnsemble.rlc(2, 4, 4), method="enumerate", budget=1000)
    t = alpha_table(CodeEnsemble.rlc(2, 4, 4), budget=1000)
    assert t.method == "factorized" and t.exact
