import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jscc.algebra import (DimensionError, DomainError, Matrix, ParseError, Perm, Seq, all_perms,
                          all_sequences, make_rng)
from jscc.codes import CodeEnsemble, LinearCode, RandomizedAffineCode, alpha_table
from jscc.encoder import (ConditionalPMF, JsccEncoder, apportion, beta, beta_prime,
                          build_punctured_encoder, build_quantizer, describe_quantizer,
                          draw_encoder, format_encoder, independent_encoder_law,
                          jscc_encoder_law, parse_encoder, parse_target, rho, rho_max,
                          smallest_block_size)

F = Fraction
HALF = F(1, 2)


def code(rows, q=2):
    return LinearCode(Matrix.from_array(rows, q))


def direct_laws(ens_members, quant, n, l, q):
    """Pr{Phi(v)=x} and Pr{Phi(v)=x, Phi(v')=x'} by looping over realizations."""
    marg, pair = {}, {}
    V = [tuple(v) for v in all_sequences(n, q)]
    for w, G in ens_members:
        for s, t in itertools.product(all_perms(n), all_perms(l)):
            for c in itertools.product(range(q), repeat=l):
                rc = RandomizedAffineCode(G, s, t, Seq.of(c, q))
                weight = w * F(1, math.factorial(n) * math.factorial(l) * q ** l)
                out = {v: tuple(quant(Seq.of(v, q), rc.evaluate(Seq.of(v, q))).symbols) for v in V}
                for v in V:
                    marg[(v, out[v])] = marg.get((v, out[v]), 0) + weight
                    for va in V:
                        if va != v:
                            k = (v, va, out[v], out[va])
                            pair[k] = pair.get(k, 0) + weight
    return marg, pair


def test_apportion_examples():
    assert apportion([F(1, 3)] * 3, 4) == [2, 1, 1]
    assert apportion([F(1, 16), F(15, 16)], 4) == [0, 4]
    assert apportion([F(3, 4), F(1, 4)], 4) == [3, 1]


@given(st.lists(st.integers(0, 20), min_size=2, max_size=5).filter(lambda w: sum(w) > 0), st.integers(1, 64))
def test_apportion_sums_and_quota(weights, slots):
    probs = [F(w, sum(weights)) for w in weights]
    got = apportion(probs, slots)
    assert sum(got) == slots
    assert all(abs(c - p * slots) < 1 for c, p in zip(got, probs))


def test_quantizer_three_quarters():
    target = ConditionalPMF.independent([F(3, 4), F(1, 4)], 2, 1, 1)
    quant, rep = build_quantizer(target, 2, 2)
    assert rep.max_tv == 0
    text = describe_quantizer(quant, rep)
    assert "any v x=0: {00,01,10}" in text and "any v x=1: {11}" in text


def test_uniform_binary_quantizer_is_identity():
    quant, rep = build_quantizer(ConditionalPMF.independent([HALF, HALF], 2, 3, 3), 1, 2)
    U = all_sequences(3, 2)
    for v in all_sequences(3, 2):
        assert np.array_equal(quant.apply_array(np.tile(v, (8, 1)), U), U)


def test_point_mass_quantizer_is_constant():
    quant, rep = build_quantizer(ConditionalPMF.independent([0, 1, 0], 2, 2, 2), 3, 2)
    assert rep.max_tv == 0
    assert set(np.unique(quant.assignment())) == {4}  # x = (1, 1) over a ternary input


def test_non_adic_tv_bound():
    third = F(1, 3)
    for l in range(1, 7):
        for dist in ([third] * 3, [F(1, 5), F(4, 5)], [F(2, 7), F(2, 7), F(3, 7)]):
            rep = build_quantizer(ConditionalPMF.independent(dist, 2, 1, 1), l, 2)[1]
            assert rep.max_tv <= F(len(dist), 2 * 2 ** l)
            assert sum(rep.abs_error.values(), F(0)) / 2 == rep.max_tv or len(rep.tv) == 1


def test_starved_outputs_flagged():
    rep = build_quantizer(ConditionalPMF.independent([F(1, 16), F(15, 16)], 2, 1, 1), 1, 2)[1]
    assert rep.starved


def test_smallest_block_size():
    assert smallest_block_size([F(3, 4), F(1, 4)], 2) == 2
    assert smallest_block_size([HALF, HALF], 2) == 1
    with pytest.raises(DomainError):
        smallest_block_size([F(1, 3), F(2, 3)], 2, tol=0, max_l0=5)


def test_degenerate_and_pass_through_encoders():
    G = code([[1, 0], [0, 1]])
    const, _ = build_quantizer(ConditionalPMF.independent([0, 1], 2, 2, 2), 1, 2)
    enc = draw_encoder(G, const, make_rng(0))
    assert all(enc.encode(Seq.of(v, 2)).symbols == (1, 1) for v in itertools.product(range(2), repeat=2))
    ident, _ = build_quantizer(ConditionalPMF.independent([HALF, HALF], 2, 2, 2), 1, 2)
    trivial = RandomizedAffineCode(G, Perm.identity(2), Perm.identity(2), Seq.zeros(2, 2))
    enc = JsccEncoder(G, ident, trivial)
    assert all(enc.encode(Seq.of(v, 2)).symbols == v for v in itertools.product(range(2), repeat=2))


def test_encoder_dimension_checks():
    quant, _ = build_quantizer(ConditionalPMF.independent([HALF, HALF], 2, 2, 2), 1, 2)
    with pytest.raises(DimensionError):
        draw_encoder(code([[1, 0, 0], [0, 1, 0]]), quant, make_rng(0))
    with pytest.raises(DimensionError):
        jscc_encoder_law(CodeEnsemble.rlc(2, 2, 3), quant)


TARGET = ConditionalPMF.per_symbol([[F(3, 4), F(1, 4)], [F(1, 4), F(3, 4)]], 2, 2)
FULL = ConditionalPMF.full({(0, 0): {(0, 0): HALF, (1, 1): HALF}, (0, 1): {(0, 1): F(1)},
                            (1, 0): {(1, 0): HALF, (0, 0): HALF},
                            (1, 1): {(1, 1): F(3, 4), (0, 1): F(1, 4)}}, 2, 2, 2, 2)


def test_encoder_marginal_direct():
    ens = CodeEnsemble.rlc(2, 2, 2)
    quant, _ = build_quantizer(FULL, 2, 2)
    marg, _ = direct_laws(ens.members if hasattr(ens, "members") and ens.members else
                          [(F(1, 16), code(np.array(e).reshape(2, 2))) for e in itertools.product(range(2), repeat=4)],
                          quant, 2, 2, 2)
    pmf = quant.realized_pmf()
    for v in itertools.product(range(2), repeat=2):
        for x in itertools.product(range(2), repeat=2):
            assert marg.get((v, x), 0) == pmf.prob(v, x)


def test_encoder_pair_law_matches_beta():
    members = [(F(1, 16), code(np.array(e).reshape(2, 2))) for e in itertools.product(range(2), repeat=4)]
    ens = CodeEnsemble.explicit(members)
    quant, _ = build_quantizer(FULL, 2, 2)
    _, pair = direct_laws(members, quant, 2, 2, 2)
    pmf = quant.realized_pmf()
    table = alpha_table(ens, method="enumerate")
    V = list(itertools.product(range(2), repeat=2))
    for v, va in itertools.permutations(V, 2):
        for x, xa in itertools.product(V, repeat=2):
            p, pa = pmf.prob(v, x), pmf.prob(va, xa)
            want = p * pa * beta(table, quant, v, va, x, xa) if p and pa else 0
            assert pair.get((v, va, x, xa), 0) == want


def test_rlc_beta_identically_one():
    ens = CodeEnsemble.rlc(2, 2, 2)
    quant, _ = build_quantizer(FULL, 2, 2)
    for v, va in itertools.permutations(list(itertools.product(range(2), repeat=2)), 2):
        for x in [(0, 0), (1, 1)]:
            if quant.preimage(Seq.of(v, 2), Seq.of(x, 2)).size and quant.preimage(Seq.of(va, 2), Seq.of(x, 2)).size:
                assert beta(ens, quant, v, va, x, x) == 1
    assert rho(ens, quant) == 0


def test_beta_prime_dominates_beta():
    ens = CodeEnsemble.deterministic(code([[1, 0, 1, 1], [0, 1, 1, 0]]))
    quant, _ = build_quantizer(TARGET, 2, 2)
    V = list(itertools.product(range(2), repeat=2))
    for v, va in itertools.permutations(V, 2):
        for x, xa in itertools.product(V, repeat=2):
            b = beta(ens, quant, v, va, x, xa)
            assert 0 <= b <= beta_prime(ens, quant, va, xa)


def test_identity_pass_through_rho():
    ens = CodeEnsemble.deterministic(code([[1]]))
    quant, _ = build_quantizer(ConditionalPMF.independent([HALF, HALF], 2, 1, 1), 1, 2)
    assert beta_prime(ens, quant, (1,), (1,)) == 2
    assert math.isclose(rho(ens, quant), math.log(2))
    assert math.isclose(rho_max(jscc_encoder_law(ens, quant)), math.log(2))


ALL_2x2 = [np.array(e).reshape(2, 2) for e in itertools.product(range(2), repeat=4)]


@pytest.mark.parametrize("A", ALL_2x2, ids=lambda A: "".join(map(str, A.ravel())))
def test_rho_two_routes(A):
    ens = CodeEnsemble.deterministic(code(A))
    passthrough, _ = build_quantizer(ConditionalPMF.independent([HALF, HALF], 2, 2, 2), 1, 2)
    assert math.isclose(rho(ens, passthrough), rho_max(jscc_encoder_law(ens, passthrough)), abs_tol=1e-12)
    # with multi-element preimages the law averages what beta_prime maximizes
    full, _ = build_quantizer(FULL, 2, 2)
    assert rho_max(jscc_encoder_law(ens, full)) <= rho(ens, full) + 1e-12


def test_rho_two_routes_rlc():
    quant, _ = build_quantizer(FULL, 2, 2)
    ens = CodeEnsemble.rlc(2, 2, 2)
    assert rho(ens, quant) == 0 == rho_max(jscc_encoder_law(ens, quant))


def test_independent_construction_rho_zero():
    law = independent_encoder_law(TARGET)
    assert rho_max(law) == 0
    assert sum(law.weights) == 1


def test_encoder_law_sums_to_one():
    quant, _ = build_quantizer(TARGET, 2, 2)
    law = jscc_encoder_law(CodeEnsemble.rlc(2, 2, 4), quant)
    assert sum(law.weights) == 1
    assert rho_max(law) >= 0


def test_punctured_encoder():
    G = code([[1, 0, 0, 1], [0, 1, 1, 1]])
    enc = build_punctured_encoder(G, [HALF, HALF], 4, make_rng(0))
    assert enc.quantizer.l0 == 1
    for v in itertools.product(range(2), repeat=2):
        assert enc.encode(Seq.of(v, 2)) == enc.randomization.evaluate(Seq.of(v, 2))
    enc = build_punctured_encoder(G, [F(3, 4), F(1, 4)], 2, make_rng(0))
    assert enc.quantizer.l0 == 2 and enc.m == 2
    with pytest.raises(DimensionError):
        build_punctured_encoder(G, [F(3, 4), F(1, 4)], 3, make_rng(0))


def test_punctured_marginal_exact():
    members = [(F(1, 256), code(np.array(e).reshape(2, 4))) for e in itertools.product(range(2), repeat=8)]
    ens = CodeEnsemble.explicit(members)
    target = ConditionalPMF.independent([F(3, 4), F(1, 4)], 2, 2, 2)
    quant, _ = build_quantizer(target, 2, 2, code_length=4)
    law = jscc_encoder_law(ens, quant)
    X = [tuple(x) for x in all_sequences(2, 2)]
    for v in range(4):
        got = law.marginal(v)
        for xi, x in enumerate(X):
            assert got.get(xi, 0) == target.prob((0, 0), x)


def test_target_parsing():
    pmf, l = parse_target("2 2 2 2 2\n0 0 3 4\n0 1 1 4\n1 0 1 4\n1 1 3 4\n")
    assert l == 2 and pmf.factorized and not pmf.v_independent
    pmf, l = parse_target("# comment\n2 1 3 1\n0 1 2\n2 1 2\n")
    assert l is None and pmf.v_independent and pmf.rows[0] == (HALF, 0, HALF)
    pmf, _ = parse_target("2 1 2 2\n0 00 1 1\n1 11 1 2\n1 01 1 2\n")
    assert not pmf.factorized and pmf.prob((1,), (0, 1)) == HALF
    for bad, line in [("", 1), ("2 2\n0 1 1\n", 1), ("4 1 2 1\n0 1 1\n", 1), ("2 1 2 1\n0 1\n", 2)]:
        with pytest.raises(ParseError) as err:
            parse_target(bad)
        assert err.value.line == line


def test_encoder_file_roundtrip():
    G = code([[1, 0, 0, 1], [0, 1, 1, 1]])
    quant, _ = build_quantizer(ConditionalPMF.independent([HALF, HALF], 2, 2, 4), 1, 2)
    enc = draw_encoder(G, quant, make_rng(3))
    assert parse_encoder(format_encoder(enc)) == enc.randomization
    with pytest.raises(ParseError):
        parse_encoder("2 1 1\n1\n")


def test_pmf_validation():
    with pytest.raises(DomainError):
        ConditionalPMF.independent([HALF, F(1, 3)], 2, 1, 1)
