"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 budget
exceeded.  Reports go to standard output unless ``--out`` is given.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import (DEFAULT_BUDGET, BudgetExceeded, DimensionError, DomainError, Matrix,
                      ParseError, all_perms, all_sequences, check_budget, format_symbols,
                      make_rng, parse_symbols, read_matrix, Seq)
from .analysis import (b_set_size, distance_check, fmt, gv_check, matrix_density,
                       min_distance, min_entropy_profile, sparse_non_goodness_check,
                       systematic_rate_check, analysis_csv)
from .codes import (AlphaTable, CodeEnsemble, LinearCode, alpha_table, certify_table1,
                    goodness_delta, image_spectrum, joint_spectrum_exact, kernel_spectrum,
                    verify_pairwise_independence)
from .encoder import (ConditionalPMF, beta, build_quantizer, describe_quantizer, draw_encoder,
                      format_encoder, jscc_encoder_law, parse_encoder, parse_target, rho,
                      rho_max, JsccEncoder)
from .channel import parse_config, report_csv, run_simulation
from .spectra import (ambient_spectrum, check_perm_invariance,
                      exhaustive_binning_spectrum, product_spectrum, random_binning_expected_spectrum,
                      set_spectrum, spectrum_csv, tuple_set_spectrum)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
LN2 = math.log(2)

# analysis quantities measured in nats; --bits rescales only these
LOG_QUANTITIES = {"delta", "delta_lower", "condition", "lower", "floor", "unit_output_entropy",
                  "gv_lhs", "gv_rhs", "min_output_entropy", "min_score"}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _nats(args, x):
    if args.bits and isinstance(x, (int, float, Fraction)) and not isinstance(x, bool):
        return float(x) / LN2
    return x


def _unit(args) -> str:
    return "bits" if args.bits else "nats"


def _rng(args):
    if args.seed is None:
        raise UsageError(f"{args.command} is stochastic: --seed is required")
    return make_rng(args.seed)


def _int(tok: str, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise UsageError(f"{what} must be an integer, got {tok!r}") from None


def _fraction(tok: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {tok!r}") from None


def load_ensemble(tokens) -> CodeEnsemble:
    """A matrix file, ``rlc q n m`` or ``sparse q n m density``."""
    if not tokens:
        raise UsageError("missing code")
    kind = tokens[0]
    if kind == "rlc":
        if len(tokens) != 4:
            raise UsageError("usage: rlc q n m")
        q, n, m = (_int(t, "rlc parameter") for t in tokens[1:])
        return CodeEnsemble.rlc(q, n, m)
    if kind == "sparse":
        if len(tokens) != 5:
            raise UsageError("usage: sparse q n m density")
        q, n, m = (_int(t, "sparse parameter") for t in tokens[1:4])
        return CodeEnsemble.sparse(q, n, m, _fraction(tokens[4]))
    if len(tokens) != 1:
        raise UsageError("expected one matrix file")
    return CodeEnsemble.deterministic(LinearCode(read_matrix(kind)))


def load_code(path: str) -> LinearCode:
    return LinearCode(read_matrix(path))


def _fmt_type(t) -> str:
    return "(" + ",".join(str(c) for c in t.counts) + ")"


def alpha_csv(table: AlphaTable) -> str:
    q = table.q
    head = [f"x{a}" for a in range(q)] + [f"y{a}" for a in range(q)]
    lines = [f"# {table.header()}"]
    if table.exact:
        lines.append(",".join(head + ["num", "den"]))
    else:
        lines.append(",".join(head + ["value", "stderr"]))
    for (P, Q), v in table.items():
        cells = [str(c) for c in P.counts + Q.counts]
        if table.exact:
            v = Fraction(v)
            cells += [str(v.numerator), str(v.denominator)]
        else:
            cells += [fmt(float(v)), fmt(float(table.stderr[(P, Q)]))]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_spectrum(args) -> int:
    code = load_code(args.matrix)
    fn = {"kernel": kernel_spectrum, "image": image_spectrum, "joint": joint_spectrum_exact}[args.which]
    S = fn(code, args.budget)
    _emit(args, spectrum_csv(S, header=f"status=exact which={args.which} samples=0"))
    return EXIT_OK


def cmd_alpha(args) -> int:
    ens = load_ensemble(args.code)
    rng = _rng(args) if args.method == "mc" else None
    table = alpha_table(ens, method=args.method, samples=args.samples, rng=rng, budget=args.budget)
    _emit(args, alpha_csv(table))
    return EXIT_OK


def cmd_goodness(args) -> int:
    ens = load_ensemble(args.code)
    rep = certify_table1(ens, args.criterion, args.budget)
    lines = [f"criterion {rep.criterion}"]
    lines.append(f"delta {fmt(_nats(args, rep.delta))} {_unit(args)}")
    if rep.argmax is None:
        lines.append("argmax none")
    elif isinstance(rep.argmax, tuple):
        P, Q = rep.argmax
        lines.append(f"argmax P={_fmt_type(P)} Q={_fmt_type(Q)}")
    else:
        lines.append(f"argmax P={_fmt_type(rep.argmax)}")
    lines.append(f"max_ratio {rep.max_ratio}")
    lines.append(f"status {'exact' if rep.exact else 'estimated'}")
    lines.append(f"verdict {rep.verdict}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _target(args):
    pmf, l_file = parse_target(Path(args.target).read_text())
    l = args.l if args.l is not None else l_file
    if l is None:
        raise UsageError("block size not given: add it to the target header or pass --l")
    return pmf, l


def cmd_quantizer(args) -> int:
    pmf, l = _target(args)
    quant, report = build_quantizer(pmf, l, args.qU, args.code_length)
    _emit(args, describe_quantizer(quant, report))
    return EXIT_OK


def cmd_encode(args) -> int:
    code = load_code(args.matrix)
    pmf, l = _target(args)
    length = None
    if pmf.factorized:
        # per-letter rows: block lengths follow the code, not the target header
        length = code.m
        if pmf.v_independent:
            pmf = ConditionalPMF.independent(pmf.rows[0], code.q, code.n, code.m // l)
        else:
            pmf = ConditionalPMF.per_symbol(pmf.rows, code.n, pmf.qX)
    quant, _ = build_quantizer(pmf, l, code.q, length)
    if args.encoder:
        rc = parse_encoder(Path(args.encoder).read_text())
        if rc.base != code:
            raise UsageError("encoder file was built for a different matrix")
        enc = JsccEncoder(code, quant, rc)
    else:
        enc = draw_encoder(code, quant, _rng(args))
    if args.save_encoder:
        Path(args.save_encoder).write_text(format_encoder(enc))
    lines = [format_encoder(enc).rstrip("\n")]
    words = args.word or [format_symbols(v, code.q) for v in all_sequences(code.n, code.q, args.budget)]
    for w in words:
        v = Seq.of(parse_symbols(w, code.q), code.q)
        lines.append(f"{format_symbols(v.symbols, code.q)} -> {format_symbols(enc.encode(v).symbols, pmf.qX)}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    path = Path(args.config)
    cfg = parse_config(path.read_text(), path.parent)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    reports = run_simulation(cfg, threads=args.threads, budget=args.budget)
    _emit(args, report_csv(reports))
    return EXIT_OK


def cmd_analyze(args) -> int:
    rows, verdicts = [], []

    def add(n, name, value):
        rows.append((n, name, _nats(args, value) if name in LOG_QUANTITIES else value))

    what = args.what
    if what == "distance":
        rate = _fraction(args.rate)
        ens = []
        for n in args.ns:
            m = Fraction(n) / rate
            if m.denominator != 1:
                raise UsageError(f"n={n} at rate {rate} gives a fractional length")
            ens.append(CodeEnsemble.rlc(args.q, n, int(m)))
        rng = _rng(args) if args.samples else None
        rep = distance_check(ens, args.hx, args.hy, args.delta, args.samples, rng, args.budget)
        add(0, "condition", rep.condition)
        for r in rep.rows:
            add(r.n, "expected_B", r.expected)
            add(r.n, "stderr", r.stderr)
            if r.exact is not None:
                add(r.n, "exact_B", r.exact)
            add(r.n, "bound", r.bound)
            add(r.n, "delta", r.delta)
        verdicts.append(rep.verdict)
    elif what == "gv":
        ens = CodeEnsemble.rlc(args.q, args.n, args.m)
        rep = gv_check(ens, args.samples, args.slack, _rng(args), args.budget)
        for i, s in enumerate(rep.samples):
            add(args.n, f"D[{i}]", s.delta)
            add(args.n, "gv_lhs", s.lhs)
        add(args.n, "gv_rhs", rep.samples[0].rhs if rep.samples else math.nan)
        verdicts.append(f"{rep.pass_count} of {len(rep.samples)} samples satisfy the GV inequality")
        verdicts.append("entropy-profile cross-check " + ("agrees" if rep.cross_ok else "DISAGREES"))
    elif what == "density":
        rep = matrix_density(read_matrix(args.matrix))
        add(0, "density", rep.density)
        add(0, "threshold", rep.threshold)
        verdicts.append(rep.verdict)
    elif what == "sparse":
        rng = _rng(args) if args.samples else None
        rep = sparse_non_goodness_check(args.q, _fraction(args.density), args.ns, None,
                                        args.mc_from, args.samples, rng, args.budget)
        for r in rep.rows:
            add(r.n, "delta", r.delta)
            add(r.n, "alpha_stderr", r.stderr)
            add(r.n, "lower", r.lower)
            add(r.n, "floor", r.floor)
            add(r.n, "unit_output_entropy", r.unit_output_entropy)
        verdicts.append("floor non-decreasing" if rep.floor_non_decreasing else "floor decreases")
    elif what == "systematic":
        code = load_code(args.matrix)
        pos = [p - 1 for p in args.positions] if args.positions else None
        rep = systematic_rate_check(code, pos, budget=args.budget)
        add(code.n, "rate", rep.rate)
        if rep.delta is not None:
            add(code.n, "delta_lower", rep.delta)
            add(code.n, "floor", rep.floor)
        verdicts.append(rep.verdict)
    elif what == "profile":
        code = load_code(args.matrix)
        prof = min_entropy_profile(code, args.delta or 0.0, args.budget)
        D, arg = min_distance(code, args.budget)
        add(code.n, "min_score", prof.min_value)
        add(code.n, "min_output_entropy", prof.min_output_entropy)
        add(code.n, "min_distance", D)
        verdicts.append(f"min distance attained at x={format_symbols(arg, code.q)}")
    _emit(args, analysis_csv(rows, verdicts))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Verification batteries
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class Check:
    name: str
    kind: str  # exact | mc
    cost: int  # enumeration size checked against the budget up front
    run: object


def _corrupt(table: AlphaTable) -> AlphaTable:
    values = dict(table.values)
    key = next(k for k, v in table.items() if not k[0].is_zero() and v)
    values[key] = values[key] * 2
    return dataclasses.replace(table, values=values)


def _props_checks(budget, corrupt: bool) -> list:
    def ambient():
        for q in (2, 3):
            for n in range(1, 7 if q == 2 else 5):
                if set_spectrum(Seq.of(s, q) for s in all_sequences(n, q, budget)) != ambient_spectrum(n, q):
                    return False
        return True

    def product():
        A = [Seq.of(s, 2) for s in [(0, 1), (1, 1)]]
        B = [Seq.of(s, 3) for s in [(0,), (2,)]]
        lhs = product_spectrum([set_spectrum(A), set_spectrum(B)])
        return lhs == tuple_set_spectrum(itertools.product(A, B))

    def binning():
        return all(random_binning_expected_spectrum(n, m, 2, 2) == exhaustive_binning_spectrum(n, m, 2, 2, budget)
                   for n, m in [(1, 1), (2, 1), (1, 2), (2, 2)])

    def rlc_alpha():
        for q, n, m in [(2, 2, 2), (2, 2, 3), (2, 3, 2), (3, 2, 2)]:
            t = alpha_table(CodeEnsemble.rlc(q, n, m), method="enumerate", budget=budget)
            if corrupt:
                t = _corrupt(t)
            if any(v != 1 for (P, _), v in t.items() if not P.is_zero()):
                return False
        return True

    def zero_input():
        for ens in (CodeEnsemble.rlc(2, 2, 3), CodeEnsemble.sparse(2, 2, 2, Fraction(1, 4))):
            t = alpha_table(ens, method="enumerate", budget=budget)
            for (P, Q), v in t.items():
                if P.is_zero() and v != (2 ** ens.m if Q.is_zero() else 0):
                    return False
        return True

    def factorized_route():
        for ens in (CodeEnsemble.rlc(2, 2, 3), CodeEnsemble.sparse(2, 3, 2, Fraction(1, 3))):
            a = alpha_table(ens, method="enumerate", budget=budget)
            b = alpha_table(ens, method="factorized", budget=budget)
            if a.values != b.values:
                return False
        return True

    def pairwise():
        ens = CodeEnsemble.rlc(2, 2, 2)
        override = _corrupt(alpha_table(ens, method="enumerate", budget=budget)) if corrupt else None
        return verify_pairwise_independence(ens, budget, override).ok

    def interleaver():
        code = LinearCode(Matrix.from_array([[1, 0, 1], [0, 1, 1]], 2))
        X = all_sequences(2, 2, budget)
        pairs = [(Seq.of(x, 2), Seq.of(y, 2)) for x, y in zip(X, code.encode_array(X))]
        return all(check_perm_invariance(pairs, (s, t)) for s in all_perms(2) for t in all_perms(3))

    def mc_alpha():
        ens = CodeEnsemble.rlc(2, 2, 2)
        t = alpha_table(ens, method="mc", samples=4000, rng=make_rng(0), budget=budget)
        return all(abs(v - 1) <= 4 * t.stderr[k] + 1e-12 for k, v in t.items() if not k[0].is_zero())

    return [
        Check("ambient spectrum equals counting", "exact", 3 ** 4, ambient),
        Check("product spectrum identity", "exact", 4, product),
        Check("random binning expected spectrum", "exact", 4 ** 4, binning),
        Check("rlc alpha identically one", "exact", 3 ** 4, rlc_alpha),
        Check("zero-input alpha", "exact", 2 ** 6, zero_input),
        Check("factorized alpha equals enumeration", "exact", 2 ** 6, factorized_route),
        Check("randomized code pairwise law", "exact", 16 * 2 * 2 * 4, pairwise),
        Check("interleaver invariance of joint spectrum", "exact", 2 * 6 * 4, interleaver),
        Check("sampled alpha near one", "mc", 4000, mc_alpha),
    ]


def _encoder_checks(budget, corrupt: bool) -> list:
    h = Fraction(1, 2)
    ens = CodeEnsemble.rlc(2, 2, 2)
    target = ConditionalPMF.per_symbol([[Fraction(3, 4), Fraction(1, 4)], [Fraction(1, 4), Fraction(3, 4)]], 2, 2)

    def marginal():
        quant, _ = build_quantizer(target, 2, 2)
        law = jscc_encoder_law(CodeEnsemble.rlc(2, 2, 4), quant, budget)
        pmf = quant.realized_pmf()
        X = all_sequences(2, 2)
        for vi, v in enumerate(all_sequences(2, 2)):
            got = law.marginal(vi)
            for xi, x in enumerate(X):
                if got.get(xi, 0) != pmf.prob(tuple(v), tuple(x)):
                    return False
        return True

    def pair():
        quant = build_quantizer(ConditionalPMF.full(
            {(0, 0): {(0, 0): h, (1, 1): h}, (0, 1): {(0, 1): 1}, (1, 0): {(1, 0): h, (0, 0): h},
             (1, 1): {(1, 1): Fraction(3, 4), (0, 1): Fraction(1, 4)}}, 2, 2, 2, 2), 2, 2)[0]
        table = alpha_table(ens, method="enumerate", budget=budget)
        if corrupt:
            table = _corrupt(table)
        law = jscc_encoder_law(ens, quant, budget)
        pmf = quant.realized_pmf()
        V, X = all_sequences(2, 2), all_sequences(2, 2)
        for vi, vai in itertools.permutations(range(len(V)), 2):
            joint = law.pair(vi, vai)
            for xi, xai in itertools.product(range(len(X)), repeat=2):
                v, va, x, xa = (tuple(int(s) for s in a) for a in (V[vi], V[vai], X[xi], X[xai]))
                p, pa = pmf.prob(v, x), pmf.prob(va, xa)
                want = p * pa * beta(table, quant, v, va, x, xa) if p and pa else 0
                if joint.get((xi, xai), 0) != want:
                    return False
        return True

    def adic():
        pmf = ConditionalPMF.per_symbol([[Fraction(1, 4), Fraction(3, 4)], [h, h]], 2, 2)
        return build_quantizer(pmf, 2, 2)[1].max_tv == 0

    def non_adic():
        third = Fraction(1, 3)
        pmf = ConditionalPMF.independent([third, third, third], 2, 1, 1)
        for l in range(1, 6):
            rep = build_quantizer(pmf, l, 2)[1]
            if rep.max_tv > Fraction(3, 2 * 2 ** l):
                return False
        return True

    def rho_routes():
        quant, _ = build_quantizer(target, 2, 2)
        ens4 = CodeEnsemble.rlc(2, 2, 4)
        return math.isclose(rho(ens4, quant), rho_max(jscc_encoder_law(ens4, quant, budget)), abs_tol=1e-12)

    def pass_through():
        code = CodeEnsemble.deterministic(LinearCode(Matrix.from_array([[1, 0], [1, 1]], 2)))
        quant, _ = build_quantizer(ConditionalPMF.independent([h, h], 2, 2, 2), 1, 2)
        d = goodness_delta(code, budget=budget).delta
        return math.isclose(rho(code, quant), d, abs_tol=1e-12) and \
            math.isclose(rho_max(jscc_encoder_law(code, quant, budget)), d, abs_tol=1e-12)

    return [
        Check("encoder marginal equals quantizer pmf", "exact", 256 * 2 * 24 * 16, marginal),
        Check("encoder pair law equals beta formula", "exact", 16 * 2 * 2 * 4 * 16, pair),
        Check("adic target realized exactly", "exact", 4, adic),
        Check("non-adic target within slot resolution", "exact", 32, non_adic),
        Check("rlc rho zero on both routes", "exact", 256 * 2 * 24 * 16, rho_routes),
        Check("pass-through rho equals code goodness", "exact", 2 * 2 * 4, pass_through),
    ]


def _analysis_checks(budget, corrupt: bool) -> list:
    def b_routes():
        q, n, m = 2, 2, 4
        members = [(Fraction(1, q ** (n * m)), LinearCode(Matrix.from_array(np.array(bits).reshape(n, m), q)))
                   for bits in itertools.product(range(q), repeat=n * m)]
        explicit = CodeEnsemble.explicit(members)
        return b_set_size(CodeEnsemble.rlc(q, n, m), 0.6, 0.4, budget) == b_set_size(explicit, 0.6, 0.4, budget)

    def vacuous():
        code = LinearCode(Matrix.identity(3, 2))
        return b_set_size(code, 10.0, 10.0, budget) == 7

    def distance_trend():
        ens = [CodeEnsemble.rlc(2, n, 2 * n) for n in (2, 4, 6)]
        rep = distance_check(ens, 0.1, 0.2, 0.0, budget=budget)
        return rep.non_increasing and rep.within_bound

    def gv_cross():
        rep = gv_check(CodeEnsemble.rlc(2, 4, 8), 20, 0.15, make_rng(0), budget)
        return rep.cross_ok

    def systematic():
        code = LinearCode(Matrix.from_array([[1, 0, 1], [0, 1, 1]], 2))
        return systematic_rate_check(code, [0, 1], budget=budget).verdict == "corollary consistent"

    def sparse_floor():
        rep = sparse_non_goodness_check(2, Fraction(1, 4), [2, 3, 4], budget=budget)
        return all(r.delta >= r.floor - 1e-12 for r in rep.rows) and rep.floor_non_decreasing

    def gv_rate():
        rep = gv_check(CodeEnsemble.rlc(2, 6, 12), 50, 0.15, make_rng(1), budget)
        return rep.pass_fraction >= 0.9

    return [
        Check("expected B: factorized equals enumeration", "exact", 2 ** 8 * 4, b_routes),
        Check("B of identity code with vacuous thresholds", "exact", 8, vacuous),
        Check("distance bound and trend", "exact", 2 ** 6, distance_trend),
        Check("GV entropy-profile cross-check", "exact", 20 * 16, gv_cross),
        Check("systematic rate corollary", "exact", 4, systematic),
        Check("sparse goodness floor", "exact", 2 ** 16, sparse_floor),
        Check("GV inequality on sampled codes", "mc", 50 * 64, gv_rate),
    ]


SUITES = {"props": _props_checks, "encoder": _encoder_checks, "analysis": _analysis_checks}


def cmd_verify(args) -> int:
    checks = SUITES[args.suite](args.budget, args.corrupt_alpha)
    lines, failed, skipped = [], False, 0
    for c in checks:
        try:
            check_budget(c.cost, args.budget, c.name)
            ok = bool(c.run())
        except BudgetExceeded:
            lines.append(f"{c.name},{c.kind},SKIP")
            skipped += 1
            continue
        lines.append(f"{c.name},{c.kind},{'PASS' if ok else 'FAIL'}")
        if not ok and c.kind == "exact":
            failed = True
    if skipped == len(checks):
        print(f"warning: all {len(checks)} checks skipped at budget {args.budget}", file=sys.stderr)
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report to this file instead of stdout")
    common.add_argument("--bits", action="store_true", help="display information quantities in bits")
    common.add_argument("--seed", type=int, help="seed for stochastic commands")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                        help="largest enumeration allowed (default %(default)s)")

    p = argparse.ArgumentParser(prog="jscc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="exact kernel, image or joint spectrum")
    s.add_argument("matrix")
    s.add_argument("--which", choices=["kernel", "image", "joint"], default="joint")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("alpha", parents=[common], help="alpha table of a code or ensemble")
    s.add_argument("code", nargs="+", help="matrix file, 'rlc q n m' or 'sparse q n m d'")
    s.add_argument("--method", choices=["auto", "enumerate", "factorized", "mc"], default="auto")
    s.add_argument("--samples", type=int, default=0)
    s.set_defaults(func=cmd_alpha)

    s = sub.add_parser("goodness", parents=[common], help="per-blocklength goodness exponent")
    s.add_argument("code", nargs="+", help="matrix file, 'rlc q n m' or 'sparse q n m d'")
    s.add_argument("--criterion", default="joint")
    s.set_defaults(func=cmd_goodness)

    s = sub.add_parser("quantizer", parents=[common], help="slot allocation for a target pmf")
    s.add_argument("target")
    s.add_argument("--l", type=int, help="block size (overrides the target header)")
    s.add_argument("--qU", type=int)
    s.add_argument("--code-length", type=int)
    s.set_defaults(func=cmd_quantizer)

    s = sub.add_parser("encode", parents=[common], help="draw an encoder and encode source words")
    s.add_argument("matrix")
    s.add_argument("target")
    s.add_argument("--l", type=int)
    s.add_argument("--encoder", help="reuse the randomization stored in an encoder file")
    s.add_argument("--word", action="append", help="source word to encode (repeatable)")
    s.add_argument("--save-encoder", help="also write the encoder alone to this file")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo transmission campaign")
    s.add_argument("config")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("analyze", parents=[common], help="distance, GV, density, sparse, systematic")
    s.add_argument("what", choices=["distance", "gv", "density", "sparse", "systematic", "profile"])
    s.add_argument("matrix", nargs="?")
    s.add_argument("--q", type=int, default=2)
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--m", type=int, default=16)
    s.add_argument("--ns", type=int, nargs="+", default=[4, 8, 12])
    s.add_argument("--rate", default="1/2")
    s.add_argument("--hx", type=float, default=0.1)
    s.add_argument("--hy", type=float, default=0.2)
    s.add_argument("--delta", type=float)
    s.add_argument("--samples", type=int, default=0)
    s.add_argument("--slack", type=float, default=0.15)
    s.add_argument("--density", default="1/4")
    s.add_argument("--mc-from", type=int)
    s.add_argument("--positions", type=int, nargs="+", help="1-based systematic positions")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("verify", parents=[common], help="run a verification battery")
    s.add_argument("suite", choices=sorted(SUITES))
    s.add_argument("--corrupt-alpha", action="store_true", help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.command == "goodness" and args.criterion not in ("joint", "kernel", "image"):
        print(f"error: unknown criterion {args.criterion!r}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "analyze" and args.what in ("density", "systematic", "profile") and not args.matrix:
        print(f"error: analyze {args.what} needs a matrix file", file=sys.stderr)
        return EXIT_INPUT
    if args.budget < 0 or args.threads < 1:
        print("error: --budget must be >= 0 and --threads >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (UsageError, DomainError, DimensionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
