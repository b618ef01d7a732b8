import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from jscc.algebra import read_matrix
from jscc.cli import main
from jscc.codes import LinearCode, joint_spectrum_exact, kernel_spectrum
from jscc.spectra import spectrum_csv

DATA = Path(__file__).resolve().parent.parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_help_and_bad_usage(capsys):
    assert run(capsys, "--help")[0] == 0
    assert run(capsys)[0] == 2
    assert run(capsys, "spectrum")[0] == 2
    assert run(capsys, "goodness", "rlc", "2", "2", "2", "--criterion", "weird")[0] == 2
    assert run(capsys, "alpha", "rlc", "2", "2", "2", "--budget", "-1")[0] == 2
    assert run(capsys, "analyze", "density")[0] == 2


def test_input_errors(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\n1 0\n")
    code, _, err = run(capsys, "spectrum", bad)
    assert code == 2 and "line" in err
    (tmp_path / "q4.txt").write_text("4 1 1\n1\n")
    assert run(capsys, "spectrum", tmp_path / "q4.txt")[0] == 2
    assert run(capsys, "spectrum", tmp_path / "missing.txt")[0] == 2
    assert run(capsys, "alpha", "rlc", "2", "2", "2", "--method", "mc", "--samples", "10")[0] == 2


def test_budget_exceeded(capsys):
    code, _, err = run(capsys, "alpha", "rlc", "2", "2", "2", "--method", "enumerate", "--budget", "3")
    assert code == 3 and "budget" in err


def test_spectrum_matches_library(capsys):
    path = DATA / "systematic23.txt"
    c = LinearCode(read_matrix(path))
    code, out, _ = run(capsys, "spectrum", path)
    assert code == 0
    assert out == "# status=exact which=joint samples=0\n" + spectrum_csv(joint_spectrum_exact(c))
    _, out, _ = run(capsys, "spectrum", path, "--which", "kernel")
    assert out.endswith(spectrum_csv(kernel_spectrum(c)))


def test_goodness_examples(capsys):
    code, out, _ = run(capsys, "goodness", DATA / "identity2.txt")
    assert code == 0 and "max_ratio 4" in out and "delta 0.69314718056 nats" in out
    _, out, _ = run(capsys, "goodness", DATA / "identity2.txt", "--bits")
    assert "delta 1 bits" in out
    _, out, _ = run(capsys, "goodness", "rlc", "2", "3", "3")
    assert "delta 0 nats" in out and "max_ratio 1" in out


def test_alpha_rlc_is_one(capsys):
    code, out, _ = run(capsys, "alpha", "rlc", "2", "2", "2")
    rows = out.splitlines()[2:]
    assert code == 0 and rows
    for r in rows:
        x0, x1, *_, num, den = r.split(",")
        if (x0, x1) != ("2", "0"):
            assert Fraction(int(num), int(den)) == 1


def test_alpha_mc_deterministic(capsys):
    argv = ("alpha", "sparse", "2", "2", "2", "1/4", "--method", "mc", "--samples", "500", "--seed", "4")
    a = run(capsys, *argv)
    assert a[0] == 0 and "value,stderr" in a[1]
    assert a == run(capsys, *argv, "--threads", "2")


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.csv"
    code, stdout, _ = run(capsys, "analyze", "density", DATA / "identity2.txt", "--out", out)
    assert code == 0 and stdout == ""
    assert "0,density,0.5" in out.read_text()


def test_quantizer_and_encode(capsys, tmp_path):
    code, out, _ = run(capsys, "quantizer", DATA / "correlated.txt")
    assert code == 0 and "max TV error 0" in out
    enc = tmp_path / "enc.txt"
    argv = ("encode", DATA / "identity2.txt", DATA / "uniform.txt", "--word", "01", "--word", "11")
    assert run(capsys, *argv)[0] == 2  # needs a seed
    code, first, _ = run(capsys, *argv, "--seed", "3", "--save-encoder", enc)
    assert code == 0 and "01 -> " in first
    code, again, _ = run(capsys, *argv, "--encoder", enc)
    assert code == 0
    assert [l for l in first.splitlines() if "->" in l] == [l for l in again.splitlines() if "->" in l]


def test_simulate_reproducible_and_noiseless(capsys):
    a = run(capsys, "simulate", DATA / "dsbs_adder.ini")
    assert a[0] == 0 and a == run(capsys, "simulate", DATA / "dsbs_adder.ini", "--threads", "3")
    assert a != run(capsys, "simulate", DATA / "dsbs_adder.ini", "--seed", "8")
    code, out, _ = run(capsys, "simulate", DATA / "noiseless_k1.ini")
    header, row = out.splitlines()[-2:]
    rec = dict(zip(header.split(","), row.split(",")))
    assert code == 0 and rec["errors"] == "0"


def test_analyze_commands(capsys):
    code, out, _ = run(capsys, "analyze", "systematic", DATA / "systematic23.txt", "--positions", "1", "2")
    assert code == 0 and "# corollary consistent" in out
    assert "skipped" in run(capsys, "analyze", "systematic", DATA / "systematic23.txt")[1]
    assert run(capsys, "analyze", "systematic", DATA / "systematic23.txt", "--positions", "1", "3")[0] == 2
    code, out, _ = run(capsys, "analyze", "sparse", "--ns", "4", "6")
    assert code == 0 and "4,delta,0.405465108108" in out
    _, out, _ = run(capsys, "analyze", "sparse", "--ns", "4", "--bits")
    assert "4,delta,0.584962500721" in out
    code, out, _ = run(capsys, "analyze", "distance", "--ns", "4", "8")
    assert code == 0 and "non-increasing" in out
    assert "no claim" in run(capsys, "analyze", "distance", "--hx", "0.7", "--hy", "0.7")[1]
    assert run(capsys, "analyze", "gv", "--n", "4", "--m", "8", "--samples", "5")[0] == 2  # needs a seed
    assert run(capsys, "analyze", "gv", "--n", "4", "--m", "8", "--samples", "5", "--seed", "1")[0] == 0
    assert run(capsys, "analyze", "profile", DATA / "padded24.txt")[0] == 0


@pytest.mark.parametrize("suite", ["props", "encoder", "analysis"])
def test_verify_suites_pass(capsys, suite):
    code, out, _ = run(capsys, "verify", suite, "--seed", "1")
    assert code == 0 and out
    assert all(l.rsplit(",", 1)[1] in ("PASS", "SKIP") for l in out.splitlines())


def test_verify_zero_budget_skips(capsys):
    code, out, err = run(capsys, "verify", "props", "--budget", "0")
    assert code == 0 and err
    assert all(l.endswith(",SKIP") for l in out.splitlines())


def test_verify_detects_corruption(capsys):
    code, out, _ = run(capsys, "verify", "props", "--corrupt-alpha", "--seed", "1")
    assert code == 1 and ",exact,FAIL" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "jscc", "goodness", "rlc", "2", "2", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "delta 0 nats" in r.stdout
