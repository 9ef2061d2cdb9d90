import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from exchangelab.bernoullicity import ErgodicAverageReport, IndependenceGapReport
from exchangelab.cli import main
from exchangelab.core import Cylinder, FinitePermutation
from exchangelab.definetti import AtomicMixingMeasure, HankelReport, MomentSequence
from exchangelab.exchange import CylinderTable, ExchangeReport, QuasiWitness, RnRatioTable
from exchangelab.measures import ValidationReport

SPECS = {
    "markov.json": {"type": "markov", "Pi": [["1/2", "1/2"], ["1", "0"]], "p": ["2/3", "1/3"]},
    "bernoulli.json": {"type": "bernoulli", "pi": ["1/2", "1/2"]},
    "mixture.json": {
        "type": "mixture",
        "components": [{"w": "1/2", "pi": ["4/5", "1/5"]}, {"w": "1/2", "pi": ["1/5", "4/5"]}],
    },
    "sine.json": {"type": "dpp-sine", "a": 0},
    "bad_toeplitz.json": {"type": "dpp-toeplitz", "c": [1.5]},
}


@pytest.fixture
def specs(tmp_path):
    for name, spec in SPECS.items():
        (tmp_path / name).write_text(json.dumps(spec))
    return tmp_path


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv, "--format", "json")
    return code, json.loads(out) if out else None


# --------------------------------------------------------------------------- documented invocations


def test_witness_exits_2(specs):
    code, out, _ = run("witness", "--spec", specs / "markov.json")
    assert code == 2
    assert "[[0,0,1,1]]" in out and "[[1,0,1,0]]" in out and "1/6" in out


def test_bernoulli_check_exits_0(specs):
    code, data = run_json("check-exch", "--spec", specs / "bernoulli.json", "--n", 4)
    assert code == 0
    assert data["max_deviation"] == "0"


def test_mixing_gap_sweep_tsv(specs):
    code, out, _ = run(
        "mixing-gap", "--spec", specs / "markov.json", "--past", 1, "--future", 1, "--sweep", "0..8", "--format", "tsv"
    )
    assert code == 0
    rows = [line.split("\t") for line in out.strip().splitlines()]
    if rows[0][0] == "g":
        rows = rows[1:]
    assert [int(r[0]) for r in rows] == list(range(9))
    tv = [float(Fraction(r[1])) for r in rows]
    assert all(b < a for a, b in zip(tv, tv[1:]))


def test_recover_atom_table():
    code, out, _ = run("recover", "--moments", "1/2,17/50,13/50,257/1250,41/250,4097/31250")
    assert code == 0
    assert "0.2" in out and "0.8" in out


def test_recover_inconsistent_moments_is_error():
    code, _, err = run("recover", "--moments", "0.5,0.34,0.26,0.2188")
    assert code == 1 and "not representable" in err


# --------------------------------------------------------------------------- exit codes and errors


def test_validation_failure_exits_1(specs):
    code, _, err = run("cyl-prob", "--spec", specs / "bad_toeplitz.json", "--cylinder", "0:1")
    assert code == 1 and "spectrum" in err
    code, _, _ = run("validate", "--spec", specs / "bad_toeplitz.json")
    assert code == 1


def test_missing_and_malformed_spec(specs, tmp_path):
    code, _, err = run("validate", "--spec", tmp_path / "nope.json")
    assert code == 1 and err.startswith("error:")
    (tmp_path / "broken.json").write_text("{\n  \"type\": }")
    code, _, err = run("validate", "--spec", tmp_path / "broken.json")
    assert code == 1 and "line 2" in err


def test_bad_cylinder_text(specs):
    code, _, err = run("cyl-prob", "--spec", specs / "markov.json", "--cylinder", "011")
    assert code == 1


def test_hankel_rejects_zero_transition_chain(specs):
    code, data = run_json("hankel", "--spec", specs / "markov.json", "--r", 3)
    assert code == 2
    rep = HankelReport.from_dict(data)
    assert not rep.consistent
    assert next(b for b in rep.blocks if b.name == "H0").det == Fraction(-1, 9)


def test_rn_table_violation_exit(specs):
    code, data = run_json("rn-table", "--spec", specs / "markov.json", "--perm", "(0 1)", "--window", "0..2")
    assert code == 2
    table = RnRatioTable.from_dict(data)
    assert not table.quasi_exchangeable


def test_perm_apply_scattered(specs):
    code, data = run_json("perm-apply", "--perm", "(1 5)", "--cylinder", "0:011", "--spec", specs / "markov.json")
    assert code == 0
    assert data["scattered"] and data["image"] == "0:0*1**1"
    code, data = run_json("perm-apply", "--perm", "(0 1)", "--cylinder", "0:011")
    assert data["image"] == "0:101" and not data["scattered"]


# --------------------------------------------------------------------------- JSON round trips


def test_json_roundtrips(specs):
    m = specs / "markov.json"
    x = specs / "mixture.json"

    _, d = run_json("validate", "--spec", m)
    assert ValidationReport.from_dict(d).passed

    _, d = run_json("cyl-prob", "--spec", m, "--cylinder", "0:101")
    assert Fraction(d["rows"][0]["prob"]) == Fraction(1, 6)

    _, d = run_json("check-exch", "--spec", m, "--n", 3)
    rep = ExchangeReport.from_dict(d)
    assert rep.max_deviation == Fraction(1, 6) and rep.worst_pair[0] == Cylinder.parse("0:011")

    _, d = run_json("witness", "--spec", m)
    w = QuasiWitness.from_dict(d["witness"])
    assert w.sigma == FinitePermutation.parse("(0 3)")

    _, d = run_json("symmetrize", "--spec", m, "--N", 1)
    assert CylinderTable.from_dict(d).value((1, 1, 0)) == Fraction(1, 18)

    _, d = run_json("mixing-gap", "--spec", m, "--past", 1, "--future", 1, "--g", 0)
    assert IndependenceGapReport.from_dict(d["reports"][0]).tv == Fraction(2, 9)

    _, d = run_json("ergodic-avg", "--spec", x, "--F", "0:1", "--Q", 50, "--n-paths", 4)
    assert ErgodicAverageReport.from_dict(d).target == Fraction(1, 2)

    _, d = run_json("moments", "--spec", x, "--r", 4)
    assert MomentSequence.from_dict(d).m[1] == Fraction(17, 50)

    _, d = run_json("recover", "--spec", x, "--r", 6)
    beta = AtomicMixingMeasure.from_dict(d)
    assert [p for p, _ in beta.atoms] == pytest.approx([0.2, 0.8], abs=1e-9)

    _, d = run_json("sample", "--spec", m, "--window", "0..9", "--n-paths", 3)
    assert len(d["paths"]) == 3 and len(d["paths"][0]) == 10

    _, d = run_json("dpp-prob", "--a", 0, "--window", "0..2", "--occupied", "0,2")
    assert d["prob"] == pytest.approx(0.125 + 1 / 3.141592653589793**2, abs=1e-12)


# --------------------------------------------------------------------------- determinism


@pytest.mark.parametrize(
    "argv",
    [
        ["sample", "--spec", "mixture.json", "--window", "0..30", "--n-paths", "4", "--seed", "7"],
        ["ergodic-avg", "--spec", "markov.json", "--F", "0:01", "--Q", "60", "--n-paths", "5", "--format", "json"],
        ["check-exch", "--spec", "markov.json", "--n", "6", "--mode", "sampled", "--samples", "40"],
        ["symmetrize", "--spec", "markov.json", "--N", "1", "--mode", "mc", "--samples", "200", "--format", "tsv"],
    ],
)
def test_byte_identical_subprocess_runs(specs, argv):
    cmd = [sys.executable, "-m", "exchangelab.cli", *argv]
    a = subprocess.run(cmd, cwd=specs, capture_output=True)
    b = subprocess.run(cmd, cwd=specs, capture_output=True, env={"EXCHANGELAB_THREADS": "4", "PATH": ""})
    assert a.returncode in (0, 2)
    assert a.stdout == b.stdout and a.stdout
