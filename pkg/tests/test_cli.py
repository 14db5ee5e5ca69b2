import json
import subprocess
import sys

import pytest

from abelkit.cli import EXIT_ACCURACY, EXIT_INPUT, EXIT_OK, EXIT_PRECONDITION, EXIT_USAGE, main

GAMMA = '{"P": "v", "Q": "-4*x^2*v - x^5"}'


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_OK, err
    return json.loads(out)


def test_classify(capsys):
    assert run_json(capsys, "classify", '{"A0": "3*t-2", "A1": "3*t", "A2": "3", "A3": "1"}') == {
        "class": "SolvableTwoDim",
        "mu": 1.0,
    }


def test_classify_from_file(capsys, tmp_path):
    path = tmp_path / "eq.json"
    path.write_text(json.dumps({"kind": "abel1", "coeffs": {"A1": "t", "A3": "t^2"}}))
    assert run_json(capsys, "classify", str(path))["class"] == "Bernoulli"


def test_canonicalize(capsys):
    out = run_json(capsys, "canonicalize", '{"A0": "t", "A3": "1", "interval": [0.5, 3]}')
    assert out["class"] == "CanonicalII"
    assert out["equation"]["coeffs"]["A0"] == "1"
    assert len(out["gauges"]) == 2


def test_invariants_variant_flag(capsys):
    eq = '{"A0": "1", "A1": "t", "A2": "0", "A3": "1"}'
    out = run_json(capsys, "invariants", eq, "--phi5-variant", "printed")
    assert out["phi5_variant"] == "printed"
    assert run_json(capsys, "invariants", eq)["phi5_variant"] == "relative"


def test_transform_and_convert(capsys):
    out = run_json(capsys, "transform", '{"A0": "0", "A1": "0", "A2": "3*t", "A3": "t"}', "--beta", "-1")
    assert out["coeffs"]["A3"] == "t"
    out = run_json(capsys, "convert", '{"kind": "abel2", "coeffs": {"f": "0", "B0": "1/t^3", "B1": "-1"}}')
    assert out["coeffs"]["A2"] == "1"


def test_lienard(capsys):
    out = run_json(capsys, "lienard", "--f", "-1", "--g", "x^2")
    assert out["independent_variable"] == "x"


def test_solve_bernoulli_and_csv(capsys, tmp_path):
    csv = tmp_path / "sol.csv"
    out = run_json(
        capsys, "solve", '{"A3": "-1"}', "--t0", "0", "--x0", "1", "--tf", "2", "--emit-csv", str(csv)
    )
    assert out["method"] == "solve_bernoulli"
    assert out["residual"] < 1e-6
    lines = csv.read_text().splitlines()
    assert lines[0] == "t,x"
    t, x = map(float, lines[-1].split(","))
    assert x == pytest.approx((1 + 2 * t) ** -0.5, abs=1e-8)


def test_solve_generic_reports_blowup(capsys):
    out = run_json(capsys, "solve", '{"A0": "1", "A3": "1"}', "--t0", "0", "--x0", "0.5", "--tf", "3")
    assert out["status"] == "blowup"
    lo, hi = out["blowup_bracket"]
    assert lo < hi


def test_superpose(capsys):
    out = run_json(
        capsys, "superpose", '{"kind": "riccati", "coeffs": {"c0": "1", "c2": "1"}}',
        "--x1", "0", "--x2", "0.1", "--x3", "0.2", "--k", "0.37", "--t0", "0", "--tf", "1.2",
    )
    assert out["residual"] < 1e-6


def test_sl2(capsys):
    out = run_json(capsys, "sl2", '{"kind": "riccati", "coeffs": {"c0": "2"}}', "--matrix", "0,-1,1,0")
    assert out["coeffs"] == {"A0": "0", "A1": "0", "A2": "2"}


def test_hierarchy(capsys):
    out = run_json(capsys, "hierarchy", "--n", "2", "--p", "1,0,0,0")
    assert out["text"] == "x^5 + 4*x^2*u1 + u2 = 0"


def test_darboux_multiplier_lagrangian(capsys):
    out = run_json(capsys, "darboux", GAMMA)
    assert [p["D_text"] for p in out["pairs"]] == ["1/3*x^3 + v", "x^3 + v"]
    out = run_json(capsys, "multiplier", GAMMA)
    assert out["nu"] == ["-4/3", "-4"]
    assert max(m["residual"] for m in out["multipliers"]) < 1e-12
    out = run_json(capsys, "lagrangian", GAMMA)
    assert all(entry["energy_drift"] < 1e-6 for entry in out["lagrangians"])


def test_normalizer(capsys):
    out = run_json(capsys, "normalizer", "--span", "abel", "--max-deg", "4")
    assert out["normalizer"] == [["1"], ["0", "1"]]


@pytest.mark.parametrize(
    "argv, code",
    [
        (["classify"], EXIT_USAGE),
        (["bogus"], EXIT_USAGE),
        (["classify", "{not json"], EXIT_INPUT),
        (["classify", "/nonexistent/eq.json"], EXIT_INPUT),
        (["classify", '{"A0": "foo(t)"}'], EXIT_INPUT),
        (["canonicalize", '{"A0": "1", "A2": "1"}'], EXIT_PRECONDITION),
        (["multiplier", '{"P": "v", "Q": "-x"}'], EXIT_PRECONDITION),
        (["solve", '{"A0": "1", "A3": "1"}', "--t0", "0", "--x0", "0.5", "--tf", "3", "--residual-tol", "1e-30"], EXIT_ACCURACY),
    ],
)
def test_exit_codes(capsys, argv, code):
    try:
        got = main(argv)
    except SystemExit as exc:
        got = exc.code
    assert got == code


def test_output_is_deterministic(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"out{i}.json"
        cmd = [sys.executable, "-m", "abelkit.cli", "--seed", "7", "-o", str(path), "multiplier", GAMMA]
        assert subprocess.run(cmd, check=False).returncode == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_seed_changes_sampling(capsys):
    a = run_json(capsys, "--seed", "1", "multiplier", GAMMA)
    b = run_json(capsys, "--seed", "2", "multiplier", GAMMA)
    assert a["nu"] == b["nu"]
