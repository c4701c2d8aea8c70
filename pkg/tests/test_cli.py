import json
import subprocess
import sys

import pytest

from spinad.cli import CASES, EXIT_DEGENERATE, EXIT_FAIL, EXIT_OK, EXIT_USAGE, cmd_bench, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("case", CASES)
def test_verify_every_case(capsys, case):
    code, out, _ = run(capsys, "verify", "--case", case, "--orbitals", "4", "--theta", "0.37,-pi,10")
    assert code == EXIT_OK, out
    assert "FAIL" not in out


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--case", "prime-aibj", "--orbitals", "4", "--json")
    data = json.loads(out)
    assert code == EXIT_OK and data["passed"]
    names = [c["name"] for c in data["checks"]]
    assert any(n.startswith("relation order 11") for n in names)
    assert any(n.startswith("spin preservation") for n in names)
    assert data["inputs"]["theta"][-1] == -10.0


def test_verify_fermionic_double_skips_spin_checks(capsys):
    _, out, _ = run(capsys, "verify", "--case", "fermionic-double", "--orbitals", "4", "--json")
    assert not any("S2" in c["name"] for c in json.loads(out)["checks"])


@pytest.mark.parametrize(
    "argv",
    [
        ("verify", "--case", "aibj", "--orbitals", "3"),
        ("verify", "--case", "aiai", "--orbitals", "9"),
        ("verify", "--case", "aiai", "--orbitals", "3", "--theta", "abc"),
        ("count", "--active", "5,4"),
        ("count", "--active", "x"),
        ("bench", "--case", "aibj", "--orbitals", "4", "--repetitions", "0"),
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE and "error" in err


def test_argparse_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify", "--case", "nonsense", "--orbitals", "3"])
    assert info.value.code == EXIT_USAGE


@pytest.mark.parametrize("family", ["quintic", "ninth", "eleventh"])
def test_derive_family(capsys, family):
    code, out, _ = run(capsys, "derive", "--family", family, "--json")
    data = json.loads(out)
    assert code == EXIT_OK
    assert {c["name"] for c in data["checks"]} >= {"frequencies vs table", "amplitudes vs table"}
    assert data["coefficients"]["family"] == family


def test_derive_coeffs_text(capsys):
    code, out, _ = run(capsys, "derive", "--coeffs=-1")
    assert code == EXIT_OK and "PASS  overall" in out


def test_derive_degenerate(capsys):
    code, out, err = run(capsys, "derive", "--coeffs=-1,-2", "--json")
    assert code == EXIT_DEGENERATE
    assert json.loads(out)["error"] == "degenerate" and "degenerate" in err


def test_count_default_table(capsys):
    code, out, _ = run(capsys, "count", "--json")
    rows = json.loads(out)["rows"]
    assert code == EXIT_OK
    assert [(r["fermionic"], r["spin_adapted"]) for r in rows] == [
        (3, 2), (26, 14), (117, 54), (360, 152), (875, 350), (1818, 702), (3381, 1274), (5792, 2144)
    ]  # fmt: skip


def test_count_singlet_only(capsys):
    _, out, _ = run(capsys, "count", "--active", "4,4", "--mode", "singlet-only", "--json")
    assert json.loads(out)["rows"][0]["spin_adapted"] == 13


def test_bench_report():
    report = cmd_bench("aibj", 4, 3, 0.37, 1, [])
    assert report.passed
    assert report.extra["dim"] == 36 and report.extra["ratio"] > 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spinad", "count", "--active", "2,2"], capture_output=True, text=True, check=False)
    assert proc.returncode == EXIT_OK and "3" in proc.stdout


def test_fail_exit_code(capsys, monkeypatch):
    import spinad.constants as constants

    monkeypatch.setattr(constants, "ORACLE_TOL", -1.0)
    code, out, _ = run(capsys, "verify", "--case", "aiai", "--orbitals", "2", "--theta", "0.3")
    assert code == EXIT_FAIL and "FAIL" in out
