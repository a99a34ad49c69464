"""Command line driver: files, determinism, exit codes."""

import json

import pytest

from dirtrace.cli import main

FAST = ["--ny", "256", "--mc-samples", "100"]


def run(argv, tmp_path):
    return main(argv + ["--out", str(tmp_path)] + FAST)


def test_ibp_writes_passing_report(tmp_path):
    code = run(["ibp", "--domain", "square", "--u", "x1x2", "--v", "x1px2"],
               tmp_path)
    assert code == 0
    files = list(tmp_path.glob("ibp_*.json"))
    assert len(files) == 1
    payload = json.loads(files[0].read_text())
    assert payload["results"]["within_tolerance"] is True
    assert payload["results"]["lhs"] == pytest.approx(5.0 / 6.0, abs=1e-4)
    assert payload["config_hash"] in files[0].name


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        code = run(["measure", "--domain", "cusp", "--angle", "0.0"], out)
        assert code == 0
    for fa in sorted(a.iterdir()):
        fb = b / fa.name
        assert fb.exists()
        assert fa.read_bytes() == fb.read_bytes()


def test_unknown_domain_exits_2(tmp_path, capsys):
    code = run(["measure", "--domain", "heptagon"], tmp_path)
    assert code == 2
    assert "unknown domain" in capsys.readouterr().err


def test_unattainable_tolerance_exits_3(tmp_path):
    code = run(["ibp", "--domain", "square", "--u", "x1x2", "--v", "x1px2",
                "--tolerance", "1e-30"], tmp_path)
    assert code == 3


def test_bad_flag_exits_2(tmp_path, capsys):
    assert main(["staircase", "--domain", "square"]) == 2
    capsys.readouterr()


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert capsys.readouterr().out.strip()


def test_staircase_files(tmp_path):
    code = run(["staircase", "--ratio", "0.3333333333333333", "--level", "6",
                "--scheme", "third", "--pmax", "6"], tmp_path)
    assert code == 0
    payload = json.loads(next(tmp_path.glob("staircase_*.json")).read_text())
    res = payload["results"]
    assert res["holds"] and res["monotone"] and res["endpoints_exact"]
    assert all(s <= b + 1e-15 for s, b in zip(res["sup_steps"], res["sup_bounds"]))
    csv = next(tmp_path.glob("staircase_*.csv")).read_text().splitlines()
    assert csv[1] == "t,value"


def test_nu_gap_of_jump_field(tmp_path):
    code = run(["nu", "--domain", "bicone", "--field", "sign_y",
                "--levels", "4"], tmp_path)
    assert code == 0
    payload = json.loads(next(tmp_path.glob("nu_*.json")).read_text())
    gaps = payload["results"]["gaps"]
    assert all(g == pytest.approx(2.0, abs=1e-9) for g in gaps)


def test_trace_report(tmp_path):
    code = run(["trace", "--domain", "square", "--field", "x1x2",
                "--angle", "0.0"], tmp_path)
    assert code == 0
    payload = json.loads(next(tmp_path.glob("trace_*.json")).read_text())
    assert payload["results"]["holds"] is True
    assert payload["results"]["trace_norm_sq"] == pytest.approx(1.0 / 3.0,
                                                                abs=1e-4)


def test_oned_membership_report(tmp_path):
    code = run(["oned", "--domain", "crack_interval", "--field", "crack_1d"],
               tmp_path)
    assert code == 0
    payload = json.loads(next(tmp_path.glob("oned_*.json")).read_text())
    res = payload["results"]
    assert res["verdict"] == "out"
    assert res["witnesses"][0]["point"] == pytest.approx(1.0)


def test_lebesgue_report(tmp_path):
    code = run(["lebesgue", "--domain", "square", "--field", "x1x2",
                "--angle", "0.0", "--eps", "0.1", "0.01"], tmp_path)
    assert code == 0
    payload = json.loads(next(tmp_path.glob("lebesgue_*.json")).read_text())
    assert payload["results"]["within_bound"] is True


def test_consistency_report_cli(tmp_path):
    code = run(["consistency", "--domain", "crack_square", "--field",
                "crack_2d", "--directions", "4"], tmp_path)
    assert code == 0
    payload = json.loads(next(tmp_path.glob("consistency_*.json")).read_text())
    assert payload["results"]["verdict"] == "out"
