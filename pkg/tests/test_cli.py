import json
import subprocess
import sys

import numpy as np
import pytest

from kirchhoff_nehari.cli import fmt, parse_cell, read_csv, read_phase_csv, run, to_json
from kirchhoff_nehari.discretize import DiscreteFunction
from kirchhoff_nehari.fiber import sobolev_constant

FAST = ["--mesh-size", "128", "--n-starts", "3"]


def test_constants_json():
    code, text = run(["constants", "--json"])
    rec = json.loads(text)
    assert code == 0
    assert {"S_N", "omega_N", "C1", "C2", "ratio", "hyperbolas"} <= set(rec)
    assert rec["S_N"] == pytest.approx(sobolev_constant(5).S_N, rel=1e-15)
    assert rec["ratio"] == pytest.approx(0.929516, abs=1e-6)
    for row in rec["hyperbolas"]:
        assert row["b_C1"] / row["b_C2"] == pytest.approx(rec["ratio"], rel=1e-12)


def test_constants_text_table():
    code, text = run(["constants", "--a-values", "1,4"])
    assert code == 0 and text.startswith("N        5")
    rows = read_csv(text.split("\n\n", 1)[1])
    assert [r["a"] for r in rows] == [1.0, 4.0]


@pytest.mark.parametrize("argv", [["constants", "--N", "4"], ["constants", "--a-values", "-1"], ["fiber", "--A", "-1"]])
def test_invalid_input_exit_one(argv):
    code, text = run(argv)
    assert code == 1 and json.loads(text)["error"] == "invalid-input"


def test_unknown_flag_is_invalid():
    code, text = run(["fiber", "--bogus"])
    assert code == 1 and "bogus" in json.loads(text)["message"]


def _signs(samples):
    s = np.sign([r["dpsi"] for r in read_csv(samples)])
    return [int(v) for k, v in enumerate(s) if k == 0 or v != s[k - 1]]


def test_fiber_two_critical_sample_pattern(tmp_path):
    out = tmp_path / "s.csv"
    code, text = run(["fiber", "--b", "0.1", "--samples-out", str(out), "--json"])
    assert code == 0 and json.loads(text)["report"]["fiber_class"] == "TwoCritical"
    assert _signs(out.read_text()) == [1, -1, 1]


def test_fiber_increasing_sample_pattern(tmp_path):
    out = tmp_path / "s.csv"
    code, text = run(["fiber", "--b", "0.5", "--samples-out", str(out)])
    assert code == 0 and text.startswith("class         Increasing")
    assert _signs(out.read_text()) == [1]


def test_fiber_degenerate_reports_margin():
    b_u = 2 / 3**1.5
    code, text = run(["fiber", "--b", repr(b_u), "--json"])
    rep = json.loads(text)["report"]
    assert rep["fiber_class"] == "InflectionCritical" and abs(rep["margin"]) <= 1e-9


def test_nehari_empty_exit_two():
    code, text = run(["nehari", "--b", "0.05", "--lambda", "0", "--gate", "none", *FAST])
    rec = json.loads(text)
    assert code == 2
    assert rec["nehari_minus"]["error"] == "nehari-empty"
    assert rec["global"]["flags"] == ["trivial"]


def test_nehari_small_b(tmp_path):
    mfile = tmp_path / "u.csv"
    code, text = run(["nehari", "--b", "0.0003", *FAST, "--minimizer-out", str(mfile)])
    rec = json.loads(text)
    assert code == 0
    assert rec["nehari_minus"]["level"] < rec["c0_bound"]
    assert 2 < rec["gate"]["estimate"] < 10 / 3
    u = DiscreteFunction.from_csv(mfile.read_text(), 5)
    assert u.mesh.M == 128 and u.values.max() > 0


def test_nehari_is_deterministic():
    argv = ["nehari", "--b", "0.0002", "--lambda", "1", "--gate", "none", *FAST, "--seed", "7"]
    assert run(argv) == run(argv)


def test_bnlimit_levels_decrease():
    code, text = run(["bnlimit", "--b-seq", "0.0002,0.0001,0", *FAST])
    rows = read_csv(text)
    assert code == 0 and [r["index"] for r in rows] == [0, 1, 2]
    levels = [r["level"] for r in rows]
    assert levels[0] > levels[1] > levels[2]
    assert all(r["converged"] is True for r in rows)


def test_bnlimit_abort_emits_record(tmp_path):
    out = tmp_path / "run.json"
    code, text = run(["bnlimit", "--b-seq", "0.2,0.1,0", *FAST, "--out", str(out)])
    rec = json.loads(text)
    assert code == 2 and rec["aborted_at"] == 0 and rec["levels"] == []
    assert json.loads(out.read_text()) == rec


def test_bnlimit_bad_sequence_is_invalid():
    code, _ = run(["bnlimit", "--b-seq", "0.0001,0.0002", *FAST])
    assert code == 1


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"b": 0.5, "lambda": 0.0, "A": 1.0}))
    _, text = run(["fiber", "--config", str(cfg), "--json"])
    assert json.loads(text)["report"]["fiber_class"] == "Increasing"
    _, text = run(["fiber", "--config", str(cfg), "--b", "0.1", "--json"])
    assert json.loads(text)["report"]["fiber_class"] == "TwoCritical"


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run(["fiber", "--config", str(bad)])[0] == 1
    assert run(["fiber", "--config", str(tmp_path / "missing.json")])[0] == 1


def test_error_record_written_to_out(tmp_path):
    out = tmp_path / "err.json"
    code, _ = run(["constants", "--N", "3", "--out", str(out)])
    assert code == 1 and json.loads(out.read_text())["error"] == "invalid-input"


def test_phase_csv_round_trip():
    code, text = run(["phase", "--a-range", "1:1:1", "--b-range", "0.0001:0.001:3", *FAST])
    cells = read_phase_csv(text)
    assert code == 0 and len(cells) == 3
    assert cells[0].regime == "BelowC1" and cells[-1].regime == "AboveC2"
    assert cells[-1].nehari_empty_at_lambda0 is True
    _, js = run(["phase", "--a-range", "1:1:1", "--b-range", "0.0001:0.001:3", *FAST, "--json"])
    for cell, row in zip(cells, json.loads(js)):
        assert cell.b == row["b"] and cell.regime == row["regime"]


def test_phase_rejects_bad_range():
    assert run(["phase", "--a-range", "1:2"])[0] == 1


def test_extremal_below_c1_is_invalid():
    code, text = run(["extremal", "--b", "0.0001", *FAST])
    assert code == 1 and "C1" in json.loads(text)["message"]


def test_extremal_writes_direction(tmp_path):
    d = tmp_path / "dir.csv"
    code, text = run(["extremal", "--b", "0.00045", "--which", "lambda0", *FAST, "--direction-out", str(d)])
    rec = json.loads(text)
    assert code == 0 and rec["lambda0_star_upper"] > 0 and "lambda_star_upper" not in rec
    assert DiscreteFunction.from_csv(d.read_text(), 5).mesh.M == 128


def test_formatting_helpers():
    assert fmt(True) == "true" and fmt(None) == "" and fmt(0.1) == "0.10000000000000001"
    assert parse_cell("true") is True and parse_cell("") is None and parse_cell("3") == 3
    assert json.loads(to_json({"x": float("inf"), "y": float("nan")})) == {"x": None, "y": None}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kirchhoff_nehari", "constants", "--json"], capture_output=True, text=True)
    assert proc.returncode == 0 and "S_N" in json.loads(proc.stdout)
