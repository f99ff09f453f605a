import json

import pytest

from chaoskit.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, dumps, main


def run(*argv):
    return main([str(a) for a in argv])


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_systems_list(capsys):
    assert run("systems", "list") == EXIT_OK
    out = capsys.readouterr().out
    for kind in ("tent", "logistic4", "rotation", "shift2", "example1", "identity", "iterate"):
        assert kind in out


def test_analyze_happy_path(tmp_path):
    out = tmp_path / "a"
    assert run("analyze", "--system", "example1", "--pair", "0.25,0.75", "--horizon", 1_000_000, "--out", out) == EXIT_OK
    csv = (out / "estimate.csv").read_bytes()
    assert csv.startswith(b"t,F_lower,F_upper\n") and b"\r" not in csv
    report = read_json(out / "verdict.json")
    assert report["verdict"]["dc2prime"] is True and report["verdict"]["dc1"] is False
    cfg = report["config"]
    assert cfg["seed"] == 0 and cfg["thresholds"]["gap_tol"] == 0.1
    assert cfg["system"] == {"kind": "example1", "horizon_cap": 1_000_000}
    assert cfg["checkpoint"]["policy"] == "geometric"


def test_analyze_equal_pair_all_clear(tmp_path):
    assert run("analyze", "--system", "example1", "--pair", "0.25,0.25", "--horizon", 10_000, "--out", tmp_path) == 0
    v = read_json(tmp_path / "verdict.json")["verdict"]
    assert not any(v[f] for f in ("liyorke", "dc1", "dc2", "dc2prime", "dc3"))


def test_analyze_missing_horizon(tmp_path, capsys):
    assert run("analyze", "--system", "example1", "--pair", "0.25,0.75", "--out", tmp_path) == EXIT_CONFIG
    assert "horizon" in capsys.readouterr().err


@pytest.mark.parametrize("extra,field", [
    (["--thresholds", "zero_tol=2"], "thresholds.zero_tol"),
    (["--horizon-cap", "10"], "horizon"),
    (["--t-grid", "0.5,0.1"], "t_grid"),
    (["--burn-in", "5000"], "checkpoint.burn_in"),
])
def test_analyze_config_errors_name_field(tmp_path, capsys, extra, field):
    code = run("analyze", "--system", "tent", "--pair", "0.2,0.7", "--horizon", 100, "--out", tmp_path, *extra)
    assert code == EXIT_CONFIG
    assert field in capsys.readouterr().err


def test_bad_system_kind_is_config_error(tmp_path):
    assert run("analyze", "--system", "henon", "--horizon", 10) == EXIT_CONFIG


def test_insufficient_data_exit(tmp_path, capsys):
    code = run("analyze", "--system", "tent", "--pair", "0.2,0.7", "--horizon", 40, "--sequence", "arith:5",
               "--out", tmp_path)
    assert code == EXIT_DATA
    assert "insufficient" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"system": {"kind": "rotation"}, "pairs": [["0.1", "0.35"]], "horizon": 500,
                               "thresholds": {"zero_tol": 0.02}, "out": str(tmp_path / "o")}))
    assert run("analyze", "--config", cfg, "--horizon", 800) == EXIT_OK
    report = read_json(tmp_path / "o" / "verdict.json")
    assert report["config"]["horizon"] == 800
    assert report["config"]["thresholds"]["zero_tol"] == 0.02
    assert report["verdict"]["horizon"] == 800


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"horizons": 5}))
    assert run("analyze", "--config", cfg) == EXIT_CONFIG
    assert "horizons" in capsys.readouterr().err


def test_outputs_are_byte_identical(tmp_path):
    args = ["analyze", "--system", "shift2", "--pair", "1,2", "--horizon", 20_000, "--sequence", "arith:2",
            "--out", tmp_path]
    assert run(*args) == 0
    first = [(tmp_path / f).read_bytes() for f in ("estimate.csv", "verdict.json")]
    assert run(*args) == 0
    assert first == [(tmp_path / f).read_bytes() for f in ("estimate.csv", "verdict.json")]


def test_dumps_rounds_and_sorts():
    text = dumps({"b": 1 / 3, "a": [2.0, True]})
    assert text == '{\n  "a": [\n    2.0,\n    true\n  ],\n  "b": 0.333333333\n}\n'


def test_suite_unknown_harness(tmp_path):
    assert run("suite", "--harness", "theorem9", "--out", tmp_path) == EXIT_CONFIG


def test_suite_lattice_family(tmp_path, capsys):
    code = run("suite", "--harness", "lattice", "--system", "shift2", "--family", 8, "--horizon", 100_000,
               "--out", tmp_path)
    assert code == EXIT_OK
    rep = read_json(tmp_path / "lattice.json")
    assert rep["reports"][0]["summary"]["violations"] == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary["passed"] is True and summary["criteria"]["5_lattice"] is True
    assert "runtime" in capsys.readouterr().err


def test_suite_theorem2_csv(tmp_path):
    assert run("suite", "--harness", "theorem2", "--N", 3, "--out", tmp_path) == EXIT_OK
    rows = (tmp_path / "theorem2.csv").read_text().splitlines()
    assert rows[0] == "system,N,case_id,flag_f,flag_fN,agree"
    assert all(r.endswith(",1") for r in rows[1:])


def test_suite_example1(tmp_path):
    assert run("suite", "--harness", "example1", "--horizon", 1_000_000, "--out", tmp_path) == EXIT_OK
    case = read_json(tmp_path / "example1.json")["reports"][0]["cases"][0]
    assert case["A_parity"] and case["B_ok"] and case["C_ok"] and case["D_ok"]


def test_classify_family(tmp_path):
    assert run("classify", "--system", "shift2", "--family", 6, "--horizon", 100_000, "--out", tmp_path) == 0
    rep = read_json(tmp_path / "classify.json")
    assert rep["size"] == 6 and rep["flag"] == "dc1"
