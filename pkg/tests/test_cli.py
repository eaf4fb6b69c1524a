import json

import pytest

from aoivnet.cli import main


def run(capsys, *argv, environ=None):
    code = main(list(argv), environ=environ or {})
    return code, capsys.readouterr()


def test_aoi_analytic_example(capsys, tmp_path):
    code, out = run(capsys, "aoi-analytic", "--lambda", "100", "--mu1", "200", "--mu2", "200", "--out", str(tmp_path))
    assert code == 0
    assert "0.027500" in out.out
    res = json.loads((tmp_path / "result.json").read_text())
    assert res["result"]["aoi"] == pytest.approx(0.0275)
    assert (tmp_path / "result.csv").exists() and (tmp_path / "manifest.json").exists()


def test_coverage_example(capsys, tmp_path):
    code, out = run(capsys, "coverage", "--pv-dbm", "23", "--threshold-db", "-10", "--out", str(tmp_path))
    assert code == 0 and "0.654" in out.out


@pytest.mark.parametrize("argv", [
    ["coverage", "--alpha", "2"],
    ["aoi-analytic", "--lambda", "300", "--mu1", "200", "--mu2", "200"],
    ["coverage", "--p-c-dbm", "20", "--cpu-freq-hz", "2e8"],
])
def test_parameter_errors_exit_1(capsys, tmp_path, argv):
    code, out = run(capsys, *argv, "--out", str(tmp_path))
    assert code == 1
    assert "error" in out.err


def test_usage_error_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["coverage", "--no-such-flag"], environ={})
    assert exc.value.code == 1


def test_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"x_r": 30.0, "alpha": 3.5, "seed": 4}))
    env = {"AOIVNET_X_R": "25.0", "AOIVNET_SEED": "5"}
    out = tmp_path / "run"
    code, _ = run(capsys, "coverage", "--config", str(cfg), "--x-r", "15", "--out", str(out), environ=env)
    assert code == 0
    resolved = json.loads((out / "manifest.json").read_text())["resolved"]
    assert resolved["x_r"] == 15.0  # flag beats env and file
    assert resolved["seed"] == 5  # env beats file
    assert resolved["alpha"] == 3.5  # file beats default
    assert resolved["lambda_pv"] == 0.01  # default


def test_replay_byte_identical(capsys, tmp_path):
    out = tmp_path / "sim"
    code, _ = run(capsys, "aoi-sim", "--mu1", "200", "--mu2", "300", "--horizon", "50",
                  "--replications", "3", "--trace", "--out", str(out))
    assert code == 0
    files = {n: (out / n).read_bytes() for n in ("result.json", "result.csv", "trace.csv")}
    again = tmp_path / "again"
    code, _ = run(capsys, "replay", str(out / "manifest.json"), "--out", str(again))
    assert code == 0
    for name, data in files.items():
        assert (again / name).read_bytes() == data


def test_sweep_preset(capsys, tmp_path):
    code, out = run(capsys, "sweep", "--preset", "aoi-saturation", "--out", str(tmp_path))
    assert code == 0 and "31 points" in out.out
    header = (tmp_path / "result.csv").read_text().splitlines()[0]
    assert header == "p_c_dbm,p_v_dbm,mu1,mu2,aoi_analytic,stable"


def test_sweep_bad_spec(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"axes": {"bogus": [1]}}))
    code, out = run(capsys, "sweep", "--spec", str(spec), "--out", str(tmp_path / "o"))
    assert code == 1 and "bogus" in out.err


def test_mc_coverage_command(capsys, tmp_path):
    code, out = run(capsys, "mc-coverage", "--realizations", "200", "--out", str(tmp_path))
    assert code == 0
    res = json.loads((tmp_path / "result.json").read_text())["result"]
    assert 0 < res["coverage_mc"] <= 1 and res["n_realizations"] == 200


def test_validate_quick(capsys, tmp_path):
    code, out = run(capsys, "validate", "--level", "quick", "--out", str(tmp_path))
    assert code == 0
    assert "4/4" in out.out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["level"] == "quick"
