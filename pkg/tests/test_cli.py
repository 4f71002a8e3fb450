import csv
import json

import numpy as np
import pytest

from merton_cournot.cli import (
    DEFAULT_CONFIG, ConfigError, EXIT_CONDITIONS, EXIT_CONFIG, EXIT_OK, EXIT_VERIFY, main, parse_config,
)


def write_cfg(tmp_path, text, name="scenario.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_round_trip():
    cfg = parse_config(DEFAULT_CONFIG)
    again = parse_config(cfg.serialize())
    assert again.values == cfg.values
    assert again.scenario() == cfg.scenario()


@pytest.mark.parametrize("text, msg", [
    ("theta1 = 1\n", "missing required key(s): theta2"),
    (DEFAULT_CONFIG + "bogus = 1\n", "unknown key 'bogus'"),
    (DEFAULT_CONFIG.replace("sigma = 0.5", "sigma = half"), "line 4: bad value for 'sigma'"),
    (DEFAULT_CONFIG + "theta1 = 2\n", "duplicate key 'theta1'"),
    (DEFAULT_CONFIG + "just words\n", "expected 'key = value'"),
], ids=["missing", "unknown", "bad_value", "duplicate", "no_equals"])
def test_parse_errors(text, msg):
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert msg in str(e.value)


def test_equilibrium_outputs(tmp_path):
    out = tmp_path / "eq"
    assert main(["equilibrium", "--out", str(out)]) == EXIT_OK
    crossing = json.loads((out / "crossing.json").read_text())
    assert crossing["investor_2"] == pytest.approx(2 * np.arctanh(5 / 6), abs=1e-12)
    with open(out / "equilibrium.csv") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows[::50]:
        t = float(r["t"])
        assert float(r["pi1"]) == pytest.approx(0.6 * np.cosh(t / 2) - 0.5 * np.sinh(t / 2), abs=1e-9)
        assert float(r["pi2"]) == pytest.approx(1.2 * np.sinh(t / 2) - np.cosh(t / 2), abs=1e-9)
    pi2 = np.array([float(r["pi2"]) for r in rows])
    t = np.array([float(r["t"]) for r in rows])
    flip = np.nonzero(np.diff(np.sign(pi2)))[0][0]
    assert t[flip] <= 2.39790 <= t[flip + 1]


def test_equilibrium_symmetric_fails(tmp_path, capsys):
    cfg = write_cfg(tmp_path, DEFAULT_CONFIG.replace("delta1 = 4", "delta1 = 1"))
    out = tmp_path / "o"
    assert main(["equilibrium", "--config", cfg, "--out", str(out)]) == EXIT_CONDITIONS
    assert json.loads((out / "conditions.json").read_text())["cond_i"] is False
    assert "cond_i" in capsys.readouterr().err


def test_missing_key_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, DEFAULT_CONFIG.replace("theta2 = 1\n", ""))
    assert main(["equilibrium", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "theta2" in capsys.readouterr().err


def test_invalid_scenario_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, DEFAULT_CONFIG.replace("pi_lo = -50", "pi_lo = 1"))
    assert main(["equilibrium", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_simulate_zero_controls_reproducible(tmp_path):
    cfg = write_cfg(tmp_path, DEFAULT_CONFIG.replace("n_steps = 500", "n_steps = 50"))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["simulate", "--config", cfg, "--out", str(b)]) == EXIT_OK
    for name in ("summary.json", "paths.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    s = json.loads((a / "summary.json").read_text())
    assert s["abs_dev_S_T"] < 4 * s["se_S_T"]
    assert main(["simulate", "--config", cfg, "--seed", "5", "--out", str(b)]) == EXIT_OK
    assert (a / "summary.json").read_bytes() != (b / "summary.json").read_bytes()


def test_simulate_with_equilibrium_controls(tmp_path):
    cfg = write_cfg(tmp_path, DEFAULT_CONFIG.replace("n_steps = 500", "n_steps = 50"))
    eq = tmp_path / "eq"
    assert main(["equilibrium", "--config", cfg, "--out", str(eq)]) == EXIT_OK
    out = tmp_path / "sim"
    rc = main(["simulate", "--config", cfg, "--out", str(out), "--x1", str(eq / "x1.csv"), "--x2", str(eq / "x2.csv")])
    assert rc == EXIT_OK
    s = json.loads((out / "summary.json").read_text())
    assert s["mean_pi2_T"] == pytest.approx(1.2 * np.sinh(2.5) - np.cosh(2.5), abs=0.2)
    assert s["utility_mean_1"] < 0


def test_simulate_mismatched_control(tmp_path, capsys):
    cfg = write_cfg(tmp_path, DEFAULT_CONFIG.replace("n_steps = 500", "n_steps = 50"))
    bad = tmp_path / "short.csv"
    bad.write_text("t,x1\n0.0,1.0\n0.1,1.0\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path), "--x1", str(bad)]) == EXIT_CONFIG
    assert "short.csv" in capsys.readouterr().err


def test_best_response_cmd(tmp_path):
    out = tmp_path / "br"
    assert main(["best-response", "--out", str(out)]) == EXIT_OK
    with open(out / "best_response.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["pi_star"]) == pytest.approx(0.6)
    assert {r["region"] for r in rows} == {"control"}


def test_arbitrage_cmd(tmp_path):
    out = tmp_path / "arb"
    assert main(["arbitrage", "--out", str(out)]) == EXIT_OK
    v = json.loads((out / "arbitrage.json").read_text())
    assert v["verdict"] == "Arbitrage" and v["gain"] == pytest.approx(2.0, abs=1e-10)
    cfg = write_cfg(tmp_path, DEFAULT_CONFIG + "kappa = linear\n")
    assert main(["arbitrage", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "arbitrage.json").read_text())["verdict"] == "NoArbitrageFound"


def test_verify_all(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["verify", "all", "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "verify.json").read_text())
    assert len(report) >= 20 and all(r["verdict"] == "pass" for r in report)
    first = (out / "verify.json").read_bytes()
    main(["verify", "all", "--out", str(out)])
    assert (out / "verify.json").read_bytes() == first


def test_verify_arbitrage_reports_witness(tmp_path, capsys):
    assert main(["verify", "arbitrage", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "verify.json").read_text())
    d = next(r for r in report if r["check"] == "configured_impact_verdict")["detail"]
    assert d["witness"]["kind"] == "BuyFast" and d["gain"] == pytest.approx(2.0)


def test_verify_oracle_few_paths_still_runs(tmp_path):
    cfg = write_cfg(tmp_path, DEFAULT_CONFIG.replace("n_paths = 2000", "n_paths = 100"))
    rc = main(["verify", "oracle", "--config", cfg, "--out", str(tmp_path)])
    assert rc in (EXIT_OK, EXIT_VERIFY)
    report = json.loads((tmp_path / "verify.json").read_text())
    assert len(report) == 5
    for r in report:
        if r["verdict"] == "fail":
            assert "z" in r["detail"] or "se" in r["detail"]


def test_verify_failure_exit_code(tmp_path, capsys, monkeypatch):
    from merton_cournot import cli

    def broken(cfg, sc, rng):
        yield "always_fails", False, {}

    monkeypatch.setitem(cli.SUITES, "flow", broken)
    assert main(["verify", "flow", "--out", str(tmp_path)]) == EXIT_VERIFY
    assert "always_fails" in capsys.readouterr().err
