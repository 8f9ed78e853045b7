import json
import subprocess
import sys

import numpy as np
import pytest

from vtarma import cli
from vtarma.arma import ArmaSpec
from vtarma.errors import NumericError
from vtarma.margins import Margin
from vtarma.model import VtArmaModel
from vtarma.vtransform import linear, two_param

TRUTH = VtArmaModel(two_param(0.463, 0.92), ArmaSpec((0.965,), (-0.847,)), Margin("laplace", mu=0.2, sigma=2.5))


def model_file(tmp_path, mdl, name="model.json"):
    p = tmp_path / name
    p.write_text(json.dumps(mdl.to_dict()))
    return str(p)


def simulate_series(tmp_path, mdl, n, seed, name="series.csv"):
    out = tmp_path / name
    code = cli.main(["sim", "--model", model_file(tmp_path, mdl, "sim_model.json"), "--n", str(n), "--seed", str(seed),
                     "--out", str(tmp_path / "sim.csv"), "--series-out", str(out)])
    assert code == 0
    return str(out)


def read_csv(path):
    lines = open(path).read().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_model_string_parsing():
    assert cli.parse_model_string("vt2-arma(1,1)") == ("two_param", (1, 1))
    assert cli.parse_model_string("VT3-ARMA(2, 0)") == ("three_param", (2, 0))
    for bad in ("vt4-arma(1,1)", "vt2-arma(1)", "garch(1,1)", "vt1-arma(0,0)"):
        with pytest.raises(cli.UsageError):
            cli.parse_model_string(bad)


def test_sim_is_deterministic(tmp_path):
    mp = model_file(tmp_path, TRUTH)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert cli.main(["sim", "--model", mp, "--n", "50", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header, rows = read_csv(a)
    assert header == ["t", "x", "u", "v", "z"]
    assert len(rows) == 50 and rows[0][0] == "1"
    cop = model_file(tmp_path, VtArmaModel(TRUTH.vt, TRUTH.arma), "cop.json")
    cli.main(["sim", "--model", cop, "--n", "5", "--seed", "1", "--out", str(a)])
    assert read_csv(a)[0] == ["t", "u", "v", "z"]


def test_sim_series_out_dates(tmp_path):
    path = simulate_series(tmp_path, TRUTH, 40, 1)
    header, rows = read_csv(path)
    assert header == ["date", "value"]
    assert rows[0][0] == "2000-01-01" and rows[-1][0] == "2000-02-09"
    sim_rows = read_csv(tmp_path / "sim.csv")[1]
    assert [r[1] for r in rows] == [r[1] for r in sim_rows]


def test_invalid_model_string_exits_2(tmp_path):
    path = simulate_series(tmp_path, TRUTH, 30, 2)
    with pytest.raises(SystemExit) as exc:
        cli.main(["fit", path, "--model", "vt9-arma(1,1)"])
    assert exc.value.code == 2


def test_entry_point_exit_codes(tmp_path):
    path = simulate_series(tmp_path, TRUTH, 30, 2)
    run = subprocess.run(
        [sys.executable, "-m", "vtarma.cli", "fit", path, "--model", "vt2-arma(1)"], capture_output=True, text=True
    )
    assert run.returncode == 2
    assert "invalid model" in run.stderr
    run = subprocess.run([sys.executable, "-m", "vtarma.cli", "fit", str(tmp_path / "missing.csv"),
                          "--model", "vt2-arma(1,1)"], capture_output=True, text=True)
    assert run.returncode == 2


def test_malformed_data_names_row(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("date,value\n2020-01-01,1.0\n2020-01-02,\n")
    assert cli.main(["fit", str(p), "--model", "vt1-arma(1,0)"]) == 2
    assert "line 3: blank value" in capsys.readouterr().err


def test_numeric_failure_exits_1(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise NumericError("quadrature failed")

    monkeypatch.setattr(cli._model, "simulate", boom)
    assert cli.main(["sim", "--model", model_file(tmp_path, TRUTH), "--n", "5"]) == 1
    assert "quadrature failed" in capsys.readouterr().err


def test_fit_round_trip_recovers_parameters(tmp_path):
    path = simulate_series(tmp_path, VtArmaModel(TRUTH.vt, TRUTH.arma), 4000, 3)
    out = tmp_path / "fit.json"
    assert cli.main(["fit", path, "--model", "vt2-arma(1,1)", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    est = dict(zip(rep["names"], rep["estimates"]))
    se = dict(zip(rep["names"], rep["std_errors"]))
    for name, true in (("alpha1", 0.965), ("beta1", -0.847), ("kappa", 0.92)):
        assert abs(est[name] - true) <= 3 * se[name]
    # the fulcrum estimate is super-efficient and its Hessian SE is not usable
    assert est["delta"] == pytest.approx(0.463, abs=0.02)
    assert rep["aic"] == pytest.approx(8 - 2 * rep["loglik"])
    header, rows = read_csv(tmp_path / "fit_residuals.csv")
    assert header == ["date", "residual", "mu"] and len(rows) == 4000


def test_fit_with_margin(tmp_path):
    path = simulate_series(tmp_path, TRUTH, 800, 4)
    out = tmp_path / "joint.json"
    assert cli.main(["fit", path, "--model", "vt2-arma(1,1)", "--margin", "laplace", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["names"] == ["alpha1", "beta1", "delta", "kappa", "mu", "sigma"]
    assert rep["model"]["margin"]["family"] == "laplace"
    assert isinstance(rep["convergence"]["success"], bool)
    with pytest.raises(SystemExit):
        cli.main(["fit", path, "--model", "vt2-arma(1,1)", "--skew"])


def test_forecast_white_noise_median(tmp_path):
    margin = Margin("student", mu=0.3, sigma=1.5, eta=4.0)
    mp = model_file(tmp_path, VtArmaModel(linear(0.5), ArmaSpec(), margin))
    path = simulate_series(tmp_path, VtArmaModel(linear(0.5), ArmaSpec((0.5,)), margin), 30, 5)
    out = tmp_path / "fc.csv"
    assert cli.main(["forecast", path, "--model", mp, "--levels", "0.5,0.99", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["date", "x", "mu", "var_0.5", "var_0.99"]
    med = np.array([-float(r[3]) for r in rows])
    np.testing.assert_allclose(med, 0.3, atol=1e-9)
    np.testing.assert_allclose([float(r[4]) for r in rows], -margin.quantile(0.01), rtol=1e-8)


def test_backtest_fixed_and_window_errors(tmp_path):
    path = simulate_series(tmp_path, TRUTH, 230, 6)
    fixed = model_file(tmp_path, TRUTH)
    out, rep = tmp_path / "bt.csv", tmp_path / "bt.json"
    code = cli.main(["backtest", path, "--fixed", fixed, "--window", "200", "--out", str(out), "--report", str(rep)])
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["date", "x", "mu", "var_0.95", "exception_0.95", "var_0.99", "exception_0.99"]
    assert len(rows) == 30
    for r in rows:
        assert r[4] == str(int(float(r[1]) < -float(r[3])))
    summary = json.loads(rep.read_text())
    assert summary["n"] == 30
    assert summary["levels"]["0.95"]["exceptions"] == sum(int(r[4]) for r in rows)
    assert summary["failures"] == []
    with pytest.raises(SystemExit) as exc:
        cli.main(["backtest", path, "--fixed", fixed, "--window", "230"])
    assert exc.value.code == 2


def test_backtest_with_refits(tmp_path):
    path = simulate_series(tmp_path, TRUTH, 404, 7)
    init = model_file(tmp_path, TRUTH, "init.json")
    rep = tmp_path / "bt.json"
    code = cli.main(["backtest", path, "--init", init, "--window", "400", "--refit-every", "2",
                     "--out", str(tmp_path / "bt.csv"), "--report", str(rep)])
    assert code == 0
    summary = json.loads(rep.read_text())
    assert summary["n"] == 4 and summary["refit_every"] == 2


def test_diagnose_outputs(tmp_path):
    path = simulate_series(tmp_path, TRUTH, 500, 8)
    prefix = str(tmp_path / "diag")
    assert cli.main(["diagnose", path, "--model", model_file(tmp_path, TRUTH), "--out-prefix", prefix]) == 0
    tests = json.loads(open(prefix + "_tests.json").read())
    assert set(tests) == {"ljung_box_resid_10", "ljung_box_abs_resid_10", "ljung_box_resid_20",
                          "ljung_box_abs_resid_20", "jarque_bera"}
    assert read_csv(prefix + "_acf.csv")[0] == ["lag", "acf_resid", "acf_abs_resid"]
    header, rows = read_csv(prefix + "_qq.csv")
    assert header == ["theoretical", "empirical"] and len(rows) == 500


def test_vplot_data(tmp_path):
    path = simulate_series(tmp_path, TRUTH, 100, 9)
    out, curve = tmp_path / "v.csv", tmp_path / "curve.csv"
    mp = model_file(tmp_path, TRUTH)
    assert cli.main(["vplot-data", path, "--model", mp, "--curve", str(curve), "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["date", "u", "v"] and len(rows) == 100
    assert sorted(float(r[1]) for r in rows) == pytest.approx(np.arange(1, 101) / 101)
    header, rows = read_csv(curve)
    assert len(rows) == 201
    assert float(rows[0][1]) == 1.0 and float(rows[-1][1]) == 1.0
    assert cli.main(["vplot-data", path, "--model", mp, "--proxy", "fitted", "--out", str(out)]) == 0
