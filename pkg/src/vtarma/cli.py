"""
Command-line interface: ``vtarma {sim,fit,forecast,backtest,diagnose,vplot-data}``.

Series are read and written as CSV, models and reports as JSON.  Exit codes:
0 success, 1 numeric failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import re
import sys
from pathlib import Path

import numpy as np

from vtarma import backtest as _bt
from vtarma import estimation as _est
from vtarma import model as _model
from vtarma.data import ingest
from vtarma.errors import DataError, InvalidSpecError, NumericError, VtArmaError
from vtarma.model import VtArmaModel

MARGINS = {"none": None, "laplace": "laplace", "student": "student", "dweibull": "double_weibull"}
_MODEL_RE = re.compile(r"^vt([123])-arma\((\d+),\s*(\d+)\)$", re.IGNORECASE)


class UsageError(Exception):
    pass


def parse_model_string(text):
    """``"vt2-arma(1,1)"`` -> ``("two_param", (1, 1))``."""
    m = _MODEL_RE.match(text.strip())
    if m is None:
        raise UsageError(f"invalid model {text!r}; expected vt{{1|2|3}}-arma(p,q), e.g. vt2-arma(1,1)")
    p, q = int(m.group(2)), int(m.group(3))
    if p + q == 0:
        raise UsageError("arma(0,0) has no parameters to fit")
    return _est.VT_KINDS[int(m.group(1))], (p, q)


def parse_levels(text):
    try:
        levels = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"invalid --levels {text!r}") from None
    if not levels or not all(0.0 < lv < 1.0 for lv in levels):
        raise UsageError("levels must lie in (0, 1)")
    return levels


def load_model(path):
    """Model from a model JSON or a fit-report JSON (its ``model`` entry)."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model JSON {path}: {exc}") from None
    if "model" in d:
        d = d["model"]
    try:
        return VtArmaModel.from_dict(d)
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: not a model description ({exc})") from None


def _fmt(x):
    return repr(float(x))


def _write_csv(path, header, rows):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _write_json(path, obj):
    text = json.dumps(obj, indent=2, default=_json_default) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _warn(msg):
    print(f"vtarma: warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def cmd_sim(args):
    mdl = load_model(args.model)
    if args.n < 1:
        raise UsageError("--n must be positive")
    sim = _model.simulate(mdl, args.n, seed=args.seed)
    cols = ["t"] + (["x"] if sim.x is not None else []) + ["u", "v", "z"]
    rows = []
    for t in range(args.n):
        row = [t + 1] + ([_fmt(sim.x[t])] if sim.x is not None else [])
        row += [_fmt(sim.u[t]), _fmt(sim.v[t]), _fmt(sim.z[t])]
        rows.append(row)
    _write_csv(args.out, cols, rows)
    if args.series_out is not None:
        # a date,value file that fit/forecast/backtest read back directly
        try:
            start = datetime.date.fromisoformat(args.start_date)
        except ValueError:
            raise UsageError(f"invalid --start-date {args.start_date!r}; expected YYYY-MM-DD") from None
        vals = sim.u if sim.x is None else sim.x
        dates = [(start + datetime.timedelta(days=t)).isoformat() for t in range(args.n)]
        _write_csv(args.series_out, ["date", "value"], [[d, _fmt(v)] for d, v in zip(dates, vals)])
    return 0


def _residual_rows(dates, mdl, data, scale):
    ko = _model.filter_states(mdl, data, scale=scale)
    r = _model.residuals(mdl, data, scale=scale)
    return [[d, _fmt(a), _fmt(b)] for d, a, b in zip(dates, r, ko.cond_means)]


def cmd_fit(args):
    vt_kind, order = parse_model_string(args.model)
    family = MARGINS[args.margin]
    series = ingest(args.data, mode=args.mode)
    x = series.values
    if family is None:
        if args.skew or args.constrain_fulcrum:
            raise UsageError("--skew and --constrain-fulcrum need a parametric margin")
        data = _est.pseudo_obs(x)
        rep = _est.fit_copula(data, vt_kind, order)
        scale = "pit"
    else:
        rep = _est.fit_joint(x, vt_kind, order, family, skew=args.skew, constrain_fulcrum=args.constrain_fulcrum)
        data, scale = x, "data"
    if not rep.convergence["success"]:
        _warn(f"optimizer did not report convergence: {rep.convergence['message']}")
    _write_json(args.out, rep.to_dict())
    resid_path = args.residuals
    if resid_path is None and args.out not in (None, "-"):
        resid_path = str(Path(args.out).with_suffix("")) + "_residuals.csv"
    if resid_path is not None:
        _write_csv(resid_path, ["date", "residual", "mu"], _residual_rows(series.timestamps, rep.model, data, scale))
    print(rep.summary(), file=sys.stderr)
    return 0


def cmd_forecast(args):
    mdl = load_model(args.model)
    levels = parse_levels(args.levels)
    series = ingest(args.data, mode=args.mode)
    if mdl.margin is None:
        raise UsageError("forecast needs a model with a margin")
    mu, var = _bt.in_sample_forecast(mdl, series.values, levels)
    header = ["date", "x", "mu"] + [f"var_{lv:g}" for lv in levels]
    rows = [
        [d, _fmt(xv), _fmt(m)] + [_fmt(var[lv][t]) for lv in levels]
        for t, (d, xv, m) in enumerate(zip(series.timestamps, series.values, mu))
    ]
    _write_csv(args.out, header, rows)
    return 0


def cmd_backtest(args):
    levels = parse_levels(args.levels)
    series = ingest(args.data, mode=args.mode)
    x = series.values
    if args.window >= x.size:
        raise UsageError(f"--window {args.window} is not shorter than the series ({x.size} values)")
    if args.fixed is not None:
        mdl = load_model(args.fixed)
        refit = None
    else:
        vt_kind, order = parse_model_string(args.model)
        family = MARGINS[args.margin]
        if family is None:
            raise UsageError("backtest needs a parametric margin")
        refit = _bt.refit_joint(vt_kind, order, family, skew=args.skew)
        if args.init is not None:
            mdl = load_model(args.init)
        else:
            mdl = _est.fit_joint(
                x[: args.window], vt_kind, order, family, skew=args.skew, compute_se=False, run_diagnostics=False
            ).model
    rep = _bt.rolling_backtest(
        x, mdl, window=args.window, levels=levels, refit=refit, refit_every=args.refit_every
    )
    header = ["date", "x", "mu"]
    for lv in levels:
        header += [f"var_{lv:g}", f"exception_{lv:g}"]
    rows = []
    for i, t in enumerate(rep.index):
        row = [series.timestamps[t], _fmt(x[t]), _fmt(rep.mu[i])]
        for lv in levels:
            res = rep.levels[lv]
            row += [_fmt(res.var[i]), int(res.flags[i])]
        rows.append(row)
    _write_csv(args.out, header, rows)
    summary = {
        "n": rep.n,
        "window": args.window,
        "refit_every": args.refit_every if refit is not None else None,
        "levels": {
            f"{lv:g}": {
                "exceptions": r.exceptions,
                "expected": r.expected,
                "pvalue": r.pvalue,
                "interval_99": list(r.interval),
            }
            for lv, r in rep.levels.items()
        },
        "failures": [{"date": series.timestamps[t], "message": m} for t, m in rep.failures],
    }
    if args.report is not None:
        _write_json(args.report, summary)
    for lv, r in rep.levels.items():
        print(
            f"level {lv:g}: {r.exceptions} exceptions, expected {r.expected:.2f}, binomial p = {r.pvalue:.3f}",
            file=sys.stderr,
        )
    return 0


def cmd_diagnose(args):
    mdl = load_model(args.model)
    series = ingest(args.data, mode=args.mode)
    if mdl.margin is None:
        resid = _model.residuals(mdl, _est.pseudo_obs(series.values), scale="pit")
    else:
        resid = _model.residuals(mdl, series.values, scale="data")
    d = _est.diagnose(resid)
    prefix = args.out_prefix
    _write_json(None if prefix is None else f"{prefix}_tests.json", d["tests"])
    if prefix is not None:
        lags = range(d["acf_resid"].size)
        _write_csv(
            f"{prefix}_acf.csv",
            ["lag", "acf_resid", "acf_abs_resid"],
            [[k, _fmt(a), _fmt(b)] for k, a, b in zip(lags, d["acf_resid"], d["acf_abs_resid"])],
        )
        _write_csv(f"{prefix}_qq.csv", ["theoretical", "empirical"], [[_fmt(a), _fmt(b)] for a, b in d["qq"]])
    return 0


def cmd_vplot_data(args):
    series = ingest(args.data, mode=args.mode)
    x = series.values
    mdl = load_model(args.model) if args.model is not None else None
    if args.proxy == "fitted":
        if mdl is None or mdl.margin is None:
            raise UsageError("--proxy fitted needs --model with a margin")
        u, v = _est.empirical_vtransform(x, proxy=lambda a: _model.implied_proxy_transform(mdl, a))
    else:
        u, v = _est.empirical_vtransform(x)
    _write_csv(args.out, ["date", "u", "v"], [[d, _fmt(a), _fmt(b)] for d, a, b in zip(series.timestamps, u, v)])
    if args.curve is not None:
        if mdl is None:
            raise UsageError("--curve needs --model")
        grid = np.linspace(0.0, 1.0, args.curve_points)
        vals = np.asarray(mdl.vt.evaluate(grid))
        _write_csv(args.curve, ["u", "v"], [[_fmt(a), _fmt(b)] for a, b in zip(grid, vals)])
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="vtarma", description="VT-ARMA volatility models.")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("data", help="CSV with header date,value")
        sp.add_argument("--mode", choices=("returns", "prices"), default="returns")

    s = sub.add_parser("sim", help="simulate from a model JSON")
    s.add_argument("--model", required=True, help="model or fit-report JSON")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default=None, help="output CSV (default stdout)")
    s.add_argument("--series-out", default=None, help="also write x (or u) as a date,value CSV")
    s.add_argument("--start-date", default="2000-01-01", help="first date of --series-out")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("fit", help="fit a VT-ARMA copula or full model")
    data_args(s)
    s.add_argument("--model", required=True, help="vt{1|2|3}-arma(p,q)")
    s.add_argument("--margin", choices=tuple(MARGINS), default="none")
    s.add_argument("--skew", action="store_true")
    s.add_argument("--constrain-fulcrum", action="store_true", help="tie the fulcrum to F_X(0)")
    s.add_argument("--out", default=None, help="fit-report JSON (default stdout)")
    s.add_argument("--residuals", default=None, help="residual CSV (default <out>_residuals.csv)")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("forecast", help="in-sample conditional mean and VaR series")
    data_args(s)
    s.add_argument("--model", required=True, help="fit-report or model JSON with a margin")
    s.add_argument("--levels", default="0.95,0.99")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_forecast)

    s = sub.add_parser("backtest", help="rolling-window VaR backtest")
    data_args(s)
    s.add_argument("--model", default="vt2-arma(1,1)", help="vt{1|2|3}-arma(p,q) refitted on each window")
    s.add_argument("--margin", choices=tuple(m for m in MARGINS if m != "none"), default="laplace")
    s.add_argument("--skew", action="store_true")
    s.add_argument("--init", default=None, help="JSON warm start for the first window")
    s.add_argument("--fixed", default=None, help="JSON model used at every step without refitting")
    s.add_argument("--window", type=int, default=1000)
    s.add_argument("--refit-every", type=int, default=1)
    s.add_argument("--levels", default="0.95,0.99")
    s.add_argument("--out", default=None, help="per-step CSV (default stdout)")
    s.add_argument("--report", default=None, help="summary JSON")
    s.set_defaults(func=cmd_backtest)

    s = sub.add_parser("diagnose", help="residual diagnostics of a fitted model")
    data_args(s)
    s.add_argument("--model", required=True)
    s.add_argument("--out-prefix", default=None, help="write <prefix>_tests.json, _acf.csv, _qq.csv")
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("vplot-data", help="empirical v-transform pairs for plotting")
    data_args(s)
    s.add_argument("--model", default=None, help="fit JSON for the fitted proxy or curve")
    s.add_argument("--proxy", choices=("abs", "fitted"), default="abs")
    s.add_argument("--curve", default=None, help="also write the model v-transform curve")
    s.add_argument("--curve-points", type=int, default=201)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_vplot_data)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "refit_every", 1) < 1:
        parser.error("--refit-every must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (DataError, InvalidSpecError, FileNotFoundError) as exc:
        print(f"vtarma: error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, VtArmaError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"vtarma: numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
