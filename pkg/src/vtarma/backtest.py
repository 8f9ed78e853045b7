"""
Conditional value-at-risk forecasts and rolling-window backtests.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from vtarma import model as _model
from vtarma.errors import DataError, VtArmaError

__all__ = [
    "LevelResult",
    "BacktestReport",
    "in_sample_forecast",
    "rolling_backtest",
    "exception_test",
    "binomial_interval",
    "thread_limit",
]


def thread_limit(default=1):
    """Worker cap from the ``VTARMA_THREADS`` environment variable."""
    raw = os.environ.get("VTARMA_THREADS")
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise DataError(f"VTARMA_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise DataError(f"VTARMA_THREADS must be a positive integer, got {raw!r}")
    return n


def binomial_interval(n, p, coverage=0.99):
    """Central binomial interval ``[lo, hi]`` with at least ``coverage`` probability."""
    a = 0.5 * (1.0 - coverage)
    return int(stats.binom.ppf(a, n, p)), int(stats.binom.ppf(1.0 - a, n, p))


def exception_test(exceptions, n, level):
    """Two-sided binomial test of the exception count of a ``level`` VaR series."""
    return float(stats.binomtest(int(exceptions), int(n), 1.0 - level).pvalue)


@dataclass
class LevelResult:
    level: float
    exceptions: int
    expected: float
    pvalue: float
    interval: tuple
    var: np.ndarray
    flags: np.ndarray

    @property
    def in_interval(self):
        return self.interval[0] <= self.exceptions <= self.interval[1]


@dataclass
class BacktestReport:
    """
    One-step VaR forecasts with exception counts per level.

    ``index`` holds the positions of the forecast targets in the input series;
    ``failures`` lists ``(index, message)`` for steps whose refit failed (the
    previous estimate was carried forward).
    """

    index: np.ndarray
    realized: np.ndarray
    mu: np.ndarray
    levels: dict
    failures: list = field(default_factory=list)

    @property
    def n(self):
        return int(self.index.size)


def in_sample_forecast(mdl, x, levels=(0.95, 0.99)):
    """
    Filtered conditional means and in-sample VaR at each time point.

    Returns
    -------
    mu : ndarray
        ``E(Z_t | past)``.
    var : dict
        level -> VaR series; the forecast at ``t`` uses ``x_1..x_{t-1}``.
    """
    x = np.asarray(x, dtype=float)
    ko = _model.filter_states(mdl, x, scale="data")
    levels = [float(lv) for lv in levels]
    psi = 1.0 - np.asarray(levels)
    out = np.empty((x.size, len(levels)))
    for t in range(x.size):
        st = _model.ConditionalState(float(ko.cond_means[t]), float(ko.cond_sds[t]))
        out[t] = -np.asarray(_model.cond_quantile(mdl, st, psi, scale="data"))
    return ko.cond_means, {lv: out[:, i] for i, lv in enumerate(levels)}


def _run_block(args):
    x, starts, window, levels, refit_every, fitter, init = args
    cur = init
    psi = 1.0 - np.asarray(levels)
    mus, vars_, failures = [], [], []
    for k, t in enumerate(starts):
        hist = x[t - window : t]
        if fitter is not None and k % refit_every == 0:
            try:
                cur = fitter(hist, cur)
            except (VtArmaError, ValueError, FloatingPointError) as exc:
                failures.append((int(t), str(exc)))
        st = _model.conditional_state(cur, hist, scale="data")
        mus.append(st.mu_t)
        vars_.append(-np.asarray(_model.cond_quantile(cur, st, psi, scale="data")))
    return np.asarray(mus), np.asarray(vars_).reshape(len(starts), len(levels)), failures


def refit_joint(vt_kind, order, family, skew=False):
    """Refitting function for :func:`rolling_backtest`: warm-started joint fit."""
    return _JointRefit(vt_kind, tuple(order), family, skew)


@dataclass(frozen=True)
class _JointRefit:
    vt_kind: str
    order: tuple
    family: str
    skew: bool

    def __call__(self, hist, prev):
        from vtarma.estimation import fit_joint

        rep = fit_joint(
            hist,
            self.vt_kind,
            self.order,
            self.family,
            skew=self.skew,
            init=prev,
            compute_se=False,
            run_diagnostics=False,
        )
        return rep.model


def rolling_backtest(x, mdl, window=1000, levels=(0.95, 0.99), refit=None, refit_every=1, workers=None):
    """
    Rolling-window one-step VaR backtest.

    At each target time ``t >= window`` the model is (optionally) refitted to
    ``x[t-window:t]``, warm-started from the previous estimate, and the
    one-step conditional VaR for ``x[t]`` is computed.  An exception is
    ``x[t] < -VaR``.

    Parameters
    ----------
    x : array_like
        Return series.
    mdl : VtArmaModel
        Model with a margin; the fixed model when ``refit`` is None, otherwise
        the first warm start.
    refit : callable, optional
        ``refit(history, previous_model) -> model``, e.g. :func:`refit_joint`.
    refit_every : int
        Refit on every ``refit_every``-th step.
    workers : int, optional
        Number of processes; contiguous blocks of targets are run in parallel
        and assembled in time order.  Defaults to ``VTARMA_THREADS`` or 1.
    """
    x = np.asarray(x, dtype=float)
    if mdl.margin is None:
        raise DataError("backtest needs a model with a margin")
    if window < 2:
        raise DataError("window must be at least 2")
    if window >= x.size:
        raise DataError(f"window {window} is not shorter than the series ({x.size})")
    if refit_every < 1:
        raise DataError("refit_every must be at least 1")
    bad = ~np.isfinite(x)
    if bad.any():
        raise DataError(f"non-finite value at index {int(np.flatnonzero(bad)[0])}")
    levels = [float(lv) for lv in levels]
    targets = np.arange(window, x.size)
    workers = thread_limit() if workers is None else int(workers)
    nblocks = max(1, min(workers, targets.size // max(refit_every, 1)))
    blocks = [b for b in np.array_split(targets, nblocks) if b.size]
    tasks = [(x, b, window, levels, refit_every, refit, mdl) for b in blocks]
    if len(tasks) == 1:
        results = [_run_block(tasks[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(tasks)) as pool:
            results = list(pool.map(_run_block, tasks))
    mu = np.concatenate([r[0] for r in results])
    var = np.concatenate([r[1] for r in results])
    failures = [f for r in results for f in r[2]]
    realized = x[targets]
    n = targets.size
    out = {}
    for i, lv in enumerate(levels):
        flags = realized < -var[:, i]
        k = int(flags.sum())
        out[lv] = LevelResult(
            level=lv,
            exceptions=k,
            expected=n * (1.0 - lv),
            pvalue=exception_test(k, n, lv),
            interval=binomial_interval(n, 1.0 - lv),
            var=var[:, i],
            flags=flags,
        )
    return BacktestReport(index=targets, realized=realized, mu=mu, levels=out, failures=failures)
