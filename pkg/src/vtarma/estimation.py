"""
Maximum-likelihood fitting of VT-ARMA copula processes and VT-ARMA models.

Workflow: pseudo-observations and a semi-parametric copula fit, an iid fit of
the margin, then a joint fit of all parameters started from the two stepwise
estimates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from vtarma import model as _model
from vtarma.arma import ArmaSpec
from vtarma.errors import DataError, DegenerateInputError, InvalidSpecError, VtArmaError
from vtarma.margins import Margin
from vtarma.model import VtArmaModel
from vtarma.vtransform import VTransform

__all__ = [
    "FitReport",
    "ParamLayout",
    "LRTest",
    "pseudo_obs",
    "fit_copula",
    "fit_margin_iid",
    "fit_joint",
    "std_errors",
    "lr_stochastic_volatility",
    "ljung_box",
    "diagnose",
    "empirical_vtransform",
    "sample_acf",
]

VT_KINDS = {1: "linear", 2: "two_param", 3: "three_param"}
_PENALTY = 1e10
_MAX_EVALS = 2000
_REL_TOL = 1e-9
_X_TOL = 1e-7
_HESS_STEP = 1e-4


# ---------------------------------------------------------------------------
# constraint maps


def pacf_to_coefs(r):
    """Durbin-Levinson map from partial autocorrelations in (-1, 1) to causal AR coefficients."""
    phi = np.zeros(0)
    for rk in np.asarray(r, dtype=float):
        phi = np.r_[phi - rk * phi[::-1], rk]
    return phi


def coefs_to_pacf(phi):
    """Inverse of :func:`pacf_to_coefs`."""
    phi = np.asarray(phi, dtype=float).copy()
    r = np.zeros(phi.size)
    for k in range(phi.size, 0, -1):
        rk = phi[k - 1]
        r[k - 1] = rk
        if k > 1:
            phi = (phi[: k - 1] + rk * phi[: k - 1][::-1]) / (1.0 - rk * rk)
    return r


def _logit(p):
    return math.log(p / (1.0 - p))


def _expit(x):
    return 1.0 / (1.0 + math.exp(-x)) if x > -700 else 0.0


@dataclass(frozen=True)
class ParamLayout:
    """
    Ordering and constraint maps of the free parameters of a model template.

    Natural parameters are stored in the order AR, MA, v-transform, margin.
    """

    vt_kind: str | None = "two_param"
    p: int = 1
    q: int = 1
    family: str | None = None
    skew: bool = False
    constrain_fulcrum: bool = False
    fixed_copula: tuple | None = None

    @property
    def has_copula(self):
        return self.vt_kind is not None

    @property
    def names(self):
        out = []
        if self.has_copula:
            out += [f"alpha{i + 1}" for i in range(self.p)]
            out += [f"beta{j + 1}" for j in range(self.q)]
            if not self.constrain_fulcrum:
                out.append("delta")
            if self.vt_kind in ("two_param", "three_param"):
                out.append("kappa")
            if self.vt_kind == "three_param":
                out.append("xi")
        if self.family is not None:
            if self.family != "laplace":
                out.append("eta")
            out += ["mu", "sigma"]
            if self.skew:
                out.append("gamma")
        return out

    @property
    def n_arma(self):
        return self.p + self.q if self.has_copula else 0

    def split(self, theta):
        return dict(zip(self.names, np.asarray(theta, dtype=float)))

    def margin(self, d):
        if self.family is None:
            return None
        return Margin(
            family=self.family,
            mu=d["mu"],
            sigma=d["sigma"],
            eta=d.get("eta") if self.family != "laplace" else None,
            gamma=d.get("gamma", 1.0),
        )

    def build(self, theta):
        """Model for natural parameters ``theta`` (raises InvalidSpecError off-domain)."""
        d = self.split(theta)
        margin = self.margin(d)
        if not self.has_copula:
            return VtArmaModel(vt=VTransform(0.5, kind="linear"), arma=ArmaSpec(), margin=margin)
        ar = tuple(d[f"alpha{i + 1}"] for i in range(self.p))
        ma = tuple(d[f"beta{j + 1}"] for j in range(self.q))
        delta = float(margin.cdf(0.0)) if self.constrain_fulcrum else d["delta"]
        vt = VTransform(
            delta=delta,
            kappa=d.get("kappa", 1.0),
            xi=d.get("xi", 1.0),
            kind=self.vt_kind,
        )
        return VtArmaModel(vt=vt, arma=ArmaSpec(ar, ma), margin=margin)

    def to_free(self, theta):
        d = self.split(theta)
        x = []
        if self.has_copula:
            ar = [d[f"alpha{i + 1}"] for i in range(self.p)]
            ma = [d[f"beta{j + 1}"] for j in range(self.q)]
            x += list(np.arctanh(np.clip(coefs_to_pacf(ar), -0.999999, 0.999999)))
            x += list(np.arctanh(np.clip(coefs_to_pacf(-np.asarray(ma)), -0.999999, 0.999999)))
        for name in self.names[self.n_arma :]:
            val = d[name]
            if name == "delta":
                x.append(_logit(val))
            elif name == "mu":
                x.append(val)
            else:
                x.append(math.log(val))
        return np.asarray(x, dtype=float)

    def from_free(self, x):
        x = np.asarray(x, dtype=float)
        theta = []
        if self.has_copula:
            theta += list(pacf_to_coefs(np.tanh(x[: self.p])))
            theta += list(-pacf_to_coefs(np.tanh(x[self.p : self.p + self.q])))
        for name, val in zip(self.names[self.n_arma :], x[self.n_arma :]):
            if name == "delta":
                theta.append(_expit(val))
            elif name == "mu":
                theta.append(val)
            else:
                theta.append(math.exp(min(val, 700.0)))
        return np.asarray(theta, dtype=float)

    def theta_of(self, mdl):
        """Natural parameter vector of a model matching this layout."""
        d = {}
        if self.has_copula:
            for i, a in enumerate(mdl.arma.ar):
                d[f"alpha{i + 1}"] = a
            for j, b in enumerate(mdl.arma.ma):
                d[f"beta{j + 1}"] = b
            d.update(delta=mdl.vt.delta, kappa=mdl.vt.kappa, xi=mdl.vt.xi)
        if self.family is not None:
            m = mdl.margin
            d.update(mu=m.mu, sigma=m.sigma, eta=m.eta, gamma=m.gamma)
        return np.asarray([d[n] for n in self.names], dtype=float)


# ---------------------------------------------------------------------------
# reports


@dataclass
class FitReport:
    """Estimates, standard errors and fit information of one ML fit."""

    names: list
    estimates: np.ndarray
    std_errors: np.ndarray
    loglik: float
    n_obs: int
    model: VtArmaModel
    layout: ParamLayout
    convergence: dict
    residuals: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_params(self):
        return len(self.estimates)

    @property
    def aic(self):
        return 2.0 * self.n_params - 2.0 * self.loglik

    @property
    def params(self):
        return dict(zip(self.names, self.estimates))

    def to_dict(self):
        se = [None if not np.isfinite(s) else float(s) for s in self.std_errors]
        return {
            "names": list(self.names),
            "estimates": [float(e) for e in self.estimates],
            "std_errors": se,
            "loglik": float(self.loglik),
            "aic": float(self.aic),
            "n_obs": int(self.n_obs),
            "model": self.model.to_dict(),
            "layout": {
                "vt_kind": self.layout.vt_kind,
                "p": self.layout.p,
                "q": self.layout.q,
                "family": self.layout.family,
                "skew": self.layout.skew,
                "constrain_fulcrum": self.layout.constrain_fulcrum,
            },
            "convergence": self.convergence,
            "diagnostics": self.diagnostics,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def summary(self):
        lines = [f"{'param':>8} {'estimate':>11} {'s.e.':>9}"]
        for n, e, s in zip(self.names, self.estimates, self.std_errors):
            lines.append(f"{n:>8} {e:11.4f} {s:9.4f}")
        lines.append(f"loglik {self.loglik:.3f}  AIC {self.aic:.3f}  n {self.n_obs}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# building blocks


def pseudo_obs(x):
    """Rank-based PITs ``rank(x_t) / (n + 1)``; ties receive average ranks."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DataError("pseudo-observations need at least two values")
    return stats.rankdata(x, method="average") / (x.size + 1.0)


def empirical_vtransform(x, proxy=np.abs):
    """
    Empirical v-transform: pairs ``(u_t, v_t)`` of (n+1)-scaled empirical cdf
    values of the data and of ``proxy(data)``.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise DataError("need at least two values")
    n1 = x.size + 1.0
    u = stats.rankdata(x, method="max") / n1
    v = stats.rankdata(np.asarray(proxy(x), dtype=float), method="max") / n1
    return u, v


def std_errors(objective, estimate, rel_step=_HESS_STEP):
    """
    Standard errors from the inverse numerical Hessian of ``objective`` (a
    negative log-likelihood) at ``estimate``.

    Coordinates whose curvature is not positive, or that fall in a
    non-positive-definite block, are returned as NaN.

    Returns
    -------
    se : ndarray
    hessian : ndarray
    """
    x = np.asarray(estimate, dtype=float)
    k = x.size
    h = rel_step * np.maximum(np.abs(x), 1e-2)
    f0 = objective(x)
    H = np.empty((k, k))
    E = np.diag(h)
    for i in range(k):
        H[i, i] = (objective(x + E[i]) - 2.0 * f0 + objective(x - E[i])) / h[i] ** 2
        for j in range(i):
            fpp = objective(x + E[i] + E[j])
            fpm = objective(x + E[i] - E[j])
            fmp = objective(x - E[i] + E[j])
            fmm = objective(x - E[i] - E[j])
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    se = np.full(k, np.nan)
    good = np.isfinite(np.diag(H)) & (np.diag(H) > 0.0)
    good &= np.all(np.isfinite(H), axis=1)
    idx = np.flatnonzero(good)
    if idx.size:
        sub = H[np.ix_(idx, idx)]
        try:
            np.linalg.cholesky(sub)
            cov = np.linalg.inv(sub)
            d = np.diag(cov)
            se[idx] = np.where(d > 0.0, np.sqrt(np.abs(d)), np.nan)
        except np.linalg.LinAlgError:
            pass
    return se, H


def unstable_curvature(objective, estimate, rel_step=_HESS_STEP, factor=4.0, tol=2.0):
    """
    Indices of coordinates whose diagonal curvature changes by more than a
    factor ``tol`` when the difference step is multiplied by ``factor``.

    Such coordinates sit on a non-smooth ridge of the likelihood (the fulcrum
    is the usual case), where Hessian-based standard errors are not reliable.
    """
    x = np.asarray(estimate, dtype=float)
    f0 = objective(x)
    out = []
    for i in range(x.size):
        curv = []
        for h in (rel_step * max(abs(x[i]), 1e-2), factor * rel_step * max(abs(x[i]), 1e-2)):
            e = np.zeros_like(x)
            e[i] = h
            curv.append((objective(x + e) - 2.0 * f0 + objective(x - e)) / h**2)
        a, b = curv
        if not (np.isfinite(a) and np.isfinite(b) and a > 0 and b > 0 and max(a, b) / min(a, b) <= tol):
            out.append(i)
    return out


def _safe(fn):
    def wrapped(theta):
        try:
            val = fn(theta)
        except (VtArmaError, FloatingPointError, ZeroDivisionError, OverflowError):
            return np.nan
        return val if np.isfinite(val) else np.nan

    return wrapped


def _maximise(layout, loglik_of_model, theta0, compute_se=True):
    """Maximise ``loglik_of_model`` over the free parameters of ``layout``."""

    def nll_natural(theta):
        return -loglik_of_model(layout.build(theta))

    nll_nat = _safe(nll_natural)

    def nll_free(x):
        val = nll_nat(layout.from_free(x))
        return _PENALTY if np.isnan(val) else val

    x0 = layout.to_free(theta0)
    f_init = nll_free(x0)
    if f_init >= _PENALTY:
        raise InvalidSpecError("log-likelihood is not finite at the starting values")
    nm = optimize.minimize(
        nll_free,
        x0,
        method="Nelder-Mead",
        options={
            "maxfev": _MAX_EVALS,
            "xatol": _X_TOL,
            "fatol": _REL_TOL * max(1.0, abs(f_init)),
            "adaptive": x0.size > 3,
        },
    )
    best_x, best_f = nm.x, nm.fun
    nfev = nm.nfev
    polish_ok = False
    try:
        pol = optimize.minimize(nll_free, best_x, method="L-BFGS-B", options={"maxfun": _MAX_EVALS // 4})
        nfev += pol.nfev
        if np.isfinite(pol.fun) and pol.fun < best_f:
            best_x, best_f, polish_ok = pol.x, pol.fun, True
    except (ValueError, FloatingPointError):
        pass
    theta = layout.from_free(best_x)
    success = bool((nm.success or polish_ok) and best_f < _PENALTY)
    convergence = {
        "success": success,
        "message": str(nm.message),
        "nfev": int(nfev),
        "method": "Nelder-Mead+L-BFGS-B" if polish_ok else "Nelder-Mead",
        "initial_loglik": float(-f_init),
    }
    if compute_se:
        se, _ = std_errors(nll_nat, theta)
        names = layout.names
        convergence["se_unstable"] = [names[i] for i in unstable_curvature(nll_nat, theta)]
    else:
        se = np.full(theta.size, np.nan)
    return theta, -best_f, se, convergence


def _default_theta(layout, x=None):
    d = {}
    if layout.has_copula:
        for i in range(layout.p):
            d[f"alpha{i + 1}"] = (0.9 if layout.q else 0.3) if i == 0 else 0.0
        for j in range(layout.q):
            d[f"beta{j + 1}"] = (-0.8 if layout.p else 0.3) if j == 0 else 0.0
        d.update(delta=0.5, kappa=1.0, xi=1.0)
    if layout.family is not None:
        loc = float(np.median(x))
        mad = float(np.median(np.abs(x - loc)))
        scale = max(mad, 1e-8)
        d["mu"] = loc
        if layout.family == "laplace":
            d["sigma"] = scale / math.log(2.0)
        elif layout.family == "student":
            d["sigma"], d["eta"] = scale / 0.741, 4.0
        else:
            d["sigma"], d["eta"] = scale / math.log(2.0), 1.0
        d["gamma"] = 1.0
    return np.asarray([d[n] for n in layout.names], dtype=float)


def _grid_start(layout, theta0, loglik_of_model):
    """
    Best of a coarse grid over the v-transform parameters, other parameters
    held at ``theta0``.  The likelihood is rough in the fulcrum, so a local
    search started far from the optimum can stall on a minor peak.
    """
    names = layout.names
    grids = {"delta": np.linspace(0.3, 0.7, 41), "kappa": np.array([0.5, 0.7, 1.0, 1.4, 2.0])}
    grids["xi"] = np.array([0.7, 1.0, 1.4])
    axes = [(names.index(n), g) for n, g in grids.items() if n in names]
    if not axes:
        return theta0
    best, best_ll = theta0, -np.inf
    for combo in np.stack(np.meshgrid(*[g for _, g in axes], indexing="ij"), -1).reshape(-1, len(axes)):
        theta = theta0.copy()
        for (i, _), val in zip(axes, combo):
            theta[i] = val
        try:
            ll = loglik_of_model(layout.build(theta))
        except VtArmaError:
            continue
        if np.isfinite(ll) and ll > best_ll:
            best, best_ll = theta, ll
    return best


def _check_pit(u):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 2:
        raise DataError("need a 1-d series of at least two PIT values")
    bad = ~((u > 0.0) & (u < 1.0))
    if bad.any():
        raise DataError(f"PIT value outside (0, 1) at index {int(np.flatnonzero(bad)[0])}")
    return u


def _check_data(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DataError("need a 1-d series of at least two values")
    bad = ~np.isfinite(x)
    if bad.any():
        raise DataError(f"non-finite value at index {int(np.flatnonzero(bad)[0])}")
    return x


def _init_from(layout, init, default):
    if init is None:
        return default
    if isinstance(init, FitReport):
        init = init.model
    if isinstance(init, VtArmaModel):
        return layout.theta_of(init)
    if isinstance(init, dict):
        d = dict(zip(layout.names, default))
        d.update(init)
        return np.asarray([d[n] for n in layout.names], dtype=float)
    return np.asarray(init, dtype=float)


def fit_copula(u, vt_kind="two_param", order=(1, 1), init=None, compute_se=True, run_diagnostics=True):
    """
    Fit a VT-ARMA copula process to PIT data by maximum likelihood.

    Parameters
    ----------
    u : array_like
        PIT values in (0, 1), typically :func:`pseudo_obs` of the data.
    vt_kind : {"linear", "two_param", "three_param"} or {1, 2, 3}
    order : (int, int)
        ARMA order ``(p, q)``.
    init : FitReport, VtArmaModel, dict or array, optional
        Starting values.  Starting from the fit of a nested model (e.g. a
        linear v-transform inside ``two_param``) guarantees a log-likelihood
        at least as large as the nested one.
    """
    u = _check_pit(u)
    vt_kind = VT_KINDS.get(vt_kind, vt_kind)
    layout = ParamLayout(vt_kind=vt_kind, p=order[0], q=order[1])

    def loglik(m):
        return _model.copula_loglik(m, u)

    if init is None:
        theta0 = _grid_start(layout, _default_theta(layout), loglik)
    else:
        theta0 = _init_from(layout, init, _default_theta(layout))
    theta, ll, se, conv = _maximise(layout, loglik, theta0, compute_se)
    mdl = layout.build(theta)
    rep = FitReport(layout.names, theta, se, ll, u.size, mdl, layout, conv)
    rep.residuals = _model.residuals(mdl, u)
    if run_diagnostics:
        rep.diagnostics = diagnose(rep.residuals)["tests"]
    return rep


def fit_margin_iid(x, family, skew=False, init=None, compute_se=True):
    """Maximum-likelihood fit of a marginal distribution under an iid assumption."""
    x = _check_data(x)
    layout = ParamLayout(vt_kind=None, p=0, q=0, family=family, skew=skew)
    theta0 = _init_from(layout, init, _default_theta(layout, x=x))
    theta, ll, se, conv = _maximise(layout, lambda m: float(np.sum(m.margin.logpdf(x))), theta0, compute_se)
    mdl = layout.build(theta)
    return FitReport(layout.names, theta, se, ll, x.size, mdl, layout, conv)


def fit_joint(
    x,
    vt_kind="two_param",
    order=(1, 1),
    family="laplace",
    skew=False,
    copula_fit=None,
    margin_fit=None,
    constrain_fulcrum=False,
    init=None,
    compute_se=True,
    run_diagnostics=True,
):
    """
    Joint maximum-likelihood fit of margin, v-transform and ARMA parameters.

    Starting values come from ``copula_fit`` (semi-parametric fit on
    pseudo-observations) and ``margin_fit`` (iid margin fit); missing ones are
    computed first.  ``constrain_fulcrum`` ties the fulcrum to ``F_X(0)`` so
    that the change point of the volatility proxy is zero.
    """
    x = _check_data(x)
    vt_kind = VT_KINDS.get(vt_kind, vt_kind)
    layout = ParamLayout(
        vt_kind=vt_kind, p=order[0], q=order[1], family=family, skew=skew, constrain_fulcrum=constrain_fulcrum
    )
    if init is None:
        if copula_fit is None:
            copula_fit = fit_copula(pseudo_obs(x), vt_kind, order, compute_se=False, run_diagnostics=False)
        if margin_fit is None:
            margin_fit = fit_margin_iid(x, family, skew=skew, compute_se=False)
        start = dict(copula_fit.params)
        start.update(margin_fit.params)
        theta0 = np.asarray([start[n] for n in layout.names], dtype=float)
    else:
        theta0 = _init_from(layout, init, _default_theta(layout, x=x))

    theta, ll, se, conv = _maximise(layout, lambda m: _model.full_loglik(m, x), theta0, compute_se)
    mdl = layout.build(theta)
    rep = FitReport(layout.names, theta, se, ll, x.size, mdl, layout, conv)
    rep.residuals = _model.residuals(mdl, x, scale="data")
    if run_diagnostics:
        rep.diagnostics = diagnose(rep.residuals)["tests"]
    return rep


# ---------------------------------------------------------------------------
# tests and diagnostics


@dataclass(frozen=True)
class LRTest:
    statistic: float
    df: int
    pvalue: float


def lr_stochastic_volatility(fit, method="chi2", n_boot=99, seed=None):
    """
    Likelihood-ratio test of a white-noise driver (no stochastic volatility).

    The null log-likelihood of the copula model is zero, so the statistic is
    ``2 * L``.  With ``method="chi2"`` the p-value is from a chi-squared law
    with one degree of freedom per ARMA coefficient.  The v-transform
    parameters are not identified under the null, which makes that reference
    law anti-conservative; ``method="bootstrap"`` refits the same model to
    ``n_boot`` iid uniform samples and returns the Monte Carlo p-value.
    """
    df = fit.layout.n_arma
    if df == 0:
        raise DataError("fit has no ARMA parameters")
    stat = max(2.0 * fit.loglik, 0.0)
    if method == "chi2":
        return LRTest(statistic=stat, df=df, pvalue=float(stats.chi2.sf(stat, df)))
    if method != "bootstrap":
        raise DataError(f"method must be 'chi2' or 'bootstrap', got {method!r}")
    rng = np.random.default_rng(seed)
    lay = fit.layout
    exceed = 0
    for _ in range(n_boot):
        u = rng.uniform(size=fit.n_obs)
        rep = fit_copula(u, lay.vt_kind, (lay.p, lay.q), compute_se=False, run_diagnostics=False)
        exceed += 2.0 * rep.loglik >= stat
    return LRTest(statistic=stat, df=df, pvalue=(exceed + 1.0) / (n_boot + 1.0))


def sample_acf(x, nlags=20):
    """Sample autocorrelations at lags 0..nlags."""
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    denom = float(d @ d)
    if denom == 0.0:
        raise DegenerateInputError("series is constant")
    return np.array([1.0] + [float(d[k:] @ d[:-k]) / denom for k in range(1, nlags + 1)])


def ljung_box(x, lags):
    """Ljung-Box statistic and chi-squared p-value at ``lags``."""
    n = len(x)
    r = sample_acf(x, lags)[1:]
    q = n * (n + 2.0) * np.sum(r**2 / (n - np.arange(1, lags + 1)))
    return float(q), float(stats.chi2.sf(q, lags))


def diagnose(fit, data=None, lags=(10, 20), nlags=20):
    """
    Residual diagnostics: Ljung-Box on residuals and absolute residuals,
    Jarque-Bera normality, residual ACFs and QQ-plot pairs.

    Parameters
    ----------
    fit : FitReport or array_like
        A fit (its residuals are used, or recomputed from ``data``) or a
        residual series.
    data : array_like, optional
        Observations to filter with the fitted model; PIT values for a copula
        fit, raw data for a fit with a margin.

    Returns
    -------
    dict
        ``tests`` maps test names to statistic and p-value; ``acf_resid``,
        ``acf_abs_resid`` and ``qq`` hold arrays.
    """
    if isinstance(fit, FitReport):
        if data is not None:
            scale = "pit" if fit.model.margin is None else "data"
            resid = _model.residuals(fit.model, data, scale=scale)
        elif fit.residuals is not None:
            resid = fit.residuals
        else:
            raise DataError("fit carries no residuals; pass the data")
    else:
        resid = fit
    r = np.asarray(resid, dtype=float)
    r = r[np.isfinite(r)]
    if r.size < 3 or np.ptp(r) == 0.0:
        raise DegenerateInputError("residuals are constant or too few")
    tests = {}
    a = np.abs(r)
    for lag in lags:
        s, p = ljung_box(r, lag)
        tests[f"ljung_box_resid_{lag}"] = {"statistic": s, "pvalue": p}
        s, p = ljung_box(a, lag)
        tests[f"ljung_box_abs_resid_{lag}"] = {"statistic": s, "pvalue": p}
    jb = stats.jarque_bera(r)
    tests["jarque_bera"] = {"statistic": float(jb.statistic), "pvalue": float(jb.pvalue)}
    n = r.size
    theo = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    return {
        "tests": tests,
        "acf_resid": sample_acf(r, nlags),
        "acf_abs_resid": sample_acf(a, nlags),
        "qq": np.column_stack([theo, np.sort(r)]),
    }
