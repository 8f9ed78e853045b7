"""
VT-ARMA processes.

A VT-ARMA copula process ``U_t`` is obtained by passing a unit-variance
Gaussian ARMA process ``Z_t`` through ``V_t = Phi(Z_t)`` and stochastically
inverting a v-transform; a VT-ARMA process applies a marginal quantile
function on top, ``X_t = F_X^{-1}(U_t)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from vtarma import arma as _arma
from vtarma.arma import ArmaSpec
from vtarma.copula import normal_scores
from vtarma.errors import DataError, InvalidSpecError, NumericError
from vtarma.margins import Margin
from vtarma.vtransform import VTransform

__all__ = [
    "VtArmaModel",
    "Simulation",
    "ConditionalState",
    "simulate",
    "copula_loglik",
    "copula_loglik_terms",
    "full_loglik",
    "filter_states",
    "conditional_state",
    "cond_density",
    "cond_density_x",
    "cond_cdf",
    "cond_quantile",
    "value_at_risk",
    "residuals",
    "implied_proxy_transform",
]

_HALF_LOG2PI = 0.5 * float(np.log(2.0 * np.pi))
_LOG2PI = float(np.log(2.0 * np.pi))

# quadrature of the conditional cdf in standardised normal scores
_Y_MAX = 9.0
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_N_PANELS = 12
_TABLE_CELLS = 256
_NEWTON_ITER = 4


@dataclass(frozen=True)
class VtArmaModel:
    """V-transform, ARMA driver and (optionally) a marginal distribution."""

    vt: VTransform
    arma: ArmaSpec
    margin: Margin | None = None

    def to_dict(self):
        return {
            "vt": self.vt.to_dict(),
            "arma": self.arma.to_dict(),
            "margin": None if self.margin is None else self.margin.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        margin = d.get("margin")
        return cls(
            vt=VTransform.from_dict(d["vt"]),
            arma=ArmaSpec.from_dict(d["arma"]),
            margin=None if margin is None else Margin.from_dict(margin),
        )

    def _require_margin(self):
        if self.margin is None:
            raise InvalidSpecError("this operation needs a model with a margin")
        return self.margin


@dataclass(frozen=True)
class Simulation:
    """Simulated paths; ``x`` is ``None`` for a copula-only model."""

    x: np.ndarray | None
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class ConditionalState:
    """Predictive mean and standard deviation of ``Z_t`` given the past."""

    mu_t: float
    sigma_eps: float

    def __post_init__(self):
        if not self.sigma_eps > 0.0:
            raise InvalidSpecError("sigma_eps must be positive")


def simulate(model, n, seed=None):
    """
    Simulate ``n`` steps: ARMA scores, ``v = Phi(z)``, independent uniforms
    ``w``, stochastic inversion to ``u`` and the marginal quantile to ``x``.
    """
    rng = np.random.default_rng(seed)
    z = _arma.simulate(model.arma, n, rng)
    v = special.ndtr(z)
    w = rng.uniform(size=n)
    u = np.asarray(model.vt.stochastic_invert(v, w))
    x = None if model.margin is None else model.margin.quantile_unchecked(u)
    return Simulation(x=x, u=u, v=v, z=z, w=w)


def _scores(vt, u):
    u = np.asarray(u, dtype=float)
    bad = ~np.isfinite(u) | (u < 0.0) | (u > 1.0)
    if bad.any():
        raise DataError(f"PIT value outside [0, 1] at index {int(np.flatnonzero(bad)[0])}")
    z = normal_scores(np.asarray(vt.evaluate(u)))
    bad = ~np.isfinite(z)
    if bad.any():
        raise DataError(f"non-finite normal score at index {int(np.flatnonzero(bad)[0])}")
    return z


def copula_loglik_terms(model, u):
    """Per-observation contributions to the copula log-likelihood."""
    z = _scores(model.vt, u)
    ko = _arma.kalman_loglik(model.arma, z)
    return ko.terms - (-0.5 * (_LOG2PI + z * z))


def copula_loglik(model, u):
    """
    Log-likelihood of PIT data ``u``: the exact ARMA log-likelihood of the
    normal scores ``Phi^{-1}(V(u_t))`` minus the sum of their standard normal
    log-densities.  Identically zero for a white-noise driver.
    """
    return float(np.sum(copula_loglik_terms(model, u)))


def full_loglik(model, x):
    """Marginal log-likelihood of ``x`` plus the copula log-likelihood of ``F_X(x)``."""
    m = model._require_margin()
    x = np.asarray(x, dtype=float)
    return float(np.sum(m.logpdf(x))) + copula_loglik(model, m.cdf(x))


def _to_pit(model, data, scale):
    if scale == "pit":
        return np.asarray(data, dtype=float)
    if scale == "data":
        return np.asarray(model._require_margin().cdf(data), dtype=float)
    raise DataError(f"scale must be 'pit' or 'data', got {scale!r}")


def filter_states(model, data, scale="pit"):
    """
    Kalman filter on the normal scores of ``data``.

    Returns the :class:`~vtarma.arma.KalmanOutput`; its ``cond_means`` are the
    estimates of ``E(Z_t | past)``.
    """
    z = _scores(model.vt, _to_pit(model, data, scale))
    return _arma.kalman_loglik(model.arma, z)


def conditional_state(model, history, scale="pit"):
    """One-step-ahead predictive state after observing ``history``."""
    history = np.asarray(history, dtype=float)
    if history.size == 0:
        return ConditionalState(0.0, 1.0)
    ko = filter_states(model, history, scale)
    return ConditionalState(ko.next_mean, ko.next_sd)


def cond_density(model, state, u):
    """Conditional density of ``U_t`` given the past, on the PIT scale."""
    z = normal_scores(np.asarray(model.vt.evaluate(u)))
    mu, s = state.mu_t, state.sigma_eps
    y = (z - mu) / s
    return np.exp(-0.5 * y * y + 0.5 * z * z) / s


def cond_density_x(model, state, x):
    """Conditional density of ``X_t`` given the past, on the data scale."""
    m = model._require_margin()
    return m.pdf(x) * cond_density(model, state, m.cdf(x))


def _upper_tail(model, state, y_lo, down):
    """
    ``int_{y_lo}^{Y} phi(y) h(Phi(mu + s*y)) dy`` with ``h = Delta`` (down) or
    ``1 - Delta``; composite Gauss-Legendre in ``y``.
    """
    mu, s = state.mu_t, state.sigma_eps
    y_lo = np.clip(np.asarray(y_lo, dtype=float), -_Y_MAX, _Y_MAX)
    edges = y_lo[..., None] + (_Y_MAX - y_lo[..., None]) * np.linspace(0.0, 1.0, _N_PANELS + 1)
    a, b = edges[..., :-1], edges[..., 1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[..., None] + half[..., None] * _GL_X
    weights = half[..., None] * _GL_W
    v = special.ndtr(mu + s * nodes)
    delta = np.asarray(model.vt.down_probability(v.ravel())).reshape(v.shape)
    h = np.where(down[..., None, None], delta, 1.0 - delta)
    phi = np.exp(-0.5 * nodes * nodes - _HALF_LOG2PI)
    return np.sum(weights * phi * h, axis=(-2, -1))


def cond_cdf(model, state, u):
    """
    Conditional cdf of ``U_t`` given the past.

    The conditional density is integrated after substituting
    ``u = V^{-1}(Phi(z))`` on each branch, which turns the integrand into a
    normal density weighted by the conditional down probability; this removes
    the cusp of the density at the fulcrum.
    """
    u = np.asarray(u, dtype=float)
    vt = model.vt
    with np.errstate(divide="ignore"):
        z = special.ndtri(np.asarray(vt.evaluate(u)))
    y_lo = (z - state.mu_t) / state.sigma_eps
    down = np.atleast_1d(u <= vt.delta)
    tail = _upper_tail(model, state, np.atleast_1d(y_lo), down)
    F = np.where(down, tail, 1.0 - tail)
    F = np.clip(F, 0.0, 1.0).reshape(u.shape)
    return F if F.ndim else float(F)


def _branch_tables(model, state, n_cells=_TABLE_CELLS):
    """
    Cell edges in standardised scores ``y`` and the upper-tail integrals of
    ``phi(y) Delta`` (down branch) and ``phi(y) (1 - Delta)`` (up branch)
    from each edge to the top of the grid.
    """
    edges = np.linspace(-_Y_MAX, _Y_MAX, n_cells + 1)
    half = 0.5 * (edges[1] - edges[0])
    nodes = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half * _GL_X
    v = special.ndtr(state.mu_t + state.sigma_eps * nodes)
    delta = np.asarray(model.vt.down_probability(v.ravel())).reshape(v.shape)
    phi = np.exp(-0.5 * nodes * nodes - _HALF_LOG2PI)
    cell_d = half * np.sum(_GL_W * phi * delta, axis=1)
    cell_u = half * np.sum(_GL_W * phi * (1.0 - delta), axis=1)
    tail_d = np.r_[np.cumsum(cell_d[::-1])[::-1], 0.0]
    tail_u = np.r_[np.cumsum(cell_u[::-1])[::-1], 0.0]
    return edges, tail_d, tail_u


def _solve_tail(model, state, edges, tail, target, down):
    """Solve ``int_y^Y phi(t) h(t) dt = target`` for ``y`` (``h`` as in :func:`_upper_tail`)."""
    # tail is decreasing in the edge index; locate the bracketing cell
    k = np.searchsorted(-tail, -target, side="right") - 1
    k = np.clip(k, 0, edges.size - 2)
    a, b = edges[k], edges[k + 1]
    ta, tb = tail[k], tail[k + 1]
    frac = np.where(ta > tb, (ta - target) / np.where(ta > tb, ta - tb, 1.0), 0.5)
    y = a + np.clip(frac, 0.0, 1.0) * (b - a)
    mu, s = state.mu_t, state.sigma_eps
    for _ in range(_NEWTON_ITER):
        half = 0.5 * (b - y)
        nodes = (0.5 * (y + b))[:, None] + half[:, None] * _GL_X
        dn = np.asarray(model.vt.down_probability(special.ndtr(mu + s * nodes).ravel())).reshape(nodes.shape)
        h = np.where(down[:, None], dn, 1.0 - dn)
        phi = np.exp(-0.5 * nodes * nodes - _HALF_LOG2PI)
        val = tb + half * np.sum(_GL_W * phi * h, axis=1)
        dn_y = np.asarray(model.vt.down_probability(special.ndtr(mu + s * y)))
        slope = np.exp(-0.5 * y * y - _HALF_LOG2PI) * np.where(down, dn_y, 1.0 - dn_y)
        step = np.where(slope > 0.0, (val - target) / np.where(slope > 0.0, slope, 1.0), 0.0)
        y = np.clip(y + step, a, b)
    return y


def cond_quantile(model, state, psi, scale="pit"):
    """
    ``psi``-quantile of the one-step conditional distribution.

    The branch integrals behind :func:`cond_cdf` are tabulated once on a grid
    of standardised scores; each quantile is then found in its bracketing
    cell by Newton steps with exact Gauss-Legendre integrals, and mapped back
    through the matching branch of the inverse v-transform.  On the data scale
    the marginal quantile function is applied.
    """
    psi = np.asarray(psi, dtype=float)
    if np.any(~(psi > 0.0)) or np.any(~(psi < 1.0)):
        raise DataError("psi must lie in (0, 1)")
    flat = np.atleast_1d(psi).ravel()
    edges, tail_d, tail_u = _branch_tables(model, state)
    down = flat <= tail_d[0]
    target = np.where(down, flat, 1.0 - flat)
    y = np.empty_like(flat)
    if down.any():
        y[down] = _solve_tail(model, state, edges, tail_d, target[down], down[down])
    if (~down).any():
        y[~down] = _solve_tail(model, state, edges, tail_u, target[~down], down[~down])
    v = special.ndtr(state.mu_t + state.sigma_eps * y)
    left = np.asarray(model.vt.inverse_left(v), dtype=float)
    u = np.where(down, left, left + v)
    if not np.all(np.isfinite(u)):
        raise NumericError("conditional quantile search failed")
    if scale == "data":
        u = model._require_margin().quantile_unchecked(u)
    elif scale != "pit":
        raise DataError(f"scale must be 'pit' or 'data', got {scale!r}")
    u = u.reshape(psi.shape)
    return u if u.ndim else float(u)


def value_at_risk(model, state, level):
    """Conditional value-at-risk at confidence ``level``: minus the ``(1 - level)``-quantile."""
    return -np.asarray(cond_quantile(model, state, 1.0 - np.asarray(level), scale="data"))


def residuals(model, data, scale="pit"):
    """Residuals ``z_t - mu_t`` of the normal scores against their filtered means."""
    z = _scores(model.vt, _to_pit(model, data, scale))
    ko = _arma.kalman_loglik(model.arma, z)
    return z - ko.cond_means


def implied_proxy_transform(model, x):
    """Implied volatility proxy ``Phi^{-1}(V(F_X(x)))`` on the data scale."""
    m = model._require_margin()
    out = normal_scores(np.asarray(model.vt.evaluate(m.cdf(x))))
    return out if np.ndim(out) else float(out)
