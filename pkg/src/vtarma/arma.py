"""
Unit-variance Gaussian ARMA(p, q) driver.

The process ``Z_t = sum_i ar[i] Z_{t-i} + eps_t + sum_j ma[j] eps_{t-j}`` is
scaled so that ``var(Z_t) = 1``: the innovation variance is not a free
parameter but the function of the coefficients that makes the stationary
variance one.  The exact likelihood is computed with a Kalman filter on the
companion (Harvey) state-space form, initialised at the stationary law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from vtarma.errors import DataError, InvalidSpecError

__all__ = [
    "ArmaSpec",
    "KalmanOutput",
    "innovation_variance",
    "acf",
    "simulate",
    "kalman_loglik",
    "state_space",
]

_ROOT_MARGIN = 1e-8
_LOG2PI = float(np.log(2.0 * np.pi))


def _roots_outside(coefs):
    """True when ``1 + c1 z + ... + ck z^k`` has all roots outside the unit circle."""
    c = np.trim_zeros(np.asarray(coefs, dtype=float), "b")
    if c.size == 0:
        return True
    if c.size == 1:
        return bool(abs(c[0]) * (1.0 + _ROOT_MARGIN) < 1.0)
    roots = np.roots(np.r_[c[::-1], 1.0])
    return bool(np.all(np.abs(roots) > 1.0 + _ROOT_MARGIN))


@dataclass(frozen=True)
class ArmaSpec:
    """AR coefficients ``ar`` and MA coefficients ``ma`` of a causal, invertible ARMA."""

    ar: tuple = ()
    ma: tuple = ()

    def __post_init__(self):
        ar = tuple(float(a) for a in np.atleast_1d(np.asarray(self.ar, dtype=float)))
        ma = tuple(float(b) for b in np.atleast_1d(np.asarray(self.ma, dtype=float)))
        object.__setattr__(self, "ar", ar)
        object.__setattr__(self, "ma", ma)
        if not all(np.isfinite(ar + ma)):
            raise InvalidSpecError("ARMA coefficients must be finite")
        if not _roots_outside([-a for a in ar]):
            raise InvalidSpecError(f"AR polynomial is not causal: ar={ar}")
        if not _roots_outside(ma):
            raise InvalidSpecError(f"MA polynomial is not invertible: ma={ma}")

    @property
    def p(self):
        return len(self.ar)

    @property
    def q(self):
        return len(self.ma)

    @property
    def is_white_noise(self):
        return not any(self.ar) and not any(self.ma)

    def to_dict(self):
        return {"ar": list(self.ar), "ma": list(self.ma)}

    @classmethod
    def from_dict(cls, d):
        return cls(ar=tuple(d.get("ar", ())), ma=tuple(d.get("ma", ())))


@dataclass(frozen=True)
class KalmanOutput:
    """
    Filter output.

    ``cond_means[t]`` and ``cond_sds[t]`` are the mean and standard deviation
    of ``Z_t`` given ``Z_1..Z_{t-1}``; ``terms`` are the per-observation
    log-likelihood contributions; ``next_mean``/``next_sd`` give the one-step
    prediction beyond the sample.
    """

    loglik: float
    cond_means: np.ndarray
    cond_sds: np.ndarray
    terms: np.ndarray
    next_mean: float
    next_sd: float


def state_space(spec):
    """
    Companion form ``a_{t+1} = T a_t + R eps_{t+1}``, ``z_t = a_t[0]``.

    Returns ``(T, R, sigma2, P0)`` where ``sigma2`` is the constrained
    innovation variance and ``P0`` the stationary state covariance.
    """
    p, q = spec.p, spec.q
    m = max(p, q + 1)
    T = np.zeros((m, m))
    T[:p, 0] = spec.ar
    T[: m - 1, 1:] = np.eye(m - 1)
    R = np.zeros(m)
    R[0] = 1.0
    R[1 : q + 1] = spec.ma
    # stationary covariance for unit innovations via vec(P) = (I - T kron T)^{-1} vec(R R')
    A = np.eye(m * m) - np.kron(T, T)
    P_unit = np.linalg.solve(A, np.outer(R, R).ravel()).reshape(m, m)
    P_unit = 0.5 * (P_unit + P_unit.T)
    gamma0 = P_unit[0, 0]
    if not np.isfinite(gamma0) or gamma0 <= 0.0:
        raise InvalidSpecError("ARMA specification has no stationary solution")
    sigma2 = 1.0 / gamma0
    return T, R, sigma2, P_unit * sigma2


def innovation_variance(spec):
    """Innovation variance making the stationary variance of the ARMA equal one."""
    return state_space(spec)[2]


def acf(spec, k):
    """Autocorrelation at lag(s) ``k`` of the ARMA process."""
    k = np.asarray(k)
    if np.any(k < 0):
        raise DataError("lags must be nonnegative")
    T, _, _, P0 = state_space(spec)
    kmax = int(np.max(k)) if k.size else 0
    out = np.empty(kmax + 1)
    col = P0[:, 0].copy()
    for lag in range(kmax + 1):
        out[lag] = col[0]
        col = T @ col
    out /= out[0]
    res = out[k]
    return res if np.ndim(res) else float(res)


@numba.njit(cache=True)
def _simulate_states(T, R, a0, eps):
    n = eps.shape[0]
    m = a0.shape[0]
    z = np.empty(n)
    a = a0.copy()
    nxt = np.empty(m)
    for t in range(n):
        z[t] = a[0]
        if t + 1 < n:
            for i in range(m):
                s = R[i] * eps[t + 1]
                for j in range(m):
                    s += T[i, j] * a[j]
                nxt[i] = s
            for i in range(m):
                a[i] = nxt[i]
    return z


def simulate(spec, n, seed=None):
    """
    Simulate ``n`` values of the unit-variance ARMA started in stationarity.

    ``seed`` may be an int, ``None`` or a :class:`numpy.random.Generator`.
    """
    if n < 1:
        raise DataError("n must be at least 1")
    rng = np.random.default_rng(seed)
    T, R, sigma2, P0 = state_space(spec)
    w, U = np.linalg.eigh(P0)
    a0 = U @ (np.sqrt(np.clip(w, 0.0, None)) * rng.standard_normal(P0.shape[0]))
    eps = np.sqrt(sigma2) * rng.standard_normal(n)
    return _simulate_states(T, R, a0, eps)


@numba.njit(cache=True)
def _filter(T, R, sigma2, P0, z):
    n = z.shape[0]
    m = P0.shape[0]
    means = np.empty(n)
    sds = np.empty(n)
    terms = np.empty(n)
    a = np.zeros(m)
    P = P0.copy()
    Pu = np.empty((m, m))
    TP = np.empty((m, m))
    au = np.empty(m)
    log2pi = np.log(2.0 * np.pi)
    for t in range(n):
        F = P[0, 0]
        v = z[t] - a[0]
        means[t] = a[0]
        sds[t] = np.sqrt(F)
        terms[t] = -0.5 * (log2pi + np.log(F) + v * v / F)
        # measurement update
        for i in range(m):
            au[i] = a[i] + P[i, 0] * v / F
        for i in range(m):
            for j in range(m):
                Pu[i, j] = P[i, j] - P[i, 0] * P[0, j] / F
        # time update
        for i in range(m):
            s = 0.0
            for j in range(m):
                s += T[i, j] * au[j]
            a[i] = s
        for i in range(m):
            for j in range(m):
                s = 0.0
                for k in range(m):
                    s += T[i, k] * Pu[k, j]
                TP[i, j] = s
        for i in range(m):
            for j in range(m):
                s = sigma2 * R[i] * R[j]
                for k in range(m):
                    s += TP[i, k] * T[j, k]
                P[i, j] = s
    return means, sds, terms, a[0], np.sqrt(P[0, 0])


def kalman_loglik(spec, z):
    """
    Exact Gaussian log-likelihood of ``z`` under the unit-variance ARMA.

    Returns a :class:`KalmanOutput` with conditional means and standard
    deviations of each observation given its past.
    """
    z = np.ascontiguousarray(np.asarray(z, dtype=float))
    if z.ndim != 1 or z.size < 1:
        raise DataError("z must be a nonempty 1-d series")
    if not np.all(np.isfinite(z)):
        raise DataError(f"non-finite value at index {int(np.flatnonzero(~np.isfinite(z))[0])}")
    T, R, sigma2, P0 = state_space(spec)
    means, sds, terms, nm, ns = _filter(T, R, sigma2, P0, z)
    return KalmanOutput(
        loglik=float(np.sum(terms)),
        cond_means=means,
        cond_sds=sds,
        terms=terms,
        next_mean=float(nm),
        next_sd=float(ns),
    )
