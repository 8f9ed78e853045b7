"""
Copula-level analytics for v-transforms and VT-ARMA copula processes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import special

from vtarma import arma as _arma
from vtarma.errors import DataError, NumericError

__all__ = [
    "PairGrid",
    "pair_grid",
    "gaussian_copula_density",
    "uv_copula_cdf",
    "vtarma_copula_density",
    "forward_density_d2",
    "spearman_linear",
    "rho_numeric",
    "normal_scores",
]

# numerical guard on V(u) before the normal quantile; not part of the model
V_CLAMP = 1e-12


def normal_scores(v):
    """``Phi^{-1}(v)`` with ``v`` clamped into ``[V_CLAMP, 1 - V_CLAMP]``."""
    return special.ndtri(np.clip(v, V_CLAMP, 1.0 - V_CLAMP))


def gaussian_copula_density(v, corr):
    """
    Density of the Gaussian copula with correlation matrix ``corr`` at the
    points ``v`` (last axis indexes the dimension).
    """
    corr = np.atleast_2d(np.asarray(corr, dtype=float))
    z = normal_scores(np.asarray(v, dtype=float))
    d = corr.shape[0]
    if z.shape[-1] != d:
        raise DataError(f"points have dimension {z.shape[-1]}, correlation has {d}")
    sign, logdet = np.linalg.slogdet(corr)
    if sign <= 0:
        raise DataError("correlation matrix is not positive definite")
    Q = np.linalg.inv(corr) - np.eye(d)
    quad = np.einsum("...i,ij,...j->...", z, Q, z)
    return np.exp(-0.5 * logdet - 0.5 * quad)


def uv_copula_cdf(vt, u, v):
    """Joint cdf ``P(U <= u, V(U) <= v)`` of a uniform and its v-transform."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    a = np.asarray(vt.inverse_left(v))
    out = np.clip(u - a, 0.0, v)
    return out if out.ndim else float(out)


def vtarma_copula_density(vt, arma_spec, lags, u):
    """
    Joint density of ``(U_{t_1}, ..., U_{t_k})`` for a VT-ARMA copula process.

    This is the Gaussian copula density with correlations ``rho(|t_j - t_i|)``
    evaluated at the componentwise v-transformed points.
    """
    lags = np.asarray(lags, dtype=int)
    if np.any(np.diff(lags) <= 0):
        raise DataError("lags must be strictly increasing")
    rho = np.asarray(_arma.acf(arma_spec, np.arange(lags[-1] - lags[0] + 1)))
    corr = rho[np.abs(lags[:, None] - lags[None, :])]
    u = np.asarray(u, dtype=float)
    return gaussian_copula_density(np.asarray(vt.evaluate(u)), corr)


def forward_density_d2(vt, c_u, v1, v2):
    """
    Density of ``(V(U_1), V(U_2))`` when ``(U_1, U_2)`` has copula density ``c_u``.
    """
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    a1 = np.asarray(vt.inverse_left(v1))
    a2 = np.asarray(vt.inverse_left(v2))
    p1 = np.asarray(vt.down_probability(v1))
    p2 = np.asarray(vt.down_probability(v2))
    pts1 = ((a1, p1), (a1 + v1, 1.0 - p1))
    pts2 = ((a2, p2), (a2 + v2, 1.0 - p2))
    total = 0.0
    for x1, w1 in pts1:
        for x2, w2 in pts2:
            total = total + np.asarray(c_u(x1, x2)) * w1 * w2
    return total


def spearman_linear(delta, rho_k):
    """Rank autocorrelation at lag k for the linear v-transform."""
    return (2.0 * delta - 1.0) ** 2 * 6.0 * np.arcsin(np.asarray(rho_k) / 2.0) / np.pi


def _mean_product(vt, rho, n_nodes):
    # E[U1 U2] = E[m(Phi(Z1)) m(Phi(Z2))] with m(v) = E[U | V = v]
    x, w = special.roots_hermitenorm(n_nodes)
    w = w / w.sum()
    s = np.sqrt(max(1.0 - rho * rho, 0.0))

    def m(z):
        v = special.ndtr(z)
        a = np.asarray(vt.inverse_left(v))
        return a + (1.0 - np.asarray(vt.down_probability(v))) * v

    m1 = m(x)
    z2 = rho * x[:, None] + s * x[None, :]
    m2 = m(z2.ravel()).reshape(z2.shape)
    return float(np.sum(w[:, None] * w[None, :] * m1[:, None] * m2))


def rho_numeric(vt, rho_k, n_nodes=64):
    """
    Pearson correlation of ``(U_t, U_{t+k})`` (the rank autocorrelation of the
    VT-ARMA process) by tensor quadrature.

    The double integral ``12 * E[U_t U_{t+k}] - 3`` is taken over the normal
    scores of the underlying Gaussian pair, branch by branch, with a
    ``n_nodes``-point Gauss-Hermite rule; it is repeated with twice as many
    nodes and a :class:`NumericError` is raised if the two disagree by more
    than 1e-3.
    """
    rho_k = float(rho_k)
    if not -1.0 <= rho_k <= 1.0:
        raise DataError("rho_k must lie in [-1, 1]")
    if rho_k == 0.0:
        return 0.0
    r1 = 12.0 * _mean_product(vt, rho_k, n_nodes) - 3.0
    r2 = 12.0 * _mean_product(vt, rho_k, 2 * n_nodes) - 3.0
    if abs(r1 - r2) > 1e-3:
        raise NumericError(f"quadrature unstable: {r1:.6f} ({n_nodes} nodes) vs {r2:.6f} ({2 * n_nodes} nodes)")
    return r2


@dataclass(frozen=True)
class PairGrid:
    """Bivariate function values on the midpoint grid ``((i + 0.5)/resolution)``."""

    resolution: int
    values: np.ndarray

    @property
    def axis(self):
        return (np.arange(self.resolution) + 0.5) / self.resolution

    def to_csv(self, path):
        g = self.axis
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v", "value"])
            for i, a in enumerate(g):
                for j, b in enumerate(g):
                    w.writerow([repr(float(a)), repr(float(b)), repr(float(self.values[i, j]))])


def pair_grid(func, resolution=50):
    """Evaluate ``func(u, v)`` on a ``resolution`` x ``resolution`` midpoint grid."""
    g = (np.arange(resolution) + 0.5) / resolution
    uu, vv = np.meshgrid(g, g, indexing="ij")
    return PairGrid(resolution, np.asarray(func(uu, vv), dtype=float))
