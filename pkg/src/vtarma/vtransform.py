"""
V-transforms: uniformity-preserving V-shaped maps of [0, 1] onto itself.

A v-transform links the PIT ``u = F_X(x)`` of a return to the PIT ``v`` of a
volatility proxy.  Every v-transform can be written with a fulcrum ``delta``
and a generator ``Psi`` (a continuous, strictly increasing cdf on [0, 1])::

    V(u) = (1 - u) - (1 - delta) * Psi(u / delta)                u <= delta
    V(u) = u - delta * Psi^{-1}((1 - u) / (1 - delta))           u >  delta

The parametric family used for modelling is generated by
``Psi(x) = exp(-kappa * (-log x)**xi)``; ``kappa = xi = 1`` gives the linear
v-transform and ``xi = 1`` the two-parameter family.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from vtarma.errors import (
    DataError,
    InvalidGeneratorError,
    InvalidProfileError,
    InvalidSpecError,
    NoDualError,
)

__all__ = [
    "Generator",
    "VTransform",
    "ProxyProfile",
    "ProxyVTransform",
    "linear",
    "two_param",
    "three_param",
    "from_generator",
    "implied_profile",
    "construct_from_proxy",
]

KINDS = ("linear", "two_param", "three_param", "generator")

_BISECT_ITER = 60
# enough halvings to reach the smallest normal double from [0, 1]
_NEWTON_ITER = 1100
_CLAMP_EPS = 1e-14
_PROBE_POINTS = 1024


def _as_prob(u, name="u"):
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u)) or np.any(u < 0.0) or np.any(u > 1.0):
        raise DataError(f"{name} must lie in [0, 1]")
    return u


def _clamp_unit(v):
    v = np.where((v < 0.0) & (v > -_CLAMP_EPS), 0.0, v)
    return np.where((v > 1.0) & (v < 1.0 + _CLAMP_EPS), 1.0, v)


def _bisect_decreasing(f, target, lo, hi, n_iter=_BISECT_ITER):
    """Vectorised bisection for ``f(x) = target`` with ``f`` decreasing on [lo, hi]."""
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        above = f(mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


def _newton_decreasing(f, df, target, lo, hi, n_iter=_NEWTON_ITER):
    """
    Safeguarded Newton iteration for ``f(x) = target`` with ``f`` decreasing
    on [lo, hi].  Steps leaving the current bracket fall back to bisection;
    converged entries drop out of the active set.
    """
    target = np.asarray(target, dtype=float)
    shape = target.shape
    t = target.ravel()
    lo = np.broadcast_to(np.asarray(lo, dtype=float), shape).ravel().copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), shape).ravel().copy()
    x = 0.5 * (lo + hi)
    act = np.arange(t.size)
    for _ in range(n_iter):
        if act.size == 0:
            break
        xa, ta = x[act], t[act]
        fx = np.asarray(f(xa), dtype=float)
        above = fx > ta
        la = np.where(above, xa, lo[act])
        ha = np.where(above, hi[act], xa)
        step = (fx - ta) / np.asarray(df(xa), dtype=float)
        new = xa - step
        ok = np.isfinite(new) & (new > la) & (new < ha)
        new = np.where(ok, new, 0.5 * (la + ha))
        new = np.where(fx == ta, xa, new)
        lo[act], hi[act], x[act] = la, ha, new
        tol = 4.0 * np.finfo(float).eps * np.maximum(np.abs(new), 1e-300)
        done = (fx == ta) | (np.abs(new - xa) <= tol) | (ha - la <= tol)
        act = act[~done]
    return x.reshape(shape)


@dataclass(frozen=True)
class Generator:
    """
    Generator of a v-transform: a continuous strictly increasing cdf on [0, 1].

    Parameters
    ----------
    psi : callable
        Vectorised distribution function with ``psi(0) = 0`` and ``psi(1) = 1``.
    psi_inv : callable, optional
        Inverse of ``psi``.  Bisection is used when omitted.
    dpsi : callable, optional
        Density of ``psi``.  Central differences are used when omitted.
    """

    psi: Callable
    psi_inv: Callable | None = None
    dpsi: Callable | None = None

    def validate(self):
        x = np.linspace(0.0, 1.0, _PROBE_POINTS)
        with np.errstate(all="ignore"):
            y = np.asarray(self.psi(x), dtype=float)
        if y.shape != x.shape or np.any(~np.isfinite(y)):
            raise InvalidGeneratorError("generator must be finite and vectorised on [0, 1]")
        if abs(y[0]) > 1e-12 or abs(y[-1] - 1.0) > 1e-12:
            raise InvalidGeneratorError("generator must satisfy psi(0) = 0 and psi(1) = 1")
        if np.any(np.diff(y) <= 0.0):
            raise InvalidGeneratorError("generator must be strictly increasing")

    def inverse(self, y):
        if self.psi_inv is not None:
            return np.asarray(self.psi_inv(y), dtype=float)
        y = np.asarray(y, dtype=float)
        return _bisect_decreasing(lambda x: -np.asarray(self.psi(x)), -y, 0.0, 1.0)

    def density(self, x):
        if self.dpsi is not None:
            return np.asarray(self.dpsi(x), dtype=float)
        x = np.asarray(x, dtype=float)
        h = 1e-6
        lo = np.clip(x - h, 0.0, 1.0)
        hi = np.clip(x + h, 0.0, 1.0)
        return (np.asarray(self.psi(hi)) - np.asarray(self.psi(lo))) / (hi - lo)


@dataclass(frozen=True)
class VTransform:
    """
    A v-transform with fulcrum ``delta``.

    ``kind`` is one of ``linear``, ``two_param``, ``three_param`` or
    ``generator``.  For the parametric kinds ``kappa`` and ``xi`` shape the
    generator ``exp(-kappa * (-log x)**xi)``; for ``generator`` the supplied
    :class:`Generator` is used and ``kappa``/``xi`` are ignored.
    """

    delta: float
    kappa: float = 1.0
    xi: float = 1.0
    kind: str = "three_param"
    generator: Generator | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown v-transform kind {self.kind!r}")
        if not np.isfinite(self.delta) or not 0.0 < self.delta < 1.0:
            raise InvalidSpecError(f"delta must lie in (0, 1), got {self.delta}")
        if not np.isfinite(self.kappa) or self.kappa <= 0.0:
            raise InvalidSpecError(f"kappa must be positive, got {self.kappa}")
        if not np.isfinite(self.xi) or self.xi <= 0.0:
            raise InvalidSpecError(f"xi must be positive, got {self.xi}")
        if self.kind == "linear" and (self.kappa != 1.0 or self.xi != 1.0):
            raise InvalidSpecError("linear v-transform fixes kappa = xi = 1")
        if self.kind == "two_param" and self.xi != 1.0:
            raise InvalidSpecError("two-parameter v-transform fixes xi = 1")
        if self.kind == "generator" and self.generator is None:
            raise InvalidSpecError("generator kind needs a Generator")

    # -- generator -------------------------------------------------------

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "generator":
            return np.asarray(self.generator.psi(x), dtype=float)
        if self.kind == "linear":
            return x
        with np.errstate(divide="ignore"):
            return np.exp(-self.kappa * (-np.log(x)) ** self.xi)

    def psi_inv(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "generator":
            return self.generator.inverse(y)
        if self.kind == "linear":
            return y
        with np.errstate(divide="ignore"):
            return np.exp(-((-np.log(y) / self.kappa) ** (1.0 / self.xi)))

    def dpsi(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "generator":
            return self.generator.density(x)
        if self.kind == "linear":
            return np.ones_like(x)
        x = np.clip(x, 1e-300, 1.0)
        t = -np.log(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            d = np.exp(-self.kappa * t**self.xi) * self.kappa * self.xi * t ** (self.xi - 1.0) / x
        return d

    # -- branches ---------------------------------------------------------

    def _left(self, u):
        d = self.delta
        if self.kind == "linear":
            return (d - u) / d
        return (1.0 - u) - (1.0 - d) * self.psi(u / d)

    def _left_slope(self, u):
        d = self.delta
        return -1.0 - (1.0 - d) / d * self.dpsi(u / d)

    def _right(self, u):
        d = self.delta
        if self.kind == "linear":
            return (u - d) / (1.0 - d)
        return u - d * self.psi_inv((1.0 - u) / (1.0 - d))

    def evaluate(self, u):
        """Value ``V(u)`` of the v-transform; ``V(delta) = 0``, ``V(0) = V(1) = 1``."""
        u = _as_prob(u)
        d = self.delta
        with np.errstate(all="ignore"):
            left = self._left(np.minimum(u, d))
            right = self._right(np.maximum(u, d))
        v = np.where(u <= d, left, right)
        v = _clamp_unit(v)
        return v if v.ndim else float(v)

    __call__ = evaluate

    def inverse_left(self, v):
        """Inverse of the left (decreasing) branch, mapping [0, 1] onto [0, delta]."""
        v = _as_prob(v, "v")
        d = self.delta
        if self.kind == "linear":
            u = d * (1.0 - v)
        else:
            with np.errstate(all="ignore"):
                u = _newton_decreasing(self._left, self._left_slope, v, 0.0, d)
            u = np.where(v == 0.0, d, np.where(v == 1.0, 0.0, u))
        return u if u.ndim else float(u)

    def gradient(self, u):
        """
        Derivative ``V'(u)``.  At the fulcrum the left derivative is returned.
        """
        u = _as_prob(u)
        d = self.delta
        if self.kind == "linear":
            g = np.where(u <= d, -1.0 / d, 1.0 / (1.0 - d))
            return g if g.ndim else float(g)
        with np.errstate(all="ignore"):
            left = -1.0 - (1.0 - d) / d * self.dpsi(np.minimum(u, d) / d)
            y = np.minimum((1.0 - np.maximum(u, d)) / (1.0 - d), 1.0)
            right = 1.0 + d / ((1.0 - d) * self.dpsi(self.psi_inv(y)))
        g = np.where(u <= d, left, right)
        return g if g.ndim else float(g)

    def down_probability(self, v):
        """Conditional probability that ``U <= delta`` given ``V(U) = v``."""
        v = _as_prob(v, "v")
        if self.kind == "linear":
            p = np.full(v.shape, self.delta)
        else:
            with np.errstate(all="ignore"):
                p = -1.0 / np.asarray(self.gradient(self.inverse_left(v)))
            p = np.clip(p, 0.0, 1.0)
        return p if p.ndim else float(p)

    def stochastic_invert(self, v, w):
        """
        Randomised inverse: left-branch preimage when ``w <= Delta(v)``,
        otherwise the right-branch preimage ``v + V^{-1}(v)``.
        """
        v = _as_prob(v, "v")
        w = _as_prob(w, "w")
        u_left = np.asarray(self.inverse_left(v))
        down = w <= np.asarray(self.down_probability(v))
        u = np.where(down, u_left, np.minimum(u_left + v, 1.0))
        return u if u.ndim else float(u)

    def dual_point(self, u):
        """Point on the other side of the fulcrum with the same value of ``V``."""
        u = _as_prob(u)
        if np.any(u == self.delta):
            raise NoDualError("the fulcrum has no dual point")
        v = np.asarray(self.evaluate(u))
        s = np.where(u < self.delta, u + v, u - v)
        s = np.clip(s, 0.0, 1.0)
        return s if s.ndim else float(s)

    # -- serialisation ----------------------------------------------------

    def to_dict(self):
        if self.kind == "generator":
            raise InvalidSpecError("generator v-transforms cannot be serialised")
        return {"kind": self.kind, "delta": self.delta, "kappa": self.kappa, "xi": self.xi}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "three_param")
        return cls(
            delta=float(d["delta"]),
            kappa=float(d.get("kappa", 1.0)),
            xi=float(d.get("xi", 1.0)),
            kind=kind,
        )


def linear(delta):
    """Linear v-transform ``(delta - u)/delta`` left and ``(u - delta)/(1 - delta)`` right."""
    return VTransform(delta=delta, kind="linear")


def two_param(delta, kappa):
    return VTransform(delta=delta, kappa=kappa, kind="two_param")


def three_param(delta, kappa, xi):
    return VTransform(delta=delta, kappa=kappa, xi=xi, kind="three_param")


def from_generator(psi, delta):
    """
    Build a v-transform from a generator.

    Parameters
    ----------
    psi : Generator or callable
        A bare callable is wrapped in :class:`Generator` (inverse and density
        then computed numerically).
    delta : float
        Fulcrum.
    """
    if not isinstance(psi, Generator):
        psi = Generator(psi)
    psi.validate()
    return VTransform(delta=delta, kind="generator", generator=psi)


# ---------------------------------------------------------------------------
# volatility proxy profiles


@dataclass(frozen=True)
class ProxyProfile:
    """
    Change point ``mu_T`` and profile ``g = T2^{-1} o T1`` of a volatility proxy.

    ``grid`` holds evaluation points on [0, inf) used for validity checks.
    """

    mu_T: float
    g: Callable
    grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 10.0, 512), repr=False)

    def validate(self):
        x = np.asarray(self.grid, dtype=float)
        gx = np.asarray(self.g(x), dtype=float)
        if abs(float(np.asarray(self.g(0.0)))) > 1e-8:
            raise InvalidProfileError("profile must satisfy g(0) = 0")
        finite = np.isfinite(gx)
        if not finite.any() or np.any(np.diff(gx[finite]) <= 0.0):
            raise InvalidProfileError("profile must be strictly increasing")

    def inverse(self, y, tol=1e-13):
        """Inverse of ``g`` by bisection on an expanding bracket."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        hi = np.ones_like(y)
        for _ in range(200):
            short = np.asarray(self.g(hi)) < y
            if not short.any():
                break
            hi = np.where(short, 2.0 * hi, hi)
        lo = np.zeros_like(y)
        while np.max(hi - lo) > tol * max(1.0, float(np.max(hi))):
            mid = 0.5 * (lo + hi)
            below = np.asarray(self.g(mid)) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def implied_profile(vt, margin, grid=None):
    """
    Volatility proxy profile implied by a v-transform and a marginal cdf.

    The change point is ``F^{-1}(delta)`` and
    ``g(x) = F^{-1}(F(mu_T - x) + V(F(mu_T - x))) - mu_T``.
    """
    mu_T = float(margin.quantile(vt.delta))

    def g(x):
        x = np.asarray(x, dtype=float)
        u = np.asarray(margin.cdf(mu_T - x), dtype=float)
        u = np.minimum(u, vt.delta)
        ustar = np.minimum(u + np.asarray(vt.evaluate(u)), 1.0)
        with np.errstate(all="ignore"):
            out = np.where(x == 0.0, 0.0, margin.quantile_unchecked(ustar) - mu_T)
        return out if out.ndim else float(out)

    if grid is None:
        span = mu_T - float(margin.quantile(1e-6))
        grid = np.linspace(0.0, span, 512)
    return ProxyProfile(mu_T=mu_T, g=g, grid=np.asarray(grid, dtype=float))


class ProxyVTransform:
    """
    V-transform induced by a margin and a volatility proxy profile.

    Left of the fulcrum ``V(u) = F(mu_T + g(mu_T - F^{-1}(u))) - u``; right of it
    ``V(u) = u - F(mu_T - g^{-1}(F^{-1}(u) - mu_T))``.
    """

    def __init__(self, margin, profile):
        self.margin = margin
        self.profile = profile
        self.delta = float(margin.cdf(profile.mu_T))

    def evaluate(self, u):
        u = _as_prob(u)
        m, p, d = self.margin, self.profile, self.delta
        with np.errstate(all="ignore"):
            x = np.asarray(m.quantile_unchecked(u), dtype=float)
            ul = np.minimum(u, d)
            xl = np.minimum(x, p.mu_T)
            left = np.asarray(m.cdf(p.mu_T + np.asarray(p.g(p.mu_T - xl)))) - ul
            xr = np.maximum(x, p.mu_T)
            right = u - np.asarray(m.cdf(p.mu_T - p.inverse(np.atleast_1d(xr - p.mu_T)).reshape(xr.shape)))
        v = np.where(u <= d, left, right)
        v = np.where(u == 0.0, 1.0, np.where(u == 1.0, 1.0, v))
        v = np.where(u == d, 0.0, v)
        v = np.clip(_clamp_unit(v), 0.0, 1.0)
        return v if v.ndim else float(v)

    __call__ = evaluate


def construct_from_proxy(margin, profile):
    """V-transform obtained from a margin and a volatility proxy profile."""
    profile.validate()
    return ProxyVTransform(margin, profile)
