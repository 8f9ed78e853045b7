"""
Marginal distributions: Laplace, Student t and double-Weibull location-scale
families with optional Fernandez-Steel skewing.

Skewing is applied to the standardised symmetric core ``f0``::

    f(y) = 2 g / (1 + g**2) * f0(g * y)     y <= 0
    f(y) = 2 g / (1 + g**2) * f0(y / g)     y >  0

and the location-scale map ``x = mu + sigma * y`` is composed afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from vtarma.errors import DataError, InvalidSpecError

__all__ = ["Margin", "LaplaceCore", "StudentCore", "DoubleWeibullCore", "Skewed", "skew", "FAMILIES"]

FAMILIES = ("laplace", "student", "double_weibull")


class LaplaceCore:
    """Standard Laplace density ``0.5 * exp(-|y|)``."""

    def logpdf(self, y):
        return np.log(0.5) - np.abs(y)

    def pdf(self, y):
        return 0.5 * np.exp(-np.abs(y))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        e = 0.5 * np.exp(-np.abs(y))
        return np.where(y <= 0.0, e, 1.0 - e)

    def sf(self, y):
        return self.cdf(-np.asarray(y, dtype=float))

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(p <= 0.5, np.log(2.0 * p), -np.log(2.0 * (1.0 - p)))


class DoubleWeibullCore:
    """Back-to-back Weibull density ``(eta/2) |y|**(eta-1) exp(-|y|**eta)``."""

    def __init__(self, eta):
        self.eta = float(eta)

    def logpdf(self, y):
        a = np.abs(y)
        with np.errstate(divide="ignore"):
            return np.log(0.5 * self.eta) + (self.eta - 1.0) * np.log(a) - a**self.eta

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        e = 0.5 * np.exp(-np.abs(y) ** self.eta)
        return np.where(y <= 0.0, e, 1.0 - e)

    def sf(self, y):
        return self.cdf(-np.asarray(y, dtype=float))

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = -((-np.log(2.0 * p)) ** (1.0 / self.eta))
            hi = (-np.log(2.0 * (1.0 - p))) ** (1.0 / self.eta)
        return np.where(p <= 0.5, lo, hi)


class StudentCore:
    """Standard Student t with (possibly non-integer) degrees of freedom ``eta``."""

    def __init__(self, eta):
        self.eta = float(eta)
        nu = self.eta
        self._lognorm = special.gammaln(0.5 * (nu + 1.0)) - special.gammaln(0.5 * nu) - 0.5 * np.log(nu * np.pi)

    def logpdf(self, y):
        nu = self.eta
        return self._lognorm - 0.5 * (nu + 1.0) * np.log1p(np.asarray(y, dtype=float) ** 2 / nu)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        return special.stdtr(self.eta, np.asarray(y, dtype=float))

    def sf(self, y):
        return special.stdtr(self.eta, -np.asarray(y, dtype=float))

    def ppf(self, p):
        return special.stdtrit(self.eta, np.asarray(p, dtype=float))


class Skewed:
    """
    Fernandez-Steel skewed version of a symmetric core distribution.

    ``gamma > 1`` skews to the right, ``gamma < 1`` to the left, and the cdf at
    zero equals ``1 / (1 + gamma**2)``.
    """

    def __init__(self, core, gamma):
        if not np.isfinite(gamma) or gamma <= 0.0:
            raise InvalidSpecError(f"gamma must be positive, got {gamma}")
        self.core = core
        self.gamma = float(gamma)
        self.p0 = 1.0 / (1.0 + self.gamma**2)

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        g = self.gamma
        if g == 1.0:
            return self.core.logpdf(y)
        scaled = np.where(y <= 0.0, g * y, y / g)
        return np.log(2.0 * g / (1.0 + g * g)) + self.core.logpdf(scaled)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        g = self.gamma
        if g == 1.0:
            return self.core.cdf(y)
        left = 2.0 * self.p0 * self.core.cdf(g * np.minimum(y, 0.0))
        right = 1.0 - 2.0 * (1.0 - self.p0) * self.core.sf(np.maximum(y, 0.0) / g)
        return np.where(y <= 0.0, left, right)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        g = self.gamma
        if g == 1.0:
            return self.core.ppf(p)
        p0 = self.p0
        with np.errstate(all="ignore"):
            left = self.core.ppf(np.minimum(p, p0) / (2.0 * p0)) / g
            right = g * self.core.ppf(0.5 + (np.maximum(p, p0) - p0) / (2.0 * (1.0 - p0)))
        return np.where(p <= p0, left, right)


def skew(core, gamma):
    """Skew a symmetric core distribution with the Fernandez-Steel construction."""
    return Skewed(core, gamma)


def _core_for(family, eta):
    if family == "laplace":
        return LaplaceCore()
    if family == "student":
        return StudentCore(eta)
    return DoubleWeibullCore(eta)


@dataclass(frozen=True)
class Margin:
    """
    Marginal distribution of the returns.

    Parameters
    ----------
    family : {"laplace", "student", "double_weibull"}
    mu : float
        Location.
    sigma : float
        Scale, positive.
    eta : float, optional
        Degrees of freedom (student) or Weibull exponent (double_weibull).
        Unused for laplace.
    gamma : float
        Fernandez-Steel skewness; 1 is symmetric.
    """

    family: str
    mu: float = 0.0
    sigma: float = 1.0
    eta: float | None = None
    gamma: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"unknown margin family {self.family!r}")
        if not np.isfinite(self.mu):
            raise InvalidSpecError("mu must be finite")
        if not np.isfinite(self.sigma) or self.sigma <= 0.0:
            raise InvalidSpecError(f"sigma must be positive, got {self.sigma}")
        if self.family == "laplace":
            if self.eta is not None:
                raise InvalidSpecError("laplace margin takes no eta")
        elif self.eta is None or not np.isfinite(self.eta) or self.eta <= 0.0:
            raise InvalidSpecError(f"eta must be positive for {self.family}, got {self.eta}")
        if not np.isfinite(self.gamma) or self.gamma <= 0.0:
            raise InvalidSpecError(f"gamma must be positive, got {self.gamma}")
        object.__setattr__(self, "_dist", Skewed(_core_for(self.family, self.eta), self.gamma))

    @property
    def n_params(self):
        return 2 + (self.eta is not None) + (self.gamma != 1.0)

    def logpdf(self, x):
        y = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return self._dist.logpdf(y) - np.log(self.sigma)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        y = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        out = self._dist.cdf(y)
        return out if np.ndim(out) else float(out)

    def quantile_unchecked(self, p):
        return self.mu + self.sigma * self._dist.ppf(p)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(~(p > 0.0)) or np.any(~(p < 1.0)):
            raise DataError("quantile probabilities must lie in (0, 1)")
        out = self.quantile_unchecked(p)
        return out if np.ndim(out) else float(out)

    def sample(self, n, rng):
        """Draw ``n`` values by inversion of uniforms from ``rng``."""
        return self.quantile_unchecked(rng.uniform(size=n))

    def to_dict(self):
        d = {"family": self.family, "mu": self.mu, "sigma": self.sigma}
        if self.eta is not None:
            d["eta"] = self.eta
        if self.gamma != 1.0:
            d["gamma"] = self.gamma
        return d

    @classmethod
    def from_dict(cls, d):
        eta = d.get("eta")
        return cls(
            family=d["family"],
            mu=float(d.get("mu", 0.0)),
            sigma=float(d.get("sigma", 1.0)),
            eta=None if eta is None else float(eta),
            gamma=float(d.get("gamma", 1.0)),
        )
