"""Stacy's generalized gamma family.

Density ``f(x) = p / (a^d Gamma(d/p)) * x^(d-1) * exp(-(x/a)^p)`` on (0, inf).
Near zero ``f(x) ~ c1 x^(alpha-1)`` with alpha = d, and in the tail
``-log f(x) ~ c2 x^beta`` with beta = p and c2 = a^-p.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalError
from .specfun import gamma, ln_gamma, log_reg_upper_gamma, reg_lower_gamma, reg_upper_gamma


@dataclass(frozen=True)
class GenGammaParams:
    """Scale ``a``, shape ``d`` and power ``p``; all strictly positive."""

    a: float
    d: float
    p: float
    name: str = "gengamma"

    def __post_init__(self):
        for label in ("a", "d", "p"):
            value = getattr(self, label)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise DomainError(f"{label} must be a finite positive number, got {value!r}")

    @classmethod
    def half_normal(cls):
        return cls(math.sqrt(2.0), 1.0, 2.0, name="half-normal")

    @classmethod
    def exponential(cls):
        return cls(1.0, 1.0, 1.0, name="exponential")

    @property
    def gamma_shape(self):
        """Shape of the Gamma variable (X/a)^p."""
        return self.d / self.p

    @property
    def log_norm(self):
        """log of p / (a^d Gamma(d/p))."""
        return math.log(self.p) - self.d * math.log(self.a) - ln_gamma(self.gamma_shape)

    def as_dict(self):
        return {"name": self.name, "scale": self.a, "shape": self.d, "power": self.p}


@dataclass(frozen=True)
class ConditionConstants:
    """Small-x exponent alpha, tail exponent beta and their constants c1, c2."""

    alpha: float
    beta: float
    c1: float
    c2: float


def _positive_x(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError("x must be finite and > 0")
    return arr


def _nonneg_x(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("x must be finite and >= 0")
    return arr


def _ret(val):
    val = np.asarray(val)
    return float(val) if val.ndim == 0 else val


def log_density(params, x):
    x = _positive_x(x)
    return _ret(params.log_norm + (params.d - 1.0) * np.log(x) - (x / params.a) ** params.p)


def density(params, x):
    """f(x) for x > 0."""
    return _ret(np.exp(np.asarray(log_density(params, x))))


def cdf(params, x):
    """P(X <= x) = P(d/p, (x/a)^p)."""
    x = _nonneg_x(x)
    return _ret(reg_lower_gamma(params.gamma_shape, (x / params.a) ** params.p))


def survival(params, x):
    """P(X > x), from the upper incomplete gamma function (never 1 - cdf)."""
    x = _nonneg_x(x)
    return _ret(reg_upper_gamma(params.gamma_shape, (x / params.a) ** params.p))


def log_survival(params, x):
    """log P(X > x); stays finite where the survival underflows."""
    x = _nonneg_x(x)
    return _ret(log_reg_upper_gamma(params.gamma_shape, (x / params.a) ** params.p))


def inverse_survival(params, level):
    """The x with P(X > x) = level, for 0 < level < 1."""
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    target = math.log(level)
    s = params.gamma_shape

    def f(u):
        return log_reg_upper_gamma(s, u) - target

    hi = max(1.0, s)
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise NumericalError("inverse_survival: failed to bracket")
    lo = 0.0
    u = brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    return params.a * u ** (1.0 / params.p)


def condition_constants(params):
    return ConditionConstants(
        alpha=params.d,
        beta=params.p,
        c1=params.p / (params.a ** params.d * gamma(params.gamma_shape)),
        c2=params.a ** -params.p,
    )


def raw_moment(params, k):
    """E[X^k] = a^k Gamma((d+k)/p) / Gamma(d/p)."""
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError("k must be a positive integer")
    return params.a ** k * math.exp(ln_gamma((params.d + k) / params.p) - ln_gamma(params.gamma_shape))


def from_name(family, scale=None, shape=None, power=None):
    """Build parameters from a family name as used on the command line."""
    if family == "half-normal":
        return GenGammaParams.half_normal()
    if family == "exponential":
        return GenGammaParams.exponential()
    if family == "gengamma":
        if None in (scale, shape, power):
            raise DomainError("gengamma needs --scale, --shape and --power")
        return GenGammaParams(float(scale), float(shape), float(power))
    raise DomainError(f"unknown family {family!r}")
