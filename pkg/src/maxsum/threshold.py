"""Threshold condition on (alpha, beta, n) and the N(alpha, beta) table.

The functions

    h(x) = log Gamma(x + 1) / x          (strictly increasing)
    g(x) = h(exp(x))                     (strictly convex)
    q(s) = s * psi'(s + 1)               (strictly increasing, in (0, 1))

control when a sum of n variables can possibly be a rescaled maximum.
The only candidate constant is ``C = exp(h(n*alpha) - h(alpha))`` and the
identity is ruled out whenever ``beta < log n / (log n + h(alpha) - h(n*alpha))``.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IterationCapError, NumericalError
from .specfun import ln_gamma_1p, trigamma

# |beta - bound| below this counts as a tie, and ties fail the strict "<".
TIE_TOL = 1e-12
DEFAULT_ITERATION_CAP = 1_000_000
_SCAN_BLOCK = 1024

DEFAULT_ALPHAS = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
DEFAULT_BETAS = (1.0, 1.5, 2.0, 2.5, 3.0)


def _check_positive(value, name):
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")


def _check_n(n, minimum):
    if isinstance(n, bool) or int(n) != n or n < minimum:
        raise DomainError(f"n must be an integer >= {minimum}, got {n!r}")
    return int(n)


def h(x):
    """log Gamma(x + 1) / x."""
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("h requires finite x > 0")
    val = np.asarray(ln_gamma_1p(x)) / x
    return float(val) if val.ndim == 0 else val


def g(x):
    """h(exp(x))."""
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)):
        raise DomainError("g requires finite x")
    if np.any(x > 700.0):
        raise NumericalError("g: exp(x) overflows for x > 700")
    return h(np.exp(x))


def q(s):
    """s * trigamma(s + 1); lies in (0, 1) and increases with s."""
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise DomainError("q requires finite s > 0")
    val = s * np.asarray(trigamma(s + 1.0))
    return float(val) if val.ndim == 0 else val


def _h_diff(alpha, n):
    # h(n alpha) - h(alpha); n may be an integer array
    return np.asarray(h(np.asarray(n, dtype=float) * alpha)) - h(alpha)


def scaling_constant(alpha, n):
    """The only possible C in S_n = C M_n: Gamma(n a + 1)^(1/(n a)) / Gamma(a + 1)^(1/a)."""
    _check_positive(alpha, "alpha")
    n = _check_n(n, 1)
    if n == 1:
        return 1.0
    return math.exp(float(_h_diff(alpha, n)))


def a_n(alpha, n):
    """(h(n alpha) - h(alpha)) / log n for n >= 2; array n is accepted."""
    _check_positive(alpha, "alpha")
    n_arr = np.asarray(n)
    if np.any(n_arr < 2) or np.any(n_arr != np.floor(n_arr)):
        raise DomainError("a_n requires integer n >= 2")
    val = _h_diff(alpha, n_arr) / np.log(n_arr.astype(float))
    return float(val) if val.ndim == 0 else val


def beta_bound(alpha, n):
    """log n / (log n + h(alpha) - h(n alpha)), the supremum of admissible beta."""
    _check_positive(alpha, "alpha")
    n_arr = np.asarray(n)
    if np.any(n_arr < 2) or np.any(n_arr != np.floor(n_arr)):
        raise DomainError("beta_bound requires integer n >= 2")
    log_n = np.log(n_arr.astype(float))
    denom = log_n - _h_diff(alpha, n_arr)
    if np.any(denom <= 0):
        raise NumericalError("non-positive denominator in beta_bound")
    val = log_n / denom
    return float(val) if val.ndim == 0 else val


def condition_holds(alpha, beta, n):
    """True iff beta < beta_bound(alpha, n) strictly (ties within TIE_TOL fail)."""
    _check_positive(beta, "beta")
    n = _check_n(n, 2)
    return beta_bound(alpha, n) - beta >= TIE_TOL


def threshold_N(alpha, beta, cap=DEFAULT_ITERATION_CAP):
    """Least n >= 2 such that the threshold condition holds.

    Scans n upward; the bound increases strictly in n and diverges, so the
    scan terminates.  Hitting ``cap`` means floating-point trouble.
    """
    _check_positive(alpha, "alpha")
    _check_positive(beta, "beta")
    start = 2
    while start <= cap:
        ns = np.arange(start, min(start + _SCAN_BLOCK, cap + 1))
        ok = beta_bound(alpha, ns) - beta >= TIE_TOL
        if ok.any():
            return int(ns[np.argmax(ok)])
        start = int(ns[-1]) + 1
    raise IterationCapError(f"threshold_N({alpha}, {beta}) exceeded cap {cap}")


@dataclass(frozen=True)
class ThresholdTable:
    alphas: tuple
    betas: tuple
    entries: tuple = field(default=())

    def as_lists(self):
        return [list(row) for row in self.entries]

    def to_json(self):
        return json.dumps({"alphas": list(self.alphas), "betas": list(self.betas),
                           "N": self.as_lists()})

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["alpha\\beta", *self.betas])
        for alpha, row in zip(self.alphas, self.entries):
            writer.writerow([alpha, *row])
        return buf.getvalue()


def table(alphas=DEFAULT_ALPHAS, betas=DEFAULT_BETAS, cap=DEFAULT_ITERATION_CAP):
    """N(alpha, beta) over a grid, row-major with one row per alpha."""
    alphas = tuple(float(a) for a in alphas)
    betas = tuple(float(b) for b in betas)
    entries = tuple(tuple(threshold_N(a, b, cap=cap) for b in betas) for a in alphas)
    return ThresholdTable(alphas, betas, entries)
