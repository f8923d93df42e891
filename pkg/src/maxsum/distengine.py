"""Gridded distributions of sums and maxima, KS distances and asymptotic probes.

A ``GriddedDistribution`` lives on cells ``[i*dx, (i+1)*dx)``, i < m.  ``cdf[i]``
is the CDF at the right edge of cell i and ``pdf[i]`` is the cell-average
density, so ``pdf * dx`` are exact cell masses and between edges the CDF is
linear.  This is the distribution of a piecewise-uniform variable matching
the true CDF at every edge.

Sums of n such variables are computed exactly: the lattice part of the sum
is an n-fold discrete convolution (FFT) and the within-cell uniforms add up
to an Irwin-Hall variable, whose mass on integer cells is applied as a
short smoothing kernel.  CDF errors are therefore O(dx^2).
"""

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from . import gengamma as gg
from .errors import DomainError, MassDefectError, NumericalError, UnderflowError
from .specfun import ln_gamma
from .threshold import condition_holds, scaling_constant

DEFAULT_M = 2 ** 16
MASS_TOL = 1e-10
# Auto x_max leaves this much mass beyond the grid (well inside MASS_TOL).
AUTO_TAIL = 1e-11
CLAMP_TOL = 1e-12
MOMENT_RTOL = 1e-5

SMALL_X_POINTS = (1e-1, 1e-2, 1e-3, 1e-4)
SMALL_X_RTOL = 0.02
SMALL_X_CELLS = 2048
TAIL_LEVELS = tuple(10.0 ** -k for k in range(2, 13))
TAIL_RTOL = 0.01
# Grid survival is trusted only above this level (mass defect ~1e-11).
GRID_SURVIVAL_FLOOR = 1e-8
DIVERGENCE_LOG = math.log(1e6)
DECAY_LEVEL = 1e-6


def _freeze(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GriddedDistribution:
    x_max: float
    m: int
    pdf: np.ndarray
    cdf: np.ndarray
    mass_defect: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pdf", _freeze(self.pdf))
        object.__setattr__(self, "cdf", _freeze(self.cdf))
        if self.pdf.shape != (self.m,) or self.cdf.shape != (self.m,):
            raise DomainError("pdf and cdf must both have length m")
        if np.any(self.pdf < 0):
            raise NumericalError("negative density on grid")
        if np.any(np.diff(self.cdf) < 0):
            raise NumericalError("cdf is not nondecreasing")
        captured = math.fsum(self.pdf) * self.step
        if abs(captured - (1.0 - self.mass_defect)) > 1e-10:
            raise NumericalError(
                f"mass bookkeeping off: captured {captured!r}, defect {self.mass_defect!r}")

    @property
    def step(self):
        return self.x_max / self.m

    @property
    def edges(self):
        """Right edges of the cells, the abscissae of ``cdf``."""
        return np.arange(1, self.m + 1) * self.step

    @property
    def midpoints(self):
        return (np.arange(self.m) + 0.5) * self.step

    @property
    def masses(self):
        return self.pdf * self.step

    def cdf_at(self, x):
        """Piecewise-linear CDF; 0 at the origin and flat beyond x_max."""
        xp = np.concatenate(([0.0], self.edges))
        fp = np.concatenate(([0.0], self.cdf))
        return np.interp(x, xp, fp, left=0.0, right=self.cdf[-1])

    def survival(self):
        """P(X > edge_i) including the truncated mass, summed from the tail."""
        tail = np.cumsum(self.masses[::-1])[::-1]
        return np.concatenate((tail[1:], [0.0])) + self.mass_defect

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "pdf", "cdf"])
            for x, p, c in zip(self.edges, self.pdf, self.cdf):
                writer.writerow([repr(float(x)), repr(float(p)), repr(float(c))])


def _from_masses(masses, step, label):
    masses = np.asarray(masses, dtype=float)
    low = masses.min(initial=0.0) / step
    if low < -CLAMP_TOL:
        raise NumericalError(f"convolution ringing {low:.3e} exceeds clamp tolerance")
    masses = np.clip(masses, 0.0, None)
    cdf = np.minimum(np.cumsum(masses), 1.0)
    defect = max(0.0, 1.0 - math.fsum(masses))
    m = masses.size
    return GriddedDistribution(step * m, m, masses / step, cdf, defect, label)


def _is_power_of_two(m):
    return isinstance(m, (int, np.integer)) and m > 0 and (m & (m - 1)) == 0


def discretize(params, x_max=0.0, m=DEFAULT_M, tol=MASS_TOL):
    """Grid the law of X on [0, x_max] with m cells (x_max=0 picks it automatically)."""
    if not _is_power_of_two(m):
        raise DomainError(f"m must be a power of two, got {m!r}")
    if x_max == 0:
        x_max = gg.inverse_survival(params, min(AUTO_TAIL, tol / 10.0))
    if not (math.isfinite(x_max) and x_max > 0):
        raise DomainError("x_max must be positive")
    defect = gg.survival(params, x_max)
    if defect > tol:
        raise MassDefectError(f"tail mass {defect:.3e} beyond x_max={x_max} exceeds {tol:.1e}")
    edges = np.arange(1, m + 1) * (x_max / m)
    cdf = np.asarray(gg.cdf(params, edges))
    masses = np.diff(cdf, prepend=0.0)
    pdf = masses / (x_max / m)
    return GriddedDistribution(x_max, m, pdf, cdf, 1.0 - cdf[-1], label=params.name)


def irwin_hall_cell_masses(n):
    """P(k <= U_1 + ... + U_n < k + 1) for k = 0 .. n-1, computed in exact arithmetic."""
    def cdf(x):
        total = sum((-1) ** k * math.comb(n, k) * Fraction(x - k) ** n for k in range(x + 1))
        return total / math.factorial(n)
    return np.array([float(cdf(k + 1) - cdf(k)) for k in range(n)])


def _lattice_power(masses, n):
    size = n * (masses.size - 1) + 1
    length = 1 << (size - 1).bit_length()
    spec = np.fft.rfft(masses, length)
    return np.fft.irfft(spec ** n, length)[:size]


def _sum_masses(masses, n):
    """Cell masses of the sum of n piecewise-uniform copies."""
    if n == 1:
        return masses
    lattice = _lattice_power(masses, n)
    return np.convolve(lattice, irwin_hall_cell_masses(n))


def sum_distribution(base, n):
    """Law of S_n on the same step, extended to n * x_max."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError("n must be an integer >= 1")
    if n == 1:
        return base
    masses = _sum_masses(base.masses, int(n))
    return _from_masses(masses, base.step, f"S_{n}({base.label})")


def max_distribution(base, n):
    """Law of M_n: the CDF raised to the n-th power edge by edge."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError("n must be an integer >= 1")
    if n == 1:
        return base
    cdf = base.cdf ** n
    masses = np.diff(cdf, prepend=0.0)
    return GriddedDistribution(base.x_max, base.m, masses / base.step, cdf,
                               1.0 - cdf[-1], f"M_{n}({base.label})")


def scale(dist, c, step=None, m=None):
    """Law of c * X, regridded (by default on the same step, out to c * x_max)."""
    if not (math.isfinite(c) and c > 0):
        raise DomainError("c must be positive")
    if c == 1.0 and step is None and m is None:
        return dist
    step = dist.step if step is None else step
    m = int(math.ceil(c * dist.x_max / step - 1e-9)) if m is None else m
    edges = np.arange(1, m + 1) * step
    cdf = dist.cdf_at(edges / c)
    masses = np.diff(cdf, prepend=0.0)
    return GriddedDistribution(step * m, m, masses / step, cdf, 1.0 - cdf[-1],
                               f"{c:g}*{dist.label}")


def ks_distance(f, g):
    """sup |F - G| over the union of both grids (exact for the piecewise-linear CDFs)."""
    xs = np.union1d(f.edges, g.edges)
    return float(np.max(np.abs(f.cdf_at(xs) - g.cdf_at(xs)), initial=0.0))


def moment(dist, k, rtol=MOMENT_RTOL):
    """E[X^k] by the midpoint rule over the cell masses."""
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError("k must be a positive integer")
    value = math.fsum(dist.midpoints ** k * dist.masses)
    tail_floor = dist.x_max ** k * dist.mass_defect
    if value > 0 and tail_floor > rtol * value:
        warnings.warn(f"truncated tail may contribute {tail_floor:.2e} to moment {k}",
                      RuntimeWarning, stacklevel=2)
    return value


def sum_vs_scaled_max(params, n, m=DEFAULT_M, x_max=0.0, c=None):
    """Grid KS distance between S_n and c * M_n (c defaults to the forced constant)."""
    base = discretize(params, x_max=x_max, m=m)
    if c is None:
        c = scaling_constant(params.d, n)
    s = sum_distribution(base, n)
    mx = scale(max_distribution(base, n), c)
    return ks_distance(s, mx)


# ---------------------------------------------------------------------------
# asymptotic probes
# ---------------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


@dataclass(frozen=True)
class AsymptoticProbe:
    name: str
    x_values: tuple
    ratios: tuple
    limit_claim: float
    converged: bool
    rtol: float = 0.0
    applicable: bool = True
    log_scale: bool = False
    sources: tuple = ()
    extrapolated: float = None
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def last(self):
        return self.ratios[-1] if self.ratios else None

    def summary(self):
        out = {
            "name": self.name,
            "applicable": self.applicable,
            "x_values": [float(x) for x in self.x_values],
            "ratios": [_jsonable(float(r)) for r in self.ratios],
            "limit_claim": _jsonable(float(self.limit_claim)),
            "converged": bool(self.converged),
            "rtol": self.rtol,
            "log_scale": self.log_scale,
        }
        if self.sources:
            out["sources"] = list(self.sources)
        if self.extrapolated is not None:
            out["extrapolated"] = _jsonable(float(self.extrapolated))
        if self.note:
            out["note"] = self.note
        for k, v in self.extra.items():
            out[k] = v
        return out


def not_applicable(name, note):
    return AsymptoticProbe(name, (), (), float("nan"), False, applicable=False, note=note)


def small_x_limit(params, n, which):
    """Claimed limit of P(. <= x) / x^(alpha n) as x -> 0 for the sum or the maximum."""
    cc = gg.condition_constants(params)
    if which == "sum":
        log_lim = n * math.log(cc.c1) + n * ln_gamma(cc.alpha) - ln_gamma(n * cc.alpha + 1.0)
    elif which == "max":
        log_lim = n * math.log(cc.c1) - n * math.log(cc.alpha)
    else:
        raise DomainError("which must be 'sum' or 'max'")
    return math.exp(log_lim)


def local_sum_cdf(params, n, x, cells=SMALL_X_CELLS):
    """P(S_n <= x) from a direct convolution on a private grid over [0, x].

    Only mass inside [0, x] can contribute, and direct convolution of
    nonnegative masses keeps full relative precision for tiny probabilities.
    """
    step = x / cells
    edges = np.arange(cells + 1) * step
    masses = np.diff(np.asarray(gg.cdf(params, edges)))
    acc = masses
    for _ in range(n - 1):
        acc = np.convolve(acc, masses)[:cells]
    if n > 1:
        acc = np.convolve(acc, irwin_hall_cell_masses(n))[:cells]
    return math.fsum(acc)


def small_x_sum_series(params, n, x, terms=40):
    """P(S_n <= x) by term-wise convolution of the power series of the density.

    With b_j = (-1)^j Gamma(d + p j) / (j! a^(p j)) and e = b^{*n},
    P(S_n <= x) = c1^n * sum_J e_J x^(n d + p J) / Gamma(n d + p J + 1).
    Valid while (x/a)^p stays below 1.
    """
    a, d, p = params.a, params.d, params.p
    if (x / a) ** p > 1.0:
        raise DomainError("series is restricted to (x/a)^p <= 1")
    j = np.arange(terms)
    log_b = (np.asarray(ln_gamma(d + p * j)) - np.asarray(ln_gamma(j + 1.0))
             + p * j * (math.log(x) - math.log(a)))
    b = (-1.0) ** j * np.exp(log_b)
    e = b
    for _ in range(n - 1):
        e = np.convolve(e, b)[:terms]
    c1 = gg.condition_constants(params).c1
    powers = n * d * math.log(x) - np.asarray(ln_gamma(n * d + p * j + 1.0))
    return float(c1 ** n * np.sum(e * np.exp(powers)))


def _richardson(xs, ratios, order):
    if len(ratios) < 2:
        return None
    shrink = (xs[-1] / xs[-2]) ** order
    return (ratios[-1] - shrink * ratios[-2]) / (1.0 - shrink)


def small_x_probe(params, n, which, xs=SMALL_X_POINTS, rtol=SMALL_X_RTOL, cells=SMALL_X_CELLS):
    """P(S_n <= x) / x^(alpha n) or P(M_n <= x) / x^(alpha n) along x -> 0."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError("n must be an integer >= 1")
    alpha = params.d
    ratios = []
    for x in xs:
        log_scale = alpha * n * math.log10(x)
        if log_scale < -300:
            raise UnderflowError(f"x^(alpha n) = 1e{log_scale:.0f} underflows")
        if which == "max":
            f = gg.cdf(params, x)
            ratios.append(math.exp(n * (math.log(f) - alpha * math.log(x))))
        elif which == "sum":
            ratios.append(local_sum_cdf(params, n, x, cells) / x ** (alpha * n))
        else:
            raise DomainError("which must be 'sum' or 'max'")
    limit = small_x_limit(params, n, which)
    converged = abs(ratios[-1] - limit) <= rtol * limit
    return AsymptoticProbe(
        name=f"small_x_{which}", x_values=tuple(xs), ratios=tuple(ratios),
        limit_claim=limit, converged=converged, rtol=rtol,
        extrapolated=_richardson(xs, ratios, params.p))


def max_to_single_tail(params, n, x):
    """P(M_n > x) / P(X > x) = (1 - (1 - S)^n) / S with S the exact survival."""
    log_s = gg.log_survival(params, x)
    if log_s < -745.0:
        return float(n)
    s = math.exp(log_s)
    return -math.expm1(n * math.log1p(-s)) / s


def log_max_survival(params, n, x):
    """log P(M_n > x), finite deep into the tail."""
    return gg.log_survival(params, x) + math.log(max_to_single_tail(params, n, x))


def tail_ratio_probe(params, n, levels=TAIL_LEVELS, rtol=TAIL_RTOL):
    """P(M_n > x) / P(X > x) at the x where P(X > x) equals each level."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError("n must be an integer >= 1")
    xs, ratios = [], []
    for level in levels:
        x = gg.inverse_survival(params, level)
        if gg.survival(params, x) <= 0.0:
            raise UnderflowError(f"survival underflows at x={x}")
        xs.append(x)
        ratios.append(max_to_single_tail(params, n, x))
    converged = abs(ratios[-1] - n) <= rtol * n
    return AsymptoticProbe("tail_ratio", tuple(xs), tuple(ratios), float(n), converged, rtol,
                           extra={"survival_levels": list(levels)})


def survival_bounds(params, x, eps):
    """Log lower/upper envelopes for P(X > x) built from exp(-c2 ((1 -/+ eps) x)^beta).

    Each is (1/2 or 2) * int_x^inf exp(-c2 ((1 +/- eps) t)^beta) dt in its
    leading-order form.  They bracket log P(X > x) once x is large enough.
    """
    cc = gg.condition_constants(params)
    beta = cc.beta
    y = cc.c2 ** (1.0 / beta) * x

    def envelope(k):
        return (-(k * y) ** beta - math.log(beta * k ** beta) - (beta - 1.0) * math.log(y)
                - math.log(cc.c2) / beta)

    return math.log(0.5) + envelope(1.0 + eps), math.log(2.0) + envelope(1.0 - eps)


def tail_integral_identity(beta, z):
    """Both sides of the integration-by-parts formula for int_z^inf exp(-t^beta) dt.

    Returns ``(lhs, rhs)``, where ``rhs`` is
    exp(-z^beta) z^(1-beta) / beta - (beta-1)/beta * int_z^inf t^-beta exp(-t^beta) dt.
    """
    lhs, _ = integrate.quad(lambda t: math.exp(-t ** beta), z, np.inf, epsabs=0, epsrel=1e-12,
                            limit=200)
    rest, _ = integrate.quad(lambda t: t ** -beta * math.exp(-t ** beta), z, np.inf,
                             epsabs=0, epsrel=1e-12, limit=200)
    rhs = math.exp(-z ** beta) * z ** (1.0 - beta) / beta - (beta - 1.0) / beta * rest
    return lhs, rhs


def _mgf_of_power(params, t):
    """log E[exp(t c2 X^beta)] for t < 1; closed form for the family."""
    return -params.gamma_shape * math.log1p(-t)


def chebyshev_log_bound(params, n, x, eps):
    """Upper bound on log P(S_n > x) for beta >= 1 from the exponential Chebyshev inequality.

    Uses sum X_i^beta >= n^(1-beta) S_n^beta (convexity).
    """
    cc = gg.condition_constants(params)
    if cc.beta < 1.0:
        raise DomainError("the Chebyshev bound needs beta >= 1")
    t = (1.0 - eps) ** cc.beta
    return -t * cc.c2 * n ** (1.0 - cc.beta) * x ** cc.beta + n * _mgf_of_power(params, t)


def admissible_eps(alpha, beta, n):
    """Half the largest eps with (1+eps)^b C^-b < (1-eps)^b n^(1-b)."""
    c = scaling_constant(alpha, n)
    r = (n ** (1.0 - beta) * c ** beta) ** (1.0 / beta)
    if r <= 1.0:
        raise DomainError("no admissible eps: threshold condition fails")
    return 0.5 * (r - 1.0) / (r + 1.0)


def contradiction_probe(params, n, m=DEFAULT_M, points=12, max_doublings=40):
    """Tail evidence that S_n and C * M_n cannot share a law.

    beta < 1: P(X > x) / P(X > x/C) along growing x, expected to decay to 0.
    beta >= 1: log P(M_n > x/C) - log P(S_n > x), expected to diverge; the
    sum's survival comes from the convolution grid while it is resolvable and
    from the Chebyshev upper bound beyond (so the values are lower bounds).
    """
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise DomainError("n must be an integer >= 2")
    alpha, beta = params.d, params.p
    if not condition_holds(alpha, beta, n):
        return not_applicable("contradiction", "threshold condition fails for this (alpha, beta, n)")
    c = scaling_constant(alpha, n)
    x0 = gg.inverse_survival(params, 1e-2)

    if beta < 1.0:
        xs, ratios = [], []
        x = x0
        for _ in range(max_doublings):
            r = math.exp(gg.log_survival(params, x) - gg.log_survival(params, x / c))
            xs.append(x)
            ratios.append(r)
            if r < DECAY_LEVEL * 1e-3 and len(xs) >= points:
                break
            x *= 2.0
        decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
        cc = gg.condition_constants(params)
        asym = [-cc.c2 * xv ** beta * (1.0 - c ** -beta) - (params.d - beta) * math.log(c)
                for xv in xs]
        return AsymptoticProbe(
            "contradiction", tuple(xs), tuple(ratios), 0.0,
            converged=decreasing and ratios[-1] < DECAY_LEVEL,
            sources=("exact",) * len(xs), note="beta < 1: single-variable survival ratio",
            extra={"constant": c, "asymptotic_log_ratio": asym})

    eps = admissible_eps(alpha, beta, n)
    base = discretize(params, m=m)
    s_dist = sum_distribution(base, n)
    surv = s_dist.survival()
    edges = s_dist.edges
    resolvable = np.nonzero(surv >= GRID_SURVIVAL_FLOOR)[0]
    x_grid_end = float(edges[resolvable[-1]])

    xs, vals, src = [], [], []
    for x in np.linspace(x0, x_grid_end, points // 2 + 1)[1:]:
        i = int(round(x / s_dist.step)) - 1
        xs.append(float(edges[i]))
        vals.append(log_max_survival(params, n, edges[i] / c) - math.log(surv[i]))
        src.append("grid")
    x = x_grid_end
    for _ in range(max_doublings):
        x *= 1.25
        bound = chebyshev_log_bound(params, n, x, eps)
        xs.append(x)
        vals.append(log_max_survival(params, n, x / c) - min(bound, 0.0))
        src.append("chebyshev")
        if vals[-1] > 2 * DIVERGENCE_LOG and src.count("chebyshev") >= points // 2:
            break
    cheb = [v for v, s in zip(vals, src) if s == "chebyshev"]
    tail = cheb[-(points // 2):]
    increasing = all(b > a for a, b in zip(tail, tail[1:]))
    return AsymptoticProbe(
        "contradiction", tuple(xs), tuple(vals), float("inf"),
        converged=increasing and vals[-1] > DIVERGENCE_LOG, log_scale=True, sources=tuple(src),
        note="beta >= 1: log P(M_n > x/C) - log P(S_n > x); chebyshev points are lower bounds",
        extra={"constant": c, "eps": eps})
