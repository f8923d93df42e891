"""Evidence gathering and verdicts for one (family, n) instance."""

import json
from dataclasses import dataclass, field
from enum import Enum

from . import __version__
from . import distengine as de
from . import montecarlo as mc
from .gengamma import raw_moment
from .threshold import beta_bound, condition_holds, scaling_constant, threshold_N

SCHEMA = "maxsum-report/1"
REFUTE_FACTOR = 10.0
REFUTE_P = 1e-4
CONSISTENT_P = 1e-3
ERROR_FLOOR = 1e-12
DEFAULT_SEED = 42
DEFAULT_SIZE = 1_000_000


class Verdict(str, Enum):
    IDENTITY_CONSISTENT = "IDENTITY_CONSISTENT"
    IDENTITY_REFUTED = "IDENTITY_REFUTED"
    INCONCLUSIVE = "INCONCLUSIVE"


def decide(ks_grid, discretization_error, p_value):
    """Map the two pieces of evidence to a verdict.

    Refuted needs a grid distance 10x above its error estimate and a Monte
    Carlo p-value below 1e-4; consistent needs the distance inside the error
    estimate and p >= 1e-3.  Anything else is inconclusive.
    """
    if ks_grid > REFUTE_FACTOR * discretization_error and p_value < REFUTE_P:
        return Verdict.IDENTITY_REFUTED
    if ks_grid <= discretization_error and p_value >= CONSISTENT_P:
        return Verdict.IDENTITY_CONSISTENT
    return Verdict.INCONCLUSIVE


@dataclass
class GridEvidence:
    ks_grid: float
    ks_grid_coarse: float
    discretization_error: float
    m: int
    coarse_m: int
    x_max: float


def grid_evidence(params, n, m=de.DEFAULT_M):
    """KS(S_n, C M_n) at m and m/2 cells; their gap plus mass defects estimates the error."""
    c = scaling_constant(params.d, n)
    found = {}
    for size in (m, m // 2):
        base = de.discretize(params, m=size)
        s = de.sum_distribution(base, n)
        mx = de.scale(de.max_distribution(base, n), c)
        found[size] = (de.ks_distance(s, mx), s.mass_defect + mx.mass_defect, base.x_max)
    fine, coarse = found[m], found[m // 2]
    err = abs(fine[0] - coarse[0]) + fine[1] + ERROR_FLOOR
    return GridEvidence(fine[0], coarse[0], err, m, m // 2, fine[2])


@dataclass
class ComparisonReport:
    family: dict
    n: int
    constant: float
    condition5_holds: bool
    beta_bound: float
    threshold_n: int
    grid: GridEvidence
    small_x_sum: dict
    small_x_max: dict
    tail_ratio: dict
    contradiction: dict
    mc: dict
    verdict: Verdict
    tolerances: dict = field(default_factory=dict)

    @property
    def ks_grid(self):
        return self.grid.ks_grid

    def as_dict(self):
        out = {
            "schema": SCHEMA,
            "version": __version__,
            "family": self.family,
            "n": self.n,
            "constant": self.constant,
            "condition5_holds": self.condition5_holds,
            "beta_bound": self.beta_bound,
            "threshold_N": self.threshold_n,
            "ks_grid": self.grid.ks_grid,
            "ks_grid_coarse": self.grid.ks_grid_coarse,
            "discretization_error": self.grid.discretization_error,
            "grid": {"m": self.grid.m, "coarse_m": self.grid.coarse_m, "x_max": self.grid.x_max},
            "small_x_sum": self.small_x_sum,
            "small_x_max": self.small_x_max,
            "tail_ratio": self.tail_ratio,
            "contradiction": self.contradiction,
            "mc": self.mc,
            "tolerances": self.tolerances,
            "verdict": self.verdict.value,
        }
        # The theorem only speaks when its condition holds; otherwise the
        # verdict rests on the numerical evidence alone and the flag is omitted.
        if self.condition5_holds:
            out["theorem1_refutes"] = True
        return out

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=False)


def build_report(params, n, seed=DEFAULT_SEED, size=DEFAULT_SIZE, grid_size=de.DEFAULT_M,
                 workers=1):
    alpha, beta = params.d, params.p
    c = scaling_constant(alpha, n)
    if n >= 2:
        holds = condition_holds(alpha, beta, n)
        bound = beta_bound(alpha, n)
        n_star = threshold_N(alpha, beta)
    else:
        holds, bound, n_star = False, None, None

    grid = grid_evidence(params, n, m=grid_size)
    sx_sum = de.small_x_probe(params, n, "sum").summary()
    sx_max = de.small_x_probe(params, n, "max").summary()
    tail = de.tail_ratio_probe(params, n).summary()
    if n >= 2:
        contra = de.contradiction_probe(params, n, m=grid_size).summary()
    else:
        contra = de.not_applicable("contradiction", "n = 1").summary()

    sample = mc.batch(params, n, size, seed, workers=workers)
    test = mc.ks_two_sample(sample)
    mc_summary = dict(test.as_dict(), seed=int(seed), size=int(size))

    verdict = decide(grid.ks_grid, grid.discretization_error, test.p_value)
    tolerances = {
        "mass_tol": de.MASS_TOL,
        "refute_factor": REFUTE_FACTOR,
        "refute_p": REFUTE_P,
        "consistent_p": CONSISTENT_P,
        "small_x_rtol": de.SMALL_X_RTOL,
        "tail_rtol": de.TAIL_RTOL,
    }
    return ComparisonReport(params.as_dict(), int(n), c, bool(holds), bound, n_star, grid,
                            sx_sum, sx_max, tail, contra, mc_summary, verdict, tolerances)


@dataclass
class MomentReport:
    family: dict
    n: int
    sum_second_moment: float
    max_second_moment: float
    sum_closed_form: float
    ratio: float
    constant_squared: float
    gap: float
    ratio_differs: bool

    def as_dict(self):
        return dict(self.__dict__, schema=SCHEMA, version=__version__)


def moment_report(params, n=3, m=de.DEFAULT_M, min_gap=0.05):
    """Second moments of S_n and M_n against C^2; equal laws would force ratio = C^2."""
    base = de.discretize(params, m=m)
    es2 = de.moment(de.sum_distribution(base, n), 2)
    em2 = de.moment(de.max_distribution(base, n), 2)
    closed = n * raw_moment(params, 2) + n * (n - 1) * raw_moment(params, 1) ** 2
    c2 = scaling_constant(params.d, n) ** 2
    ratio = es2 / em2
    gap = abs(ratio - c2)
    return MomentReport(params.as_dict(), n, es2, em2, closed, ratio, c2, gap,
                        bool(gap > min_gap))
