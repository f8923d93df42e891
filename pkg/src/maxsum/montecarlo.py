"""Seeded Monte Carlo batches of S_n and C * M_n and the two-sample KS test.

Randomness comes from numpy's counter-based Philox generator keyed by a
``SeedSequence``.  A batch is cut into fixed-size chunks and every chunk of
every stream gets its own spawn key ``(stream, chunk)``, so the output is a
function of the seed alone, whatever the number of worker threads.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IterationCapError
from .threshold import scaling_constant

CHUNK = 1 << 16
MAX_ROUNDS = 10_000
SUM_STREAM = 0
MAX_STREAM = 1


def make_rng(seed, *key):
    """Independent generator for ``seed`` and substream ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _log_gamma_variates(rng, shape, size):
    """log of Gamma(shape, 1) variates via Marsaglia-Tsang.

    For shape < 1 the boost G(k) = G(k + 1) * U^(1/k) is applied in log
    space, which avoids underflow for very small shapes.
    """
    boost = shape < 1.0
    k = shape + 1.0 if boost else shape
    d = k - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    filled = 0
    for _ in range(MAX_ROUNDS):
        need = size - filled
        if need == 0:
            break
        draw = int(need * 1.05) + 16
        z = rng.standard_normal(draw)
        u = rng.random(draw)
        v = 1.0 + c * z
        ok = v > 0
        v = np.where(ok, v, 1.0) ** 3
        z2 = z * z
        squeeze = u < 1.0 - 0.0331 * z2 * z2
        with np.errstate(divide="ignore"):
            full = np.log(u) < 0.5 * z2 + d * (1.0 - v + np.log(v))
        accept = ok & (squeeze | full)
        got = np.log(d * v[accept])[:need]
        out[filled:filled + got.size] = got
        filled += got.size
    else:
        raise IterationCapError("gamma sampler exceeded its rejection-round cap")
    if boost:
        out += np.log(rng.random(size)) / shape
    return out


def sample_gengamma(params, rng, size=None):
    """a * G^(1/p) with G ~ Gamma(d/p, 1); a float if size is None."""
    n = 1 if size is None else int(size)
    x = params.a * np.exp(_log_gamma_variates(rng, params.gamma_shape, n) / params.p)
    return float(x[0]) if size is None else x


@dataclass(frozen=True, eq=False)
class SampleBatch:
    seed: int
    n: int
    size: int
    sums: np.ndarray
    scaled_maxima: np.ndarray
    constant_used: float
    params: object = None

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sum", "scaled_max"])
            for s, m in zip(self.sums, self.scaled_maxima):
                writer.writerow([repr(float(s)), repr(float(m))])


def _chunk(params, n, seed, stream, index, rows):
    rng = make_rng(seed, stream, index)
    return sample_gengamma(params, rng, rows * n).reshape(rows, n)


def batch(params, n, size, seed, workers=1, chunk=CHUNK):
    """Draw ``size`` sums and ``size`` scaled maxima from disjoint tuples."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError("n must be an integer >= 1")
    if int(size) != size or size < 1:
        raise DomainError("size must be a positive integer")
    n, size = int(n), int(size)
    c = scaling_constant(params.d, n)
    bounds = [(i, min(chunk, size - start)) for i, start in enumerate(range(0, size, chunk))]

    def work(job):
        stream, (index, rows) = job
        block = _chunk(params, n, seed, stream, index, rows)
        return block.sum(axis=1) if stream == SUM_STREAM else c * block.max(axis=1)

    jobs = [(SUM_STREAM, b) for b in bounds] + [(MAX_STREAM, b) for b in bounds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]
    sums = np.concatenate(parts[:len(bounds)])
    maxima = np.concatenate(parts[len(bounds):])
    if not (np.all(sums > 0) and np.all(maxima > 0)):
        raise IterationCapError("sampler produced a non-positive value (underflow)")
    return SampleBatch(int(seed), n, size, sums, maxima, c, params)


@dataclass(frozen=True)
class KsTestResult:
    statistic: float
    p_value: float
    sample_sizes: tuple

    def as_dict(self):
        return {"statistic": self.statistic, "p_value": self.p_value,
                "sample_sizes": list(self.sample_sizes)}


def kolmogorov_sf(lam, tol=1e-12):
    """P(K > lam) for the Kolmogorov limit law.

    Uses 2 sum (-1)^(k-1) exp(-2 k^2 lam^2) for lam >= 1 and the Jacobi
    theta form for small lam, where the alternating series converges slowly.
    """
    if lam <= 0:
        return 1.0
    total = 0.0
    if lam < 1.0:
        # 1 - sqrt(2 pi)/lam * sum exp(-(2k-1)^2 pi^2 / (8 lam^2))
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8 * lam * lam))
            total += term
            if term < tol * total or k > 1000:
                break
            k += 1
        cdf = math.sqrt(2 * math.pi) / lam * total
        return min(1.0, max(0.0, 1.0 - cdf))
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(x, y):
    """sup |F_x - F_y| of two empirical CDFs via the sorted merge."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == 0 or y.size == 0:
        raise DomainError("both samples must be nonempty")
    pooled = np.concatenate((x, y))
    fx = np.searchsorted(x, pooled, side="right") / x.size
    fy = np.searchsorted(y, pooled, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def ks_two_sample(data, other=None):
    """Two-sample KS test on a ``SampleBatch`` (or on two arrays)."""
    if other is None:
        x, y = data.sums, data.scaled_maxima
    else:
        x, y = data, other
    d = ks_statistic(x, y)
    nx, ny = len(x), len(y)
    lam = math.sqrt(nx * ny / (nx + ny)) * d
    return KsTestResult(d, kolmogorov_sf(lam), (nx, ny))


def ks_one_sample(samples, cdf):
    """sup |F_empirical - F| for a vectorized reference cdf."""
    x = np.sort(np.asarray(samples, dtype=float))
    f = np.asarray(cdf(x))
    n = x.size
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    return float(max(upper.max(), lower.max()))
