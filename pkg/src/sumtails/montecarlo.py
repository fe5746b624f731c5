"""Independent oracles: direct simulation of the sum and exact small-N densities.

Simulation is split into fixed-size blocks. Block ``b`` draws from its own
PCG64 stream seeded by ``SeedSequence(entropy=seed, spawn_key=(b,))``, so a
batch depends only on (spec, seed, count, block_size) and never on how many
worker threads ran it.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .distributions import Kind, TermDistribution, open_uniform, pdf, power_kernel_args, quantile
from .errors import GridTooNarrow, PrecisionGuard
from .inversion import SumSpec

DEFAULT_BLOCK = 2 ** 16
LOW_STATISTICS = 10
IRWIN_HALL_MAX_N = 30
_ESCAPE_LIMIT = 1e-8


@dataclass(frozen=True)
class SampleBatch:
    spec: SumSpec
    seed: int
    count: int
    values: np.ndarray
    block_size: int = DEFAULT_BLOCK

    def sorted_values(self) -> np.ndarray:
        return np.sort(self.values)


@dataclass(frozen=True)
class TailEstimate:
    """Exceedance fraction P(Z > threshold) with its binomial standard error."""

    threshold: float
    estimate: float
    stderr: float
    exceedances: int
    count: int

    @property
    def low_statistics(self) -> bool:
        return self.exceedances < LOW_STATISTICS


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Generator for one block, derived from the master seed alone."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(block,))))


def _block_sums(dist: TermDistribution, n_terms: int, rows: int, rng: np.random.Generator) -> np.ndarray:
    u = open_uniform(rng, (rows, n_terms))
    if dist.kind is Kind.POWER and dist.l > 1:
        return _kernels.power_row_sums(u, *power_kernel_args(dist))
    return quantile(dist, u).sum(axis=1)


def sample_sum(spec: SumSpec, count: int, seed: int, block_size: int = DEFAULT_BLOCK,
               workers: int = 1) -> SampleBatch:
    """Draw ``count`` normalized sums z = (xi_1 + ... + xi_N) / s.

    Parameters
    ----------
    spec : SumSpec
    count : int
        Number of sums, at least 1.
    seed : int
        Nonnegative master seed, at most 64 bits.
    block_size : int
        Sums per block. Part of the reproducibility key.
    workers : int
        Threads; the result is identical for every value.
    """
    if int(count) != count or count < 1:
        raise ValueError("count must be a positive integer")
    if int(seed) != seed or not 0 <= seed < 2 ** 64:
        raise ValueError("seed must be an integer in [0, 2**64)")
    if block_size < 1 or workers < 1:
        raise ValueError("block_size and workers must be positive")
    count, seed = int(count), int(seed)
    values = np.empty(count)
    n_blocks = -(-count // block_size)

    def run(b):
        lo = b * block_size
        hi = min(count, lo + block_size)
        values[lo:hi] = _block_sums(spec.distribution, spec.n_terms, hi - lo, block_rng(seed, b))

    if workers == 1:
        for b in range(n_blocks):
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n_blocks)))
    values /= spec.scale
    return SampleBatch(spec=spec, seed=seed, count=count, values=values, block_size=block_size)


def empirical_tail(batch: SampleBatch, z: float) -> TailEstimate:
    """Fraction of the batch strictly above ``z``."""
    return empirical_tails(batch, [z])[0]


def empirical_tails(batch: SampleBatch, thresholds) -> list:
    """:func:`empirical_tail` at several thresholds with one sort."""
    if batch.count < 1:
        raise ValueError("empty batch")
    ordered = batch.sorted_values()
    z = np.asarray(thresholds, dtype=float)
    above = batch.count - np.searchsorted(ordered, z, side="right")
    out = []
    for zi, k in zip(z, above):
        p = k / batch.count
        out.append(TailEstimate(threshold=float(zi), estimate=p,
                                stderr=math.sqrt(p * (1.0 - p) / batch.count),
                                exceedances=int(k), count=batch.count))
    return out


def _irwin_hall_exact(n: int, x: Fraction) -> Fraction:
    y = x + Fraction(n, 2)
    if y <= 0 or y >= n:
        return Fraction(0)
    total = sum((-1) ** k * math.comb(n, k) * (y - k) ** (n - 1) for k in range(math.floor(y) + 1))
    return total / math.factorial(n - 1)


def irwin_hall_density(n_terms: int, x):
    """Exact density of the sum of N uniforms on [-1/2, 1/2].

    Evaluated in rational arithmetic, so the only rounding is the final
    conversion to float. The density is 0 for |x| >= N/2.

    Raises
    ------
    PrecisionGuard
        For N > 30, where callers should not rely on this oracle.
    """
    if int(n_terms) != n_terms or n_terms < 1:
        raise ValueError("n_terms must be a positive integer")
    if n_terms > IRWIN_HALL_MAX_N:
        raise PrecisionGuard(f"Irwin-Hall oracle limited to N <= {IRWIN_HALL_MAX_N}, got {n_terms}")
    arr = np.asarray(x, dtype=float)
    out = np.array([float(_irwin_hall_exact(int(n_terms), Fraction(float(v)))) for v in arr.ravel()])
    out = out.reshape(arr.shape)
    return out[()] if out.ndim == 0 else out


def convolution_oracle(dist: TermDistribution, n_terms: int, x_grid) -> np.ndarray:
    """Density of the unnormalized sum x by repeated direct convolution.

    The working grid has the spacing h of ``x_grid`` and is symmetric about 0.
    Each convolution is a trapezoid sum over the nodes in which the integrand
    p(y) f(x - y) takes the mean of its two one-sided limits. This is exact
    when the integrand is piecewise linear with breaks on the grid (sums of
    uniforms) and converges geometrically for smooth, fast-decaying terms.
    Values are linearly interpolated onto ``x_grid``.

    Raises
    ------
    GridTooNarrow
        If more than 1e-8 of the mass leaves the working grid.
    """
    if int(n_terms) != n_terms or not 1 <= n_terms <= 64:
        raise ValueError("n_terms must be an integer in [1, 64]")
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise ValueError("x_grid must be 1-d with at least 3 points")
    steps = np.diff(x)
    h = steps.mean()
    if not h > 0 or np.max(np.abs(steps - h)) > 1e-9 * h:
        raise ValueError("x_grid must be uniform and ascending")
    k_max = int(math.ceil(np.max(np.abs(x)) / h - 1e-9))
    t = h * np.arange(-k_max, k_max + 1)
    # one-sided limits of f at the nodes; the nudge absorbs rounding in t
    nudge = 1e-9 * h
    f_left = pdf(dist, t - nudge)
    f_right = pdf(dist, t + nudge)
    escaped = 1.0 - h * 0.5 * (math.fsum(f_left) + math.fsum(f_right))
    if escaped > _ESCAPE_LIMIT:
        raise GridTooNarrow(f"term mass {escaped:.3e} outside |x| <= {t[-1]:.6g}")
    p_left, p_right = f_left, f_right
    for _ in range(n_terms - 1):
        full = 0.5 * h * (np.convolve(p_left, f_right) + np.convolve(p_right, f_left))
        inner = full[k_max:k_max + t.size]
        escaped += h * (math.fsum(full[:k_max]) + math.fsum(full[k_max + t.size:]))
        if escaped > _ESCAPE_LIMIT:
            raise GridTooNarrow(f"sum mass {escaped:.3e} outside |x| <= {t[-1]:.6g}")
        # a convolution with a bounded density is continuous
        p_left = p_right = inner
    return np.interp(x, t, 0.5 * (p_left + p_right))
