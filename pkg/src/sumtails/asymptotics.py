"""Closed-form tail laws, the Gaussian crossover, and the imaginary-axis series.

Every density here is for the normalized sum z = x / s unless the argument is
named ``x``. Log-space companions are provided wherever the linear value can
under- or overflow.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy import optimize

from .distributions import Kind, TermDistribution, pdf, power_charfun_complex, tail_prob, variance
from .errors import ConvergenceWarning, DivergentVariance, NoCrossover

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_JUMP_VALIDITY = 0.1


def gaussian_density(z):
    """Standard normal density (1/sqrt(2 pi)) exp(-z**2 / 2)."""
    return np.exp(log_gaussian_density(z))


def log_gaussian_density(z):
    z = np.asarray(z, dtype=float)
    out = -0.5 * z * z - _LOG_SQRT_2PI
    return out[()] if out.ndim == 0 else out


def levy_density(z):
    """Cauchy density (1/pi) / (1 + z**2); exact at every N when s = N."""
    z = np.asarray(z, dtype=float)
    out = 1.0 / (math.pi * (1.0 + z * z))
    return out[()] if out.ndim == 0 else out


def uniform_support_bound(n_terms: int) -> float:
    """Edge of the support of the normalized uniform sum, sqrt(3 N)."""
    _check_n(n_terms)
    return math.sqrt(3.0 * n_terms)


def single_big_jump(dist: TermDistribution, n_terms: int, x):
    """Density of the unnormalized sum from one dominant term, N f(x)."""
    _check_n(n_terms)
    return n_terms * pdf(dist, x)


def single_big_jump_valid(dist: TermDistribution, n_terms: int, x: float) -> bool:
    """Whether N * P(|xi| > |x|) is below 0.1, the condition behind N f(x)."""
    _check_n(n_terms)
    return n_terms * 2.0 * tail_prob(dist, abs(float(x))) < _JUMP_VALIDITY


def power_tail(l: int, n_terms: int, z):
    """Heavy-tail asymptote of the normalized power-family sum.

    p_N(z) ~ l N sin(pi/2l) / (pi (sigma sqrt N)**(2l-1) z**(2l)), valid for
    z well above sqrt(N) / sigma.

    Raises
    ------
    DivergentVariance
        For l = 1, whose exact density is :func:`levy_density`.
    """
    return np.exp(log_power_tail(l, n_terms, z))


def log_power_tail(l: int, n_terms: int, z):
    if l == 1:
        raise DivergentVariance("power tail needs l >= 2; use levy_density for l = 1")
    dist = TermDistribution.power(l)
    _check_n(n_terms)
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("power_tail is defined for z > 0")
    log_s = 0.5 * math.log(variance(dist) * n_terms)
    c = math.log(l * n_terms * math.sin(math.pi / (2 * l)) / math.pi)
    out = c - (2 * l - 1) * log_s - 2 * l * np.log(z)
    return out[()] if out.ndim == 0 else out


def sech_tail(n_terms: int, z):
    """Light-tail asymptote of the normalized sech sum.

    p_N(z) ~ N**(N/2) / (N-1)! * z**(N-1) * exp(-pi z sqrt(N) / 2), valid for
    z well above sqrt(N).
    """
    return np.exp(log_sech_tail(n_terms, z))


def log_sech_tail(n_terms: int, z):
    _check_n(n_terms)
    n = n_terms
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("sech_tail is defined for z > 0")
    out = (0.5 * n * math.log(n) - math.lgamma(n) + (n - 1) * np.log(z)
           - 0.5 * math.pi * math.sqrt(n) * z)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class HeavyTailModel:
    """Generic heavy tail f(xi) ~ A / |xi|**m for |xi| well above xi_c."""

    amplitude: float
    exponent: float
    cutoff: float = 1.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if not self.exponent > 1:
            raise ValueError("exponent must exceed 1 for an integrable tail")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")

    @classmethod
    def for_power_family(cls, l: int) -> "HeavyTailModel":
        dist = TermDistribution.power(l)
        return cls(amplitude=dist.amplitude, exponent=2.0 * l, cutoff=1.0)

    @property
    def finite_variance(self) -> bool:
        return self.exponent > 3

    def density(self, xi):
        xi = np.abs(np.asarray(xi, dtype=float))
        return self.amplitude / xi ** self.exponent

    def single_big_jump(self, n_terms: int, x):
        return n_terms * self.density(x)


def crossover_zg(m: float, n_terms: int, mode: str = "iterate") -> float:
    """Point where the Gaussian core meets the single-big-jump density.

    Parameters
    ----------
    m : float
        Tail exponent of the term law, m > 3.
    n_terms : int
        Number of terms; (m - 3) ln N must exceed 1.
    mode : {"iterate", "solve"}
        ``"iterate"`` evaluates the two-term iterate
        sqrt((m-3) ln N + m ln((m-3) ln N)). ``"solve"`` finds the root of
        p_G(z) = s N f(s z) for the power family with 2l = m, which needs m
        to be an even integer.

    Raises
    ------
    NoCrossover
        If the bracket [1, 10 sqrt(N)] holds no sign change.
    """
    if not m > 3:
        raise ValueError(f"crossover needs m > 3, got {m}")
    _check_n(n_terms)
    lead = (m - 3.0) * math.log(n_terms)
    if not lead > 1.0:
        raise ValueError(f"(m-3) ln N = {lead:.4g} must exceed 1")
    if mode == "iterate":
        return math.sqrt(lead + m * math.log(lead))
    if mode != "solve":
        raise ValueError(f"mode must be 'iterate' or 'solve', got {mode!r}")
    if float(m) != int(m) or int(m) % 2:
        raise ValueError(f"solve mode needs an even integer m, got {m}")
    dist = TermDistribution.power(int(m) // 2)
    s = math.sqrt(variance(dist) * n_terms)

    def gap(z):
        jump = s * n_terms * float(pdf(dist, s * z))
        return float(log_gaussian_density(z)) - math.log(jump)

    lo, hi = 1.0, 10.0 * math.sqrt(n_terms)
    if gap(lo) * gap(hi) > 0:
        raise NoCrossover(f"no crossover in [{lo}, {hi:.4g}] for m={m}, N={n_terms}")
    return optimize.brentq(gap, lo, hi, xtol=1e-10, rtol=4 * np.finfo(float).eps)


def crossover_gap(m: int, n_terms: int, z: float) -> float:
    """p_G(z) minus the single-big-jump density s N f(s z) for 2l = m."""
    dist = TermDistribution.power(int(m) // 2)
    s = math.sqrt(variance(dist) * n_terms)
    return float(gaussian_density(z)) - s * n_terms * float(pdf(dist, s * z))


def _power_over_factorial(x: float, k: int) -> float:
    """x**k / k! as a running product, free of integer overflow for large k."""
    out = 1.0
    for j in range(1, k + 1):
        out *= x / j
    return out


def _series_terms(l: int, x: float, p_max: int, q_max: int):
    base = math.sin(math.pi / (2 * l))
    r = [_power_over_factorial(x, 2 * p) * base / math.sin(math.pi * (2 * p + 1) / (2 * l))
         for p in range(p_max + 1)]
    s = [l * base * (-1) ** (q - 1) * _power_over_factorial(x, 2 * q * l - 1)
         for q in range(1, q_max + 1)]
    return r, s


def series_g_imag(l: int, scale: float, omega_pp: float, p_max: int = 20,
                  q_max: int = 20) -> complex:
    """Power-family g at omega = -i omega'' from its truncated power series.

    The real part sums the even terms r_p, p = 0..p_max, and the imaginary
    part the odd terms s_q, q = 1..q_max. A :class:`ConvergenceWarning` is
    issued when either truncated sequence is not shrinking at its end.
    """
    if l < 1:
        raise ValueError("l must be a positive integer")
    if not scale > 0 or omega_pp < 0:
        raise ValueError("scale must be positive and omega_pp nonnegative")
    if p_max < 1 or q_max < 1:
        raise ValueError("p_max and q_max must be at least 1")
    r, s = _series_terms(l, omega_pp / scale, p_max, q_max)
    for name, seq in (("real", r), ("imaginary", s)):
        if len(seq) >= 2 and abs(seq[-1]) > 0 and abs(seq[-1]) >= abs(seq[-2]):
            warnings.warn(f"{name} series terms not decreasing at truncation "
                          f"(omega''/s = {omega_pp / scale:.3g})", ConvergenceWarning, stacklevel=2)
    return complex(math.fsum(r), math.fsum(s))


def pole_sum_imag(l: int, scale: float, omega_pp: float) -> complex:
    """The closed-form pole sum continued to omega = -i omega''."""
    return complex(power_charfun_complex(l, -1j * omega_pp, scale))


def im_gN_leading(l: int, n_terms: int, scale: float, omega_pp: float) -> float:
    """Leading term N s_1 of Im g(-i omega'')**N."""
    _check_n(n_terms)
    x = omega_pp / scale
    return n_terms * l * math.sin(math.pi / (2 * l)) / math.factorial(2 * l - 1) * x ** (2 * l - 1)


class AsymptoteKind(str, enum.Enum):
    GAUSSIAN_CORE = "gaussian_core"
    POWER_TAIL = "power_tail"
    SECH_TAIL = "sech_tail"
    LEVY_EXACT = "levy_exact"
    HARD_CUTOFF = "hard_cutoff"


@dataclass(frozen=True)
class TailAsymptote:
    """A closed-form tail model and the z above which it is expected to hold.

    Evaluation below ``onset_z`` is allowed; :meth:`in_validity` reports it.
    For ``HARD_CUTOFF`` the model only asserts that the density vanishes
    beyond the support edge, so values inside the support are NaN.
    """

    kind: AsymptoteKind
    params: Mapping[str, float] = field(default_factory=dict)
    onset_z: float = 0.0

    def __post_init__(self):
        if not self.onset_z > 0:
            raise ValueError("onset_z must be positive")

    def log_evaluate(self, z):
        z = np.asarray(z, dtype=float)
        n = int(self.params.get("N", 1))
        k = self.kind
        if k is AsymptoteKind.GAUSSIAN_CORE:
            out = log_gaussian_density(z)
        elif k is AsymptoteKind.LEVY_EXACT:
            out = np.log(levy_density(z))
        elif k is AsymptoteKind.HARD_CUTOFF:
            out = np.where(np.abs(z) >= self.onset_z, -np.inf, np.nan)
        else:
            az = np.abs(z)
            out = np.full(z.shape, np.nan)
            pos = az > 0
            if k is AsymptoteKind.POWER_TAIL:
                out[pos] = log_power_tail(int(self.params["l"]), n, az[pos])
            else:
                out[pos] = log_sech_tail(n, az[pos])
        out = np.asarray(out, dtype=float)
        return out[()] if out.ndim == 0 else out

    def evaluate(self, z):
        with np.errstate(over="ignore"):
            return np.exp(self.log_evaluate(z))

    def in_validity(self, z):
        z = np.abs(np.asarray(z, dtype=float))
        if self.kind in (AsymptoteKind.GAUSSIAN_CORE, AsymptoteKind.LEVY_EXACT):
            out = np.ones(z.shape, dtype=bool)
        elif self.kind is AsymptoteKind.HARD_CUTOFF:
            out = z >= self.onset_z
        else:
            out = z > self.onset_z
        return out[()] if out.ndim == 0 else out


def tail_model_for(spec) -> Optional[TailAsymptote]:
    """Registered tail model for the term law of ``spec``."""
    dist, n = spec.distribution, spec.n_terms
    tiny = np.finfo(float).tiny
    if dist.kind is Kind.GAUSS:
        return TailAsymptote(AsymptoteKind.GAUSSIAN_CORE, {"N": n}, tiny)
    if dist.kind is Kind.UNIFORM:
        return TailAsymptote(AsymptoteKind.HARD_CUTOFF, {"N": n}, uniform_support_bound(n))
    if dist.kind is Kind.SECH:
        return TailAsymptote(AsymptoteKind.SECH_TAIL, {"N": n}, math.sqrt(n))
    if dist.l == 1:
        return TailAsymptote(AsymptoteKind.LEVY_EXACT, {"N": n, "l": 1}, tiny)
    return TailAsymptote(AsymptoteKind.POWER_TAIL, {"N": n, "l": dist.l, "sigma": dist.std},
                         math.sqrt(n) / dist.std)


def _check_n(n_terms):
    if int(n_terms) != n_terms or n_terms < 1:
        raise ValueError(f"n_terms must be a positive integer, got {n_terms!r}")
