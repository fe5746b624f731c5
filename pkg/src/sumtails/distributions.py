"""Term distributions: densities, moments, samplers and scaled characteristic functions.

Four even, zero-mean laws are catalogued:

``uniform``
    f(xi) = 1 on [-1/2, 1/2].
``power``
    f(xi) = A / (1 + xi**(2l)), A = (l/pi) sin(pi/2l), l a positive integer.
``sech``
    f(xi) = 1 / (pi cosh xi).
``gauss``
    zero-mean normal with standard deviation ``sigma``.

The scaled characteristic function is g(omega; s) = E[exp(i omega xi / s)],
where ``s`` is the divisor applied to every term of the sum.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np
from scipy import integrate, special

from . import _kernels
from .errors import DivergentVariance, NonRealCharFunction

IMAG_RESIDUE_LIMIT = 1e-9


class Kind(str, enum.Enum):
    UNIFORM = "uniform"
    POWER = "power"
    SECH = "sech"
    GAUSS = "gauss"


@dataclass(frozen=True)
class TermDistribution:
    """One catalogued term law.

    Parameters
    ----------
    kind : Kind
        Family selector.
    l : int, optional
        Power-family index (required for ``Kind.POWER`` only).
    sigma : float, optional
        Standard deviation of the Gaussian law (``Kind.GAUSS`` only).
    """

    kind: Kind
    l: Optional[int] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.POWER:
            if self.l is None or int(self.l) != self.l or self.l < 1:
                raise ValueError(f"power family needs a positive integer l, got {self.l!r}")
            object.__setattr__(self, "l", int(self.l))
        elif self.l is not None:
            raise ValueError(f"l is only meaningful for the power family, not {self.kind.value}")
        if self.kind is Kind.GAUSS:
            sigma = 1.0 if self.sigma is None else float(self.sigma)
            if not sigma > 0:
                raise ValueError("sigma must be positive")
            object.__setattr__(self, "sigma", sigma)
        elif self.sigma is not None:
            raise ValueError("sigma is a parameter of the Gaussian law only")

    @classmethod
    def uniform(cls) -> "TermDistribution":
        return cls(Kind.UNIFORM)

    @classmethod
    def power(cls, l: int) -> "TermDistribution":
        return cls(Kind.POWER, l=l)

    @classmethod
    def sech(cls) -> "TermDistribution":
        return cls(Kind.SECH)

    @classmethod
    def gauss(cls, sigma: float = 1.0) -> "TermDistribution":
        return cls(Kind.GAUSS, sigma=sigma)

    @classmethod
    def from_name(cls, name: str, l: Optional[int] = None, sigma: Optional[float] = None):
        kind = Kind(name)
        if kind is Kind.POWER:
            return cls.power(l if l is not None else 2)
        if kind is Kind.GAUSS:
            return cls.gauss(1.0 if sigma is None else sigma)
        return cls(kind)

    @property
    def amplitude(self) -> float:
        """Normalization A = (l/pi) sin(pi/2l) of the power family."""
        if self.kind is not Kind.POWER:
            raise AttributeError("amplitude is defined for the power family only")
        return self.l / math.pi * math.sin(math.pi / (2 * self.l))

    @property
    def has_finite_variance(self) -> bool:
        return not (self.kind is Kind.POWER and self.l == 1)

    @property
    def std(self) -> float:
        return math.sqrt(variance(self))

    def label(self) -> str:
        if self.kind is Kind.POWER:
            return f"power(l={self.l})"
        if self.kind is Kind.GAUSS:
            return f"gauss(sigma={self.sigma:g})"
        return self.kind.value


def variance(dist: TermDistribution) -> float:
    """Exact variance; raises :class:`DivergentVariance` for the l = 1 power law."""
    if dist.kind is Kind.UNIFORM:
        return 1.0 / 12.0
    if dist.kind is Kind.SECH:
        return math.pi ** 2 / 4.0
    if dist.kind is Kind.GAUSS:
        return dist.sigma ** 2
    if dist.l == 1:
        raise DivergentVariance("the l = 1 power law (Cauchy) has divergent variance")
    return math.sin(math.pi / (2 * dist.l)) / math.sin(3 * math.pi / (2 * dist.l))


def pdf(dist: TermDistribution, xi):
    """Density f(xi); accepts scalars or arrays."""
    x = np.asarray(xi, dtype=float)
    if dist.kind is Kind.UNIFORM:
        out = np.where(np.abs(x) <= 0.5, 1.0, 0.0)
    elif dist.kind is Kind.POWER:
        with np.errstate(over="ignore"):
            out = dist.amplitude / (1.0 + np.abs(x) ** (2 * dist.l))
    elif dist.kind is Kind.SECH:
        # 1/cosh written with exp(-|x|) so large |x| does not overflow
        e = np.exp(-np.abs(x))
        out = 2.0 * e / (math.pi * (1.0 + e * e))
    else:
        s = dist.sigma
        out = np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))
    return out[()] if out.ndim == 0 else out


def cdf(dist: TermDistribution, t):
    """Distribution function P(xi <= t), closed form for every family."""
    x = np.asarray(t, dtype=float)
    if dist.kind is Kind.UNIFORM:
        out = np.clip(x + 0.5, 0.0, 1.0)
    elif dist.kind is Kind.POWER and dist.l == 1:
        out = 0.5 + np.arctan(x) / math.pi
    elif dist.kind is Kind.POWER:
        flat = np.ascontiguousarray(x.ravel())
        out = _kernels.power_cdf_array(flat, dist.l, dist.amplitude).reshape(x.shape)
    elif dist.kind is Kind.SECH:
        out = 2.0 / math.pi * np.arctan(np.exp(x))
    else:
        out = special.ndtr(x / dist.sigma)
    return out[()] if out.ndim == 0 else out


def _power_tail_quad(dist: TermDistribution, t: float) -> float:
    f = functools.partial(pdf, dist)
    if t >= 1.0:
        # substitute xi = t / v to map [t, inf) onto (0, 1]
        val, _ = integrate.quad(lambda v: f(t / v) * t / (v * v), 0.0, 1.0,
                                epsabs=1e-12, epsrel=1e-13, limit=200)
        return val
    head, _ = integrate.quad(f, t, 1.0, epsabs=1e-12, epsrel=1e-13, limit=200)
    return head + _power_tail_quad(dist, 1.0)


def tail_prob(dist: TermDistribution, t: float) -> float:
    """Upper tail P(xi > t).

    Closed forms are used for the uniform, Cauchy (l = 1), sech and Gaussian
    laws; the l >= 2 power family is integrated adaptively (absolute
    tolerance 1e-12).
    """
    t = float(t)
    if dist.kind is Kind.UNIFORM:
        return min(1.0, max(0.0, 0.5 - t))
    if dist.kind is Kind.SECH:
        return 2.0 / math.pi * math.atan(math.exp(-t))
    if dist.kind is Kind.GAUSS:
        return float(special.ndtr(-t / dist.sigma))
    if t < 0.0:
        return 1.0 - tail_prob(dist, -t)
    if dist.l == 1:
        return math.atan2(1.0, t) / math.pi
    return _power_tail_quad(dist, t)


def power_charfun_complex(l: int, omega, scale: float):
    """Raw pole sum for the power family at (possibly complex) omega.

    Valid as the analytic continuation from Re(omega) > 0; for real
    negative omega use evenness instead.
    """
    w = np.asarray(omega, dtype=complex) / scale
    j = np.arange(l)
    poles = np.exp(1j * math.pi * (2 * j + 1) / (2 * l))
    denom = np.exp(1j * math.pi * (2 * j + 1) * (2 * l - 1) / (2 * l))
    terms = np.exp(1j * w[..., None] * poles) / denom
    out = 1j * math.sin(math.pi / (2 * l)) * terms.sum(axis=-1)
    return out[()] if out.ndim == 0 else out


def charfun_g(dist: TermDistribution, omega, scale: float):
    """Scaled characteristic function g(omega; s), real and even.

    Raises
    ------
    NonRealCharFunction
        If the power-family pole sum leaves an imaginary part of 1e-9 or more.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    w = np.abs(np.asarray(omega, dtype=float))
    if dist.kind is Kind.UNIFORM:
        out = np.sinc(w / (2 * math.pi * scale))
    elif dist.kind is Kind.POWER and dist.l == 1:
        out = np.exp(-w / scale)
    elif dist.kind is Kind.POWER:
        raw = np.asarray(power_charfun_complex(dist.l, w, scale))
        residue = np.max(np.abs(raw.imag)) if raw.size else 0.0
        if residue >= IMAG_RESIDUE_LIMIT:
            raise NonRealCharFunction(
                f"pole sum imaginary residue {residue:.3e} for l={dist.l}")
        x = w / scale
        near = 1.0 + power_charfun_minus_one(dist.l, np.minimum(x, _POWER_SERIES_REACH))
        out = np.where(x < _POWER_SERIES_REACH, near, raw.real)
    elif dist.kind is Kind.SECH:
        y = math.pi * w / (2 * scale)
        e = np.exp(-y)
        out = 2.0 * e / (1.0 + e * e)
    else:
        out = np.exp(-0.5 * (dist.sigma * w / scale) ** 2)
    return out[()] if np.ndim(out) == 0 else out


# ln(sin t / t) = sum_n (-1)**n 2**(2n-1) B_2n t**2n / (n (2n)!), radius pi
_LOG_SINC = np.array([float((-1) ** n * mpmath.mpf(2) ** (2 * n - 1) * mpmath.bernoulli(2 * n)
                            / (n * mpmath.factorial(2 * n))) for n in range(1, 25)])
_LOG_SINC_REACH = 1.0
# below this omega/s, g - 1 for the power family comes from its Taylor series
_POWER_SERIES_REACH = 0.5
_POWER_SERIES_TERMS = 16


def _poly_even(coeffs, x2):
    acc = np.zeros_like(x2)
    for c in coeffs[::-1]:
        acc = acc * x2 + c
    return acc * x2


@functools.lru_cache(maxsize=None)
def _power_series_coeffs(l: int):
    """Coefficients c_k of g(x) - 1 = sum_k c_k x**k for the power family, x >= 0."""
    base = math.sin(math.pi / (2 * l))
    coeffs = np.zeros(2 * _POWER_SERIES_TERMS + 1)
    for p in range(1, _POWER_SERIES_TERMS + 1):
        coeffs[2 * p] += (-1) ** p * base / (math.sin(math.pi * (2 * p + 1) / (2 * l))
                                              * math.factorial(2 * p))
    q = 1
    while 2 * q * l - 1 <= 2 * _POWER_SERIES_TERMS:
        k = 2 * q * l - 1
        coeffs[k] += l * base * (-1) ** (q - 1 + q * l) / math.factorial(k)
        q += 1
    return coeffs


def power_charfun_minus_one(l: int, x):
    """g(x) - 1 for the power family at small x = |omega| / s, to full relative precision."""
    x = np.asarray(x, dtype=float)
    coeffs = _power_series_coeffs(l)
    acc = np.zeros_like(x)
    for c in coeffs[:0:-1]:
        acc = (acc + c) * x
    return acc


def log_abs_charfun(dist: TermDistribution, omega, scale: float):
    """ln|g(omega; s)| without the cancellation of ``log(g)`` near omega = 0."""
    w = np.abs(np.asarray(omega, dtype=float))
    if dist.kind is Kind.UNIFORM:
        theta = w / (2 * scale)
        small = theta < _LOG_SINC_REACH
        series = _poly_even(_LOG_SINC, np.minimum(theta, _LOG_SINC_REACH) ** 2)
        with np.errstate(divide="ignore"):
            direct = np.log(np.abs(np.sinc(theta / math.pi)))
        out = np.where(small, series, direct)
    elif dist.kind is Kind.POWER and dist.l == 1:
        out = -w / scale
    elif dist.kind is Kind.POWER:
        x = w / scale
        small = x < _POWER_SERIES_REACH
        near = np.log1p(power_charfun_minus_one(dist.l, np.minimum(x, _POWER_SERIES_REACH)))
        g = np.asarray(charfun_g(dist, w, scale))
        with np.errstate(divide="ignore", invalid="ignore"):
            far = np.where(g > 0.5, np.log1p(g - 1.0), np.log(np.abs(g)))
        out = np.where(small, near, far)
    elif dist.kind is Kind.SECH:
        y = math.pi * w / (2 * scale)
        # ln cosh y = y + log1p(exp(-2y)) - ln 2, or log1p(2 sinh^2(y/2)) when small
        out = np.where(y < 1.0,
                       -np.log1p(2.0 * np.sinh(0.5 * y) ** 2),
                       -(y + np.log1p(np.exp(-2.0 * y)) - math.log(2.0)))
    else:
        out = -0.5 * (dist.sigma * w / scale) ** 2
    return out[()] if np.ndim(out) == 0 else out


def charfun_envelope(dist: TermDistribution, omega, scale: float):
    """Nonincreasing upper bound on |g(omega; s)| for omega >= 0.

    Used only to place the truncation point of the inversion integral.
    """
    w = np.abs(np.asarray(omega, dtype=float))
    if dist.kind is Kind.UNIFORM:
        with np.errstate(divide="ignore"):
            out = np.minimum(1.0, 2 * scale / w)
    elif dist.kind is Kind.POWER and dist.l > 1:
        l = dist.l
        heights = np.sin(math.pi * (2 * np.arange(l) + 1) / (2 * l))
        out = math.sin(math.pi / (2 * l)) * np.exp(-np.multiply.outer(w / scale, heights)).sum(-1)
        out = np.minimum(1.0, out)
    else:
        out = np.abs(charfun_g(dist, w, scale))
    return out[()] if np.ndim(out) == 0 else out


def charfun_by_quadrature(dist: TermDistribution, omega: float, scale: float) -> float:
    """Direct numerical integral of E[cos(omega xi / s)]; oracle for :func:`charfun_g`."""
    k = abs(float(omega)) / scale
    f = functools.partial(pdf, dist)
    if k == 0.0:
        return 1.0
    if dist.kind is Kind.UNIFORM:
        val, _ = integrate.quad(f, 0.0, 0.5, weight="cos", wvar=k, epsabs=1e-14)
        return 2.0 * val
    val, _ = integrate.quad(f, 0.0, np.inf, weight="cos", wvar=k, epsabs=1e-14, limlst=200)
    return 2.0 * val


@functools.lru_cache(maxsize=None)
def _power_tables(l: int):
    dist = TermDistribution.power(l)
    return _kernels.build_tables(l, dist.amplitude)


def power_kernel_args(dist: TermDistribution):
    """Arguments passed to the compiled power-family quantile kernels."""
    return (dist.l, dist.amplitude) + _power_tables(dist.l)


def quantile(dist: TermDistribution, u):
    """Inverse distribution function, vectorized over ``u`` in (0, 1)."""
    x = np.asarray(u, dtype=float)
    if dist.kind is Kind.UNIFORM:
        out = x - 0.5
    elif dist.kind is Kind.POWER and dist.l == 1:
        out = np.tan(math.pi * (x - 0.5))
    elif dist.kind is Kind.POWER:
        flat = np.ascontiguousarray(x.ravel())
        out = _kernels.power_quantile_array(flat, *power_kernel_args(dist)).reshape(x.shape)
    elif dist.kind is Kind.SECH:
        # x = ln tan(pi u / 2); near the median the atanh form is exactly odd about u = 1/2,
        # and each outer branch works with the small one of u, 1 - u
        mid = np.abs(x - 0.5) < 0.25
        with np.errstate(divide="ignore", invalid="ignore"):
            centre = 2.0 * np.arctanh(np.tan(0.5 * math.pi * (x - 0.5)))
            lower = np.log(np.tan(0.5 * math.pi * x))
            upper = -np.log(np.tan(0.5 * math.pi * (1.0 - x)))
        out = np.where(mid, centre, np.where(x < 0.5, lower, upper))
    else:
        out = dist.sigma * special.ndtri(x)
    return out[()] if out.ndim == 0 else out


_U_FLOOR = 2.0 ** -54


def open_uniform(rng: np.random.Generator, size=None):
    """Uniforms on the open interval (0, 1); an exact 0 is moved to 2**-54."""
    u = rng.random(size)
    if size is None:
        return u if u > 0.0 else _U_FLOOR
    u[u == 0.0] = _U_FLOOR
    return u


def sample_array(dist: TermDistribution, rng: np.random.Generator, size) -> np.ndarray:
    """Draw ``size`` variates by inverse-CDF transform of open uniforms."""
    return np.asarray(quantile(dist, open_uniform(rng, size)))


def sample(dist: TermDistribution, rng: np.random.Generator) -> float:
    """One draw from ``dist``; only ``rng`` is mutated."""
    return float(quantile(dist, open_uniform(rng)))
