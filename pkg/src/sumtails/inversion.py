"""Exact finite-N density of a normalized sum by characteristic-function inversion.

For even terms the characteristic function of the normalized sum is the real
even function g(omega; s)**N, so

    p_N(z) = (1/pi) int_0^inf g(omega; s)**N cos(omega z) d omega.

The half line is cut at the truncation point Omega and split into panels no
wider than a quarter cosine period; each panel is integrated with a 21-point
Gauss-Kronrod rule and bisected until the summed error estimate meets the
tolerance.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np
from scipy import integrate

from .distributions import (Kind, TermDistribution, charfun_envelope, charfun_g,
                            log_abs_charfun, variance)
from .errors import QuadratureFailure

# QUADPACK qk21 abscissae and weights; the even-indexed abscissae are the
# 10-point Gauss-Legendre nodes.
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208980221709, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338])

KRONROD_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]

_EPS = np.finfo(float).eps
# largest omega/(2s) integrated numerically for uniform terms; the rest is analytic
_UNIFORM_CYCLES = 1000.0
_DEEP_TAIL = 1e-300


@dataclass(frozen=True)
class SumSpec:
    """A term law, the number of terms N and the normalizing scale s.

    ``scale`` is derived: sigma * sqrt(N) for finite variance, N for the
    l = 1 power law.
    """

    distribution: TermDistribution
    n_terms: int
    scale: float = field(init=False)

    def __post_init__(self):
        if int(self.n_terms) != self.n_terms or self.n_terms < 1:
            raise ValueError(f"n_terms must be a positive integer, got {self.n_terms!r}")
        object.__setattr__(self, "n_terms", int(self.n_terms))
        if self.distribution.has_finite_variance:
            s = math.sqrt(variance(self.distribution) * self.n_terms)
        else:
            s = float(self.n_terms)
        object.__setattr__(self, "scale", s)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    log_cutoff: float = -40.0
    max_panels: int = 10 ** 6

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if not self.log_cutoff < 0:
            raise ValueError("log_cutoff must be negative")
        if self.max_panels < 1:
            raise ValueError("max_panels must be positive")


@dataclass(frozen=True)
class InversionResult:
    """Value of one inversion integral with its diagnostics."""

    value: float
    error_estimate: float
    omega_max: float
    n_panels: int
    roundoff_floor: float
    below_resolution: bool = False
    underflow: bool = False


def g_power(g_value, n_terms: int):
    """[g]**N as sign(g)**N * |g|**N.

    The magnitude goes through ``pow``, which works in log space internally,
    so large N underflows cleanly to +0 instead of producing a wrong sign.
    """
    g = np.asarray(g_value, dtype=float)
    with np.errstate(under="ignore"):
        mag = np.power(np.abs(g), n_terms)
    sign = np.where(g < 0, -1.0 if n_terms % 2 else 1.0, 1.0)
    out = sign * mag
    return out[()] if out.ndim == 0 else out


def _powered_charfun(spec: SumSpec, omega):
    dist, n, s = spec.distribution, spec.n_terms, spec.scale
    logabs = log_abs_charfun(dist, omega, s)
    mag = np.exp(n * logabs)
    if dist.kind is Kind.UNIFORM or (dist.kind is Kind.POWER and dist.l > 1):
        if n % 2:
            mag = np.where(charfun_g(dist, omega, s) < 0, -mag, mag)
    return mag


def truncation_point(spec: SumSpec, cfg: QuadratureConfig) -> float:
    """Smallest omega where N ln(envelope of |g|) drops below ``log_cutoff``."""
    dist, n, s = spec.distribution, spec.n_terms, spec.scale

    def below(w):
        with np.errstate(divide="ignore"):
            return n * math.log(float(charfun_envelope(dist, w, s))) < cfg.log_cutoff

    if dist.kind is Kind.UNIFORM:
        return 2.0 * s * math.exp(-cfg.log_cutoff / n)
    hi = s
    while not below(hi):
        hi *= 2.0
    lo = hi / 2.0 if hi > s else 0.0
    while hi - lo > 1e-6 * hi:
        mid = 0.5 * (lo + hi)
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _exp_integral_tail(m: int, beta, omega):
    # int_omega^inf exp(i beta w) w**(-m) dw, as an mpmath complex
    if beta == 0:
        return mpmath.mpf(0) if m == 1 else omega ** (1 - m) / (m - 1)
    return omega ** (1 - m) * mpmath.expint(m, -1j * beta * omega)


def _uniform_remainder(n: int, s: float, z: float, omega: float, kernel: str) -> float:
    """Exact int_omega^inf g**N k(omega z) d omega for uniform terms.

    ``kernel`` is ``"cos"`` (density, k = cos) or ``"sinc"`` (tail
    probability, k = sin(omega z)/omega).
    """
    with mpmath.workdps(30):
        a = mpmath.mpf(1) / (2 * mpmath.mpf(s))
        zz = mpmath.mpf(z)
        om = mpmath.mpf(omega)
        m = n if kernel == "cos" else n + 1
        total = mpmath.mpc(0)
        for k in range(n + 1):
            c = mpmath.binomial(n, k) * (-1) ** k
            b = (n - 2 * k) * a
            if kernel == "cos":
                total += c * (_exp_integral_tail(m, b + zz, om) + _exp_integral_tail(m, b - zz, om)) / 2
            else:
                total += c * (_exp_integral_tail(m, b + zz, om) - _exp_integral_tail(m, b - zz, om)) / 2j
        total *= (2 * mpmath.mpf(s)) ** n / (2j) ** n
        return float(total.real)


def _integrate(fun, omega_max: float, width: float, cfg: QuadratureConfig, phase_rate: float):
    """Adaptive panel quadrature of ``fun`` on [0, omega_max].

    ``phase_rate`` bounds d(phase)/d(omega) of the trigonometric factors in
    the integrand; rounding in those phases grows like eps * omega *
    phase_rate and sets the noise floor below which a panel is accepted.

    Returns (integral, error estimate, panel count, roundoff floor).
    """
    n0 = max(1, int(math.ceil(omega_max / width)))
    if n0 > cfg.max_panels:
        raise QuadratureFailure(f"{n0} initial panels exceed the budget {cfg.max_panels}")
    edges = np.linspace(0.0, omega_max, n0 + 1)
    a, b = edges[:-1], edges[1:]
    accepted, accepted_err, accepted_abs = [], [], []
    panels = n0
    while True:
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        nodes = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
        vals = fun(nodes)
        kron = half * (vals @ KRONROD_WEIGHTS)
        gauss = half * (vals @ GAUSS_WEIGHTS)
        absint = half * (np.abs(vals) @ KRONROD_WEIGHTS)
        err = np.abs(kron - gauss)
        floor = _EPS * absint * (50.0 + b * phase_rate)
        estimate = math.fsum(accepted) + math.fsum(kron)
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(estimate))
        share = tol * (b - a) / omega_max
        ok = (err <= share) | (err <= floor)
        accepted.extend(kron[ok])
        accepted_err.extend(np.maximum(err[ok] - floor[ok], 0.0))
        accepted_abs.extend(absint[ok])
        if ok.all():
            break
        a, b = a[~ok], b[~ok]
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        panels += a.size // 2
        if panels > cfg.max_panels:
            raise QuadratureFailure(
                f"panel budget {cfg.max_panels} exhausted",
                error_estimate=math.fsum(accepted_err) + float(np.sum(err[~ok])))
    total = math.fsum(accepted)
    floor = _EPS * math.fsum(accepted_abs) * (50.0 + omega_max * phase_rate)
    return total, math.fsum(accepted_err), panels, floor


def _panel_width(spec: SumSpec, z: float) -> float:
    return min(math.pi / (2.0 * max(abs(z), 1.0)), spec.scale)


def _phase_rate(spec: SumSpec, z: float) -> float:
    return abs(z) + spec.n_terms / spec.scale


def invert_density(spec: SumSpec, z: float, cfg: Optional[QuadratureConfig] = None) -> InversionResult:
    """Density p_N(z) with diagnostics; see :func:`density_at`."""
    cfg = cfg or QuadratureConfig()
    z = float(z)
    dist, n, s = spec.distribution, spec.n_terms, spec.scale
    omega_max = truncation_point(spec, cfg)
    remainder = 0.0
    if dist.kind is Kind.UNIFORM and omega_max > 2.0 * s * _UNIFORM_CYCLES:
        omega_max = 2.0 * s * _UNIFORM_CYCLES
        remainder = _uniform_remainder(n, s, z, omega_max, "cos")

    def integrand(w):
        return _powered_charfun(spec, w) * np.cos(w * z)

    raw, err, panels, floor = _integrate(integrand, omega_max, _panel_width(spec, z), cfg, _phase_rate(spec, z))
    value = (raw + remainder) / math.pi
    err /= math.pi
    floor /= math.pi
    noise = max(cfg.abs_tol, floor)
    if value < 0.0:
        if -value > noise:
            raise QuadratureFailure(
                f"negative density {value:.3e} at z={z} beyond noise level {noise:.1e}",
                error_estimate=err, z=z)
        value = 0.0
    underflow = 0.0 < value < _DEEP_TAIL
    if underflow:
        value = 0.0
    return InversionResult(value=value, error_estimate=err, omega_max=omega_max,
                           n_panels=panels, roundoff_floor=floor,
                           below_resolution=value < 10.0 * floor, underflow=underflow)


def density_at(spec: SumSpec, z: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """Exact density of the normalized sum z = x / s at one point.

    Parameters
    ----------
    spec : SumSpec
        Term law and number of terms.
    z : float
        Evaluation point.
    cfg : QuadratureConfig, optional
        Tolerances and truncation rule.

    Raises
    ------
    QuadratureFailure
        Panel budget exhausted, or a negative result beyond the noise level.
    """
    return invert_density(spec, z, cfg).value


def tail_at(spec: SumSpec, z: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """P(Z > z) from the sine-kernel form of the inverted density.

    P(Z > z) = 1/2 - (1/pi) int_0^inf g**N sin(omega z) / omega d omega.
    """
    cfg = cfg or QuadratureConfig()
    z = float(z)
    if z == 0.0:
        return 0.5
    dist, n, s = spec.distribution, spec.n_terms, spec.scale
    omega_max = truncation_point(spec, cfg)
    remainder = 0.0
    if dist.kind is Kind.UNIFORM and omega_max > 2.0 * s * _UNIFORM_CYCLES:
        omega_max = 2.0 * s * _UNIFORM_CYCLES
        remainder = _uniform_remainder(n, s, z, omega_max, "sinc")

    def integrand(w):
        return _powered_charfun(spec, w) * z * np.sinc(w * z / math.pi)

    raw, _, _, _ = _integrate(integrand, omega_max, _panel_width(spec, z), cfg, _phase_rate(spec, z))
    return min(1.0, max(0.0, 0.5 - (raw + remainder) / math.pi))


@dataclass
class DensityTable:
    """Density values on a grid with Gaussian and asymptote reference columns."""

    z_grid: np.ndarray
    p_numeric: np.ndarray
    p_gauss: np.ndarray
    p_asymptote: Optional[np.ndarray]
    spec: SumSpec
    config: QuadratureConfig
    error_estimates: np.ndarray = None
    asymptote_kind: Optional[str] = None

    def trapezoid_mass(self) -> float:
        return float(integrate.trapezoid(self.p_numeric, self.z_grid))

    def max_asymmetry(self) -> float:
        """Largest |p(z) - p(-z)| over grid points whose mirror is also on the grid."""
        z = self.z_grid
        mirror = np.searchsorted(z, -z)
        mirror = np.clip(mirror, 0, z.size - 1)
        paired = np.isclose(z[mirror], -z, rtol=0, atol=1e-12)
        if not paired.any():
            return 0.0
        return float(np.max(np.abs(self.p_numeric[paired] - self.p_numeric[mirror[paired]])))

    def max_error_estimate(self) -> float:
        return float(np.max(self.error_estimates)) if self.error_estimates is not None else float("nan")


def density_grid(spec: SumSpec, z_grid, cfg: Optional[QuadratureConfig] = None,
                 workers: int = 1) -> DensityTable:
    """Evaluate :func:`density_at` on a strictly ascending grid.

    Points are independent; ``workers > 1`` spreads them over threads without
    changing any value.
    """
    from .asymptotics import gaussian_density, tail_model_for

    cfg = cfg or QuadratureConfig()
    z = np.asarray(z_grid, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("z_grid must be a nonempty 1-d sequence")
    if np.any(np.diff(z) <= 0):
        raise ValueError("z_grid must be strictly ascending")

    def one(zi):
        try:
            return invert_density(spec, zi, cfg)
        except QuadratureFailure as exc:
            exc.z = float(zi)
            raise

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, z))
    else:
        results = [one(zi) for zi in z]
    model = tail_model_for(spec)
    return DensityTable(
        z_grid=z,
        p_numeric=np.array([r.value for r in results]),
        p_gauss=np.asarray(gaussian_density(z), dtype=float),
        p_asymptote=None if model is None else model.evaluate(z),
        spec=spec,
        config=cfg,
        error_estimates=np.array([r.error_estimate for r in results]),
        asymptote_kind=None if model is None else model.kind.value,
    )
