import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from sumtails import DivergentVariance, TermDistribution, cdf, charfun_g, pdf, quantile, tail_prob, variance
from sumtails.distributions import NonRealCharFunction, log_abs_charfun, sample, sample_array

CATALOG = [
    TermDistribution.uniform(),
    TermDistribution.power(1),
    TermDistribution.power(2),
    TermDistribution.power(3),
    TermDistribution.power(5),
    TermDistribution.sech(),
    TermDistribution.gauss(1.0),
    TermDistribution.gauss(2.5),
]
FINITE = [d for d in CATALOG if d.has_finite_variance]


def ids(dists):
    return [d.label() for d in dists]


def quad_charfun(dist, k):
    """E[cos(k xi)] by direct quadrature of the density, independent of the package."""
    f = lambda x: float(pdf(dist, x))
    if dist.kind.value == "uniform":
        return math.sin(k / 2) / (k / 2) if k else 1.0
    if k == 0:
        return 1.0
    if dist.kind.value == "gauss":
        val, _ = integrate.quad(f, 0, 40 * dist.sigma, weight="cos", wvar=k, epsabs=1e-15, limit=500)
        return 2 * val
    val, _ = integrate.quad(f, 0, np.inf, weight="cos", wvar=k, limlst=200, epsabs=1e-15)
    return 2 * val


# ---- pdf ----------------------------------------------------------------------

@pytest.mark.parametrize("dist, xi, expected", [
    (TermDistribution.uniform(), 0.25, 1.0),
    (TermDistribution.uniform(), 0.75, 0.0),
    (TermDistribution.power(2), 0.0, 2 / math.pi * math.sin(math.pi / 4)),
    (TermDistribution.sech(), 1.0, 1 / (math.pi * math.cosh(1.0))),
])
def test_pdf_examples(dist, xi, expected):
    assert pdf(dist, xi) == pytest.approx(expected, rel=1e-15, abs=0)


def test_pdf_example_values_rounded():
    assert round(pdf(TermDistribution.power(2), 0.0), 6) == 0.450158
    assert round(pdf(TermDistribution.sech(), 1.0), 6) == 0.206282


@pytest.mark.parametrize("dist", CATALOG, ids=ids(CATALOG))
def test_pdf_integrates_to_one(dist):
    # T chosen so the two-sided mass beyond it is below 1e-12
    t = 1.0
    while 2 * tail_prob(dist, t) >= 1e-12:
        t *= 2
    edges = np.concatenate([[0.0], np.geomspace(1e-2, t, 60)])
    total = sum(integrate.quad(lambda x: float(pdf(dist, x)), a, b, epsabs=1e-15, epsrel=1e-13,
                               limit=200)[0] for a, b in zip(edges[:-1], edges[1:]))
    assert abs(2 * total - 1) < 1e-9


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-1e6, 1e6), idx=st.integers(0, len(CATALOG) - 1))
def test_pdf_even_and_nonnegative(x, idx):
    dist = CATALOG[idx]
    assert pdf(dist, x) >= 0
    assert pdf(dist, x) == pdf(dist, -x)


# ---- variance -----------------------------------------------------------------

@pytest.mark.parametrize("dist, expected", [
    (TermDistribution.uniform(), 1 / 12),
    (TermDistribution.power(2), 1.0),
    (TermDistribution.sech(), math.pi ** 2 / 4),
    (TermDistribution.gauss(2.5), 6.25),
])
def test_variance_examples(dist, expected):
    assert variance(dist) == pytest.approx(expected, rel=1e-14)


def test_variance_divergent_for_cauchy():
    with pytest.raises(DivergentVariance):
        variance(TermDistribution.power(1))


@pytest.mark.parametrize("l", [2, 3, 4, 5, 8])
def test_power_variance_matches_second_moment(l):
    dist = TermDistribution.power(l)
    with mpmath.workdps(30):
        a = mpmath.mpf(l) / mpmath.pi * mpmath.sin(mpmath.pi / (2 * l))
        m2 = 2 * mpmath.quad(lambda x: x * x * a / (1 + x ** (2 * l)), [0, 1, mpmath.inf])
    assert variance(dist) == pytest.approx(float(m2), rel=1e-12)


def test_sech_variance_matches_second_moment():
    m2, _ = integrate.quad(lambda x: x * x / (math.pi * math.cosh(x)), -60, 60, epsabs=1e-14)
    assert variance(TermDistribution.sech()) == pytest.approx(m2, rel=1e-12)


# ---- tail_prob ----------------------------------------------------------------

@pytest.mark.parametrize("dist, t, expected", [
    (TermDistribution.uniform(), 0.25, 0.25),
    (TermDistribution.power(1), 1.0, 0.25),
    (TermDistribution.sech(), 0.0, 0.5),
])
def test_tail_prob_examples(dist, t, expected):
    assert tail_prob(dist, t) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("l", [2, 3, 5])
@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5, 10.0, 100.0, 1e4])
def test_power_tail_prob_against_mpmath(l, t):
    with mpmath.workdps(30):
        a = mpmath.mpf(l) / mpmath.pi * mpmath.sin(mpmath.pi / (2 * l))
        ref = mpmath.quad(lambda x: a / (1 + x ** (2 * l)), [t, t + 1, mpmath.inf])
    assert abs(tail_prob(TermDistribution.power(l), t) - float(ref)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(t=st.floats(-50, 50), idx=st.integers(0, len(CATALOG) - 1))
def test_tail_prob_symmetry_and_cdf(t, idx):
    dist = CATALOG[idx]
    assert 0.0 <= tail_prob(dist, t) <= 1.0
    assert tail_prob(dist, t) + tail_prob(dist, -t) == pytest.approx(1.0, abs=1e-12)
    assert float(cdf(dist, t)) == pytest.approx(1.0 - tail_prob(dist, t), abs=1e-12)


# ---- characteristic function --------------------------------------------------

def test_charfun_uniform_at_pi_s():
    s = 3.7
    assert charfun_g(TermDistribution.uniform(), math.pi * s, s) == pytest.approx(2 / math.pi, rel=1e-14)


def test_charfun_sech_closed_form():
    # with s = (pi/2) sqrt(N), g = 1 / cosh(omega / sqrt(N))
    n = 9
    s = math.pi / 2 * math.sqrt(n)
    dist = TermDistribution.sech()
    assert charfun_g(dist, math.sqrt(n), s) == pytest.approx(1 / math.cosh(1.0), rel=1e-14)
    assert charfun_g(dist, s, s) == pytest.approx(1 / math.cosh(math.pi / 2), rel=1e-14)


def test_charfun_cauchy_at_scale():
    assert charfun_g(TermDistribution.power(1), 5.0, 5.0) == pytest.approx(math.exp(-1), rel=1e-15)


def test_charfun_power2_against_quadrature():
    s = 4.0
    got = charfun_g(TermDistribution.power(2), 0.5 * s, s)
    assert abs(got - quad_charfun(TermDistribution.power(2), 0.5)) < 1e-10


@pytest.mark.parametrize("dist", [TermDistribution.uniform(), TermDistribution.power(1),
                                  TermDistribution.power(2), TermDistribution.power(3),
                                  TermDistribution.sech(), TermDistribution.gauss(1.3)],
                         ids=lambda d: d.label())
def test_charfun_matches_quadrature_on_grid(dist):
    for k in np.linspace(0.0, 20.0, 41):
        assert abs(charfun_g(dist, k, 1.0) - quad_charfun(dist, k)) < 1e-9, k


@pytest.mark.parametrize("dist", CATALOG, ids=ids(CATALOG))
def test_charfun_bounded_even_and_one_at_origin(dist):
    rng = np.random.default_rng(11)
    w = rng.normal(scale=30.0, size=1000)
    g = charfun_g(dist, w, 2.0)
    assert np.all(np.abs(g) <= 1 + 1e-12)
    assert np.array_equal(g, charfun_g(dist, -w, 2.0))
    assert charfun_g(dist, 0.0, 2.0) == 1.0


@pytest.mark.parametrize("dist", FINITE, ids=ids(FINITE))
def test_small_argument_expansion(dist):
    n = 50
    s = dist.std * math.sqrt(n)
    x = np.geomspace(1e-4, 0.1, 30)
    omega = x * math.sqrt(n)
    r = charfun_g(dist, omega, s) - (1 - omega ** 2 / (2 * n))
    ratio = np.abs(r) / x ** 3
    # bounded and not blowing up as x -> 0, ignoring rounding at the smallest x
    assert np.max(ratio[x > 1e-3]) < 1.0


@pytest.mark.parametrize("dist", CATALOG, ids=ids(CATALOG))
def test_log_abs_charfun_consistent(dist):
    w = np.linspace(0.01, 15.0, 300)
    g = np.abs(charfun_g(dist, w, 1.5))
    mask = g > 1e-200
    assert np.allclose(log_abs_charfun(dist, w, 1.5)[mask], np.log(g[mask]), rtol=1e-10, atol=1e-13)


@pytest.mark.parametrize("l", [2, 3])
def test_log_abs_charfun_full_precision_near_origin(l):
    dist = TermDistribution.power(l)
    for x in (1e-4, 1e-2, 0.2, 0.45):
        with mpmath.workdps(40):
            tot = mpmath.mpc(0)
            for j in range(l):
                pole = mpmath.exp(1j * mpmath.pi * (2 * j + 1) / (2 * l))
                tot += mpmath.exp(1j * x * pole) / mpmath.exp(1j * mpmath.pi * (2 * j + 1) * (2 * l - 1) / (2 * l))
            ref = float(mpmath.log((1j * mpmath.sin(mpmath.pi / (2 * l)) * tot).real))
        assert float(log_abs_charfun(dist, x, 1.0)) == pytest.approx(ref, rel=1e-14)


def test_nonreal_charfun_is_an_error_type():
    assert issubclass(NonRealCharFunction, Exception)


# ---- sampling -----------------------------------------------------------------

def test_quantile_examples():
    assert quantile(TermDistribution.power(1), 0.75) == pytest.approx(1.0, rel=1e-15)
    assert quantile(TermDistribution.sech(), 0.5) == 0.0


def test_sech_quantile_inverts_cdf_in_both_tails():
    dist = TermDistribution.sech()
    u = np.array([1e-15, 1e-9, 0.1, 0.3, 0.7, 0.9, 1 - 1e-9])
    x = quantile(dist, u)
    with mpmath.workdps(40):
        ref = [float(mpmath.log(mpmath.tan(mpmath.pi * mpmath.mpf(ui) / 2))) for ui in u]
    assert np.allclose(x, ref, rtol=1e-13, atol=0)


def test_uniform_draws_in_support():
    x = sample_array(TermDistribution.uniform(), np.random.default_rng(3), 100_000)
    assert np.all(np.abs(x) <= 0.5)


@pytest.mark.parametrize("l", [2, 3, 5, 8])
def test_power_quantile_inverts_cdf(l):
    dist = TermDistribution.power(l)
    u = np.concatenate([np.linspace(1e-6, 1 - 1e-6, 2001), [1e-12, 1e-9, 1 - 1e-9, 0.5]])
    x = quantile(dist, u)
    with mpmath.workdps(30):
        a = mpmath.mpf(l) / mpmath.pi * mpmath.sin(mpmath.pi / (2 * l))
        for ui, xi in zip(u[::97], x[::97]):
            target = mpmath.mpf(min(ui, 1 - ui))
            root = mpmath.findroot(
                lambda t: mpmath.quad(lambda v: a / (1 + v ** (2 * l)), [t, mpmath.inf]) - target,
                abs(float(xi)) + 0.1)
            ref = float(root) * (1 if ui >= 0.5 else -1)
            assert abs(xi - ref) <= 1e-12 * max(1.0, abs(ref)), (ui, xi, ref)


@pytest.mark.parametrize("dist", CATALOG, ids=ids(CATALOG))
def test_sampler_kolmogorov_smirnov(dist):
    x = sample_array(dist, np.random.default_rng(20240917), 100_000)
    result = stats.kstest(x, lambda t: np.asarray(cdf(dist, t), dtype=float))
    assert result.pvalue > 0.01


def test_sample_scalar_reproducible():
    dist = TermDistribution.power(3)
    a = [sample(dist, np.random.default_rng(5)) for _ in range(3)]
    assert a[0] == a[1] == a[2]
    assert isinstance(a[0], float)


def test_invalid_constructors():
    with pytest.raises(ValueError):
        TermDistribution.power(0)
    with pytest.raises(ValueError):
        TermDistribution.gauss(-1.0)
    with pytest.raises(ValueError):
        charfun_g(TermDistribution.sech(), 1.0, 0.0)
