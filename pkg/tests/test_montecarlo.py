import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sumtails import (GridTooNarrow, PrecisionGuard, SumSpec, TermDistribution, convolution_oracle,
                      density_grid, empirical_tail, irwin_hall_density, pdf, sample_sum, tail_at,
                      tail_prob)
from sumtails.montecarlo import LOW_STATISTICS, block_rng, empirical_tails


def irwin_hall_textbook(n, x):
    """Standard Irwin-Hall density on [0, n] shifted to [-n/2, n/2], in exact rationals."""
    y = Fraction(x) + Fraction(n, 2)
    if not 0 < y < n:
        return 0.0
    total = sum((-1) ** k * math.comb(n, k) * (y - k) ** (n - 1) for k in range(int(y) + 1))
    return float(total / math.factorial(n - 1))


# ---- sample_sum ---------------------------------------------------------------

def test_uniform_sums_stay_in_support():
    batch = sample_sum(SumSpec(TermDistribution.uniform(), 10), 200_000, seed=1)
    assert np.max(np.abs(batch.values)) <= math.sqrt(30)


@pytest.mark.parametrize("dist", [TermDistribution.uniform(), TermDistribution.power(2),
                                  TermDistribution.power(3), TermDistribution.sech(),
                                  TermDistribution.gauss(0.3)], ids=lambda d: d.label())
def test_sample_mean_near_zero(dist):
    count = 200_000
    batch = sample_sum(SumSpec(dist, 7), count, seed=11)
    assert abs(batch.values.mean()) < 4 / math.sqrt(count)


def test_unit_variance_after_normalization():
    batch = sample_sum(SumSpec(TermDistribution.sech(), 9), 400_000, seed=5)
    assert batch.values.var() == pytest.approx(1.0, abs=0.01)


def test_cauchy_sum_ks_against_arctan_cdf():
    batch = sample_sum(SumSpec(TermDistribution.power(1), 10), 10 ** 5, seed=2024)
    d, _ = stats.kstest(batch.values, lambda z: np.arctan(z) / np.pi + 0.5)
    critical = 1.628 / math.sqrt(10 ** 5)
    assert d < critical


def test_batch_is_independent_of_worker_count():
    spec = SumSpec(TermDistribution.power(2), 30)
    one = sample_sum(spec, 300_000, seed=99, block_size=2 ** 14, workers=1)
    four = sample_sum(spec, 300_000, seed=99, block_size=2 ** 14, workers=4)
    assert one.values.tobytes() == four.values.tobytes()


def test_batch_is_reproducible_and_seed_sensitive():
    spec = SumSpec(TermDistribution.uniform(), 4)
    a = sample_sum(spec, 1000, seed=7)
    b = sample_sum(spec, 1000, seed=7)
    c = sample_sum(spec, 1000, seed=8)
    assert a.values.tobytes() == b.values.tobytes()
    assert not np.array_equal(a.values, c.values)


def test_prefix_property_within_block_structure():
    spec = SumSpec(TermDistribution.sech(), 3)
    short = sample_sum(spec, 2 ** 10, seed=3, block_size=2 ** 10)
    long = sample_sum(spec, 2 ** 12, seed=3, block_size=2 ** 10)
    assert np.array_equal(short.values, long.values[:2 ** 10])


def test_block_streams_differ():
    a = block_rng(5, 0).random(4)
    b = block_rng(5, 1).random(4)
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("bad", [dict(count=0, seed=1), dict(count=10, seed=-1),
                                 dict(count=10, seed=2 ** 64), dict(count=2.5, seed=1)])
def test_sample_sum_rejects_bad_arguments(bad):
    with pytest.raises(ValueError):
        sample_sum(SumSpec(TermDistribution.uniform(), 2), **bad)


# ---- empirical_tail -----------------------------------------------------------

def test_symmetric_tail_at_zero():
    batch = sample_sum(SumSpec(TermDistribution.power(3), 5), 200_000, seed=17)
    est = empirical_tail(batch, 0.0)
    assert abs(est.estimate - 0.5) < 4 * est.stderr


def test_tail_beyond_all_samples_is_low_statistics():
    batch = sample_sum(SumSpec(TermDistribution.uniform(), 3), 1000, seed=4)
    est = empirical_tail(batch, 100.0)
    assert est.estimate == 0.0 and est.exceedances == 0 and est.stderr == 0.0
    assert est.low_statistics
    assert LOW_STATISTICS > 0


def test_tail_estimate_binomial_error():
    batch = sample_sum(SumSpec(TermDistribution.gauss(), 2), 50_000, seed=6)
    est = empirical_tail(batch, 1.0)
    assert est.stderr == pytest.approx(math.sqrt(est.estimate * (1 - est.estimate) / est.count), rel=1e-15)
    assert est.exceedances == int(np.sum(batch.values > 1.0))


def test_heavy_tail_single_jump_law():
    n, count = 100, 2_000_000
    dist = TermDistribution.power(2)
    spec = SumSpec(dist, n)
    batch = sample_sum(spec, count, seed=31)
    z = 6.0
    expected = n * tail_prob(dist, spec.scale * z)
    assert count * expected >= 100
    est = empirical_tail(batch, z)
    assert abs(est.estimate - expected) < 4 * est.stderr
    assert abs(est.estimate - tail_at(spec, z)) < 4 * est.stderr


def test_mc_tail_agrees_with_inversion_tail():
    spec = SumSpec(TermDistribution.sech(), 6)
    batch = sample_sum(spec, 1_000_000, seed=12)
    for est in empirical_tails(batch, [0.5, 1.5, 2.5, 3.5]):
        assert abs(est.estimate - tail_at(spec, est.threshold)) < 4 * est.stderr


def test_empirical_tails_match_single_calls():
    batch = sample_sum(SumSpec(TermDistribution.uniform(), 5), 5000, seed=9)
    many = empirical_tails(batch, [-1.0, 0.0, 1.0])
    assert [m.estimate for m in many] == [empirical_tail(batch, z).estimate for z in (-1.0, 0.0, 1.0)]


@settings(max_examples=30, deadline=None)
@given(z=st.floats(-5, 5))
def test_tail_estimate_in_unit_interval(z):
    batch = sample_sum(SumSpec(TermDistribution.power(2), 4), 2000, seed=21)
    est = empirical_tail(batch, z)
    assert 0.0 <= est.estimate <= 1.0


# ---- irwin_hall_density -------------------------------------------------------

@pytest.mark.parametrize("n, x, expected", [(1, 0.0, 1.0), (2, 0.0, 1.0), (3, 0.0, 0.75)])
def test_irwin_hall_examples(n, x, expected):
    assert irwin_hall_density(n, x) == expected


def test_irwin_hall_vanishes_outside():
    assert irwin_hall_density(4, 2.0) == 0.0
    assert irwin_hall_density(4, -2.5) == 0.0


@pytest.mark.parametrize("n", [3, 7, 20, 30])
def test_irwin_hall_matches_textbook(n):
    xs = np.linspace(-n / 2, n / 2, 17)
    got = irwin_hall_density(n, xs)
    ref = [irwin_hall_textbook(n, x) for x in xs]
    assert np.array_equal(got, ref)


def test_irwin_hall_guard():
    with pytest.raises(PrecisionGuard):
        irwin_hall_density(31, 0.0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 12), x=st.floats(0.0, 6.0))
def test_irwin_hall_even_nonnegative(n, x):
    assert irwin_hall_density(n, x) == irwin_hall_density(n, -x)
    assert irwin_hall_density(n, x) >= 0.0


# ---- convolution_oracle -------------------------------------------------------

def test_convolution_uniform_pair_is_triangle():
    x = np.arange(-1.5, 1.5 + 1e-12, 1e-3)
    got = convolution_oracle(TermDistribution.uniform(), 2, x)
    assert np.max(np.abs(got - irwin_hall_density(2, x))) < 1e-6


def test_convolution_sech_matches_inversion():
    n = 4
    spec = SumSpec(TermDistribution.sech(), n)
    x = np.arange(-60.0, 60.0 + 1e-9, 5e-3)
    px = convolution_oracle(TermDistribution.sech(), n, x)
    z = np.linspace(-5, 5, 41)
    pz = spec.scale * np.interp(spec.scale * z, x, px)
    assert np.max(np.abs(pz - density_grid(spec, z).p_numeric)) < 1e-6


@pytest.mark.parametrize("dist", [TermDistribution.sech(), TermDistribution.gauss()],
                         ids=lambda d: d.label())
def test_convolution_single_term_is_pdf(dist):
    x = np.arange(-45.0, 45.0 + 1e-9, 1e-2)
    assert np.max(np.abs(convolution_oracle(dist, 1, x) - pdf(dist, x))) < 1e-12


def test_convolution_grid_too_narrow():
    x = np.linspace(-3, 3, 601)
    with pytest.raises(GridTooNarrow):
        convolution_oracle(TermDistribution.sech(), 2, x)


def test_convolution_needs_uniform_grid():
    with pytest.raises(ValueError):
        convolution_oracle(TermDistribution.uniform(), 2, [0.0, 0.1, 0.3, 0.4])


@pytest.mark.parametrize("n", [2, 5, 10])
def test_three_way_agreement_uniform(n):
    spec = SumSpec(TermDistribution.uniform(), n)
    half = n / 2
    x = np.arange(-half, half + 1e-12, 1e-3)
    conv = convolution_oracle(TermDistribution.uniform(), n, x)
    sample_x = np.linspace(-half, half, 41)[1:-1]
    exact = irwin_hall_density(n, sample_x)
    conv_at = np.interp(sample_x, x, conv)
    inv = density_grid(spec, sample_x / spec.scale).p_numeric / spec.scale
    assert np.max(np.abs(conv_at - exact)) < 1e-6
    assert np.max(np.abs(inv - exact)) < 1e-6
    assert np.max(np.abs(inv - conv_at)) < 1e-6
