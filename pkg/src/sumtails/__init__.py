"""Exact finite-N densities of normalized sums of i.i.d. terms and their tails."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .asymptotics import (AsymptoteKind, HeavyTailModel, TailAsymptote, crossover_zg,
                          gaussian_density, im_gN_leading, levy_density, log_gaussian_density,
                          log_power_tail, log_sech_tail, power_tail, sech_tail, series_g_imag,
                          single_big_jump, single_big_jump_valid, tail_model_for,
                          uniform_support_bound)
from .distributions import (Kind, TermDistribution, cdf, charfun_g, pdf, quantile, sample,
                            sample_array, tail_prob, variance)
from .errors import (ConvergenceWarning, DivergentVariance, GridTooNarrow, NoCrossover,
                     NonRealCharFunction, PrecisionGuard, QuadratureFailure, SumTailsError)
from .inversion import (DensityTable, InversionResult, QuadratureConfig, SumSpec, density_at,
                        density_grid, g_power, invert_density, tail_at)
from .montecarlo import (SampleBatch, TailEstimate, convolution_oracle, empirical_tail,
                         irwin_hall_density, sample_sum)
