"""The reproducibility suite: nine numbered checks with fixed tolerances.

Each ``criterion_k`` returns a :class:`CriterionResult` whose ``passed`` flag
combines every clause of the check, including its runtime budget. ``detail``
reports the measured quantities so a failure can be diagnosed from the
printed matrix alone.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from .asymptotics import (crossover_gap, crossover_zg, gaussian_density, im_gN_leading,
                          levy_density, pole_sum_imag, power_tail, sech_tail, series_g_imag,
                          uniform_support_bound)
from .distributions import TermDistribution, log_abs_charfun, pdf, tail_prob
from .inversion import SumSpec, density_at, density_grid, tail_at
from .montecarlo import empirical_tails, irwin_hall_density, sample_sum

MC_SEED = 20240917
MC_COUNT = 10 ** 7


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float
    budget: float
    clauses: Dict[str, bool] = field(default_factory=dict)
    detail: Dict[str, object] = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        failed = [k for k, ok in self.clauses.items() if not ok]
        tail = f"; failed: {', '.join(failed)}" if failed else ""
        return f"[{mark}] {self.number}. {self.title} ({self.seconds:.1f}s / {self.budget:.0f}s){tail}"


def _finish(number, title, budget, start, clauses, detail) -> CriterionResult:
    seconds = time.perf_counter() - start
    clauses = dict(clauses)
    clauses["runtime"] = seconds < budget
    return CriterionResult(number, title, all(clauses.values()), seconds, budget, clauses, detail)


def criterion_1() -> CriterionResult:
    start = time.perf_counter()
    z = np.linspace(-6.0, 6.0, 121)
    worst = {}
    for n in (1, 5, 50):
        table = density_grid(SumSpec(TermDistribution.gauss(), n), z)
        worst[n] = float(np.max(np.abs(table.p_numeric - table.p_gauss)))
    return _finish(1, "Gaussian fixed point", 10.0, start,
                   {"max |p - p_G| < 1e-8": max(worst.values()) < 1e-8}, {"max_abs_error": worst})


def criterion_2() -> CriterionResult:
    start = time.perf_counter()
    n = 10
    spec = SumSpec(TermDistribution.uniform(), n)
    edge = uniform_support_bound(n)
    inside = np.linspace(-edge, edge, 203)[1:-1]
    table = density_grid(spec, inside)
    oracle = spec.scale * irwin_hall_density(n, spec.scale * inside)
    oracle_err = float(np.max(np.abs(table.p_numeric - oracle)))
    outside = np.concatenate([-np.linspace(9.0, edge, 25), np.linspace(edge, 9.0, 25)])
    outside_max = max(abs(density_at(spec, zi)) for zi in outside)
    core = np.linspace(0.0, 0.75 * math.sqrt(n), 31)
    core_dev = float(np.max(np.abs(density_grid(spec, core).p_numeric / gaussian_density(core) - 1.0)))
    zr = math.sqrt(n)
    root_dev = abs(density_at(spec, zr) / gaussian_density(zr) - 1.0)
    return _finish(2, "Uniform N=10 against Irwin-Hall and GD", 30.0, start, {
        "oracle within 1e-8": oracle_err < 1e-8,
        "zero beyond sqrt(30)": outside_max < 1e-10,
        "GD within 5% for z <= 0.75 sqrt(N)": core_dev < 0.05,
        "GD departure >= 10% at sqrt(N)": root_dev >= 0.10,
    }, {"oracle_max_abs_error": oracle_err, "outside_max": outside_max,
        "core_max_rel_dev": core_dev, "rel_dev_at_sqrtN": root_dev})


def criterion_3() -> CriterionResult:
    start = time.perf_counter()
    dist = TermDistribution.power(2)
    spec = SumSpec(dist, 100)
    zs = np.array([40.0, 60.0, 80.0])
    ratio = density_grid(spec, zs).p_numeric / power_tail(2, 100, zs)
    gaps = np.abs(ratio - 1.0)
    core100 = np.linspace(0.0, 5.0, 26)
    dev100 = np.abs(density_grid(spec, core100).p_numeric / gaussian_density(core100) - 1.0)
    core1e4 = np.linspace(0.0, 50.0, 51)
    with np.errstate(divide="ignore", over="ignore"):
        dev1e4 = np.abs(density_grid(SumSpec(dist, 10 ** 4), core1e4).p_numeric
                        / gaussian_density(core1e4) - 1.0)
    first_bad_100 = core100[np.argmax(dev100 >= 0.05)] if np.any(dev100 >= 0.05) else None
    first_bad_1e4 = core1e4[np.argmax(dev1e4 >= 0.05)] if np.any(dev1e4 >= 0.05) else None
    return _finish(3, "Power l=2 tails against the power asymptote and GD", 300.0, start, {
        "ratio at z=40 in [0.8, 1.2]": 0.8 <= ratio[0] <= 1.2,
        "ratio approaches 1 monotonically": bool(np.all(np.diff(gaps) < 0)),
        "N=100 GD within 5% for z <= 5": bool(np.all(dev100 < 0.05)),
        "N=1e4 GD within 5% for z <= 50": bool(np.all(dev1e4 < 0.05)),
    }, {"ratios_40_60_80": ratio.tolist(), "N100_first_z_over_5pct": first_bad_100,
        "N1e4_first_z_over_5pct": first_bad_1e4,
        "N100_dev_at_z5": float(dev100[-1])})


def criterion_4() -> CriterionResult:
    start = time.perf_counter()
    zs = (0.0, 1.0, 5.0)
    values = {n: np.array([density_at(SumSpec(TermDistribution.power(1), n), z) for z in zs])
              for n in (1, 3, 10)}
    exact = levy_density(np.array(zs))
    err = max(float(np.max(np.abs(v - exact))) for v in values.values())
    spread = float(np.max(np.ptp(np.vstack(list(values.values())), axis=0)))
    return _finish(4, "Levy exactness and self-similarity", 60.0, start, {
        "matches Cauchy within 1e-8": err < 1e-8,
        "independent of N within 1e-8": spread < 1e-8,
    }, {"max_abs_error": err, "max_spread_over_N": spread})


def criterion_5() -> CriterionResult:
    start = time.perf_counter()
    n = 25
    dist = TermDistribution.sech()
    spec = SumSpec(dist, n)
    s = spec.scale
    p = {z: density_at(spec, z) for z in (8.0, 10.0)}
    ratio = p[8.0] / float(sech_tail(n, 8.0))
    order = {}
    for z, pz in p.items():
        gd = float(gaussian_density(z))
        jump = s * n * float(pdf(dist, s * z))
        order[z] = {"gaussian": gd, "p_numeric": pz, "single_jump": jump}
    ordered = all(v["gaussian"] > v["p_numeric"] > v["single_jump"] for v in order.values())
    return _finish(5, "Sech N=25 against the exponential asymptote", 120.0, start, {
        "ratio at z=8 in [0.8, 1.2]": 0.8 <= ratio <= 1.2,
        "p_G > p_numeric > single jump at z=8,10": ordered,
    }, {"ratio_at_8": ratio, "ratio_at_10": p[10.0] / float(sech_tail(n, 10.0)), "ordering": order})


def criterion_6() -> CriterionResult:
    start = time.perf_counter()
    n = 10 ** 4
    iterate = crossover_zg(4, n, "iterate")
    lead = math.log(n)
    formula = math.sqrt(lead + 4.0 * math.log(lead))
    root = crossover_zg(4, n, "solve")
    gap = crossover_gap(4, n, root)
    return _finish(6, "Gaussian crossover for m=4, N=1e4", 10.0, start, {
        "iterate equals the formula": iterate == formula and abs(iterate - 4.2533) < 5e-4,
        "solve within 15% of iterate": abs(root / iterate - 1.0) < 0.15,
        "defining equality within 1e-8": abs(gap) < 1e-8,
    }, {"iterate": iterate, "root": root, "gap_at_root": gap})


def criterion_7(count: int = MC_COUNT, seed: int = MC_SEED) -> CriterionResult:
    start = time.perf_counter()
    n = 100
    dist = TermDistribution.power(2)
    spec = SumSpec(dist, n)
    batch = sample_sum(spec, count, seed)
    candidates = np.concatenate([np.arange(0.0, 4.0, 0.5), np.arange(4.0, 16.0, 1.0)])
    exact = {float(z): tail_at(spec, z) for z in candidates}
    tested = [z for z, p in exact.items() if count * p >= 100]
    estimates = empirical_tails(batch, tested)
    rows, inversion_ok = [], True
    for est in estimates:
        dev = abs(est.estimate - exact[est.threshold]) / est.stderr if est.stderr > 0 else math.inf
        inversion_ok &= dev <= 4.0
        rows.append((est.threshold, est.estimate, exact[est.threshold], round(dev, 2)))
    deep = estimates[-1]
    jump = n * tail_prob(dist, spec.scale * deep.threshold)
    jump_dev = abs(deep.estimate - jump) / deep.stderr
    return _finish(7, "Monte Carlo tail law for l=2, N=100", 300.0, start, {
        "within 4 SE of inversion tail": bool(inversion_ok),
        "deepest bin within 4 SE of N tail_prob": jump_dev <= 4.0,
    }, {"rows(z, mc, inversion, dev/SE)": rows, "deepest_z": deep.threshold,
        "single_jump": jump, "single_jump_dev_SE": jump_dev})


def criterion_8() -> CriterionResult:
    start = time.perf_counter()
    worst = 0.0
    for l in (1, 2, 3):
        for x in np.linspace(0.0, 0.1, 21):
            worst = max(worst, abs(series_g_imag(l, 1.0, x) - pole_sum_imag(l, 1.0, x)))
    lead = im_gN_leading(2, 100, 1.0, 0.05)
    full = (pole_sum_imag(2, 1.0, 0.05) ** 100).imag
    rel = abs(lead / full - 1.0)
    return _finish(8, "Imaginary-axis series and leading term", 10.0, start, {
        "series matches pole sum within 1e-10": worst < 1e-10,
        "N s_1 within 5% of Im g^N": rel < 0.05,
    }, {"max_series_error": worst, "N_s1": lead, "Im_gN": full, "rel_dev": rel})


def criterion_9() -> CriterionResult:
    start = time.perf_counter()
    residuals, monotone = {}, True
    for dist in (TermDistribution.uniform(), TermDistribution.power(2), TermDistribution.sech()):
        res = []
        for n in (10 ** 2, 10 ** 4, 10 ** 6):
            s = SumSpec(dist, n).scale
            res.append(abs(n * float(log_abs_charfun(dist, 1.0, s)) + 0.5))
        residuals[dist.label()] = res
        monotone &= bool(np.all(np.diff(res) < 0))
    return _finish(9, "Small-omega Gaussianization", 10.0, start,
                   {"residual decreases with N": monotone}, {"residuals": residuals})


CRITERIA: Dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}


def run_all(numbers=None, echo: Callable[[str], None] = print) -> List[CriterionResult]:
    """Run the selected criteria in order, echoing one line per result."""
    results = []
    for k in numbers or sorted(CRITERIA):
        result = CRITERIA[k]()
        echo(result.line())
        results.append(result)
    return results
