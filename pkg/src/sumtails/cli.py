"""Command-line front end.

Every command writes its table(s) plus a ``.meta.json`` sidecar that echoes
the full configuration, so ``sumtails replay <sidecar>`` regenerates the
same bytes. Usage errors exit with status 2 and computation errors with 1.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from scipy import special

from . import __version__
from .asymptotics import crossover_gap, crossover_zg
from .distributions import TermDistribution, tail_prob
from .errors import SumTailsError
from .inversion import QuadratureConfig, SumSpec, density_grid, tail_at
from .montecarlo import DEFAULT_BLOCK, empirical_tails, sample_sum
from .reporting import (DENSITY_COLUMNS, _jsonable, atomic_write, default_output_dir,
                        density_table_data, write_sidecar, write_table)

COMMANDS = ("density", "tail", "crossover", "mc", "figure", "verify")
FIGURES = ("F2", "F3", "F4")


class UsageError(ValueError):
    """Invalid command-line configuration (exit status 2)."""


@dataclass
class RunConfig:
    """One fully expanded command invocation."""

    command: str
    dist: str = "uniform"
    l: Optional[int] = None
    sigma: float = 1.0
    n: int = 10
    zmin: float = 0.0
    zmax: float = 6.0
    points: int = 121
    spacing: str = "linear"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    log_cutoff: float = -40.0
    max_panels: int = 10 ** 6
    workers: int = 1
    seed: int = 0
    count: int = 10 ** 5
    block_size: int = DEFAULT_BLOCK
    bins: int = 0
    m: float = 4.0
    name: Optional[str] = None
    criteria: List[int] = field(default_factory=list)
    mc_count: Optional[int] = None
    out: Optional[str] = None
    format: str = "csv"

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.command in ("density", "tail", "mc"):
            if not self.zmin < self.zmax:
                raise UsageError(f"zmin ({self.zmin}) must be below zmax ({self.zmax})")
            if self.points < 2:
                raise UsageError("points must be at least 2")
            if self.spacing not in ("linear", "log"):
                raise UsageError("spacing must be linear or log")
            if self.spacing == "log" and self.zmin < 0:
                raise UsageError("log spacing needs zmin >= 0")
            try:
                self.distribution()
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            if self.n < 1:
                raise UsageError("n must be a positive integer")
        if self.command == "figure" and self.name not in FIGURES:
            raise UsageError(f"unknown figure preset {self.name!r}; choose from {', '.join(FIGURES)}")
        if self.command == "mc" and self.count < 1:
            raise UsageError("count must be positive")
        bad = [c for c in self.criteria if c not in range(1, 10)]
        if bad:
            raise UsageError(f"criteria must be in 1..9, got {bad}")
        try:
            self.quadrature()
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return self

    def distribution(self) -> TermDistribution:
        return TermDistribution.from_name(self.dist, l=self.l, sigma=self.sigma)

    def spec(self) -> SumSpec:
        return SumSpec(self.distribution(), self.n)

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                                log_cutoff=self.log_cutoff, max_panels=self.max_panels)

    def grid(self) -> np.ndarray:
        if self.spacing == "linear":
            return np.linspace(self.zmin, self.zmax, self.points)
        if self.zmin == 0.0:
            return np.concatenate([[0.0], np.geomspace(5e-4 * self.zmax, self.zmax, self.points - 1)])
        return np.geomspace(self.zmin, self.zmax, self.points)

    def output_path(self) -> Path:
        if self.out:
            return Path(self.out)
        stem = {"figure": f"figure_{self.name}", "crossover": f"crossover_m{self.m:g}_N{self.n}",
                "verify": "verify"}.get(self.command)
        if stem is None:
            stem = f"{self.command}_{self.distribution().label()}_N{self.n}".replace("=", "").replace("(", "_").replace(")", "")
        suffix = "" if self.command == "figure" else f".{self.format}"
        return default_output_dir() / f"{stem}{suffix}"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def figure_preset(name: str) -> List[RunConfig]:
    """Expanded density configurations for one figure preset.

    F2 is uniform N=10 on [0, 7] with 351 points; F3 is the l=2 power family
    at N=100 and N=10000 on [0, 100] with 200 log-spaced points each; F4 is
    sech N=25 on [0, 12] with 301 points.
    """
    if name == "F2":
        return [RunConfig("density", dist="uniform", n=10, zmin=0.0, zmax=7.0, points=351)]
    if name == "F3":
        return [RunConfig("density", dist="power", l=2, n=n, zmin=0.0, zmax=100.0, points=200,
                          spacing="log") for n in (100, 10 ** 4)]
    if name == "F4":
        return [RunConfig("density", dist="sech", n=25, zmin=0.0, zmax=12.0, points=301)]
    raise UsageError(f"unknown figure preset {name!r}; choose from {', '.join(FIGURES)}")


def _metadata(config: RunConfig, **extra) -> dict:
    meta = {"config": config.to_dict(), "version": __version__, "seed": config.seed}
    meta.update(extra)
    return meta


def _finish(config: RunConfig, path: Path, columns, data, **extra) -> Path:
    write_table(path, columns, data, config.format)
    write_sidecar(path, _metadata(config, **extra))
    print(f"wrote {path}")
    return path


def _run_density(config: RunConfig) -> List[Path]:
    table = density_grid(config.spec(), config.grid(), config.quadrature(), workers=config.workers)
    checks = {"trapezoid_mass": table.trapezoid_mass(), "max_asymmetry": table.max_asymmetry()}
    return [_finish(config, config.output_path(), DENSITY_COLUMNS, density_table_data(table),
                    max_error_estimate=table.max_error_estimate(), asymptote=table.asymptote_kind,
                    checks=checks)]


def _single_jump_tail(spec: SumSpec, z: float) -> float:
    return spec.n_terms * tail_prob(spec.distribution, spec.scale * z) if z > 0 else float("nan")


def _run_tail(config: RunConfig) -> List[Path]:
    spec, cfg = config.spec(), config.quadrature()
    z = config.grid()
    data = {"z": z,
            "tail_numeric": np.array([tail_at(spec, zi, cfg) for zi in z]),
            "tail_gauss": special.ndtr(-z),
            "tail_single_jump": np.array([_single_jump_tail(spec, zi) for zi in z])}
    columns = ("z", "tail_numeric", "tail_gauss", "tail_single_jump")
    return [_finish(config, config.output_path(), columns, data)]


def _run_mc(config: RunConfig) -> List[Path]:
    spec = config.spec()
    batch = sample_sum(spec, config.count, config.seed, config.block_size, config.workers)
    z = config.grid()
    estimates = empirical_tails(batch, z)
    data = {"z": z,
            "tail_mc": np.array([e.estimate for e in estimates]),
            "stderr": np.array([e.stderr for e in estimates]),
            "exceedances": np.array([e.exceedances for e in estimates], dtype=float),
            "tail_numeric": np.array([tail_at(spec, zi, config.quadrature()) for zi in z])}
    columns = ("z", "tail_mc", "stderr", "exceedances", "tail_numeric")
    path = config.output_path()
    paths = [_finish(config, path, columns, data)]
    if config.bins > 0:
        density, edges = np.histogram(batch.values, bins=config.bins,
                                      range=(config.zmin, config.zmax))
        density = density / (batch.count * np.diff(edges))
        hist_path = path.with_name(path.stem + ".hist" + path.suffix)
        paths.append(_finish(config, hist_path, ("z_center", "density"),
                             {"z_center": 0.5 * (edges[:-1] + edges[1:]), "density": density}))
    return paths


def _run_crossover(config: RunConfig) -> List[Path]:
    iterate = crossover_zg(config.m, config.n, "iterate")
    if float(config.m) == int(config.m) and int(config.m) % 2 == 0:
        root = crossover_zg(config.m, config.n, "solve")
        gap = crossover_gap(config.m, config.n, root)
    else:
        # the defining equation is solved only for the power family, m = 2l
        root = gap = float("nan")
    print(f"z_G iterate = {iterate:.6f}\nz_G solve   = {root:.6f}\ngap at root = {gap:.3e}")
    data = {"m": [config.m], "n_terms": [config.n], "z_iterate": [iterate], "z_solve": [root],
            "gap_at_root": [gap]}
    return [_finish(config, config.output_path(), tuple(data), data)]


def _run_figure(config: RunConfig) -> List[Path]:
    directory = Path(config.out) if config.out else default_output_dir()
    paths = []
    for sub in figure_preset(config.name):
        sub.workers, sub.format = config.workers, config.format
        sub.out = str(directory / f"{config.name}_N{sub.n}.{config.format}")
        paths.extend(_run_density(sub))
    return paths


def _run_verify(config: RunConfig) -> int:
    from . import verification

    numbers = config.criteria or sorted(verification.CRITERIA)
    results = []
    for k in numbers:
        fn = verification.CRITERIA[k]
        result = fn(count=config.mc_count) if (k == 7 and config.mc_count) else fn()
        print(result.line(), flush=True)
        results.append(result)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    if config.out:
        summary = [dataclasses.asdict(r) for r in results]
        path = Path(config.out)
        atomic_write(path, json.dumps(summary, indent=1, default=_jsonable) + "\n")
        print(f"wrote {path}")
    return 0 if passed == len(results) else 1


def run_command(config: RunConfig) -> int:
    """Execute one validated configuration and return the exit status."""
    config.validate()
    if config.command == "verify":
        return _run_verify(config)
    runner = {"density": _run_density, "tail": _run_tail, "mc": _run_mc,
              "crossover": _run_crossover, "figure": _run_figure}[config.command]
    runner(config)
    return 0


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dist", choices=("uniform", "power", "sech", "gauss"), default="uniform")
    p.add_argument("--l", type=int, help="power-family index")
    p.add_argument("--sigma", type=float, default=1.0, help="Gaussian term standard deviation")
    p.add_argument("--n", type=int, default=10, help="number of terms N")


def _add_grid_args(p: argparse.ArgumentParser, zmin=0.0, zmax=6.0, points=121) -> None:
    p.add_argument("--zmin", type=float, default=zmin)
    p.add_argument("--zmax", type=float, default=zmax)
    p.add_argument("--points", type=int, default=points)
    p.add_argument("--spacing", choices=("linear", "log"), default="linear")


def _add_quad_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--abs-tol", type=float, default=1e-14)
    p.add_argument("--log-cutoff", type=float, default=-40.0)
    p.add_argument("--max-panels", type=int, default=10 ** 6)


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output file (directory for figure)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sumtails", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="density p_N(z) on a grid by inversion")
    _add_spec_args(p), _add_grid_args(p), _add_quad_args(p), _add_output_args(p)

    p = sub.add_parser("tail", help="P(Z > z) by inversion, with Gaussian and single-jump columns")
    _add_spec_args(p), _add_grid_args(p), _add_quad_args(p), _add_output_args(p)

    p = sub.add_parser("mc", help="Monte Carlo exceedance table")
    _add_spec_args(p), _add_grid_args(p), _add_quad_args(p), _add_output_args(p)
    p.add_argument("--count", type=int, default=10 ** 5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--block-size", type=int, default=DEFAULT_BLOCK)
    p.add_argument("--bins", type=int, default=0, help="also write a density histogram")

    p = sub.add_parser("crossover", help="Gaussian crossover z_G")
    p.add_argument("--m", type=float, default=4.0)
    p.add_argument("--n", type=int, default=10 ** 4)
    _add_output_args(p)

    p = sub.add_parser("figure", help="data tables for a figure preset")
    p.add_argument("--name", required=True, choices=FIGURES)
    _add_output_args(p)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--criteria", type=int, nargs="*", default=[])
    p.add_argument("--mc-count", type=int, help="override the criterion 7 sample count")
    p.add_argument("--out", help="write a JSON summary here")

    p = sub.add_parser("replay", help="rerun the configuration stored in a sidecar")
    p.add_argument("sidecar")
    p.add_argument("--out", help="override the output path")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command == "replay":
        meta = json.loads(Path(args.sidecar).read_text())
        config = RunConfig.from_dict(meta["config"])
        if args.out:
            config.out = args.out
        return config
    values = {k: v for k, v in vars(args).items() if v is not None}
    return RunConfig.from_dict(values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        config.validate()
    except (UsageError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"sumtails: usage error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_command(config)
    except (SumTailsError, ValueError, ArithmeticError) as exc:
        where = f" (z={exc.z})" if getattr(exc, "z", None) is not None else ""
        print(f"sumtails: {type(exc).__name__}: {exc}{where}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
