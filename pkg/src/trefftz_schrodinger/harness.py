"""Convergence studies and single solves driven by a flat run configuration."""

from __future__ import annotations

import configparser
import csv
import logging
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import (
    ErrorRecord,
    ErrorReport,
    dg_error,
    energy_loss,
    l2_final_error,
)
from .assembly import slab_systems
from .basis import default_parameters
from .discretization import Discretization, FluxParameters
from .mesh import build_mesh, build_spatial_mesh, slab_count_for_ratio
from .problems import BENCHMARKS, get_benchmark
from .timestepper import condition_number, march

log = logging.getLogger(__name__)

CSV_COLUMNS = ("benchmark", "p", "k_mode", "divisions", "h_x", "h_t", "dofs", "dg_err",
               "l2T_err", "e_loss", "kappa2", "rate_dg", "rate_l2")
RATE_COLUMNS = ("benchmark", "p", "k_mode", "quantity", "slope")
K_MODES = ("equispaced", "tuned")

DEFAULT_DIVISIONS = {"square-well": (20, 40, 60, 80), "gaussian": (10, 20, 30)}
DEFAULT_RATIO = {"square-well": 0.25, "gaussian": 0.5}


class ConfigError(ValueError):
    pass


def fmt(value):
    """Scientific notation with 16 significant digits, '.' decimal separator."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value) + 0.0:.15e}"
    return str(value)


@dataclass
class RunConfig:
    benchmark: str = "square-well"
    v_star: float = 20.0
    p: tuple = (1, 2, 3)
    divisions: Optional[tuple] = None
    ht_ratio: Optional[float] = None
    k_mode: str = "equispaced"
    k_star: Optional[float] = None
    quad: Optional[int] = None
    alpha_scale: float = 1.0
    beta_scale: float = 1.0
    out: Path = Path("results")
    seed: int = 0
    kappa: bool = True
    figures: bool = True
    sample_points: int = 201

    def __post_init__(self):
        self.p = tuple(int(v) for v in _as_tuple(self.p))
        if self.divisions is not None:
            self.divisions = tuple(int(v) for v in _as_tuple(self.divisions))
        self.out = Path(self.out)

    @property
    def family(self):
        return self.divisions or DEFAULT_DIVISIONS[self.benchmark]

    @property
    def ratio(self):
        return self.ht_ratio if self.ht_ratio is not None else DEFAULT_RATIO[self.benchmark]

    def validate(self):
        if self.benchmark not in BENCHMARKS:
            raise ConfigError(f"unknown benchmark {self.benchmark!r}; choose from {BENCHMARKS}")
        if not self.p:
            raise ConfigError("p list is empty")
        if any(v < 1 for v in self.p):
            raise ConfigError("every p must be >= 1")
        if not self.family or any(v < 1 for v in self.family):
            raise ConfigError("division counts must be >= 1")
        if not self.ratio > 0:
            raise ConfigError("ht_ratio must be positive")
        if self.k_mode not in K_MODES:
            raise ConfigError(f"unknown k_mode {self.k_mode!r}; choose from {K_MODES}")
        if self.k_mode == "tuned" and (self.benchmark != "square-well" or set(self.p) != {1}):
            raise ConfigError("tuned parameters exist for the 1D square well with p = 1 only")
        if self.quad is not None and not 1 <= self.quad <= 64:
            raise ConfigError("quad must lie in 1..64")
        if self.alpha_scale <= 0 or self.beta_scale <= 0:
            raise ConfigError("flux scales must be positive")
        if self.benchmark == "square-well" and not self.v_star > 0:
            raise ConfigError("v_star must be positive")
        return self


def _as_tuple(value):
    if isinstance(value, str):
        return tuple(v for v in value.replace(" ", "").split(",") if v)
    if np.isscalar(value):
        return (value,)
    return tuple(value)


def _parse_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "benchmark": str, "v_star": float, "p": _as_tuple, "divisions": _as_tuple,
    "ht_ratio": float, "k_mode": str, "k_star": float, "quad": int,
    "alpha_scale": float, "beta_scale": float, "out": Path, "seed": int,
    "kappa": _parse_bool, "figures": _parse_bool, "sample_points": int,
}


def read_config_file(path):
    """Flat ``key = value`` file (an optional ``[run]`` header is allowed)."""
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    parser = configparser.ConfigParser()
    parser.read_string(text)
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key not in _CONVERTERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                values[key] = _CONVERTERS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return values


def make_config(file_values=None, overrides=None):
    """Defaults, then the config file, then explicit overrides (None means unset)."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown settings {sorted(unknown)}")
    return RunConfig(**merged).validate()


@dataclass
class Case:
    problem: object
    disc: Discretization
    divisions: int

    @property
    def mesh(self):
        return self.disc.mesh


def build_case(config: RunConfig, p, divisions):
    problem = get_benchmark(config.benchmark, config.v_star)
    dim = problem.dim
    shape = "interval" if dim == 1 else "triangle"
    counts = divisions if dim == 1 else (divisions,) * dim
    space = build_spatial_mesh(problem.bounds, counts, shape)
    slabs = slab_count_for_ratio(problem.final_time, space.h_x, config.ratio)
    mesh = build_mesh(problem.bounds, counts, slabs, problem.final_time, shape)
    k_star = config.k_star
    if k_star is None:
        k_star = problem.parameters.get("k_star")
    basis = default_parameters(dim, p, config.k_mode, k_star)
    potential = problem.potential.cell_values(mesh.space)
    flux = FluxParameters.from_mesh(mesh.space, config.alpha_scale, config.beta_scale)
    extra = problem.parameters.get("k_star", 0.0)
    disc = Discretization.create(mesh, basis, potential, flux, config.quad, extra_frequency=extra)
    return Case(problem, disc, divisions)


def run_case(config: RunConfig, p, divisions):
    """Solve one (p, mesh) pair and measure it; returns (record, solution, problem)."""
    case = build_case(config, p, divisions)
    disc, problem = case.disc, case.problem
    start = time.perf_counter()
    systems = slab_systems(disc)
    solution = march(problem, disc, systems)
    dg = dg_error(problem, solution).dg
    l2 = l2_final_error(problem, solution)
    # the energy identity needs g_D = 0
    loss = energy_loss(solution, problem.initial, check=problem.homogeneous_dirichlet)
    kappa = condition_number(systems[0]) if config.kappa else float("nan")
    mesh = case.mesh
    record = ErrorRecord(problem.name, p, divisions, mesh.h_x, mesh.h_t, disc.dofmap.size
                         * mesh.slab_count, dg, l2, loss.total, kappa, k_mode=config.k_mode)
    log.info("%s p=%d divisions=%d: dg=%.3e l2=%.3e e_loss=%.3e (%.1fs)", problem.name, p,
             divisions, dg, l2, loss.total, time.perf_counter() - start)
    return record, solution, problem


def _record_row(r):
    return [fmt(getattr(r, c)) for c in CSV_COLUMNS]


def write_records(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(_record_row(r))


def write_rates(path, report: ErrorReport, benchmark):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RATE_COLUMNS)
        for (p, mode), slopes in sorted(report.rates.items()):
            for quantity, slope in slopes.items():
                writer.writerow([benchmark, p, mode, quantity, fmt(slope)])


def run_convergence(config: RunConfig):
    """All (p, mesh level) runs; writes ``convergence.csv`` and ``rates.csv``.

    Rows are written as runs complete, so a solver abort leaves the finished
    rows on disk before the exception propagates.
    """
    config.validate()
    report = ErrorReport()
    csv_path = config.out / "convergence.csv"
    for p in config.p:
        for n in sorted(config.family):
            record, _, _ = run_case(config, p, n)
            report.records.append(record)
            write_records(csv_path, report.records)
    report.finalize()
    write_records(csv_path, report.records)
    write_rates(config.out / "rates.csv", report, report.records[0].benchmark)
    if config.figures:
        from .plotting import plot_convergence
        plot_convergence(report, config.out / "convergence.png")
    return report


def sample_grid(bounds, points):
    axes = [np.linspace(a, b, points) for a, b in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1), [a.size for a in axes]


def run_solve(config: RunConfig, times=None):
    """Single run at the first p and first division count; writes ``solution.csv``.

    Samples Re/Im of the discrete and exact solutions on a uniform grid at
    ``times`` (default 0, T/2, T).
    """
    config.validate()
    p, n = config.p[0], config.family[0]
    record, solution, problem = run_case(config, p, n)
    T = problem.final_time
    times = (0.0, 0.5 * T, T) if times is None else times
    dim = problem.dim
    points = config.sample_points if dim == 1 else max(2, config.sample_points // 4)
    x, shape = sample_grid(problem.bounds, points)
    names = ("x", "y")[:dim]
    header = ("t",) + names + ("re", "im", "re_exact", "im_exact")
    rows = []
    frames = []
    for t in times:
        uh = solution(x, t)
        ue = problem.exact.value(x, np.full(x.shape[0], t))
        frames.append((t, uh, ue))
        for xi, a, b in zip(x, uh, ue):
            rows.append([fmt(float(t))] + [fmt(float(v)) for v in xi]
                        + [fmt(a.real), fmt(a.imag), fmt(b.real), fmt(b.imag)])
    config.out.mkdir(parents=True, exist_ok=True)
    with open(config.out / "solution.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    write_records(config.out / "summary.csv", [record])
    if config.figures:
        from .plotting import plot_solution
        plot_solution(x, shape, frames, config.out / "solution.png")
    return record, solution


@dataclass
class ConditionReport:
    records: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)


def run_condition(config: RunConfig):
    """kappa_2 of the slab matrix over the mesh family; writes ``condition.csv``."""
    from .analysis import fit_rates

    config.validate()
    out = ConditionReport()
    for p in config.p:
        hs, ks = [], []
        for n in sorted(config.family):
            case = build_case(config, p, n)
            system = slab_systems(case.disc)[0]
            kappa = condition_number(system)
            out.records.append((case.problem.name, p, n, case.mesh.h_x, case.mesh.h_t,
                                case.disc.dofmap.size, kappa))
            hs.append(max(case.mesh.h_x, case.mesh.h_t))
            ks.append(kappa)
        if len(hs) >= 3:
            out.slopes[p] = fit_rates(hs, ks).slope
    config.out.mkdir(parents=True, exist_ok=True)
    with open(config.out / "condition.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("benchmark", "p", "divisions", "h_x", "h_t", "slab_dofs", "kappa2",
                         "slope"))
        for name, p, n, hx, ht, dofs, kappa in out.records:
            writer.writerow([name, p, n, fmt(hx), fmt(ht), dofs, fmt(kappa),
                             fmt(out.slopes.get(p, float("nan")))])
    if config.figures:
        from .plotting import plot_condition
        plot_condition(out.records, config.out / "condition.png")
    return out


def with_overrides(config, **kwargs):
    return replace(config, **kwargs).validate()
