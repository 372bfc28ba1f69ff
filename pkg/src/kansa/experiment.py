"""Declarative experiment configs, presets, and the sweep runner.

A config names a problem, an operator, a kernel, a trial space, a solver
family (CLS is theta = inf), a list of trial-center counts, and the
collocation refinement factors.  ``run_experiment`` walks the (n_Z, theta)
grid: per refinement level the system is assembled once and solved for
every theta; per-cell failures are recorded as row markers without
aborting the sweep.  The pipeline is deterministic: point generation is
either regular or Halton, and no randomness enters anywhere.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import analysis, assembly, geometry, kernels, pde, solvers

THETA_CLS = math.inf

_DELTA_I_CHOICES = (1.0, 0.5, 1.0 / 3.0)
_DELTA_B_CHOICES = (1.0, 0.5)

PRESET_NAMES = (
    "example1",
    "example2",
    "example3",
    "example3_scattered",
    "example4_gaussian",
    "example4_mq",
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: str = "trig"
    operator: str = "laplace"
    kernel_family: str = kernels.MATERN
    m: int = 4
    epsilon: float = 1.0
    trial_space: str = assembly.TRIAL_Z_UNION_Y
    thetas: tuple[float, ...] = (THETA_CLS,)
    n_z: tuple[int, ...] = (121, 256, 441, 676)
    delta_interior: float = 0.5
    delta_boundary: float = 0.5
    x_source: str = "regular"          # 'regular' | 'halton'
    n_x: int | None = None             # Halton count; None matches delta_i=1/2
    eval_grid_n: int = 100
    rcond: float | None = None
    weight_convention: str = solvers.CONVENTION_SQUARED
    fill_resolution: int = 200
    domain_lower: tuple[float, ...] = (-1.0, -1.0)
    domain_upper: tuple[float, ...] = (1.0, 1.0)
    fit_drop_last: int = 0
    jobs: int = 1
    out: str | None = None
    seed: int = 0                      # reserved for randomized checks

    def validate(self) -> None:
        errors = []
        if self.problem not in pde.SOLUTIONS:
            errors.append(f"problem: unknown name {self.problem!r}")
        if self.operator not in pde.OPERATORS:
            errors.append(f"operator: unknown name {self.operator!r}")
        if self.kernel_family not in kernels.FAMILIES:
            errors.append(f"kernel_family: unknown family {self.kernel_family!r}")
        if self.trial_space not in (assembly.TRIAL_Z, assembly.TRIAL_Z_UNION_Y):
            errors.append(f"trial_space: must be 'z' or 'z_union_y'")
        if not self.thetas:
            errors.append("thetas: list must be nonempty")
        elif any(t < 0 for t in self.thetas):
            errors.append("thetas: entries must be >= 0 (inf encodes CLS)")
        if not self.n_z:
            errors.append("n_z: list must be nonempty")
        else:
            for n in self.n_z:
                side = math.isqrt(n)
                if side * side != n or side < 2:
                    errors.append(f"n_z: {n} is not a perfect square >= 4")
        if not any(math.isclose(self.delta_interior, c) for c in _DELTA_I_CHOICES):
            errors.append("delta_interior: must be 1, 1/2 or 1/3")
        if not any(math.isclose(self.delta_boundary, c) for c in _DELTA_B_CHOICES):
            errors.append("delta_boundary: must be 1 or 1/2")
        if self.x_source not in ("regular", "halton"):
            errors.append(f"x_source: unknown source {self.x_source!r}")
        if self.eval_grid_n < 2:
            errors.append("eval_grid_n: must be >= 2")
        if self.weight_convention not in solvers.WEIGHT_CONVENTIONS:
            errors.append(
                f"weight_convention: must be one of {solvers.WEIGHT_CONVENTIONS}"
            )
        if self.jobs < 1:
            errors.append("jobs: must be >= 1")
        if errors:
            raise ConfigError("; ".join(errors))

    def kernel(self) -> kernels.Kernel:
        d = len(self.domain_lower)
        if self.kernel_family == kernels.MATERN:
            return kernels.matern_kernel(self.m, d)
        return kernels.Kernel(self.kernel_family, d, epsilon=self.epsilon)

    def domain(self) -> geometry.Domain:
        return geometry.box(self.domain_lower, self.domain_upper)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["thetas"] = ["inf" if math.isinf(t) else t for t in self.thetas]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "thetas" in data:
            data["thetas"] = tuple(_parse_theta(t) for t in data["thetas"])
        for key in ("n_z", "domain_lower", "domain_upper"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _parse_theta(value) -> float:
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("inf", "infinity", "cls"):
            return THETA_CLS
        return float(value)
    return float(value)


def preset(name: str) -> ExperimentConfig:
    """Configs reproducing the desk-scale study layouts."""
    full_sweep = (121, 256, 441, 676, 961, 1296)
    if name == "example1":
        return ExperimentConfig(n_z=full_sweep, out="example1")
    if name == "example2":
        return ExperimentConfig(
            n_z=full_sweep, trial_space=assembly.TRIAL_Z, out="example2"
        )
    if name == "example3":
        return ExperimentConfig(
            n_z=full_sweep, thetas=(THETA_CLS, 0.0, 0.5, 1.0, 2.0), out="example3"
        )
    if name == "example3_scattered":
        return ExperimentConfig(
            problem="peaks3",
            operator="convdiff",
            n_z=full_sweep,
            thetas=(THETA_CLS, 0.0, 0.5, 1.0, 2.0),
            x_source="halton",
            out="example3_scattered",
        )
    if name == "example4_gaussian":
        return ExperimentConfig(
            problem="peaks1",
            kernel_family=kernels.GAUSSIAN,
            trial_space=assembly.TRIAL_Z,
            n_z=(1296,),
            out="example4_gaussian",
        )
    if name == "example4_mq":
        return ExperimentConfig(
            problem="peaks3",
            kernel_family=kernels.MULTIQUADRIC,
            n_z=(121, 256, 441, 676),
            out="example4_mq",
        )
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


@dataclass
class _Cell:
    """One refinement level: geometry, measured fills, assembled system."""

    n_z: int
    h_z: float
    h_x: float
    h_y: float
    system: assembly.CollocationSystem


def _build_cell(config: ExperimentConfig, n_z: int) -> _Cell:
    domain = config.domain()
    side = math.isqrt(n_z)
    z_set = geometry.full_grid(domain, side)
    x_set, y_set = geometry.refined_collocation(
        domain, side, config.delta_interior, config.delta_boundary
    )
    if config.x_source == "halton":
        count = config.n_x if config.n_x is not None else (2 * side - 3) ** 2
        x_set = geometry.halton_points(domain, count)

    res = config.fill_resolution
    h_z = geometry.density_stats(z_set, res).h
    h_x = geometry.density_stats(x_set, res).h
    h_y = geometry.density_stats(y_set, res).h

    bvp = pde.problem(config.problem, config.operator, domain)
    system = assembly.assemble(
        bvp, config.kernel(), x_set, y_set, config.trial_space, z_set
    )
    return _Cell(n_z=n_z, h_z=h_z, h_x=h_x, h_y=h_y, system=system)


def _solve_cell(config: ExperimentConfig, cell: _Cell) -> list[analysis.StudyRow]:
    bvp = pde.problem(config.problem, config.operator, config.domain())
    d = len(config.domain_lower)
    eval_points = analysis.evaluation_grid(config.domain(), config.eval_grid_n)
    exact_jet = bvp.exact.jet(eval_points)   # shared across the theta sweep
    rows = []
    for theta in config.thetas:
        weight = solvers.wls_weight(theta, cell.h_x, cell.h_y, d)
        start = time.perf_counter()
        try:
            if weight.is_cls:
                sol = solvers.solve_cls(cell.system, config.rcond)
            else:
                sol = solvers.solve_wls(
                    cell.system, weight, config.rcond, config.weight_convention
                )
            elapsed = time.perf_counter() - start
            report = analysis.report_from_jets(
                analysis.evaluate_solution(sol, eval_points), exact_jet
            )
            rows.append(
                analysis.StudyRow(
                    n_z=cell.n_z,
                    h_z=cell.h_z,
                    h_x=cell.h_x,
                    h_y=cell.h_y,
                    theta=theta,
                    weight=weight.weight if not weight.is_cls else math.inf,
                    l2_rms=report.l2,
                    h2_rms=report.h2,
                    bdy_rank=sol.diagnostics.bdy_rank,
                    cond_est=sol.diagnostics.cond_estimate,
                    solve_seconds=elapsed,
                )
            )
        except (solvers.SolverError, np.linalg.LinAlgError) as exc:
            rows.append(
                analysis.StudyRow(
                    n_z=cell.n_z,
                    h_z=cell.h_z,
                    h_x=cell.h_x,
                    h_y=cell.h_y,
                    theta=theta,
                    weight=math.nan,
                    l2_rms=math.nan,
                    h2_rms=math.nan,
                    bdy_rank=-1,
                    cond_est=math.nan,
                    solve_seconds=time.perf_counter() - start,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return rows


def _run_level(config: ExperimentConfig, n_z: int) -> list[analysis.StudyRow]:
    try:
        cell = _build_cell(config, n_z)
    except Exception as exc:   # geometry/assembly failures mark every theta row
        return [
            analysis.StudyRow(
                n_z=n_z, h_z=math.nan, h_x=math.nan, h_y=math.nan,
                theta=theta, weight=math.nan, l2_rms=math.nan, h2_rms=math.nan,
                bdy_rank=-1, cond_est=math.nan, solve_seconds=0.0,
                error=f"{type(exc).__name__}: {exc}",
            )
            for theta in config.thetas
        ]
    return _solve_cell(config, cell)


def run_experiment(config: ExperimentConfig) -> analysis.ConvergenceStudy:
    """Run the full (n_Z, theta) sweep described by the config."""
    config.validate()
    levels = sorted(config.n_z)   # increasing n_Z = decreasing h_Z
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            per_level = list(pool.map(lambda n: _run_level(config, n), levels))
    else:
        per_level = [_run_level(config, n) for n in levels]

    study = analysis.ConvergenceStudy()
    for rows in per_level:
        study.rows.extend(rows)
    study.compute_rates(drop_last=config.fit_drop_last)
    return study


def summarize(study: analysis.ConvergenceStudy, config: ExperimentConfig) -> str:
    """Human-readable sweep summary."""
    lines = [
        f"problem={config.problem} operator={config.operator} "
        f"kernel={config.kernel_family}"
        + (f"(m={config.m})" if config.kernel_family == kernels.MATERN else
           f"(eps={config.epsilon})"),
        f"trial_space={config.trial_space} deltas=({config.delta_interior:g},"
        f"{config.delta_boundary:g}) x_source={config.x_source} "
        f"weight_convention={config.weight_convention}",
        "",
        f"{'n_Z':>6} {'h_Z':>9} {'theta':>6} {'l2_rms':>12} {'h2_rms':>12} "
        f"{'rank':>5} {'cond':>9} {'sec':>7}",
    ]
    for row in study.rows:
        if row.error is not None:
            lines.append(
                f"{row.n_z:>6} {'-':>9} {analysis.theta_label(row.theta):>6} "
                f"FAILED: {row.error}"
            )
            continue
        lines.append(
            f"{row.n_z:>6} {row.h_z:>9.4f} {analysis.theta_label(row.theta):>6} "
            f"{row.l2_rms:>12.4e} {row.h2_rms:>12.4e} {row.bdy_rank:>5} "
            f"{row.cond_est:>9.2e} {row.solve_seconds:>7.2f}"
        )
    if study.fitted_rates:
        lines.append("")
        lines.append("fitted rates (log-log LS over all levels):")
        for label, rates in study.fitted_rates.items():
            lines.append(
                f"  theta={label}: l2_rate={rates['l2_rate']:.2f} "
                f"h2_rate={rates['h2_rate']:.2f}"
            )
    return "\n".join(lines) + "\n"
