"""Meshfree strong-form kernel collocation on axis-aligned boxes.

Solves second-order elliptic Dirichlet problems by least squares over a
trial space of radial kernel translates, with constrained (CLS) and
weighted (WLS) formulations, and runs manufactured-solution convergence
studies from declarative configs.
"""

from .analysis import ConvergenceStudy, ErrorReport, error_report, fit_rate
from .assembly import TRIAL_Z, TRIAL_Z_UNION_Y, CollocationSystem, assemble
from .experiment import ExperimentConfig, preset, run_experiment
from .geometry import (
    Domain,
    PointSet,
    box,
    default_domain,
    density_stats,
    full_grid,
    halton_points,
    refined_collocation,
    regular_grid,
)
from .kernels import (
    Kernel,
    gaussian_kernel,
    kernel_jet,
    matern_kernel,
    multiquadric_kernel,
)
from .pde import BoundaryValueProblem, apply_operator, operator, problem, solution
from .solvers import (
    LeastSquaresSolution,
    WlsWeight,
    objective_j,
    solve_cls,
    solve_wls,
    svd_lstsq,
    wls_weight,
)
from .special_functions import bessel_k, matern_profile

__version__ = "0.1.0"

__all__ = [
    "BoundaryValueProblem",
    "CollocationSystem",
    "ConvergenceStudy",
    "Domain",
    "ErrorReport",
    "ExperimentConfig",
    "Kernel",
    "LeastSquaresSolution",
    "PointSet",
    "TRIAL_Z",
    "TRIAL_Z_UNION_Y",
    "WlsWeight",
    "apply_operator",
    "assemble",
    "bessel_k",
    "box",
    "default_domain",
    "density_stats",
    "error_report",
    "fit_rate",
    "full_grid",
    "gaussian_kernel",
    "halton_points",
    "kernel_jet",
    "matern_kernel",
    "matern_profile",
    "multiquadric_kernel",
    "objective_j",
    "operator",
    "preset",
    "problem",
    "refined_collocation",
    "regular_grid",
    "run_experiment",
    "solution",
    "solve_cls",
    "solve_wls",
    "svd_lstsq",
    "wls_weight",
]
