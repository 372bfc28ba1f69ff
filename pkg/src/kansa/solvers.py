"""Least-squares solvers for the collocation system.

Two formulations are provided over the same assembled system:

* CLS: minimize the PDE residual on X subject to exact boundary
  interpolation on Y.  The constraint is eliminated through the null space
  of the boundary block: with N = null(a_bdy) and the minimum-norm
  particular solution lam_p = a_bdy^+ g, the coefficients are

      lam = N gamma + lam_p,
      gamma = argmin || a_pde N gamma - (f - a_pde lam_p) ||_2.

* WLS(theta): minimize ||a_pde lam - f||^2 + W ||a_bdy lam - g||^2 with

      W(theta) = (h_Y / h_X)^(d theta / 2) * h_Y^(-2 theta),

  realized by stacking [a_pde; sqrt(W) a_bdy] (the weight applies to the
  squared residual).  A 'linear' convention is also available where the
  stacked boundary block is multiplied by W itself, i.e. the squared
  objective carries W^2.  theta = inf encodes the CLS limit and dispatches
  to the constrained solver.

All factorizations are truncated SVDs; no other regularization or
iterative refinement is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import CollocationSystem

CONVENTION_SQUARED = "squared"
CONVENTION_LINEAR = "linear"

WEIGHT_CONVENTIONS = (CONVENTION_SQUARED, CONVENTION_LINEAR)


class SolverError(RuntimeError):
    pass


def default_rcond(shape: tuple[int, int]) -> float:
    """Truncation threshold relative to sigma_max: max(rows, cols) * eps."""
    return max(shape) * np.finfo(float).eps


def _checked(matrix: np.ndarray, vector: np.ndarray | None = None) -> None:
    if matrix.size == 0:
        raise SolverError("empty matrix")
    if not np.all(np.isfinite(matrix)):
        raise SolverError("matrix contains non-finite entries")
    if vector is not None and not np.all(np.isfinite(vector)):
        raise SolverError("right-hand side contains non-finite entries")


def svd_lstsq(
    matrix: np.ndarray, rhs: np.ndarray, rcond: float | None = None
) -> tuple[np.ndarray, int, np.ndarray]:
    """Minimum-norm least-squares solution via a truncated SVD.

    Singular values at or below rcond * sigma_max are discarded.  Returns
    the solution, the effective rank, and the full singular value list.
    """
    matrix = np.atleast_2d(np.asarray(matrix, float))
    rhs = np.asarray(rhs, float)
    _checked(matrix, rhs)
    if rcond is None:
        rcond = default_rcond(matrix.shape)
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(matrix.shape[1]), 0, s
    rank = int(np.sum(s > rcond * s[0]))
    coeff = (u[:, :rank].T @ rhs) / s[:rank]
    return vh[:rank].T @ coeff, rank, s


def numerical_rank(matrix: np.ndarray, rcond: float | None = None) -> int:
    """Count of singular values above rcond * sigma_max."""
    matrix = np.atleast_2d(np.asarray(matrix, float))
    _checked(matrix)
    if rcond is None:
        rcond = default_rcond(matrix.shape)
    s = np.linalg.svd(matrix, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rcond * s[0]))


def nullspace_basis(matrix: np.ndarray, rcond: float | None = None) -> np.ndarray:
    """Orthonormal basis of the numerical null space (may have 0 columns)."""
    matrix = np.atleast_2d(np.asarray(matrix, float))
    _checked(matrix)
    if rcond is None:
        rcond = default_rcond(matrix.shape)
    _, s, vh = np.linalg.svd(matrix, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > rcond * s[0]))
    return vh[rank:].T.copy()


@dataclass(frozen=True)
class WlsWeight:
    """The boundary weight W(theta) derived from fill distances."""

    theta: float
    h_x: float
    h_y: float
    d: int

    def __post_init__(self):
        if not (self.h_x > 0 and self.h_y > 0):
            raise ValueError("fill distances must be positive")
        if self.theta < 0:
            raise ValueError("theta must be >= 0 (inf encodes CLS)")

    @property
    def weight(self) -> float:
        if math.isinf(self.theta):
            return math.inf
        return (self.h_y / self.h_x) ** (self.d * self.theta / 2.0) * self.h_y ** (
            -2.0 * self.theta
        )

    @property
    def is_cls(self) -> bool:
        return math.isinf(self.theta)


def wls_weight(theta: float, h_x: float, h_y: float, d: int) -> WlsWeight:
    return WlsWeight(float(theta), float(h_x), float(h_y), int(d))


@dataclass
class SolveDiagnostics:
    """Rank, residuals, and conditioning recorded with every solve."""

    method: str                    # 'cls' | 'wls'
    bdy_rank: int
    rcond: float
    pde_residual: float
    bdy_residual: float
    cond_estimate: float           # sigma_max / sigma_min over retained values
    weight: float | None = None
    constraint_free: bool = False


@dataclass
class LeastSquaresSolution:
    """Coefficient vector of the kernel expansion plus solve diagnostics."""

    coefficients: np.ndarray
    trial_centers: np.ndarray
    kernel: object
    diagnostics: SolveDiagnostics


def _retained_cond(s: np.ndarray, rank: int) -> float:
    if rank == 0 or s.size == 0:
        return math.nan
    return float(s[0] / s[rank - 1])


def _spectral_norm_estimate(matrix: np.ndarray, iterations: int = 30) -> float:
    """Deterministic power-iteration estimate of sigma_max."""
    v = np.ones(matrix.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        w = matrix.T @ (matrix @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(np.linalg.norm(matrix @ v))


def _finish(
    system: CollocationSystem, lam: np.ndarray, diag: SolveDiagnostics
) -> LeastSquaresSolution:
    if not np.all(np.isfinite(lam)):
        raise SolverError("solver produced non-finite coefficients")
    diag.pde_residual = float(np.linalg.norm(system.a_pde @ lam - system.f_vec))
    if system.a_bdy.size:
        diag.bdy_residual = float(np.linalg.norm(system.a_bdy @ lam - system.g_vec))
    else:
        diag.bdy_residual = 0.0
    return LeastSquaresSolution(lam, system.trial_centers, system.kernel, diag)


def solve_cls(system: CollocationSystem, rcond: float | None = None) -> LeastSquaresSolution:
    """Constrained least squares by null-space elimination of the boundary block."""
    a_pde, a_bdy = system.a_pde, system.a_bdy
    if a_bdy.size == 0:
        # no boundary conditions: fall back to plain least squares, flagged
        lam, rank, s = svd_lstsq(a_pde, system.f_vec, rcond)
        diag = SolveDiagnostics(
            method="cls",
            bdy_rank=0,
            rcond=default_rcond(a_pde.shape) if rcond is None else rcond,
            pde_residual=math.nan,
            bdy_residual=math.nan,
            cond_estimate=_retained_cond(s, rank),
            constraint_free=True,
        )
        return _finish(system, lam, diag)

    used_rcond = default_rcond(a_bdy.shape) if rcond is None else rcond
    u, s, vh = np.linalg.svd(a_bdy, full_matrices=True)
    bdy_rank = int(np.sum(s > used_rcond * s[0])) if s.size and s[0] > 0 else 0
    basis = vh[bdy_rank:].T
    lam_p = vh[:bdy_rank].T @ ((u[:, :bdy_rank].T @ system.g_vec) / s[:bdy_rank])

    if basis.shape[1] == 0:
        lam = lam_p
        cond = _retained_cond(s, bdy_rank)
    else:
        # The reduced solve inherits the truncation level of the parent PDE
        # block: singular values of a_pde @ N below rcond * sigma_max(a_pde)
        # are rounding artifacts of the projection, and keeping them blows
        # up gamma and, through the imperfect null space, the boundary
        # constraint.
        reduced = a_pde @ basis
        _checked(reduced)
        u_r, s_r, vh_r = np.linalg.svd(reduced, full_matrices=False)
        rcond_r = default_rcond(reduced.shape) if rcond is None else rcond
        cutoff = rcond_r * max(
            s_r[0] if s_r.size else 0.0, _spectral_norm_estimate(a_pde)
        )
        rank_r = int(np.sum(s_r > cutoff))
        rhs = system.f_vec - a_pde @ lam_p
        gamma = vh_r[:rank_r].T @ ((u_r[:, :rank_r].T @ rhs) / s_r[:rank_r])
        lam = lam_p + basis @ gamma
        cond = _retained_cond(s_r, rank_r)

    diag = SolveDiagnostics(
        method="cls",
        bdy_rank=bdy_rank,
        rcond=used_rcond,
        pde_residual=math.nan,
        bdy_residual=math.nan,
        cond_estimate=cond,
    )
    return _finish(system, lam, diag)


def solve_wls(
    system: CollocationSystem,
    weight: WlsWeight,
    rcond: float | None = None,
    convention: str = CONVENTION_SQUARED,
) -> LeastSquaresSolution:
    """Weighted least squares on the stacked system."""
    if convention not in WEIGHT_CONVENTIONS:
        raise ValueError(f"unknown weight convention {convention!r}")
    if weight.is_cls:
        return solve_cls(system, rcond)
    w = weight.weight
    scale = math.sqrt(w) if convention == CONVENTION_SQUARED else w
    stacked = np.vstack([system.a_pde, scale * system.a_bdy])
    rhs = np.concatenate([system.f_vec, scale * system.g_vec])
    lam, rank, s = svd_lstsq(stacked, rhs, rcond)
    diag = SolveDiagnostics(
        method="wls",
        bdy_rank=numerical_rank(system.a_bdy, rcond) if system.a_bdy.size else 0,
        rcond=default_rcond(stacked.shape) if rcond is None else rcond,
        pde_residual=math.nan,
        bdy_residual=math.nan,
        cond_estimate=_retained_cond(s, rank),
        weight=w,
    )
    return _finish(system, lam, diag)


def objective_j(
    system: CollocationSystem, weight: WlsWeight, coefficients: np.ndarray
) -> float:
    """sqrt(||a_pde lam - f||^2 + W ||a_bdy lam - g||^2).

    With zero right-hand sides this is the discrete graph norm of the
    expansion itself.  For theta = inf the value is the PDE residual when
    the boundary residual vanishes and inf otherwise.
    """
    pde = float(np.linalg.norm(system.a_pde @ coefficients - system.f_vec))
    bdy = float(np.linalg.norm(system.a_bdy @ coefficients - system.g_vec))
    if weight.is_cls:
        return pde if bdy == 0.0 else math.inf
    return math.sqrt(pde**2 + weight.weight * bdy**2)
