"""Assembly of the overdetermined collocation system.

Builds the PDE block over the interior collocation points X and the
boundary block over Y, for trial centers taken either from Z alone or from
the concatenation of Z and Y:

    a_pde[i, j] = L Phi(x_i - t_j)        (n_X rows)
    a_bdy[i, j] = Phi(y_i - t_j)          (n_Y rows)

with right-hand sides f(x_i) and g(y_i) from the boundary value problem.
For the Z-union-Y trial space the center list keeps all n_Z + n_Y columns;
boundary trial centers coincide with boundary collocation points by design,
and the resulting duplicate columns are left to the rank-revealing solvers.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import BOUNDARY, PointSet
from .kernels import Kernel, jet_matrices, value_matrix
from .pde import BoundaryValueProblem

TRIAL_Z = "z"
TRIAL_Z_UNION_Y = "z_union_y"

_ROW_BLOCK = 1024


class AssemblyError(ValueError):
    pass


@dataclass
class CollocationSystem:
    """Dense collocation blocks and right-hand sides over one trial set."""

    a_pde: np.ndarray
    a_bdy: np.ndarray
    f_vec: np.ndarray
    g_vec: np.ndarray
    trial_centers: np.ndarray
    trial_space: str
    kernel: Kernel

    @property
    def n_trial(self) -> int:
        return len(self.trial_centers)


def operator_rows(
    problem: BoundaryValueProblem,
    kernel: Kernel,
    points: np.ndarray,
    centers: np.ndarray,
    row_block: int = _ROW_BLOCK,
) -> np.ndarray:
    """Matrix of L Phi(p_i - c_j), assembled in row blocks to bound memory.

    Entry (i, j) equals apply_operator on the jet of the j-th translate at
    the i-th point; the contraction is carried out for all columns at once.
    """
    points = np.atleast_2d(points)
    op = problem.operator
    out = np.empty((len(points), len(centers)))
    for start in range(0, len(points), row_block):
        blk = points[start : start + row_block]
        v, g, h = jet_matrices(kernel, blk, centers)
        if op.a is None:
            rows = np.einsum("ncii->nc", h)
        else:
            rows = np.einsum("nij,ncij->nc", op.a(blk), h)
        if op.b is not None:
            rows += np.einsum("nj,ncj->nc", op.b(blk), g)
        if op.c is not None:
            rows += op.c(blk)[:, None] * v
        out[start : start + row_block] = rows
    return out


def assemble(
    problem: BoundaryValueProblem,
    kernel: Kernel,
    x_set: PointSet,
    y_set: PointSet,
    trial_space: str,
    z_set: PointSet,
) -> CollocationSystem:
    """Assemble the PDE and boundary collocation blocks."""
    if trial_space not in (TRIAL_Z, TRIAL_Z_UNION_Y):
        raise AssemblyError(f"unknown trial space {trial_space!r}")
    if y_set.location != BOUNDARY:
        raise AssemblyError("Y must be a boundary point set")
    if x_set.location == BOUNDARY:
        raise AssemblyError("X must be an interior (or closure) point set")

    if trial_space == TRIAL_Z_UNION_Y:
        centers = np.vstack([z_set.points, y_set.points])
    else:
        centers = z_set.points.copy()

    n_x, n_y, n_t = len(x_set), len(y_set), len(centers)
    if n_x + n_y < n_t:
        raise AssemblyError(
            f"underdetermined system: {n_x} + {n_y} collocation conditions "
            f"for {n_t} trial centers"
        )

    a_pde = operator_rows(problem, kernel, x_set.points, centers)
    a_bdy = value_matrix(kernel, y_set.points, centers)
    return CollocationSystem(
        a_pde=a_pde,
        a_bdy=a_bdy,
        f_vec=problem.f(x_set.points),
        g_vec=problem.g(y_set.points),
        trial_centers=centers,
        trial_space=trial_space,
        kernel=kernel,
    )


def dump_system(system: CollocationSystem, directory, stem: str = "system") -> Path:
    """Write the dense blocks for offline inspection.

    Produces ``<stem>.npz`` with row-major float64 arrays a_pde, a_bdy,
    f_vec, g_vec, trial_centers, plus a small text header describing the
    shapes.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    npz = directory / f"{stem}.npz"
    np.savez(
        npz,
        a_pde=system.a_pde,
        a_bdy=system.a_bdy,
        f_vec=system.f_vec,
        g_vec=system.g_vec,
        trial_centers=system.trial_centers,
    )
    header = directory / f"{stem}.txt"
    header.write_text(
        "dense collocation system, row-major float64 arrays in the .npz\n"
        f"a_pde: {system.a_pde.shape}\n"
        f"a_bdy: {system.a_bdy.shape}\n"
        f"trial_space: {system.trial_space}\n"
        f"kernel: {system.kernel}\n"
    )
    return npz
