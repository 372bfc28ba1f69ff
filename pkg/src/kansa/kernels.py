"""Radial kernels with exact derivative jets up to second order.

Three families are provided:

* Whittle-Matern-Sobolev: Phi(x) = ||x||^nu K_nu(||x||) with nu = m - d/2,
  used unscaled and unnormalized.
* Gaussian: Phi(x) = exp(-eps^2 ||x||^2).
* Multiquadric: Phi(x) = sqrt(1 + eps^2 ||x||^2).

A jet carries the value, gradient, and Hessian of Phi(x - z) with respect to
x, which is enough to apply any second-order differential operator to kernel
translates.  For the Matern family with r = ||x - z||:

    value        = phi_nu(r)
    gradient_i   = -(x - z)_i phi_{nu-1}(r)
    hessian_ij   = -delta_ij phi_{nu-1}(r) + (x - z)_i (x - z)_j phi_{nu-2}(r)

which follows from phi_nu'(r) = -r phi_{nu-1}(r).  Jets require nu >= 2 so
the Hessian references phi_{nu-2} with nu - 2 >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .special_functions import matern_profile_array, profile_at_zero

MATERN = "matern"
GAUSSIAN = "gaussian"
MULTIQUADRIC = "multiquadric"

FAMILIES = (MATERN, GAUSSIAN, MULTIQUADRIC)


class KernelParameterError(ValueError):
    """Raised for inconsistent kernel parameters."""


@dataclass(frozen=True)
class Kernel:
    """Immutable descriptor of one radial kernel."""

    family: str
    d: int
    m: int | None = None
    epsilon: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelParameterError(f"unknown kernel family {self.family!r}")
        if self.d < 1:
            raise KernelParameterError(f"dimension must be >= 1, got {self.d}")
        if self.family == MATERN:
            if self.m is None:
                raise KernelParameterError("Matern kernel requires smoothness m")
            if self.nu < 2:
                raise KernelParameterError(
                    f"Matern smoothness m={self.m}, d={self.d} gives "
                    f"nu={self.nu} < 2; second-order jets need nu >= 2"
                )
        elif not self.epsilon > 0:
            raise KernelParameterError(f"shape epsilon must be positive, got {self.epsilon}")

    @property
    def nu(self) -> float:
        if self.family != MATERN:
            raise KernelParameterError("nu is only defined for the Matern family")
        return self.m - self.d / 2.0


def matern_kernel(m: int, d: int) -> Kernel:
    return Kernel(MATERN, d, m=m)


def gaussian_kernel(d: int, epsilon: float = 1.0) -> Kernel:
    return Kernel(GAUSSIAN, d, epsilon=epsilon)


def multiquadric_kernel(d: int, epsilon: float = 1.0) -> Kernel:
    return Kernel(MULTIQUADRIC, d, epsilon=epsilon)


@dataclass
class KernelJet:
    """Value, gradient and Hessian of Phi(x - z) with respect to x."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def jet_matrices(
    kernel: Kernel, points: np.ndarray, centers: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairwise jets of all kernel translates.

    Returns arrays of shape (n, c), (n, c, d) and (n, c, d, d) holding the
    value, gradient and Hessian of Phi(p_i - c_j) for every point/center
    pair.  Hessians are exactly symmetric as stored.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    d = kernel.d
    if points.shape[1] != d or centers.shape[1] != d:
        raise KernelParameterError("point dimension does not match kernel dimension")
    diff = points[:, None, :] - centers[None, :, :]
    r2 = np.einsum("ncd,ncd->nc", diff, diff)
    r = np.sqrt(r2)
    eye = np.eye(d)
    outer = diff[:, :, :, None] * diff[:, :, None, :]

    if kernel.family == MATERN:
        nu = kernel.nu
        value = matern_profile_array(nu, r)
        p1 = matern_profile_array(nu - 1, r)
        # phi_{nu-2} is singular at r = 0 when nu == 2, but it only enters
        # multiplied by the outer product, which vanishes there.
        zero = r == 0.0
        if nu - 2 == 0 and zero.any():
            rsafe = np.where(zero, 1.0, r)
            p2 = matern_profile_array(nu - 2, rsafe)
            p2[zero] = 0.0
        else:
            p2 = matern_profile_array(nu - 2, r)
        grad = -diff * p1[:, :, None]
        hess = -p1[:, :, None, None] * eye + outer * p2[:, :, None, None]
        return value, grad, hess

    e2 = kernel.epsilon**2
    if kernel.family == GAUSSIAN:
        value = np.exp(-e2 * r2)
        grad = -2.0 * e2 * diff * value[:, :, None]
        hess = (-2.0 * e2 * eye + 4.0 * e2 * e2 * outer) * value[:, :, None, None]
        return value, grad, hess

    # multiquadric
    q = np.sqrt(1.0 + e2 * r2)
    value = q
    grad = e2 * diff / q[:, :, None]
    hess = (e2 * eye) / q[:, :, None, None] - (e2 * e2 * outer) / (q**3)[:, :, None, None]
    return value, grad, hess


def value_matrix(kernel: Kernel, points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pairwise kernel values Phi(p_i - c_j), shape (n, c)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    diff = points[:, None, :] - centers[None, :, :]
    r2 = np.einsum("ncd,ncd->nc", diff, diff)
    if kernel.family == MATERN:
        return matern_profile_array(kernel.nu, np.sqrt(r2))
    if kernel.family == GAUSSIAN:
        return np.exp(-kernel.epsilon**2 * r2)
    return np.sqrt(1.0 + kernel.epsilon**2 * r2)


def kernel_jet(kernel: Kernel, x: np.ndarray, z: np.ndarray) -> KernelJet:
    """Jet of the translate Phi(. - z) at the point x."""
    v, g, h = jet_matrices(kernel, np.asarray(x, float)[None, :], np.asarray(z, float)[None, :])
    return KernelJet(float(v[0, 0]), g[0, 0].copy(), h[0, 0].copy())


def peak_value(kernel: Kernel) -> float:
    """Phi(0), the kernel value at its center."""
    if kernel.family == MATERN:
        return profile_at_zero(kernel.nu)
    return 1.0


def trace_laplacian(jet: KernelJet) -> float:
    """Sum of the Hessian diagonal."""
    return float(np.trace(jet.hessian))
