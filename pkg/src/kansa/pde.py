"""Elliptic operators, manufactured solutions, and derived problem data.

The differential operator is represented in expanded (non-divergence) form

    L u(x) = sum_ij A_ij(x) d_i d_j u(x) + sum_j B_j(x) d_j u(x) + C(x) u(x)

and applied pointwise to second-order jets.  Manufactured solutions carry
exact value/gradient/Hessian jets computed by forward-mode automatic
differentiation (truncated second-order Taylor arithmetic), so the data
f = L u* and g = u*|_boundary are analytic, never interpolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Domain, default_domain
from .kernels import Kernel, jet_matrices


class Taylor2:
    """Second-order multivariate Taylor value: value, gradient, Hessian.

    Arithmetic follows the chain rule truncated after second order.  The
    components are numpy arrays over a batch of evaluation points, shaped
    (n,), (n, d) and (n, d, d).
    """

    __slots__ = ("value", "gradient", "hessian")

    def __init__(self, value, gradient, hessian):
        self.value = value
        self.gradient = gradient
        self.hessian = hessian

    @staticmethod
    def coordinates(points: np.ndarray) -> list["Taylor2"]:
        """Seed jets for each coordinate of a batch of points."""
        points = np.atleast_2d(np.asarray(points, float))
        n, d = points.shape
        coords = []
        for i in range(d):
            grad = np.zeros((n, d))
            grad[:, i] = 1.0
            coords.append(Taylor2(points[:, i].copy(), grad, np.zeros((n, d, d))))
        return coords

    @staticmethod
    def constant(c: float, like: "Taylor2") -> "Taylor2":
        n, d = like.gradient.shape
        return Taylor2(np.full(n, float(c)), np.zeros((n, d)), np.zeros((n, d, d)))

    def _lift(self, other):
        if isinstance(other, Taylor2):
            return other
        return Taylor2.constant(other, self)

    def __add__(self, other):
        o = self._lift(other)
        return Taylor2(self.value + o.value, self.gradient + o.gradient,
                       self.hessian + o.hessian)

    __radd__ = __add__

    def __neg__(self):
        return Taylor2(-self.value, -self.gradient, -self.hessian)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        sym = (
            self.gradient[:, :, None] * o.gradient[:, None, :]
            + o.gradient[:, :, None] * self.gradient[:, None, :]
        )
        return Taylor2(
            self.value * o.value,
            self.value[:, None] * o.gradient + o.value[:, None] * self.gradient,
            self.value[:, None, None] * o.hessian
            + o.value[:, None, None] * self.hessian
            + sym,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * self._lift(other)._reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def _reciprocal(self):
        inv = 1.0 / self.value
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __pow__(self, p):
        if p == 0:
            return Taylor2.constant(1.0, self)
        if p == 1:
            return self
        v = self.value
        return self._chain(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def _chain(self, f0, f1, f2):
        """Compose with a scalar function given f(v), f'(v), f''(v)."""
        outer = self.gradient[:, :, None] * self.gradient[:, None, :]
        return Taylor2(
            f0,
            f1[:, None] * self.gradient,
            f1[:, None, None] * self.hessian + f2[:, None, None] * outer,
        )


def jet_exp(u: Taylor2) -> Taylor2:
    e = np.exp(u.value)
    return u._chain(e, e, e)


def jet_sin(u: Taylor2) -> Taylor2:
    s, c = np.sin(u.value), np.cos(u.value)
    return u._chain(s, c, -s)


def jet_cos(u: Taylor2) -> Taylor2:
    s, c = np.sin(u.value), np.cos(u.value)
    return u._chain(c, -s, -c)


@dataclass
class ManufacturedSolution:
    """A chosen exact solution with analytic second-order jets."""

    name: str
    builder: Callable[[list[Taylor2]], Taylor2]

    def jet(self, points: np.ndarray) -> Taylor2:
        return self.builder(Taylor2.coordinates(points))

    def values(self, points: np.ndarray) -> np.ndarray:
        return self.jet(points).value


def _trig(coords):
    x, y = coords
    return jet_sin(x * (math.pi / 2)) * jet_cos(y * (math.pi / 2))


def _peaks(coords, scale):
    s = coords[0] * scale
    t = coords[1] * scale
    a = 3.0 * (1 - s) ** 2 * jet_exp(-(s**2) - (t + 1) ** 2)
    b = 10.0 * (s / 5.0 - s**3 - t**5) * jet_exp(-(s**2) - t**2)
    c = (1.0 / 3.0) * jet_exp(-((s + 1) ** 2) - t**2)
    return a - b - c


def _franke(coords):
    s = coords[0] * 2.0 - 1.0
    t = coords[1] * 2.0 - 1.0
    return (
        0.75 * jet_exp(-((9 * s - 2) ** 2 + (9 * t - 2) ** 2) / 4.0)
        + 0.75 * jet_exp(-((9 * s + 1) ** 2) / 49.0 - (9 * t + 1) / 10.0)
        + 0.5 * jet_exp(-((9 * s - 7) ** 2 + (9 * t - 3) ** 2) / 4.0)
        - 0.2 * jet_exp(-((9 * s - 4) ** 2) - (9 * t - 7) ** 2)
    )


SOLUTIONS: dict[str, ManufacturedSolution] = {
    "trig": ManufacturedSolution("trig", _trig),
    "peaks3": ManufacturedSolution("peaks3", lambda c: _peaks(c, 3.0)),
    "peaks1": ManufacturedSolution("peaks1", lambda c: _peaks(c, 1.0)),
    "franke": ManufacturedSolution("franke", _franke),
}


def solution(name: str) -> ManufacturedSolution:
    try:
        return SOLUTIONS[name]
    except KeyError:
        raise KeyError(
            f"unknown solution {name!r}; choose from {sorted(SOLUTIONS)}"
        ) from None


def kernel_translate_solution(kernel: Kernel, center: np.ndarray) -> ManufacturedSolution:
    """The kernel translate Phi(. - center) as a manufactured solution.

    Used for exact-recovery tests: the solution lies in any trial space
    whose centers include ``center``.
    """
    center = np.asarray(center, float)

    class _KernelJetSolution(ManufacturedSolution):
        def jet(self, points):
            v, g, h = jet_matrices(kernel, np.atleast_2d(points), center[None, :])
            return Taylor2(v[:, 0], g[:, 0, :], h[:, 0, :, :])

    return _KernelJetSolution("kernel_translate", builder=None)


@dataclass
class EllipticOperator:
    """Expanded-form second-order operator with pointwise coefficients.

    ``a`` maps points (n, d) to symmetric matrices (n, d, d) or is None for
    the identity (Laplacian head); ``b`` maps to (n, d) or None; ``c`` maps
    to (n,) or None.
    """

    name: str
    a: Callable[[np.ndarray], np.ndarray] | None = None
    b: Callable[[np.ndarray], np.ndarray] | None = None
    c: Callable[[np.ndarray], np.ndarray] | None = None


def apply_operator(op: EllipticOperator, jet, points: np.ndarray) -> np.ndarray:
    """Pointwise L applied to a jet batch: sum A_ij H_ij + sum B_j g_j + C v.

    ``jet`` is anything exposing value/gradient/hessian arrays over the
    batch (a Taylor2, or a single KernelJet with points of shape (d,)).
    """
    points = np.atleast_2d(np.asarray(points, float))
    value = np.atleast_1d(np.asarray(jet.value, float))
    gradient = np.asarray(jet.gradient, float).reshape(len(points), -1)
    hessian = np.asarray(jet.hessian, float).reshape(len(points), points.shape[1], -1)

    if op.a is None:
        out = np.einsum("nii->n", hessian)
    else:
        out = np.einsum("nij,nij->n", op.a(points), hessian)
    if op.b is not None:
        out = out + np.einsum("nj,nj->n", op.b(points), gradient)
    if op.c is not None:
        out = out + op.c(points) * value
    if np.ndim(jet.value) == 0:
        return float(out[0])
    return out


OPERATORS: dict[str, EllipticOperator] = {
    "laplace": EllipticOperator("laplace"),
    "convdiff": EllipticOperator(
        "convdiff",
        b=lambda p: np.broadcast_to(np.array([2.0, 3.0]), p.shape).copy(),
        c=lambda p: np.full(len(p), -4.0),
    ),
    "helmholtz_x2": EllipticOperator(
        "helmholtz_x2", c=lambda p: p[:, 0] ** 2 + 1.0
    ),
    "helmholtz_x": EllipticOperator("helmholtz_x", c=lambda p: p[:, 0].copy()),
}


def operator(name: str) -> EllipticOperator:
    try:
        return OPERATORS[name]
    except KeyError:
        raise KeyError(
            f"unknown operator {name!r}; choose from {sorted(OPERATORS)}"
        ) from None


@dataclass
class BoundaryValueProblem:
    """Dirichlet problem L u = f in the box, u = g on its boundary.

    f and g are derived from the manufactured solution, so errors of a
    numerical solution are exactly measurable.
    """

    operator: EllipticOperator
    exact: ManufacturedSolution
    domain: Domain

    def f(self, points: np.ndarray) -> np.ndarray:
        return apply_operator(self.operator, self.exact.jet(points), points)

    def g(self, points: np.ndarray) -> np.ndarray:
        return self.exact.values(points)


def problem(
    solution_name: str, operator_name: str, domain: Domain | None = None
) -> BoundaryValueProblem:
    return BoundaryValueProblem(
        operator(operator_name),
        solution(solution_name),
        default_domain(2) if domain is None else domain,
    )
