"""Point sets on axis-aligned boxes and their density statistics.

Generates regular tensor grids (split into interior and boundary), refined
collocation layouts, and Halton quasi-random scatters, and measures fill
distance h, separation distance q and mesh ratio rho = h/q.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

INTERIOR = "interior"
BOUNDARY = "boundary"
CLOSURE = "closure"

_HALTON_PRIMES = (2, 3, 5, 7, 11, 13)

_BOUNDARY_TOL = 1e-14


class GeometryError(ValueError):
    pass


class DegenerateSetError(GeometryError):
    """Raised when density statistics are requested for fewer than 2 points."""


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box [lower_1, upper_1] x ... x [lower_d, upper_d]."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo, up = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.shape != up.shape or lo.ndim != 1:
            raise GeometryError("lower/upper must be vectors of equal length")
        if not np.all(lo < up):
            raise GeometryError("domain requires lower_i < upper_i in every axis")

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def lower_arr(self) -> np.ndarray:
        return np.asarray(self.lower, float)

    @property
    def upper_arr(self) -> np.ndarray:
        return np.asarray(self.upper, float)

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Max-norm distance from each point to the box boundary."""
        points = np.atleast_2d(points)
        per_axis = np.minimum(points - self.lower_arr, self.upper_arr - points)
        return per_axis.min(axis=1)


def box(lower, upper) -> Domain:
    return Domain(tuple(float(v) for v in lower), tuple(float(v) for v in upper))


def default_domain(d: int = 2) -> Domain:
    return box([-1.0] * d, [1.0] * d)


@dataclass
class PointSet:
    """A finite set of pairwise-distinct points tagged by where it lives.

    ``location`` is 'interior' (strictly inside the box), 'boundary' (on
    the box faces), or 'closure' (anywhere in the closed box, e.g. a full
    grid used as trial centers).
    """

    points: np.ndarray
    location: str
    domain: Domain = field(default_factory=default_domain)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, float))
        if self.points.size == 0:
            self.points = self.points.reshape(0, self.domain.d)
        if self.points.shape[1] != self.domain.d:
            raise GeometryError("point dimension does not match domain")
        if self.location not in (INTERIOR, BOUNDARY, CLOSURE):
            raise GeometryError(f"unknown location tag {self.location!r}")
        if len(self.points) > 1:
            tree = cKDTree(self.points)
            dist, _ = tree.query(self.points, k=2)
            if dist[:, 1].min() <= 0.0:
                raise GeometryError("points must be pairwise distinct")
        bd = self.domain.boundary_distance(self.points) if len(self.points) else np.array([])
        if self.location == INTERIOR and len(self.points) and bd.min() <= _BOUNDARY_TOL:
            raise GeometryError("interior point set touches the boundary")
        if self.location == BOUNDARY and len(self.points) and np.abs(bd).max() > _BOUNDARY_TOL:
            raise GeometryError("boundary point set leaves the boundary")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class DensityStats:
    """Fill distance h, separation distance q, and mesh ratio rho = h/q."""

    h: float
    q: float

    @property
    def rho(self) -> float:
        return self.h / self.q


def _grid_coords(domain: Domain, n_per_side: int) -> list[np.ndarray]:
    return [
        np.linspace(domain.lower[i], domain.upper[i], n_per_side)
        for i in range(domain.d)
    ]


def _tensor_points(axes: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def regular_grid(domain: Domain, n_per_side: int) -> tuple[PointSet, PointSet]:
    """Tensor grid with n points per side, split into interior and boundary."""
    if n_per_side < 2:
        raise GeometryError("regular grid needs n_per_side >= 2")
    pts = _tensor_points(_grid_coords(domain, n_per_side))
    on_boundary = domain.boundary_distance(pts) <= _BOUNDARY_TOL
    interior = PointSet(pts[~on_boundary], INTERIOR, domain)
    boundary = PointSet(pts[on_boundary], BOUNDARY, domain)
    return interior, boundary


def full_grid(domain: Domain, n_per_side: int) -> PointSet:
    """The complete tensor grid as one closure-tagged set (trial centers)."""
    if n_per_side < 2:
        raise GeometryError("regular grid needs n_per_side >= 2")
    return PointSet(_tensor_points(_grid_coords(domain, n_per_side)), CLOSURE, domain)


def _refine_per_side(n: int, delta: float) -> int:
    steps = (n - 1) / delta
    if abs(steps - round(steps)) > 1e-9:
        raise GeometryError(f"refinement 1/{1/delta} does not divide the grid")
    return int(round(steps)) + 1


def refined_collocation(
    domain: Domain, z_grid_n: int, delta_interior: float, delta_boundary: float
) -> tuple[PointSet, PointSet]:
    """Collocation sets X (interior) and Y (boundary) refined from a Z grid.

    X is the interior of a regular grid with spacing delta_interior times
    the Z spacing, so the Z interior is contained in X; Y likewise refines
    the Z boundary trace.  Corners belong to Y.
    """
    if delta_interior not in (1.0, 0.5, 1.0 / 3.0):
        raise GeometryError("delta_interior must be 1, 1/2 or 1/3")
    if delta_boundary not in (1.0, 0.5):
        raise GeometryError("delta_boundary must be 1 or 1/2")
    x_set, _ = regular_grid(domain, _refine_per_side(z_grid_n, delta_interior))
    _, y_set = regular_grid(domain, _refine_per_side(z_grid_n, delta_boundary))
    return x_set, y_set


def _radical_inverse(index: int, base: int) -> float:
    inv = 0.0
    denom = 1.0
    while index > 0:
        denom *= base
        index, digit = divmod(index, base)
        inv += digit / denom
    return inv


def halton_points(domain: Domain, n: int, d: int | None = None) -> PointSet:
    """First n Halton points mapped into the open box.

    Indexing starts at 1, skipping the degenerate origin.  Points landing
    within 1e-9 of a face are nudged inward by 1e-6 of the box extent.
    """
    d = domain.d if d is None else d
    if d != domain.d:
        raise GeometryError("requested dimension does not match domain")
    if d > len(_HALTON_PRIMES):
        raise GeometryError(f"Halton generator supports d <= {len(_HALTON_PRIMES)}")
    unit = np.array(
        [
            [_radical_inverse(i, _HALTON_PRIMES[axis]) for axis in range(d)]
            for i in range(1, n + 1)
        ]
    ).reshape(n, d)
    lo, up = domain.lower_arr, domain.upper_arr
    extent = up - lo
    pts = lo + unit * extent
    near_low = pts - lo < 1e-9
    near_up = up - pts < 1e-9
    pts = pts + near_low * 1e-6 * extent - near_up * 1e-6 * extent
    return PointSet(pts, INTERIOR, domain)


def _boundary_probe_points(domain: Domain, resolution: int) -> np.ndarray:
    """Probe points covering every face of the box."""
    d = domain.d
    if d == 1:
        return np.array([[domain.lower[0]], [domain.upper[0]]])
    faces = []
    axes_full = _grid_coords(domain, resolution)
    for axis in range(d):
        others = [axes_full[i] for i in range(d) if i != axis]
        face_grid = _tensor_points(others) if others else np.zeros((1, 0))
        for value in (domain.lower[axis], domain.upper[axis]):
            face = np.empty((len(face_grid), d))
            face[:, axis] = value
            face[:, [i for i in range(d) if i != axis]] = face_grid
            faces.append(face)
    return np.vstack(faces)


def density_stats(point_set: PointSet, resolution: int = 400) -> DensityStats:
    """Measure q exactly and h by brute force over a probe grid.

    The probe set is a regular grid over the box for interior/closure sets
    and over the faces for boundary sets; the returned h is a lower bound
    on the true supremum that converges as the resolution grows.
    """
    pts = point_set.points
    if len(pts) < 2:
        raise DegenerateSetError("density statistics need at least 2 points")
    tree = cKDTree(pts)
    nearest, _ = tree.query(pts, k=2)
    q = 0.5 * nearest[:, 1].min()
    if point_set.location == BOUNDARY:
        probes = _boundary_probe_points(point_set.domain, resolution)
    else:
        probes = _tensor_points(_grid_coords(point_set.domain, resolution))
    dist, _ = tree.query(probes)
    return DensityStats(h=float(dist.max()), q=float(q))


def write_points_csv(point_set: PointSet, path) -> Path:
    """One point per row, coordinates in axis order."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(point_set.domain.d)])
        for p in point_set.points:
            writer.writerow([format(v, ".17g") for v in p])
    return path


def read_points_csv(path, location: str, domain: Domain) -> PointSet:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    pts = np.array([[float(v) for v in row] for row in rows[1:]])
    return PointSet(pts, location, domain)
