"""Evaluation of kernel expansions and discrete error norms.

Numerical solutions u = sum lam_j Phi(. - t_j) are evaluated with full
second-order jets on a regular evaluation grid (denser than the collocation
sets), and compared against the manufactured solution in discrete L2 and H2
norms.  Both the plain little-l2 sums and their RMS normalization (divide
by sqrt(n)) are recorded; reported numbers and rate fits use the RMS form
so values are comparable across grid resolutions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path

import numpy as np

from .geometry import Domain
from .kernels import jet_matrices
from .pde import ManufacturedSolution, Taylor2
from .solvers import LeastSquaresSolution

_EVAL_BLOCK = 2048

CSV_COLUMNS = [
    "n_Z",
    "h_Z",
    "h_X",
    "h_Y",
    "theta",
    "weight_W",
    "l2_rms",
    "h2_rms",
    "bdy_rank",
    "cond_est",
    "solve_seconds",
]


def evaluate_solution(solution: LeastSquaresSolution, points: np.ndarray) -> Taylor2:
    """Jet of the kernel expansion at each point, evaluated in blocks."""
    points = np.atleast_2d(np.asarray(points, float))
    n, d = points.shape
    lam = solution.coefficients
    value = np.empty(n)
    gradient = np.empty((n, d))
    hessian = np.empty((n, d, d))
    for start in range(0, n, _EVAL_BLOCK):
        blk = points[start : start + _EVAL_BLOCK]
        v, g, h = jet_matrices(solution.kernel, blk, solution.trial_centers)
        value[start : start + _EVAL_BLOCK] = v @ lam
        gradient[start : start + _EVAL_BLOCK] = np.einsum("ncd,c->nd", g, lam)
        hessian[start : start + _EVAL_BLOCK] = np.einsum("ncij,c->nij", h, lam)
    return Taylor2(value, gradient, hessian)


def _multi_indices(d: int) -> list[tuple[int, ...]]:
    """All derivative multi-indices with |alpha| <= 2, each counted once."""
    indices = [tuple([0] * d)]
    for i in range(d):
        alpha = [0] * d
        alpha[i] = 1
        indices.append(tuple(alpha))
    for i in range(d):
        for j in range(i, d):
            alpha = [0] * d
            alpha[i] += 1
            alpha[j] += 1
            indices.append(tuple(alpha))
    return indices


@dataclass
class ErrorReport:
    """Discrete error norms over the evaluation set.

    ``l2`` and ``h2`` are RMS-normalized; ``l2_raw`` / ``h2_raw`` carry the
    plain root-sum-of-squares.  ``per_derivative`` maps each multi-index
    with |alpha| <= 2 to the RMS of that derivative's error.
    """

    l2: float
    h2: float
    per_derivative: dict[tuple[int, ...], float]
    eval_set_size: int
    l2_raw: float
    h2_raw: float


def report_from_jets(numeric: Taylor2, exact: Taylor2) -> ErrorReport:
    """Error norms from precomputed jets of the numeric and exact solutions."""
    n, d = numeric.gradient.shape
    diff_v = numeric.value - exact.value
    diff_g = numeric.gradient - exact.gradient
    diff_h = numeric.hessian - exact.hessian

    per = {}
    total_sq = 0.0
    for alpha in _multi_indices(d):
        order = sum(alpha)
        if order == 0:
            e = diff_v
        elif order == 1:
            e = diff_g[:, alpha.index(1)]
        else:
            pair = [i for i, a in enumerate(alpha) for _ in range(a)]
            e = diff_h[:, pair[0], pair[1]]
        mean_sq = float(np.mean(e**2))
        per[alpha] = math.sqrt(mean_sq)
        total_sq += mean_sq

    l2 = per[tuple([0] * d)]
    h2 = math.sqrt(total_sq)
    return ErrorReport(
        l2=l2,
        h2=h2,
        per_derivative=per,
        eval_set_size=n,
        l2_raw=l2 * math.sqrt(n),
        h2_raw=h2 * math.sqrt(n),
    )


def evaluation_grid(domain: Domain, n_per_side: int) -> np.ndarray:
    """Regular grid over the closed box used for error measurement."""
    axes = [
        np.linspace(domain.lower[i], domain.upper[i], n_per_side)
        for i in range(domain.d)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def error_report(
    solution: LeastSquaresSolution,
    exact: ManufacturedSolution,
    domain: Domain,
    eval_grid_n: int = 100,
) -> ErrorReport:
    points = evaluation_grid(domain, eval_grid_n)
    return report_from_jets(evaluate_solution(solution, points), exact.jet(points))


def fit_rate(pairs) -> float:
    """Slope of the least-squares line of log(error) against log(h)."""
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("rate fitting needs at least 2 (h, error) pairs")
    h = np.array([p[0] for p in pairs], float)
    e = np.array([p[1] for p in pairs], float)
    if np.any(h <= 0) or np.any(e <= 0):
        raise ValueError("rate fitting needs positive h and error values")
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


@dataclass
class StudyRow:
    """One (refinement level, solver) cell of a convergence study."""

    n_z: int
    h_z: float
    h_x: float
    h_y: float
    theta: float                  # inf encodes CLS
    weight: float
    l2_rms: float
    h2_rms: float
    bdy_rank: int
    cond_est: float
    solve_seconds: float
    error: str | None = None      # row-level failure marker


@dataclass
class ConvergenceStudy:
    """Tabulated error rows plus log-log fitted rates per solver label."""

    rows: list[StudyRow] = field(default_factory=list)
    fitted_rates: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def all_solved(self) -> bool:
        return all(row.error is None for row in self.rows)

    def theta_labels(self) -> list[str]:
        seen = []
        for row in self.rows:
            label = theta_label(row.theta)
            if label not in seen:
                seen.append(label)
        return seen

    def rows_for(self, label: str) -> list[StudyRow]:
        return [r for r in self.rows if theta_label(r.theta) == label]

    def compute_rates(self, drop_last: int = 0) -> None:
        """Fit rates per theta group over rows sorted by decreasing h_Z."""
        self.fitted_rates = {}
        for label in self.theta_labels():
            rows = [r for r in self.rows_for(label) if r.error is None]
            rows.sort(key=lambda r: -r.h_z)
            if drop_last:
                rows = rows[:-drop_last] if len(rows) > drop_last else []
            usable = [
                r
                for r in rows
                if r.l2_rms > 0 and r.h2_rms > 0 and math.isfinite(r.l2_rms)
            ]
            if len(usable) < 2:
                continue
            self.fitted_rates[label] = {
                "l2_rate": fit_rate([(r.h_z, r.l2_rms) for r in usable]),
                "h2_rate": fit_rate([(r.h_z, r.h2_rms) for r in usable]),
            }

    def to_csv(self, path=None, timestamp: str | None = None) -> str:
        """Render the study as CSV; identical inputs give identical bytes
        apart from the leading timestamp comment line."""
        buf = StringIO()
        if timestamp is not None:
            buf.write(f"# generated {timestamp}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(
                [
                    row.n_z,
                    _fmt(row.h_z),
                    _fmt(row.h_x),
                    _fmt(row.h_y),
                    theta_label(row.theta),
                    _fmt(row.weight),
                    _fmt(row.l2_rms),
                    _fmt(row.h2_rms),
                    row.bdy_rank,
                    _fmt(row.cond_est),
                    _fmt(row.solve_seconds),
                ]
            )
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def theta_label(theta: float) -> str:
    if math.isinf(theta):
        return "inf"
    return format(theta, "g")


def _fmt(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return format(value, ".12g")
