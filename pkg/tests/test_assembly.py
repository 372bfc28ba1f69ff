"""Collocation system assembly: entries, shapes, and reproduction."""

import numpy as np
import pytest

from kansa.assembly import (
    TRIAL_Z,
    TRIAL_Z_UNION_Y,
    AssemblyError,
    assemble,
    dump_system,
)
from kansa.geometry import (
    BOUNDARY,
    CLOSURE,
    INTERIOR,
    PointSet,
    default_domain,
    full_grid,
    refined_collocation,
)
from kansa.kernels import kernel_jet, matern_kernel, peak_value
from kansa.pde import apply_operator, kernel_translate_solution, problem

SQUARE = default_domain(2)
K4 = matern_kernel(4, 2)


def small_layout(nside=5, delta=0.5):
    z = full_grid(SQUARE, nside)
    x, y = refined_collocation(SQUARE, nside, delta, delta)
    return z, x, y


def test_single_center_laplacian_entry():
    bvp = problem("trig", "laplace")
    z = PointSet(np.array([[0.0, 0.0]]), CLOSURE, SQUARE)
    x = PointSet(np.array([[0.0, 0.0]]), INTERIOR, SQUARE)
    y = PointSet(np.array([[1.0, 0.0]]), BOUNDARY, SQUARE)
    system = assemble(bvp, K4, x, y, TRIAL_Z, z)
    np.testing.assert_allclose(system.a_pde, [[-4.0]], rtol=1e-14)


def test_union_trial_space_shapes():
    # n_Z = 11^2, delta = 1/2:  361 x 201 PDE block, 80 x 201 boundary block
    bvp = problem("trig", "laplace")
    z, x, y = small_layout(11)
    system = assemble(bvp, K4, x, y, TRIAL_Z_UNION_Y, z)
    assert system.a_pde.shape == (361, 201)
    assert system.a_bdy.shape == (80, 201)
    assert system.f_vec.shape == (361,)
    assert system.g_vec.shape == (80,)
    assert system.n_trial == 121 + 80


def test_boundary_block_diagonal_peak():
    # every boundary row has the kernel peak in its own center's column
    bvp = problem("trig", "laplace")
    z, x, y = small_layout(5)
    system = assemble(bvp, K4, x, y, TRIAL_Z_UNION_Y, z)
    n_z = len(z)
    peak = peak_value(K4)
    for i in range(len(y)):
        assert system.a_bdy[i, n_z + i] == pytest.approx(peak, rel=1e-14)
        assert system.a_bdy[i].max() == pytest.approx(peak, rel=1e-14)


def test_boundary_block_symmetric_on_matched_centers():
    # with trial = Z and Y = Z's boundary trace, the boundary block restricted
    # to boundary-center columns is a symmetric kernel matrix
    bvp = problem("trig", "laplace")
    z, x, y = small_layout(5, delta=1.0)
    system = assemble(bvp, K4, x, y, TRIAL_Z, z)
    zb = {tuple(p): j for j, p in enumerate(z.points)}
    cols = [zb[tuple(p)] for p in y.points]
    sub = system.a_bdy[:, cols]
    np.testing.assert_allclose(sub, sub.T, rtol=1e-13)


def test_column_order_follows_centers():
    bvp = problem("trig", "laplace")
    z, x, y = small_layout(5)
    system = assemble(bvp, K4, x, y, TRIAL_Z, z)
    # permuting the trial centers permutes the columns identically
    perm = np.random.default_rng(0).permutation(system.n_trial)
    zp = PointSet(z.points[perm], CLOSURE, SQUARE)
    permuted = assemble(bvp, K4, x, y, TRIAL_Z, zp)
    np.testing.assert_allclose(permuted.a_pde, system.a_pde[:, perm], rtol=1e-14)
    np.testing.assert_allclose(permuted.a_bdy, system.a_bdy[:, perm], rtol=1e-14)


@pytest.mark.parametrize("oname", ["laplace", "convdiff", "helmholtz_x2"])
def test_reproduction_against_pointwise_operator(oname):
    # (A_pde lam)_i equals L u(x_i) for u = sum lam_j Phi(. - t_j)
    bvp = problem("trig", oname)
    z, x, y = small_layout(4, delta=1.0)
    system = assemble(bvp, K4, x, y, TRIAL_Z, z)
    rng = np.random.default_rng(5)
    lam = rng.standard_normal(system.n_trial)
    predicted = system.a_pde @ lam

    for i, xi in enumerate(x.points):
        lu = 0.0
        for j, tj in enumerate(system.trial_centers):
            lu += lam[j] * apply_operator(bvp.operator, kernel_jet(K4, xi, tj), xi)
        assert predicted[i] == pytest.approx(lu, rel=1e-10)


def test_rhs_comes_from_problem_data():
    bvp = problem("peaks3", "convdiff")
    z, x, y = small_layout(5)
    system = assemble(bvp, K4, x, y, TRIAL_Z_UNION_Y, z)
    np.testing.assert_array_equal(system.f_vec, bvp.f(x.points))
    np.testing.assert_array_equal(system.g_vec, bvp.g(y.points))


def test_underdetermined_rejected():
    bvp = problem("trig", "laplace")
    z = full_grid(SQUARE, 5)
    x = PointSet(np.array([[0.0, 0.0]]), INTERIOR, SQUARE)
    y = PointSet(np.array([[1.0, 0.0]]), BOUNDARY, SQUARE)
    with pytest.raises(AssemblyError):
        assemble(bvp, K4, x, y, TRIAL_Z, z)


def test_location_validation():
    bvp = problem("trig", "laplace")
    z, x, y = small_layout(5)
    with pytest.raises(AssemblyError):
        assemble(bvp, K4, y, y, TRIAL_Z, z)
    with pytest.raises(AssemblyError):
        assemble(bvp, K4, x, x, TRIAL_Z, z)
    with pytest.raises(AssemblyError):
        assemble(bvp, K4, x, y, "z_and_y", z)


def test_exact_recovery_feasibility():
    # with u* = Phi(. - z_1), the stacked residual vanishes at lam = e_1
    z, x, y = small_layout(5)
    bvp = problem("trig", "laplace")
    bvp.exact = kernel_translate_solution(K4, z.points[0])
    system = assemble(bvp, K4, x, y, TRIAL_Z, z)
    e1 = np.zeros(system.n_trial)
    e1[0] = 1.0
    np.testing.assert_allclose(system.a_pde @ e1, system.f_vec, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(system.a_bdy @ e1, system.g_vec, rtol=1e-12, atol=1e-12)


def test_dump_system(tmp_path):
    bvp = problem("trig", "laplace")
    z, x, y = small_layout(4)
    system = assemble(bvp, K4, x, y, TRIAL_Z, z)
    npz = dump_system(system, tmp_path)
    data = np.load(npz)
    np.testing.assert_array_equal(data["a_pde"], system.a_pde)
    np.testing.assert_array_equal(data["g_vec"], system.g_vec)
    assert (tmp_path / "system.txt").exists()
