import numpy as np
import pytest
import scipy.sparse as sp

from trefftz_schrodinger.analysis import energy, energy_history, energy_loss
from trefftz_schrodinger.assembly import apply_global_form, apply_global_load, slab_systems
from trefftz_schrodinger.basis import default_parameters
from trefftz_schrodinger.discretization import Discretization
from trefftz_schrodinger.mesh import build_mesh
from trefftz_schrodinger.problems import plane_wave_problem, square_well_problem, zero_problem
from trefftz_schrodinger.timestepper import (
    DenseFactorization,
    SingularMatrixError,
    SparseFactorization,
    condition_number,
    march,
    solve_refined,
)


def square_well_disc(cells=20, slabs=10, p=2, v_star=20.0):
    prob = square_well_problem(v_star)
    mesh = build_mesh(prob.bounds, cells, slabs, prob.final_time)
    disc = Discretization.create(mesh, default_parameters(1, p),
                                 prob.potential.cell_values(mesh.space),
                                 extra_frequency=prob.parameters["k_star"])
    return prob, disc


def test_identity_factorization():
    fac = DenseFactorization(np.eye(5, dtype=complex))
    b = np.arange(5) + 1j
    assert np.allclose(fac.solve(b), b)


def test_condition_number_dense_and_sparse():
    a = np.diag([1.0, 10.0]).astype(complex)
    assert condition_number(a) == pytest.approx(10.0, rel=1e-12)
    s = sp.diags(np.linspace(1, 10, 30)).tocsc().astype(complex)
    assert condition_number(s) == pytest.approx(10.0, rel=1e-3)


def test_singular_matrix_detected():
    with pytest.raises(SingularMatrixError):
        DenseFactorization(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(SingularMatrixError):
        DenseFactorization(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_sparse_and_dense_agree():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12)) + 5 * np.eye(12)
    b = rng.standard_normal(12) + 0j
    xd = DenseFactorization(a).solve(b)
    xs = SparseFactorization(sp.csc_matrix(a)).solve(b)
    assert np.allclose(xd, xs, atol=1e-12)
    assert np.allclose(DenseFactorization(a).solve_adjoint(b),
                       SparseFactorization(sp.csc_matrix(a)).solve_adjoint(b), atol=1e-12)


def test_badly_scaled_solve_residual():
    rng = np.random.default_rng(2)
    a = (rng.standard_normal((20, 20)) + 4 * np.eye(20)) * np.logspace(-6, 6, 20)[:, None]
    x_true = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    b = a @ x_true
    x, res = solve_refined(DenseFactorization(a), a, b)
    assert res <= 1e-12
    assert np.allclose(x, x_true, rtol=1e-8)


def test_slab_residuals_small():
    prob, disc = square_well_disc()
    sol = march(prob, disc)
    assert len(sol.residuals) == disc.mesh.slab_count
    assert max(sol.residuals) <= 1e-10


def test_zero_data_gives_zero_solution():
    mesh = build_mesh([(0, 1)], 4, 3)
    disc = Discretization.create(mesh, default_parameters(1, 1), 0.0)
    sol = march(zero_problem([(0, 1)], 1.0), disc)
    assert np.all(sol.coefficients == 0)


def test_causality():
    # truncating the time horizon does not change earlier slabs
    prob, long = square_well_disc(cells=8, slabs=6, p=1)
    short_mesh = build_mesh(prob.bounds, 8, 3, 0.5)
    short = Discretization.create(short_mesh, long.basis, long.potential, quad=long.quad)
    a = march(prob, long).coefficients[:3]
    b = march(prob, short).coefficients
    assert np.allclose(a, b, atol=1e-12)


def test_energy_nonincreasing():
    prob, disc = square_well_disc(cells=8, slabs=8, p=1)
    sol = march(prob, disc)
    e = np.concatenate([[energy(sol, 0)], energy_history(sol)])
    assert np.all(np.diff(e[1:]) <= 1e-14 * e[0])
    loss = energy_loss(sol, prob.initial)
    assert loss.total >= 0 and loss.relative_defect <= 1e-9


def test_galerkin_orthogonality():
    prob, disc = square_well_disc(cells=8, slabs=3, p=2)
    systems = slab_systems(disc)
    sol = march(prob, disc, systems)
    rng = np.random.default_rng(3)
    n = disc.dofmap.size
    for _ in range(5):
        v = rng.standard_normal((3, n)) + 1j * rng.standard_normal((3, n))
        a = apply_global_form(disc, sol.coefficients, v, systems)
        l = apply_global_load(disc, v, prob.initial)
        assert abs(a - l) <= 1e-10 * max(1.0, abs(l))


def test_plane_wave_reproduced():
    prob = plane_wave_problem([(0, 1)], 1.0, [1.0], potential=0.0)
    mesh = build_mesh(prob.bounds, 2, 2, 1.0)
    disc = Discretization.create(mesh, default_parameters(1, 1), 0.0)
    sol = march(prob, disc)
    x = np.linspace(0, 1, 9)[:, None]
    for t in (0.0, 0.3, 1.0):
        assert np.allclose(sol(x, np.full(9, t)), prob.exact.value(x, t), atol=1e-10)


def test_pointwise_evaluation_and_gradient():
    prob = plane_wave_problem([(0, 1)], 1.0, [1.0], potential=0.0)
    mesh = build_mesh(prob.bounds, 3, 2, 1.0)
    sol = march(prob, Discretization.create(mesh, default_parameters(1, 1), 0.0))
    x = np.array([[0.2], [0.7]])
    t = np.array([0.1, 0.9])
    assert np.allclose(sol.gradient(x, t), prob.exact.gradient(x, t), atol=1e-9)
