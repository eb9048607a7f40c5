import numpy as np
import pytest

from trefftz_schrodinger.analysis import (
    ErrorRecord,
    ErrorReport,
    dg_error,
    dg_norm,
    energy_loss,
    fit_rates,
    l2_final_error,
)
from trefftz_schrodinger.basis import default_parameters
from trefftz_schrodinger.discretization import Discretization
from trefftz_schrodinger.mesh import build_mesh
from trefftz_schrodinger.problems import plane_wave_problem, square_well_problem
from trefftz_schrodinger.timestepper import march


def small_disc(p=2, cells=4, slabs=2):
    mesh = build_mesh([(-2, 2)], cells, slabs, 1.0)
    return Discretization.create(mesh, default_parameters(1, p), np.array([0, 20, 20, 0.0]))


@pytest.mark.parametrize("rate", [2.0, 3.5])
def test_fit_rates_exact_power_law(rate):
    h = np.array([0.2, 0.1, 0.05, 0.025])
    fit = fit_rates(h, 3.0 * h ** rate)
    assert fit.slope == pytest.approx(rate, abs=1e-12)
    assert np.allclose(fit.pairwise, rate)
    assert np.exp(fit.intercept) == pytest.approx(3.0, rel=1e-10)


def test_fit_rates_validation():
    with pytest.raises(ValueError):
        fit_rates([0.1, 0.05], [1.0, 0.5])
    with pytest.raises(ValueError):
        fit_rates([0.1, 0.05, 0.025], [1.0, 0.0, 0.1])
    with pytest.raises(ValueError):
        fit_rates([0.1, 0.05, 0.025], [1.0, 0.5])


def test_norm_components_nonnegative_and_ordered():
    disc = small_disc()
    rng = np.random.default_rng(0)
    for _ in range(5):
        w = rng.standard_normal((2, disc.dofmap.size)) + 1j * rng.standard_normal((2, disc.dofmap.size))
        c = dg_norm(disc, w)
        assert all(v >= 0 for v in c.as_dict().values())
        assert c.dg_plus >= c.dg > 0


def test_norm_of_zero_is_zero():
    disc = small_disc()
    assert dg_norm(disc, np.zeros((2, disc.dofmap.size))).dg_plus == 0


def test_norm_is_homogeneous():
    disc = small_disc()
    rng = np.random.default_rng(1)
    w = rng.standard_normal((2, disc.dofmap.size)) + 0j
    assert dg_norm(disc, (2 - 1j) * w).dg == pytest.approx(np.sqrt(5) * dg_norm(disc, w).dg,
                                                          rel=1e-12)


def test_single_slab_single_cell_has_no_jumps():
    mesh = build_mesh([(0, 1)], 1, 1)
    disc = Discretization.create(mesh, default_parameters(1, 1), 0.0)
    c = dg_norm(disc, np.ones((1, 3)))
    assert c.jump_t == 0 and c.jump_n == 0 and c.jump_grad_n == 0


def test_errors_vanish_for_reproduced_solution():
    prob = plane_wave_problem([(0, 1)], 1.0, [1.0], potential=0.0)
    mesh = build_mesh(prob.bounds, 2, 2, 1.0)
    sol = march(prob, Discretization.create(mesh, default_parameters(1, 1), 0.0))
    assert dg_error(prob, sol).dg <= 1e-9
    assert l2_final_error(prob, sol) <= 1e-10


def test_energy_loss_is_nonnegative_and_balances():
    prob = square_well_problem(20.0)
    mesh = build_mesh(prob.bounds, 8, 4, 1.0)
    disc = Discretization.create(mesh, default_parameters(1, 1),
                                 prob.potential.cell_values(mesh.space))
    loss = energy_loss(march(prob, disc), prob.initial)
    assert loss.total >= loss.dissipation >= 0
    assert loss.relative_defect <= 1e-9


def _rec(p, n, err):
    h = 1.0 / n
    return ErrorRecord("x", p, n, h, h / 4, 10 * n, err, err / 2, err ** 2, 1 / h ** 3)


def test_error_report_finalize():
    rep = ErrorReport([_rec(1, n, 1.0 / n ** 2) for n in (10, 20, 40)]).finalize()
    slopes = rep.rates[(1, "equispaced")]
    assert slopes["dg_err"] == pytest.approx(2.0)
    assert slopes["e_loss"] == pytest.approx(4.0)
    assert slopes["kappa2"] == pytest.approx(-3.0)
    fam = rep.family(1)
    assert np.isnan(fam[0].rate_dg) and fam[1].rate_dg == pytest.approx(2.0)


def test_error_report_two_levels_has_no_fit():
    rep = ErrorReport([_rec(1, n, 1.0 / n) for n in (10, 20)]).finalize()
    assert rep.rates == {}
    assert rep.family(1)[1].rate_dg == pytest.approx(1.0)
