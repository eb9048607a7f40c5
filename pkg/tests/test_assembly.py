import numpy as np
import pytest
import scipy.sparse as sp

from trefftz_schrodinger.assembly import (
    apply_global_form,
    apply_global_load,
    assemble_initial_rhs,
    assemble_slab_matrix,
    assemble_slab_rhs,
    dump_coordinate,
    global_matrix,
    slab_systems,
    top_blocks,
)
from trefftz_schrodinger.basis import basis_1d, default_parameters
from trefftz_schrodinger.discretization import Discretization
from trefftz_schrodinger.mesh import build_mesh


def make_disc(cells=4, slabs=2, p=1, potential=0.0, bounds=((-2.0, 2.0),), final_time=1.0):
    mesh = build_mesh(list(bounds), cells, slabs, final_time)
    return Discretization.create(mesh, default_parameters(len(bounds), p), potential)


def test_top_entry_of_constant_function():
    disc = make_disc(cells=1, slabs=1)
    # k = 0 is the middle basis function: i * |Omega| = 4i
    blk = top_blocks(disc, disc.mesh.time.slab_lengths[0])
    assert blk[0, 1, 1] == pytest.approx(4j, abs=1e-13)


def test_top_block_is_i_times_hermitian_psd():
    disc = make_disc(p=2, potential=np.array([0, 20, 20, 0.0]))
    blk = top_blocks(disc, 0.5) / 1j
    for b in blk:
        assert np.allclose(b, b.conj().T, atol=1e-14)
        assert np.linalg.eigvalsh(b).min() > -1e-13


def test_penalty_part_is_i_times_psd():
    # Im of the slab matrix is the dissipative part: Hermitian and PSD
    disc = make_disc(cells=6, p=2, potential=np.array([0, 0, 20, 20, 0, 0.0]))
    a = assemble_slab_matrix(disc).dense()
    herm = (a - a.conj().T) / 2j
    assert np.linalg.eigvalsh(herm).min() > -1e-12


def test_equal_slabs_share_matrix():
    disc = make_disc(slabs=3)
    a0 = assemble_slab_matrix(disc, 0).dense()
    a1 = assemble_slab_matrix(disc, 1).dense()
    assert np.array_equal(a0, a1)
    systems = slab_systems(disc)
    assert systems[0] is systems[1] is systems[2]


def test_matrix_dense_in_1d_sparse_in_2d():
    assert not assemble_slab_matrix(make_disc()).is_sparse
    d2 = make_disc(cells=2, slabs=1, bounds=((0, 1), (0, 1)))
    s2 = assemble_slab_matrix(d2)
    assert s2.is_sparse and s2.size == d2.dofmap.size


def test_trefftz_volume_term_vanishes():
    disc = make_disc(p=2, potential=np.array([0, 20, 20, 0.0]))
    x, w = disc.cell_quadrature
    for tau in (0.0, 0.3, 0.5):
        t = np.full(x.shape[:-1], tau)
        val, grad, dt = disc.basis.evaluate(x, t, disc.potential[:, None])
        lap = -(disc.basis.wavenumbers ** 2) * val
        lv = 1j * dt + lap - disc.potential[:, None, None] * val
        vol = np.einsum("cq,cql,cqm->cml", w, lv, np.conj(val))
        assert np.max(np.abs(vol)) <= 1e-12


def test_zero_data_gives_zero_rhs():
    disc = make_disc()
    zero = lambda x: np.zeros(x.shape[:-1], dtype=complex)
    assert np.all(assemble_initial_rhs(disc, zero) == 0)
    rhs = assemble_slab_rhs(disc, 1, np.zeros(disc.dofmap.size), dirichlet=lambda x, t: 0 * x[..., 0])
    assert np.all(rhs == 0)


def test_trace_length_validated():
    disc = make_disc()
    with pytest.raises(ValueError):
        assemble_slab_rhs(disc, 1, np.zeros(disc.dofmap.size - 1))


def test_initial_rhs_matches_basis_projection():
    # psi_0 = phi_l: the load equals the top block column i (phi_l, phi_m) at tau = 0
    disc = make_disc(p=1)
    k = disc.basis.wavenumbers[2]
    rhs = assemble_initial_rhs(disc, lambda x: np.exp(1j * k * x[..., 0])).reshape(4, 3)
    ref = top_blocks(disc, 0.0)[:, :, 2]
    assert np.allclose(rhs, ref, atol=1e-13)


def test_quadrature_doubling():
    disc = make_disc(cells=4, slabs=2, p=3, potential=np.array([0, 20, 20, 0.0]))
    a = assemble_slab_matrix(disc).dense()
    fine = disc.with_quadrature(type(disc.quad)(2 * disc.quad.space, 2 * disc.quad.time))
    b = assemble_slab_matrix(fine).dense()
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_global_matrix_consistent_with_form():
    disc = make_disc(slabs=3, p=2)
    rng = np.random.default_rng(0)
    n = disc.dofmap.size
    w = rng.standard_normal((3, n)) + 1j * rng.standard_normal((3, n))
    v = rng.standard_normal((3, n)) + 1j * rng.standard_normal((3, n))
    big = global_matrix(disc)
    assert sp.issparse(big) and big.shape == (3 * n, 3 * n)
    assert np.vdot(v.ravel(), big @ w.ravel()) == pytest.approx(apply_global_form(disc, w, v),
                                                                abs=1e-10)
    # block lower bidiagonal in slabs
    dense = big.toarray()
    assert np.all(dense[:n, n:] == 0) and np.all(dense[n:2 * n, 2 * n:] == 0)
    assert np.all(dense[2 * n:, :n] == 0)


def test_global_load_only_first_slab_without_dirichlet():
    disc = make_disc(slabs=2)
    v = np.zeros((2, disc.dofmap.size), dtype=complex)
    v[1] = 1.0
    assert apply_global_load(disc, v, lambda x: np.ones(x.shape[:-1])) == 0


def test_dump_coordinate(tmp_path):
    disc = make_disc(cells=2, slabs=1, p=1)
    a = assemble_slab_matrix(disc).dense()
    path = tmp_path / "a.txt"
    dump_coordinate(a, path)
    lines = path.read_text().splitlines()
    n, m, nnz = (int(v) for v in lines[0][1:].split())
    assert (n, m) == a.shape and nnz == len(lines) - 1
    back = np.zeros_like(a)
    for line in lines[1:]:
        r, c, re, im = line.split()
        back[int(r), int(c)] = float(re) + 1j * float(im)
    assert np.array_equal(back, a)


def test_rejects_mismatched_potential():
    mesh = build_mesh([(0, 1)], 3, 1)
    with pytest.raises(ValueError):
        Discretization.create(mesh, basis_1d([-1.0, 0.0, 1.0]), np.zeros(2))
    with pytest.raises(ValueError):
        Discretization.create(mesh, default_parameters(2, 1), 0.0)
