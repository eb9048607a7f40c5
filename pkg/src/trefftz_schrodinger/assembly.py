"""Slab-wise assembly of the Trefftz-DG sesquilinear form and load functional.

Matrix entries are stored as ``A[test, trial] = A(phi_trial, phi_test)`` so
that ``A @ c = rhs`` with ``rhs[test] = l(phi_test)``.  Local blocks carry
the same layout: ``block[f, m, l]`` pairs test function ``m`` with trial
function ``l``.

Within a slab the form collects
  * the top face term  i psi conj(s)  (upwind trace from below),
  * the time-like face terms with averages, jumps and the alpha/beta penalties,
  * the Dirichlet face term  (grad psi . n + i alpha psi) conj(s).
The part of the space-like coupling that pairs a slab's top trace with the
test functions of the next slab lives in a block-diagonal transfer matrix
and moves to the next slab's right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .discretization import Discretization


@dataclass(frozen=True)
class SlabSystem:
    """System matrix of one slab plus the transfer blocks into the next slab.

    ``matrix`` is a dense array in 1D and a CSC sparse matrix in 2D.
    ``transfer[c, m, l] = i * int_{K_c} phi_l(x, t_n^-) conj(phi_m(x, t_n^+)) dx``.
    """

    matrix: object
    transfer: np.ndarray
    slab: int
    slab_length: float

    @property
    def size(self):
        return self.matrix.shape[0]

    @property
    def is_sparse(self):
        return sp.issparse(self.matrix)

    def dense(self):
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)


def _pair(w, trial, test):
    """sum_q w[f,q] trial[f,q,l] conj(test[f,q,m]) -> [f, m, l]."""
    return np.matmul(np.conj(test).transpose(0, 2, 1), w[..., None] * trial)


def top_blocks(disc: Discretization, h):
    """i int_K phi_l conj(phi_m) at the top of the slab (tau = h)."""
    _, w = disc.cell_quadrature
    phi = disc.basis_on_cells(h)
    return 1j * _pair(w, phi, phi)


def transfer_blocks(disc: Discretization, h):
    """i int_K phi_l(tau = h) conj(phi_m(tau = 0)): trial from below, test from above."""
    _, w = disc.cell_quadrature
    return 1j * _pair(w, disc.basis_on_cells(h), disc.basis_on_cells(0.0))


def timelike_blocks(disc: Discretization, h):
    """Blocks on interior time-like faces keyed by (test side, trial side)."""
    space = disc.space
    if space.interior_cells.shape[0] == 0:
        return {}
    _, _, w = disc.facet_quadrature("interior", h)
    normals = space.interior_normals
    alpha = disc.flux.alpha_interior[:, None]
    beta = disc.flux.beta_interior[:, None]
    val, gn = [], []
    for side in (0, 1):
        v, g = disc.basis_on_facets("interior", h, space.interior_cells[:, side])
        val.append(v)
        gn.append(np.einsum("fqld,fd->fql", g, normals))
    sign = (1.0, -1.0)
    blocks = {}
    for b in (0, 1):
        for a in (0, 1):
            sab = sign[a] * sign[b]
            blk = 0.5 * sign[b] * _pair(w, gn[a], val[b])
            blk += 1j * sab * _pair(w * alpha, val[a], val[b])
            blk -= 0.5 * sign[b] * _pair(w, val[a], gn[b])
            blk += 1j * sab * _pair(w * beta, gn[a], gn[b])
            blocks[b, a] = blk
    return blocks


def dirichlet_blocks(disc: Discretization, h):
    space = disc.space
    _, _, w = disc.facet_quadrature("boundary", h)
    val, grad = disc.basis_on_facets("boundary", h, space.boundary_cells)
    gn = np.einsum("fqld,fd->fql", grad, space.boundary_normals)
    alpha = disc.flux.alpha_boundary[:, None]
    return _pair(w, gn, val) + 1j * _pair(w * alpha, val, val)


def _scatter(nb, n_cells, entries):
    """Assemble (row_cells, col_cells, blocks) triples into a CSC matrix."""
    rows, cols, data = [], [], []
    m_idx, l_idx = np.meshgrid(np.arange(nb), np.arange(nb), indexing="ij")
    for rc, cc, blk in entries:
        rows.append((rc[:, None, None] * nb + m_idx[None]).ravel())
        cols.append((cc[:, None, None] * nb + l_idx[None]).ravel())
        data.append(blk.ravel())
    n = n_cells * nb
    mat = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(n, n))
    return mat.tocsc()


def assemble_slab_matrix(disc: Discretization, slab=0, dense=None):
    """Assemble the system matrix of slab ``slab`` (0-based)."""
    space = disc.space
    h = float(disc.mesh.time.slab_lengths[slab])
    nb = disc.n_local
    cells = np.arange(space.n_cells)
    entries = [(cells, cells, top_blocks(disc, h))]
    ic = space.interior_cells
    for (b, a), blk in timelike_blocks(disc, h).items():
        entries.append((ic[:, b], ic[:, a], blk))
    bc = space.boundary_cells
    entries.append((bc, bc, dirichlet_blocks(disc, h)))
    mat = _scatter(nb, space.n_cells, entries)
    if dense is None:
        dense = space.dim == 1
    if dense:
        mat = mat.toarray()
    return SlabSystem(mat, transfer_blocks(disc, h), slab, h)


def apply_transfer(transfer, coeffs):
    """Right-hand side contribution of the previous slab's top trace."""
    nc, nb, _ = transfer.shape
    return np.einsum("cml,cl->cm", transfer, coeffs.reshape(nc, nb)).ravel()


def assemble_initial_rhs(disc: Discretization, initial):
    """i int_Omega psi_0 conj(phi_m(tau = 0)) on every cell."""
    disc = disc.data_discretization
    x, w = disc.cell_quadrature
    data = initial(x)
    phi0 = disc.basis_on_cells(0.0)
    return (1j * np.einsum("cq,cq,cqm->cm", w, data, np.conj(phi0))).ravel()


def assemble_dirichlet_rhs(disc: Discretization, dirichlet, slab):
    """int_{F_D in slab} g_D (grad conj(phi_m) . n + i alpha conj(phi_m))."""
    disc = disc.data_discretization
    space = disc.space
    t0 = float(disc.mesh.time.knots[slab])
    h = float(disc.mesh.time.slab_lengths[slab])
    x, tau, w = disc.facet_quadrature("boundary", h)
    g = dirichlet(x, t0 + np.broadcast_to(tau, x.shape[:-1]))
    val, grad = disc.basis_on_facets("boundary", h, space.boundary_cells)
    gn = np.einsum("fqld,fd->fql", grad, space.boundary_normals)
    alpha = disc.flux.alpha_boundary[:, None]
    loc = np.einsum("fq,fq,fqm->fm", w, g, np.conj(gn) + 1j * alpha[..., None] * np.conj(val))
    rhs = np.zeros((space.n_cells, disc.n_local), dtype=complex)
    np.add.at(rhs, space.boundary_cells, loc)
    return rhs.ravel()


def assemble_slab_rhs(disc: Discretization, slab, incoming, dirichlet=None, transfer=None):
    """Load vector of slab ``slab``.

    ``incoming`` is the initial datum (callable) for the first slab and the
    previous slab's coefficient vector otherwise; in that case ``transfer``
    must hold the previous slab's transfer blocks.
    """
    if callable(incoming):
        rhs = assemble_initial_rhs(disc, incoming)
    else:
        incoming = np.asarray(incoming)
        if incoming.shape != (disc.dofmap.size,):
            raise ValueError(f"trace vector has length {incoming.size}, expected {disc.dofmap.size}")
        if transfer is None:
            h_prev = float(disc.mesh.time.slab_lengths[slab - 1])
            transfer = transfer_blocks(disc, h_prev)
        rhs = apply_transfer(transfer, incoming)
    if dirichlet is not None:
        rhs = rhs + assemble_dirichlet_rhs(disc, dirichlet, slab)
    return rhs


def slab_systems(disc: Discretization):
    """One system per slab; slabs of equal length share one assembled object."""
    lengths = disc.mesh.time.slab_lengths
    cache = {}
    systems = []
    for n, h in enumerate(lengths):
        key = round(float(h), 14)
        if key not in cache:
            cache[key] = assemble_slab_matrix(disc, n)
        systems.append(cache[key])
    return systems


def global_matrix(disc: Discretization, systems=None):
    """Monolithic space-time matrix: slab blocks on the diagonal, -transfer below."""
    systems = systems or slab_systems(disc)
    N = len(systems)
    nc, nb = disc.space.n_cells, disc.n_local
    blocks = [[None] * N for _ in range(N)]
    for n, s in enumerate(systems):
        blocks[n][n] = sp.csc_matrix(s.matrix)
        if n + 1 < N:
            blocks[n + 1][n] = -sp.block_diag(list(s.transfer), format="csc")
    return sp.bmat(blocks, format="csc")


def apply_global_form(disc: Discretization, w, v, systems=None):
    """A(w, v) for coefficient arrays of shape ``(N, ndof)``."""
    systems = systems or slab_systems(disc)
    w = np.asarray(w).reshape(len(systems), -1)
    v = np.asarray(v).reshape(len(systems), -1)
    total = 0j
    for n, s in enumerate(systems):
        total += np.vdot(v[n], s.matrix @ w[n])
        if n + 1 < len(systems):
            total -= np.vdot(v[n + 1], apply_transfer(s.transfer, w[n]))
    return complex(total)


def apply_global_load(disc: Discretization, v, initial, dirichlet=None):
    """l(v) for coefficients of shape ``(N, ndof)``."""
    v = np.asarray(v).reshape(disc.mesh.slab_count, -1)
    total = np.vdot(v[0], assemble_initial_rhs(disc, initial))
    if dirichlet is not None:
        for n in range(disc.mesh.slab_count):
            total += np.vdot(v[n], assemble_dirichlet_rhs(disc, dirichlet, n))
    return complex(total)


def dump_coordinate(matrix, path):
    """Write nonzeros as ``row col re im`` lines."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"% {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, z in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {z.real:.16e} {z.imag:.16e}\n")
