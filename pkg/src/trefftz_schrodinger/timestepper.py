"""Slab-by-slab solution with one reused factorization."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lapack

from .assembly import (
    SlabSystem,
    apply_transfer,
    assemble_dirichlet_rhs,
    assemble_initial_rhs,
    slab_systems,
)
from .discretization import Discretization

log = logging.getLogger(__name__)

RESIDUAL_TARGET = 1e-10
RESIDUAL_ABORT = 1e-6


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"numerically singular matrix (pivot {index})")


class SolverAbort(RuntimeError):
    pass


def equilibrate(a):
    """Row then column max-norm scaling factors (r, c) with R A C well scaled."""
    absa = np.abs(a)
    r = absa.max(axis=1)
    if np.any(r == 0):
        raise SingularMatrixError(int(np.flatnonzero(r == 0)[0]), "zero row in matrix")
    r = 1.0 / r
    c = (absa * r[:, None]).max(axis=0)
    if np.any(c == 0):
        raise SingularMatrixError(int(np.flatnonzero(c == 0)[0]), "zero column in matrix")
    return r, 1.0 / c


class DenseFactorization:
    """Equilibrated LU with complete pivoting (LAPACK getc2/gesc2)."""

    def __init__(self, a):
        a = np.asarray(a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        self.matrix = a
        self.r, self.c = equilibrate(a)
        scaled = a * self.r[:, None] * self.c[None, :]
        self.lu, self.ipiv, self.jpiv, info = lapack.zgetc2(scaled)
        if info > 0:
            raise SingularMatrixError(info - 1)
        u_max = np.abs(np.triu(self.lu)).max()
        self.pivot_growth = float(np.abs(scaled).max() / u_max)
        diag = np.abs(np.diag(self.lu))
        if diag.min() < 1e-300 * max(1.0, diag.max()):
            raise SingularMatrixError(int(np.argmin(diag)))

    @property
    def shape(self):
        return self.matrix.shape

    def solve(self, b):
        b = np.asarray(b, dtype=complex)
        if b.ndim == 2:
            return np.column_stack([self.solve(col) for col in b.T])
        y, scale = lapack.zgesc2(self.lu, self.r * b, self.ipiv, self.jpiv)
        return self.c * y / scale

    def solve_adjoint(self, b):
        # (R A C)^H = C A^H R ; fall back to a plain solve on A^H
        return np.linalg.solve(self.matrix.conj().T, b)


class SparseFactorization:
    """SuperLU with equilibration and threshold partial pivoting."""

    def __init__(self, a, pivot_threshold=1.0):
        a = sp.csc_matrix(a, dtype=complex)
        self.matrix = a
        try:
            self.lu = spla.splu(a, permc_spec="COLAMD", diag_pivot_thresh=pivot_threshold,
                                options=dict(Equil=True))
        except RuntimeError as exc:
            raise SingularMatrixError(-1, f"sparse factorization failed: {exc}") from exc
        diag = np.abs(self.lu.U.diagonal())
        if diag.min() < 1e-300 * max(1.0, diag.max()):
            raise SingularMatrixError(int(np.argmin(diag)))
        self.pivot_growth = float(abs(a).max() / abs(self.lu.U).max())

    @property
    def shape(self):
        return self.matrix.shape

    def solve(self, b):
        return self.lu.solve(np.asarray(b, dtype=complex))

    def solve_adjoint(self, b):
        return self.lu.solve(np.asarray(b, dtype=complex), trans="H")


def factorize(system):
    matrix = system.matrix if isinstance(system, SlabSystem) else system
    if sp.issparse(matrix):
        return SparseFactorization(matrix)
    return DenseFactorization(matrix)


def solve_refined(factorization, matrix, b, steps=1):
    """Solve with residual-based iterative refinement; returns (x, relative residual)."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b, dtype=complex), 0.0
    x = factorization.solve(b)
    for _ in range(steps):
        x = x + factorization.solve(b - matrix @ x)
    return x, float(np.linalg.norm(b - matrix @ x) / bnorm)


def condition_number(system, tol=1e-4, maxiter=500, factorization=None):
    """Spectral condition number: exact for dense matrices, power iterations for sparse ones."""
    matrix = system.matrix if isinstance(system, SlabSystem) else system
    if not sp.issparse(matrix):
        s = np.linalg.svd(np.asarray(matrix), compute_uv=False)
        return float(s[0] / s[-1])
    fac = factorization or SparseFactorization(matrix)
    rng = np.random.default_rng(0)
    n = matrix.shape[0]
    AH = matrix.conj().T.tocsc()

    def power(apply):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        est = 0.0
        for _ in range(maxiter):
            w = apply(v)
            new = np.linalg.norm(w)
            v = w / new
            if abs(new - est) <= tol * new:
                return np.sqrt(new)
            est = new
        return np.sqrt(est)

    s_max = power(lambda v: AH @ (matrix @ v))
    inv_s_min = power(lambda v: fac.solve(fac.solve_adjoint(v)))
    return float(s_max * inv_s_min)


@dataclass
class DiscreteSolution:
    """Per-slab coefficient vectors of the discrete Trefftz solution."""

    disc: Discretization
    coefficients: np.ndarray
    residuals: list = field(default_factory=list)
    pivot_growth: float = float("nan")
    _basis_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def slab_count(self):
        return self.coefficients.shape[0]

    def slab_coefficients(self, n):
        return self.coefficients[n].reshape(self.disc.space.n_cells, self.disc.n_local)

    def trace(self, n, cells, x, tau, key=None):
        """Values and gradients on slab ``n`` at points owned by ``cells``.

        ``cells`` has shape ``(nf,)``; ``x`` ``(nf, nq, d)``; ``tau`` broadcasts
        to ``(nf, nq)``.  Basis values depend on the slab only through the
        relative time, so callers revisiting the same points on every slab
        can pass a hashable ``key`` to reuse them.
        """
        coef = self.slab_coefficients(n)[cells]
        if key is not None and key in self._basis_cache:
            val = self._basis_cache[key]
        else:
            tau = np.broadcast_to(tau, x.shape[:-1])
            val = self.disc.basis.values(x, tau, self.disc.potential[cells][:, None])
            if key is not None:
                self._basis_cache[key] = val
        weighted = val * coef[:, None, :]
        return weighted.sum(axis=-1), weighted @ (1j * self.disc.basis.wavevectors)

    def cell_trace(self, n, tau):
        """Values at the cell quadrature points of slab ``n`` at relative time ``tau``."""
        phi = self.disc.basis_on_cells(tau)
        return np.einsum("cql,cl->cq", phi, self.slab_coefficients(n))

    def locate(self, x, t):
        knots = self.disc.mesh.time.knots
        slab = np.clip(np.searchsorted(knots, t, side="left") - 1, 0, self.slab_count - 1)
        cells = self.disc.space.locate(x)
        return slab, cells

    def __call__(self, x, t):
        """Point values psi_hp(x, t); traces at slab boundaries come from below."""
        x = np.asarray(x, dtype=float).reshape(-1, self.disc.space.dim)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:1])
        slab, cells = self.locate(x, t)
        if np.any(cells < 0):
            raise ValueError("evaluation point outside the spatial domain")
        tau = t - self.disc.mesh.time.knots[slab]
        pot = self.disc.potential[cells]
        val = self.disc.basis.values(x, tau, pot)
        coef = self.coefficients.reshape(self.slab_count, self.disc.space.n_cells, -1)[slab, cells]
        return np.sum(val * coef, axis=-1)

    def gradient(self, x, t):
        x = np.asarray(x, dtype=float).reshape(-1, self.disc.space.dim)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:1])
        slab, cells = self.locate(x, t)
        tau = t - self.disc.mesh.time.knots[slab]
        _, grad, _ = self.disc.basis.evaluate(x, tau, self.disc.potential[cells])
        coef = self.coefficients.reshape(self.slab_count, self.disc.space.n_cells, -1)[slab, cells]
        return np.einsum("pld,pl->pd", grad, coef)


def march(problem, disc: Discretization, systems=None, refinement_steps=1):
    """Solve all slabs sequentially, reusing factorizations of identical slab matrices."""
    systems = systems or slab_systems(disc)
    factorizations = {}
    N = disc.mesh.slab_count
    ndof = disc.dofmap.size
    coeffs = np.zeros((N, ndof), dtype=complex)
    residuals = []
    dirichlet = None if problem.homogeneous_dirichlet else problem.dirichlet
    rhs = assemble_initial_rhs(disc, problem.initial)
    growth = float("nan")
    for n in range(N):
        system = systems[n]
        key = id(system)
        if key not in factorizations:
            factorizations[key] = factorize(system)
        fac = factorizations[key]
        growth = fac.pivot_growth
        if dirichlet is not None:
            rhs = rhs + assemble_dirichlet_rhs(disc, dirichlet, n)
        x, res = solve_refined(fac, system.matrix, rhs, refinement_steps)
        residuals.append(res)
        if res > RESIDUAL_ABORT:
            kappa = condition_number(system, factorization=fac)
            raise SolverAbort(f"slab {n + 1}: relative residual {res:.3e} exceeds "
                              f"{RESIDUAL_ABORT:g} (kappa_2 ~ {kappa:.3e})")
        if res > RESIDUAL_TARGET:
            log.warning("slab %d: relative residual %.3e above %.0e", n + 1, res, RESIDUAL_TARGET)
        coeffs[n] = x
        if n + 1 < N:
            rhs = apply_transfer(system.transfer, x)
    return DiscreteSolution(disc, coeffs, residuals, growth)
