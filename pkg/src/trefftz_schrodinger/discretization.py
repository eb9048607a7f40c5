"""Binding of mesh, basis, potential, flux parameters and quadrature resolution."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .basis import TrefftzBasisSpec
from .mesh import SpaceTimeMesh, facet_sizes
from .quadrature import cell_points, default_node_count, facet_time_points


@dataclass(frozen=True)
class FluxParameters:
    """Penalties alpha = 1/h_Fx on time-like and Dirichlet faces, beta = h_Fx on time-like faces."""

    alpha_interior: np.ndarray
    beta_interior: np.ndarray
    alpha_boundary: np.ndarray

    def __post_init__(self):
        for name in ("alpha_interior", "beta_interior", "alpha_boundary"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.size and not np.all(arr > 0):
                raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, arr)

    @classmethod
    def from_mesh(cls, space, alpha_scale=1.0, beta_scale=1.0):
        h_int, h_bnd = facet_sizes(space)
        return cls(alpha_scale / h_int, beta_scale * h_int, alpha_scale / h_bnd)


@dataclass(frozen=True)
class DofMap:
    """Element-major numbering of the unknowns of one slab."""

    n_cells: int
    n_local: int

    @property
    def size(self):
        return self.n_cells * self.n_local

    def index(self, cell, local):
        return cell * self.n_local + local

    def split(self, index):
        return divmod(index, self.n_local)

    def cell_slice(self, cell):
        return slice(cell * self.n_local, (cell + 1) * self.n_local)


DATA_EXTRA_NODES = 2


@dataclass(frozen=True)
class QuadratureOrders:
    space: int
    time: int

    def refined(self, extra):
        return QuadratureOrders(self.space + extra, self.time + extra)


def quadrature_orders(basis, potential, space, h_t, extra_frequency=0.0):
    """Default nodes per axis from the phase variation of basis products."""
    k = max(basis.k_max, abs(extra_frequency))
    omega = np.abs(basis.omegas(np.asarray(potential))).max()
    omega = max(omega, extra_frequency ** 2)
    n_space = default_node_count(basis.p, 2 * k, space.h_x)
    n_time = default_node_count(basis.p, 2 * omega, h_t)
    return QuadratureOrders(n_space, n_time)


@dataclass(frozen=True, eq=False)
class Discretization:
    """Everything needed to assemble and evaluate discrete Trefftz functions."""

    mesh: SpaceTimeMesh
    basis: TrefftzBasisSpec
    potential: np.ndarray
    flux: FluxParameters
    quad: QuadratureOrders
    _facet_cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def create(cls, mesh, basis, potential, flux=None, quad=None, extra_frequency=0.0):
        if basis.dim != mesh.space.dim:
            raise ValueError("basis and mesh dimensions differ")
        potential = np.asarray(potential, dtype=float)
        if potential.shape == ():
            potential = np.full(mesh.space.n_cells, float(potential))
        if potential.shape != (mesh.space.n_cells,):
            raise ValueError("need one potential value per spatial cell")
        flux = flux or FluxParameters.from_mesh(mesh.space)
        if quad is None:
            quad = quadrature_orders(basis, potential, mesh.space, mesh.h_t, extra_frequency)
        elif isinstance(quad, int):
            quad = QuadratureOrders(quad, quad)
        return cls(mesh, basis, potential, flux, quad)

    @property
    def space(self):
        return self.mesh.space

    @property
    def dofmap(self):
        return DofMap(self.space.n_cells, self.basis.size)

    @property
    def n_local(self):
        return self.basis.size

    def with_quadrature(self, quad):
        if isinstance(quad, int):
            quad = QuadratureOrders(quad, quad)
        return Discretization(self.mesh, self.basis, self.potential, self.flux, quad)

    @cached_property
    def data_discretization(self):
        """Same discretization with a finer rule for integrals of problem data."""
        return self.with_quadrature(self.quad.refined(DATA_EXTRA_NODES))

    @cached_property
    def cell_quadrature(self):
        return cell_points(self.space, self.quad.space)

    def facet_quadrature(self, which, h):
        """Points ``x``, relative times ``tau`` and weights on facets x (0, h)."""
        key = (which, float(h))
        if key not in self._facet_cache:
            facets = self.space.interior_facets if which == "interior" else self.space.boundary_facets
            self._facet_cache[key] = facet_time_points(facets, self.quad.space, 0.0, h, self.quad.time)
        return self._facet_cache[key]

    def basis_on_cells(self, tau):
        x, _ = self.cell_quadrature
        return self.basis.values(x, np.full(x.shape[:-1], tau), self.potential[:, None])

    def basis_on_facets(self, which, h, cells):
        """Values and normal-free gradients for the cells adjacent to facets."""
        x, tau, _ = self.facet_quadrature(which, h)
        val, grad, _ = self.basis.evaluate(x, np.broadcast_to(tau, x.shape[:-1]),
                                           self.potential[cells][:, None])
        return val, grad
