"""Complex-exponential Trefftz basis on space-time elements.

Every basis function is a pseudo plane wave

    phi_l(x, t) = exp(i (k_l d_l . x - (k_l^2 + V_K)(t - t_{n-1})))

which solves i phi_t + Lap phi - V_K phi = 0 exactly on an element with
constant potential V_K.  The phase is anchored at the start of the slab so
that all slab matrices coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class BasisError(ValueError):
    pass


@dataclass(frozen=True)
class WaveFunctionValue:
    value: complex
    space_gradient: np.ndarray
    time_derivative: complex


@dataclass(frozen=True)
class TrefftzBasisSpec:
    """Global basis parameters (the same in every element).

    For ``d == 2`` the functions are grouped by wavenumber index ``m``;
    ``groups[l]`` is the ``m`` of function ``l``.
    """

    dim: int
    p: int
    wavenumbers: np.ndarray
    directions: np.ndarray
    groups: np.ndarray = field(default=None)

    def __post_init__(self):
        k = np.asarray(self.wavenumbers, dtype=float).ravel()
        dirs = np.asarray(self.directions, dtype=float).reshape(k.size, self.dim)
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "directions", dirs)
        if self.groups is not None:
            object.__setattr__(self, "groups", np.asarray(self.groups, dtype=int))
        _validate(self)

    @property
    def size(self):
        return self.wavenumbers.size

    @property
    def wavevectors(self):
        return self.wavenumbers[:, None] * self.directions

    @property
    def k_max(self):
        return float(np.max(np.abs(self.wavenumbers)))

    def omegas(self, potential):
        """Time frequencies k_l^2 + V, shape ``(..., n)`` for potential shape ``(...)``."""
        return self.wavenumbers ** 2 + np.asarray(potential, dtype=float)[..., None]

    def evaluate(self, x, tau, potential):
        """Values, gradients and time derivatives of every basis function.

        ``x`` has shape ``(..., d)``, ``tau`` (time since slab start) and
        ``potential`` broadcast against ``x.shape[:-1]``.  Returns arrays of
        shape ``(..., n)``, ``(..., n, d)`` and ``(..., n)``.
        """
        x = np.asarray(x, dtype=float)
        kv = self.wavevectors
        om = self.omegas(potential)
        phase = x @ kv.T - om * np.asarray(tau, dtype=float)[..., None]
        val = np.exp(1j * phase)
        grad = 1j * val[..., None] * kv
        dt = -1j * om * val
        return val, grad, dt

    def values(self, x, tau, potential):
        x = np.asarray(x, dtype=float)
        om = self.omegas(potential)
        return np.exp(1j * (x @ self.wavevectors.T - om * np.asarray(tau, dtype=float)[..., None]))


def expected_size(dim, p):
    return 2 * p + 1 if dim == 1 else (p + 1) ** 2


def _validate(spec):
    if spec.dim not in (1, 2):
        raise BasisError("basis dimension must be 1 or 2")
    if spec.p < 1:
        raise BasisError("degree parameter p must be >= 1")
    k = spec.wavenumbers
    n = expected_size(spec.dim, spec.p)
    if k.size != n:
        raise BasisError(f"expected {n} basis functions for d={spec.dim}, p={spec.p}, got {k.size}")
    norms = np.linalg.norm(spec.directions, axis=1)
    if np.any(np.abs(norms - 1) > 1e-12):
        raise BasisError("directions must be unit vectors")
    if spec.dim == 1:
        if np.unique(k).size != k.size:
            raise BasisError(f"wavenumbers must be pairwise distinct in 1D, got {k.tolist()}")
        return
    g = spec.groups
    if g is None or g.size != k.size:
        raise BasisError("2D bases need a group index per function")
    km = []
    for m in range(spec.p + 1):
        sel = np.flatnonzero(g == m)
        if sel.size != 2 * m + 1:
            raise BasisError(f"group m={m} needs {2 * m + 1} directions, got {sel.size}")
        if np.ptp(k[sel]) > 0:
            raise BasisError(f"group m={m} must share one wavenumber")
        if k[sel[0]] == 0:
            raise BasisError("2D wavenumbers k_m must be nonzero")
        theta = np.mod(np.arctan2(spec.directions[sel, 1], spec.directions[sel, 0]), 2 * np.pi)
        diff = np.abs(theta[:, None] - theta[None, :])
        diff = np.minimum(diff, 2 * np.pi - diff)
        if np.any(diff[~np.eye(sel.size, dtype=bool)] < 1e-12):
            raise BasisError(f"angles in group m={m} must be pairwise distinct")
        km.append(k[sel[0]])
    sq = np.asarray(km) ** 2
    if np.unique(sq).size != sq.size:
        raise BasisError("2D wavenumbers need pairwise distinct squares k_m^2")


def basis_1d(wavenumbers, p=None):
    k = np.asarray(wavenumbers, dtype=float)
    if p is None:
        p = (k.size - 1) // 2
    return TrefftzBasisSpec(1, p, k, np.ones((k.size, 1)))


def basis_2d(wavenumbers, angles):
    """2D basis from per-group wavenumbers ``k_m`` and angle lists ``angles[m]``."""
    p = len(wavenumbers) - 1
    ks, dirs, groups = [], [], []
    for m, (km, th) in enumerate(zip(wavenumbers, angles)):
        th = np.asarray(th, dtype=float)
        ks.extend([km] * th.size)
        dirs.extend(np.column_stack([np.cos(th), np.sin(th)]))
        groups.extend([m] * th.size)
    return TrefftzBasisSpec(2, p, np.array(ks), np.array(dirs), np.array(groups))


def default_parameters(dim, p, mode="equispaced", k_star=None):
    """The parameter choices used in the benchmark studies.

    1D equispaced: k = -p..p.  1D tuned (p = 1 only): {-k*, 0, k*}.
    2D: k_m = m + 1 with 2m + 1 equispaced angles 2 pi (lam - 1) / (2m + 1).
    """
    if p < 1:
        raise BasisError("p must be >= 1")
    if dim == 1:
        if mode == "equispaced":
            return basis_1d(np.arange(-p, p + 1, dtype=float), p)
        if mode == "tuned":
            if k_star is None:
                raise BasisError("tuned mode needs k_star")
            if p != 1:
                raise BasisError("tuned mode is defined for p = 1 only")
            return basis_1d([-k_star, 0.0, k_star], 1)
        raise BasisError(f"unknown mode {mode!r}")
    if dim == 2:
        if mode != "equispaced":
            raise BasisError("tuned parameters are only available in 1D")
        ks = [m + 1.0 for m in range(p + 1)]
        angles = [2 * np.pi * np.arange(2 * m + 1) / (2 * m + 1) for m in range(p + 1)]
        return basis_2d(ks, angles)
    raise BasisError("dimension must be 1 or 2")


def eval_basis(spec, index, x, t, potential=0.0, slab_start=0.0):
    """Single basis function with its gradient and time derivative at one point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    kv = spec.wavevectors[index]
    om = spec.wavenumbers[index] ** 2 + potential
    val = np.exp(1j * (kv @ x - om * (t - slab_start)))
    return WaveFunctionValue(complex(val), 1j * kv * val, complex(-1j * om * val))
