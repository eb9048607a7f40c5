"""Benchmark initial boundary value problems for i psi_t + Lap psi - V psi = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class RootFindingError(RuntimeError):
    pass


class MeshAlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class PiecewiseConstantPotential:
    """Potential given as ``(predicate, value)`` regions, first match wins.

    Predicates take an ``(n, d)`` array of points and return a boolean mask.
    Points matched by no predicate get ``default``.
    """

    regions: tuple = ()
    default: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, x.shape[-1])
        out = np.full(flat.shape[0], float(self.default))
        done = np.zeros(flat.shape[0], dtype=bool)
        for predicate, value in self.regions:
            hit = np.asarray(predicate(flat), dtype=bool) & ~done
            out[hit] = value
            done |= hit
        return out.reshape(x.shape[:-1])

    def cell_values(self, space):
        """Constant value of V on each spatial cell.

        Samples the centroid and points pulled slightly inward from every
        vertex; raises if a cell straddles a discontinuity of V.
        """
        verts = space.vertices[space.cells]
        cen = space.centroids[:, None, :]
        samples = np.concatenate([cen, cen + (1 - 1e-6) * (verts - cen)], axis=1)
        vals = self(samples)
        bad = np.flatnonzero(np.ptp(vals, axis=1) > 0)
        if bad.size:
            raise MeshAlignmentError(
                f"mesh not aligned with the potential: cells {bad[:5].tolist()} straddle a jump of V")
        return vals[:, 0].copy()


@dataclass(frozen=True)
class ExactSolution:
    """Analytic solution with its space gradient and time derivative.

    All callables take ``x`` of shape ``(..., d)`` and ``t`` broadcastable
    to ``x.shape[:-1]``.
    """

    value: Callable
    gradient: Callable
    time_derivative: Callable
    laplacian: Optional[Callable] = None


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    bounds: tuple
    final_time: float
    potential: PiecewiseConstantPotential
    initial: Callable
    dirichlet: Callable
    exact: Optional[ExactSolution] = None
    parameters: dict = None

    @property
    def dim(self):
        return len(self.bounds)

    @property
    def homogeneous_dirichlet(self):
        return bool((self.parameters or {}).get("homogeneous_dirichlet", False))

    def pde_residual(self, x, t):
        """|i psi_t + Lap psi - V psi| of the coded exact solution."""
        ex = self.exact
        x = np.asarray(x, dtype=float)
        return np.abs(1j * ex.time_derivative(x, t) + ex.laplacian(x, t)
                      - self.potential(x) * ex.value(x, t))


def _bound_state_function(v_star):
    def f(k):
        kappa = np.sqrt(v_star - k * k)
        return kappa - k * np.tan(k) * np.tanh(kappa)
    return f


def bound_state_wavenumber(v_star):
    """Largest root k in (0, sqrt(V*)) of sqrt(V*-k^2) - k tan(k) tanh(sqrt(V*-k^2)).

    >>> round(bound_state_wavenumber(20.0), 4)
    3.7319
    """
    if not v_star > 0:
        raise ValueError("V_star must be positive")
    f = _bound_state_function(v_star)
    top = math.sqrt(v_star)
    npts = 10 * math.ceil(top)
    grid = np.linspace(0.0, top, npts + 1)[1:-1]
    poles = (np.arange(0, math.ceil(top / math.pi) + 1) + 0.5) * math.pi
    near_pole = np.min(np.abs(grid[:, None] - poles[None, :]), axis=1) <= 1e-6
    grid = grid[~near_pole]
    vals = f(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if np.sign(fa) == np.sign(fb):
            continue
        # a sign change across a pole of tan is not a root
        if np.any((poles > a) & (poles < b)):
            continue
        roots.append(_bisect(f, a, b))
    if not roots:
        raise RootFindingError(f"no bound-state root bracketed for V_star = {v_star}")
    return max(roots)


def _bisect(f, a, b):
    fa = f(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = f(m)
        if fm == 0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def square_well_problem(v_star, k_star=None):
    """Bound state of the square well V = V* outside (-1, 1) on Q = (-2, 2) x (0, 1)."""
    if k_star is None:
        k_star = bound_state_wavenumber(v_star)
    k = float(k_star)
    if not v_star > k * k:
        raise ValueError("square well requires V_star > k_star^2")
    kappa = math.sqrt(v_star - k * k)
    amp = math.cos(k) / math.sinh(kappa)

    def profile(x):
        x = np.asarray(x, dtype=float)[..., 0]
        inner = np.abs(x) < 1
        r = 2 - np.abs(x)
        return np.where(inner, np.cos(k * x), amp * np.sinh(kappa * r))

    def profile_dx(x):
        x = np.asarray(x, dtype=float)[..., 0]
        inner = np.abs(x) < 1
        r = 2 - np.abs(x)
        return np.where(inner, -k * np.sin(k * x), -np.sign(x) * amp * kappa * np.cosh(kappa * r))

    def profile_dxx(x):
        x = np.asarray(x, dtype=float)[..., 0]
        inner = np.abs(x) < 1
        r = 2 - np.abs(x)
        return np.where(inner, -k * k * np.cos(k * x), amp * kappa ** 2 * np.sinh(kappa * r))

    def phase(t):
        return np.exp(-1j * k * k * np.asarray(t, dtype=float))

    def value(x, t):
        return profile(x) * phase(t)

    def gradient(x, t):
        return (profile_dx(x) * phase(t))[..., None]

    def time_derivative(x, t):
        return -1j * k * k * value(x, t)

    def laplacian(x, t):
        return profile_dxx(x) * phase(t)

    potential = PiecewiseConstantPotential(
        regions=((lambda p: np.abs(p[:, 0]) < 1, 0.0),), default=float(v_star))
    return ProblemSpec(
        name="square-well",
        bounds=((-2.0, 2.0),),
        final_time=1.0,
        potential=potential,
        initial=lambda x: profile(x).astype(complex),
        dirichlet=lambda x, t: np.zeros(np.shape(x)[:-1], dtype=complex),
        exact=ExactSolution(value, gradient, time_derivative, laplacian),
        parameters={"v_star": float(v_star), "k_star": k,
                    "homogeneous_dirichlet": True, "profile_dxx": profile_dxx},
    )


def gaussian_problem():
    """Transient Gaussian with V = 0 on (-2, 4) x (-2.5, 2.5) x (0, 2)."""

    def parts(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        a = 1j / (1j - 4 * t)
        X, Y = x[..., 0], x[..., 1]
        quad = X ** 2 + Y ** 2 + 1j * X + 1j * t
        psi = a * np.exp(-a * quad)
        return a, X, Y, quad, psi

    def value(x, t):
        return parts(x, t)[-1]

    def gradient(x, t):
        a, X, Y, _, psi = parts(x, t)
        return np.stack([-a * (2 * X + 1j) * psi, -a * 2 * Y * psi], axis=-1)

    def time_derivative(x, t):
        a, X, Y, quad, psi = parts(x, t)
        da = -4j * a * a
        return psi * (da / a - da * quad - 1j * a)

    def laplacian(x, t):
        a, X, Y, _, psi = parts(x, t)
        return psi * (a * a * ((2 * X + 1j) ** 2 + 4 * Y ** 2) - 4 * a)

    return ProblemSpec(
        name="gaussian",
        bounds=((-2.0, 4.0), (-2.5, 2.5)),
        final_time=2.0,
        potential=PiecewiseConstantPotential(default=0.0),
        initial=lambda x: value(x, 0.0),
        dirichlet=value,
        exact=ExactSolution(value, gradient, time_derivative, laplacian),
        parameters={},
    )


def plane_wave_problem(bounds, final_time, wavevector, potential=0.0, t_shift=0.0):
    """Single exponential exp(i(k.x - (|k|^2 + V)(t + t_shift))) with constant V."""
    kvec = np.atleast_1d(np.asarray(wavevector, dtype=float))
    omega = float(kvec @ kvec) + float(potential)

    def value(x, t):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * (x @ kvec - omega * (np.asarray(t) + t_shift)))

    def gradient(x, t):
        return 1j * value(x, t)[..., None] * kvec

    def time_derivative(x, t):
        return -1j * omega * value(x, t)

    def laplacian(x, t):
        return -float(kvec @ kvec) * value(x, t)

    return ProblemSpec(
        name="plane-wave",
        bounds=tuple((float(a), float(b)) for a, b in bounds),
        final_time=float(final_time),
        potential=PiecewiseConstantPotential(default=float(potential)),
        initial=lambda x: value(x, 0.0),
        dirichlet=value,
        exact=ExactSolution(value, gradient, time_derivative, laplacian),
        parameters={"wavevector": kvec, "omega": omega},
    )


def zero_problem(bounds, final_time, potential=None):
    zeros = lambda x, t=0.0: np.zeros(np.shape(x)[:-1], dtype=complex)  # noqa: E731
    grad = lambda x, t: np.zeros(np.shape(x), dtype=complex)  # noqa: E731
    return ProblemSpec(
        name="zero",
        bounds=tuple((float(a), float(b)) for a, b in bounds),
        final_time=float(final_time),
        potential=potential or PiecewiseConstantPotential(default=0.0),
        initial=zeros,
        dirichlet=zeros,
        exact=ExactSolution(zeros, grad, zeros, zeros),
        parameters={"homogeneous_dirichlet": True},
    )


BENCHMARKS = ("square-well", "gaussian")


def get_benchmark(name, v_star=20.0):
    if name == "square-well":
        return square_well_problem(v_star)
    if name == "gaussian":
        return gaussian_problem()
    raise KeyError(f"unknown benchmark {name!r}; choose from {BENCHMARKS}")
