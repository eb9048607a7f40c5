"""Skeleton norms, errors against exact solutions, energy accounting and rates."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .discretization import Discretization
from .timestepper import DiscreteSolution


class EnergyIdentityError(AssertionError):
    pass


@dataclass(frozen=True)
class NormComponents:
    """Squared contributions to the DG and DG+ norms.

    ``jump_t`` holds 1/2 ||[w]_t||^2 on space-like faces: the factor 1/2 is
    what makes Im A(w, w) = |||w|||_DG^2 hold exactly.
    """

    jump_t: float = 0.0
    endpoints: float = 0.0
    dirichlet: float = 0.0
    jump_n: float = 0.0
    jump_grad_n: float = 0.0
    lower_trace: float = 0.0
    avg_grad: float = 0.0
    dirichlet_grad: float = 0.0
    avg: float = 0.0

    @property
    def dg_squared(self):
        return self.jump_t + self.endpoints + self.dirichlet + self.jump_n + self.jump_grad_n

    @property
    def dg_plus_squared(self):
        return self.dg_squared + self.lower_trace + self.avg_grad + self.dirichlet_grad + self.avg

    @property
    def dg(self):
        return float(np.sqrt(self.dg_squared))

    @property
    def dg_plus(self):
        return float(np.sqrt(self.dg_plus_squared))

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


class CoefficientField:
    """Discrete Trefftz function given by raw coefficients of shape ``(N, ndof)``."""

    def __init__(self, disc, coefficients):
        self._sol = DiscreteSolution(disc, np.asarray(coefficients, dtype=complex).reshape(
            disc.mesh.slab_count, -1))

    def trace(self, n, cells, x, tau, key=None):
        return self._sol.trace(n, cells, x, tau, key)


class ExactField:
    """Analytic solution sampled on a slab with absolute time t_{n-1} + tau."""

    def __init__(self, disc, exact):
        self.knots = disc.mesh.time.knots
        self.exact = exact

    def trace(self, n, cells, x, tau, key=None):
        t = self.knots[n] + np.broadcast_to(tau, x.shape[:-1])
        return self.exact.value(x, t), self.exact.gradient(x, t)


class DifferenceField:
    def __init__(self, a, b):
        self.a, self.b = a, b

    def trace(self, n, cells, x, tau, key=None):
        va, ga = self.a.trace(n, cells, x, tau, key)
        vb, gb = self.b.trace(n, cells, x, tau, key)
        return va - vb, ga - gb


def as_field(disc, obj):
    if isinstance(obj, (np.ndarray, list, tuple)):
        return CoefficientField(disc, obj)
    return obj


def _cell_field(disc, fld, n, tau):
    x, w = disc.cell_quadrature
    cells = np.arange(disc.space.n_cells)
    val, _ = fld.trace(n, cells, x, np.full(x.shape[:-1], tau), ("cells", float(tau)))
    return val, w


def skeleton_norms(disc: Discretization, trace_field, jump_field=None, initial=None):
    """Norm components of a piecewise Trefftz field by direct face quadrature.

    ``jump_field`` (defaults to ``trace_field``) supplies the inter-element
    jumps; ``trace_field`` everything else.  When ``initial`` is given the
    F^0 contribution uses ``initial(x) - jump_field`` (an error against the
    initial datum) instead of the trace of ``trace_field``.
    """
    jump_field = jump_field or trace_field
    space = disc.space
    times = disc.mesh.time
    N = times.slab_count
    h = times.slab_lengths
    comp = dict.fromkeys([f.name for f in fields(NormComponents)], 0.0)

    bottom, w = _cell_field(disc, trace_field, 0, 0.0)
    if initial is not None:
        x, _ = disc.cell_quadrature
        jb, _ = _cell_field(disc, jump_field, 0, 0.0)
        bottom = initial(x) - jb
    top, _ = _cell_field(disc, trace_field, N - 1, h[-1])
    comp["endpoints"] = 0.5 * (np.sum(w * np.abs(bottom) ** 2) + np.sum(w * np.abs(top) ** 2))

    for n in range(N - 1):
        lower, _ = _cell_field(disc, jump_field, n, h[n])
        upper, _ = _cell_field(disc, jump_field, n + 1, 0.0)
        comp["jump_t"] += 0.5 * np.sum(w * np.abs(lower - upper) ** 2)
        tr, _ = _cell_field(disc, trace_field, n, h[n])
        comp["lower_trace"] += np.sum(w * np.abs(tr) ** 2)

    ic, nrm = space.interior_cells, space.interior_normals
    a_i, b_i = disc.flux.alpha_interior[:, None], disc.flux.beta_interior[:, None]
    bc, bn = space.boundary_cells, space.boundary_normals
    a_b = disc.flux.alpha_boundary[:, None]
    for n in range(N):
        if ic.shape[0]:
            x, tau, wf = disc.facet_quadrature("interior", h[n])
            k1, k2 = ("interior", 0, float(h[n])), ("interior", 1, float(h[n]))
            v1, g1 = jump_field.trace(n, ic[:, 0], x, tau, k1)
            v2, g2 = jump_field.trace(n, ic[:, 1], x, tau, k2)
            comp["jump_n"] += np.sum(wf * a_i * np.abs(v1 - v2) ** 2)
            gn = np.einsum("fqd,fd->fq", g1 - g2, nrm)
            comp["jump_grad_n"] += np.sum(wf * b_i * np.abs(gn) ** 2)
            t1, s1 = trace_field.trace(n, ic[:, 0], x, tau, k1)
            t2, s2 = trace_field.trace(n, ic[:, 1], x, tau, k2)
            comp["avg"] += np.sum(wf / b_i * np.abs(0.5 * (t1 + t2)) ** 2)
            comp["avg_grad"] += np.sum(wf / a_i * np.sum(np.abs(0.5 * (s1 + s2)) ** 2, axis=-1))
        x, tau, wf = disc.facet_quadrature("boundary", h[n])
        vb, gb = trace_field.trace(n, bc, x, tau, ("boundary", float(h[n])))
        comp["dirichlet"] += np.sum(wf * a_b * np.abs(vb) ** 2)
        comp["dirichlet_grad"] += np.sum(wf / a_b * np.abs(np.einsum("fqd,fd->fq", gb, bn)) ** 2)
    return NormComponents(**{k: float(v) for k, v in comp.items()})


def dg_norm(disc, w):
    """Components of |||w||| for a discrete function (coefficients or field)."""
    return skeleton_norms(disc, as_field(disc, w))


def dg_error(problem, solution: DiscreteSolution):
    """Components of |||psi - psi_hp|||; jump terms use psi_hp alone."""
    disc = solution.disc
    exact = ExactField(disc, problem.exact)
    return skeleton_norms(disc, DifferenceField(exact, solution), solution)


def l2_final_error(problem, solution: DiscreteSolution):
    disc = solution.disc
    x, w = disc.cell_quadrature
    N = solution.slab_count
    T = disc.mesh.time.final_time
    uh = solution.cell_trace(N - 1, disc.mesh.time.slab_lengths[-1])
    return float(np.sqrt(np.sum(w * np.abs(problem.exact.value(x, T) - uh) ** 2)))


def energy(solution: DiscreteSolution, level):
    """E(t_level; psi_hp^-) = 1/2 int |psi_hp|^2 with the trace from below (level >= 1)."""
    if level == 0:
        return 0.5 * float(np.sum(solution.disc.cell_quadrature[1]
                                  * np.abs(solution.cell_trace(0, 0.0)) ** 2))
    h = solution.disc.mesh.time.slab_lengths[level - 1]
    val = solution.cell_trace(level - 1, h)
    return 0.5 * float(np.sum(solution.disc.cell_quadrature[1] * np.abs(val) ** 2))


def energy_history(solution):
    return np.array([energy(solution, n) for n in range(1, solution.slab_count + 1)])


def initial_energy(disc, initial):
    x, w = disc.cell_quadrature
    return 0.5 * float(np.sum(w * np.abs(initial(x)) ** 2))


@dataclass(frozen=True)
class EnergyLoss:
    total: float
    dissipation: float
    initial_mismatch: float
    initial_energy: float
    final_energy: float

    @property
    def identity_defect(self):
        return abs((self.initial_energy - self.final_energy) - self.total)

    @property
    def relative_defect(self):
        """Defect relative to the energy scale max(E(0), E(T), E_loss)."""
        scale = max(self.initial_energy, self.final_energy, self.total, 1e-300)
        return self.identity_defect / scale


def energy_loss(solution: DiscreteSolution, initial, rtol=1e-9, check=True):
    """E_loss = delta_E + 1/2 ||psi_0 - psi_hp||^2 on F^0, checked against E(0) - E(T)."""
    disc = solution.disc
    norms = skeleton_norms(disc, solution)
    delta = norms.jump_t + norms.dirichlet + norms.jump_n + norms.jump_grad_n
    x, w = disc.cell_quadrature
    mismatch = 0.5 * float(np.sum(w * np.abs(initial(x) - solution.cell_trace(0, 0.0)) ** 2))
    e0 = initial_energy(disc, initial)
    eT = energy(solution, solution.slab_count)
    out = EnergyLoss(delta + mismatch, delta, mismatch, e0, eT)
    if check and out.relative_defect > rtol:
        raise EnergyIdentityError(
            f"energy identity violated: E(0)-E(T) = {e0 - eT:.6e}, E_loss = {out.total:.6e}")
    return out


@dataclass(frozen=True)
class RateFit:
    slope: float
    pairwise: np.ndarray
    intercept: float


def fit_rates(h, errors):
    """Least-squares log-log slope plus consecutive-pair rates."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.size != e.size:
        raise ValueError("h and errors must have equal length")
    if h.size < 3:
        raise ValueError("need at least three mesh levels")
    if np.any(e <= 0) or np.any(h <= 0):
        raise ValueError("errors and mesh sizes must be positive")
    lh, le = np.log(h), np.log(e)
    slope, intercept = np.polyfit(lh, le, 1)
    pairwise = np.diff(le) / np.diff(lh)
    return RateFit(float(slope), pairwise, float(intercept))


@dataclass
class ErrorRecord:
    benchmark: str
    p: int
    divisions: int
    h_x: float
    h_t: float
    dofs: int
    dg_err: float
    l2T_err: float
    e_loss: float
    kappa2: float
    rate_dg: float = float("nan")
    rate_l2: float = float("nan")
    k_mode: str = "equispaced"


@dataclass
class ErrorReport:
    records: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)

    def family(self, p, k_mode=None):
        out = [r for r in self.records if r.p == p and (k_mode is None or r.k_mode == k_mode)]
        return sorted(out, key=lambda r: -r.h_x)

    def fit(self, p, attr, k_mode=None):
        fam = self.family(p, k_mode)
        h = [max(r.h_x, r.h_t) for r in fam]
        return fit_rates(h, [getattr(r, attr) for r in fam])

    def finalize(self):
        """Fill consecutive-pair rates and least-squares slopes per (p, k_mode)."""
        keys = sorted({(r.p, r.k_mode) for r in self.records})
        for p, mode in keys:
            fam = self.family(p, mode)
            for prev, cur in zip(fam[:-1], fam[1:]):
                hp, hc = max(prev.h_x, prev.h_t), max(cur.h_x, cur.h_t)
                cur.rate_dg = float(np.log(cur.dg_err / prev.dg_err) / np.log(hc / hp))
                cur.rate_l2 = float(np.log(cur.l2T_err / prev.l2T_err) / np.log(hc / hp))
            if len(fam) >= 3:
                self.rates[(p, mode)] = {
                    attr: self.fit(p, attr, mode).slope
                    for attr in ("dg_err", "l2T_err", "e_loss", "kappa2")
                    if all(getattr(r, attr) > 0 for r in fam)
                }
        return self
