"""Taylor-matching checks for the complex-exponential Trefftz spaces.

A smooth solution of i psi_t + Lap psi - V psi = 0 is approximated to order
p at a point (z, s) when its Taylor coefficients up to total degree p lie in
the range of the matrix

    M[j, l] = (1 / j!) D^j phi_l(z, s),      |j| <= p,

whose columns are the Taylor vectors of the basis functions.  The helpers
here build M from closed-form derivatives, measure its rank, check the
coefficient recurrences implied by the PDE and solve the matching problem
through the square subsystems used in the admissibility proofs.

Nothing in the solver depends on this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

RANK_TOL = 1e-10
MATCH_TOL = 1e-8


class InadmissibleParameters(np.linalg.LinAlgError):
    pass


def multi_indices(d, p):
    """Multi-indices (j_x[, j_y], j_t) of total degree <= p, graded then lexicographic."""
    out = []
    for total in range(p + 1):
        if d == 1:
            out.extend((jx, total - jx) for jx in range(total, -1, -1))
        elif d == 2:
            for jx in range(total, -1, -1):
                for jy in range(total - jx, -1, -1):
                    out.append((jx, jy, total - jx - jy))
        else:
            raise ValueError("d must be 1 or 2")
    return np.array(out, dtype=int)


def taylor_size(d, p):
    return (p + 1) * (p + 2) // 2 if d == 1 else (p + 1) * (p + 2) * (p + 3) // 6


def _index_map(indices):
    return {tuple(j): r for r, j in enumerate(indices.tolist())}


def _factorials(indices):
    return np.prod([[factorial(int(v)) for v in row] for row in indices], axis=1)


def exponential_taylor(space_rates, time_rates, point, p, amplitudes=None):
    """Taylor coefficients at ``point = (z, s)`` of sum_m c_m exp(a_m . x + b_m t).

    ``space_rates`` has shape ``(m, d)``, ``time_rates`` ``(m,)``.  Without
    ``amplitudes`` the result is the matrix of per-term coefficients, shape
    ``(r_p, m)``; with them, the coefficient vector of the sum.
    """
    a = np.atleast_2d(np.asarray(space_rates, dtype=complex))
    b = np.asarray(time_rates, dtype=complex).ravel()
    d = a.shape[1]
    z = np.asarray(point[:d], dtype=float)
    s = float(point[d])
    idx = multi_indices(d, p)
    powers = np.ones((idx.shape[0], a.shape[0]), dtype=complex)
    for axis in range(d):
        powers *= a[None, :, axis] ** idx[:, axis, None]
    powers *= b[None, :] ** idx[:, d, None]
    coeffs = powers / _factorials(idx)[:, None] * np.exp(a @ z + b * s)[None, :]
    if amplitudes is None:
        return coeffs
    return coeffs @ np.asarray(amplitudes, dtype=complex)


def plane_wave_rates(wavevectors, potential=0.0):
    """Rates (i k d, -i (k^2 + V)) of the basis functions."""
    kv = np.atleast_2d(np.asarray(wavevectors, dtype=float))
    omega = np.sum(kv ** 2, axis=1) + potential
    return 1j * kv, -1j * omega


@dataclass(frozen=True)
class TaylorMatrix:
    """M[j, l] = D^j phi_l(z, s) / j! over the multi-indices ``indices``."""

    p: int
    point: np.ndarray
    indices: np.ndarray
    matrix: np.ndarray

    @property
    def shape(self):
        return self.matrix.shape


def _wavevectors(basis_or_vectors):
    kv = getattr(basis_or_vectors, "wavevectors", basis_or_vectors)
    return np.atleast_2d(np.asarray(kv, dtype=float))


def taylor_matrix(basis, p=None, point=None, potential=0.0):
    """Taylor matrix of a basis spec or of raw wavevectors ``(n, d)``.

    Raw wavevectors bypass the admissibility checks of the basis spec, which
    is what the rank-deficiency experiments need.
    """
    kv = _wavevectors(basis)
    d = kv.shape[1]
    if p is None:
        p = basis.p
    point = np.zeros(d + 1) if point is None else np.asarray(point, dtype=float)
    a, b = plane_wave_rates(kv, potential)
    return TaylorMatrix(p, point, multi_indices(d, p), exponential_taylor(a, b, point, p))


def basis_taylor_coeffs(basis, index, point, p, potential=0.0):
    """Taylor coefficients of basis function ``index`` at ``point``, closed form."""
    return taylor_matrix(basis, p, point, potential).matrix[:, index]


@dataclass(frozen=True)
class RankReport:
    rank: int
    expected: int
    sigma_max: float
    sigma_min: float

    @property
    def full_rank(self):
        return self.rank == self.expected


def expected_rank(d, p):
    return 2 * p + 1 if d == 1 else (p + 1) ** 2


def check_rank(p, basis, d=None, potential=0.0, point=None, tol=RANK_TOL):
    """Numerical rank of M with threshold ``tol * sigma_max``."""
    kv = _wavevectors(basis)
    d = d or kv.shape[1]
    m = taylor_matrix(kv, p, point, potential).matrix
    s = np.linalg.svd(m, compute_uv=False)
    rank = int(np.sum(s > tol * s[0]))
    return RankReport(rank, expected_rank(d, p), float(s[0]), float(s[-1]))


def check_recurrence(coeffs, potential, d, p):
    """Largest residual of the PDE relations between Taylor coefficients.

    For every |j| <= p - 2:
      i (j_t + 1) C[j + e_t] + sum_a (j_a + 1)(j_a + 2) C[j + 2 e_a] - V C[j].
    """
    idx = multi_indices(d, p)
    pos = _index_map(idx)
    c = np.asarray(coeffs, dtype=complex)
    worst = 0.0
    for j in idx:
        if j.sum() > p - 2:
            continue
        jt = j[d]
        up_t = j.copy()
        up_t[d] += 1
        res = 1j * (jt + 1) * c[pos[tuple(up_t)]] - potential * c[pos[tuple(j)]]
        for axis in range(d):
            up = j.copy()
            up[axis] += 2
            res += (j[axis] + 1) * (j[axis] + 2) * c[pos[tuple(up)]]
        worst = max(worst, abs(res))
    return float(worst)


def vandermonde_1d(wavenumbers, potential, p):
    """Rows j_x in {0, 1} of the 1D Taylor matrix without the phase factors."""
    k = np.asarray(wavenumbers, dtype=float)
    rows = [(jx, jt) for jx, jt in multi_indices(1, p).tolist() if jx <= 1]
    out = np.empty((len(rows), k.size), dtype=complex)
    for r, (jx, jt) in enumerate(rows):
        out[r] = ((1j * k) ** jx * (-1j * (k ** 2 + potential)) ** jt
                  / (factorial(jx) * factorial(jt)))
    return rows, out


def s_matrix(wavenumbers, angles, potential, p):
    """Square matrix S = [S+; S-] in polar form for 2D bases.

    S+ rows (n, j_t), n = 0..p:  (k^2 + V)^{j_t} k^n e^{+i n theta};
    S- rows (n, j_t), n = 1..p:  (k^2 + V)^{j_t} k^n e^{-i n theta};
    with j_t = 0..p - n in both blocks.
    """
    k = np.asarray(wavenumbers, dtype=float)
    th = np.asarray(angles, dtype=float)
    rows = []
    for sign, start in ((1, 0), (-1, 1)):
        for n in range(start, p + 1):
            for jt in range(p - n + 1):
                rows.append((k ** 2 + potential) ** jt * k ** n * np.exp(sign * 1j * n * th))
    return np.array(rows)


def p_matrix(p):
    """Row combination P with S = P G, G the phase-free 2D Taylor matrix.

    The identity e^{+-i n theta} = sum_{j_x} C(n, j_x) cos^{j_x} (+-i sin)^{n - j_x}
    turns the Cartesian rows (j_x, n - j_x, j_t) into the polar rows of S.
    """
    idx = multi_indices(2, p)
    pos = _index_map(idx)
    rows = []
    for sign, start in ((1, 0), (-1, 1)):
        for n in range(start, p + 1):
            for jt in range(p - n + 1):
                row = np.zeros(idx.shape[0], dtype=complex)
                for jx in range(n + 1):
                    jy = n - jx
                    # C(n, jx) jx! jy! = n!
                    factor = factorial(n) * factorial(jt) / (1j ** jx * (-1j) ** jt)
                    if sign < 0:
                        factor *= (-1) ** jy
                    row[pos[(jx, jy, jt)]] = factor
                rows.append(row)
    return np.array(rows)


@dataclass(frozen=True)
class MatchResult:
    coefficients: np.ndarray
    residual: float
    square_condition: float
    lstsq_coefficients: np.ndarray

    @property
    def matched(self):
        return self.residual <= MATCH_TOL


def _polar(kv):
    k = np.linalg.norm(kv, axis=1)
    return k, np.arctan2(kv[:, 1], kv[:, 0])


def match_taylor(basis, target, point, p=None, potential=0.0):
    """Solve M a = b for the Taylor vector ``b`` of a Trefftz function.

    The coefficients come from the square subsystem (rows j_x in {0, 1} in
    1D, the polar system S in 2D); the residual is measured on the full
    rectangular system, relative to |b|.
    """
    kv = _wavevectors(basis)
    d = kv.shape[1]
    p = basis.p if p is None else p
    tm = taylor_matrix(kv, p, point, potential)
    m = tm.matrix
    b = np.asarray(target, dtype=complex)
    a_ls = np.linalg.lstsq(m, b, rcond=None)[0]
    phases = m[0]
    if d == 1:
        rows = [r for r, (jx, _) in enumerate(tm.indices.tolist()) if jx <= 1]
        square = m[rows]
        rhs = b[rows]
    else:
        pm = p_matrix(p)
        k, th = _polar(kv)
        square = s_matrix(k, th, potential, p) * phases[None, :]
        rhs = pm @ b
    cond = np.linalg.cond(square)
    if not np.isfinite(cond) or cond > 1 / np.finfo(float).eps:
        raise InadmissibleParameters(f"square Taylor subsystem is singular (cond {cond:.3e})")
    a = np.linalg.solve(square, rhs)
    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    residual = float(np.linalg.norm(m @ a - b) / scale)
    return MatchResult(a, residual, float(cond), a_ls)


def square_well_taylor(problem, point, p):
    """Taylor vector of the square-well bound state, written as a sum of exponentials."""
    k = problem.parameters["k_star"]
    v = problem.parameters["v_star"]
    z = float(point[0])
    w = -1j * k ** 2
    if abs(z) < 1:
        rates = np.array([[1j * k], [-1j * k]])
        amps = [0.5, 0.5]
        pot = 0.0
    else:
        kappa = np.sqrt(v - k ** 2)
        side = np.sign(z)
        c = np.cos(k) / np.sinh(kappa)
        # sinh(kappa (2 - |x|)) = (e^{2 kappa} e^{-kappa |x|} - e^{-2 kappa} e^{kappa |x|}) / 2
        rates = np.array([[-kappa * side], [kappa * side]], dtype=complex)
        amps = [0.5 * c * np.exp(2 * kappa), -0.5 * c * np.exp(-2 * kappa)]
        pot = v
    return exponential_taylor(rates, [w, w], point, p, amps), pot


@dataclass(frozen=True)
class TaylorCheckRow:
    target: str
    point: tuple
    potential: float
    recurrence: float
    residual: float
    lstsq_gap: float


@dataclass(frozen=True)
class TaylorCheck:
    d: int
    p: int
    rank: RankReport
    s_sigma_min: float
    rows: tuple

    @property
    def passed(self):
        ok = self.rank.full_rank and all(r.residual <= MATCH_TOL for r in self.rows)
        return ok and (self.d == 1 or self.s_sigma_min > 0)


def taylor_check(d, p, seed=0, v_star=20.0):
    """Rank of M, smallest singular value of S (2D) and match residuals.

    Targets: in 1D the square-well bound state inside and outside the well
    and a plane wave off the basis wavenumbers; in 2D two plane waves with
    seeded random wavevectors and their sum.
    """
    from .basis import default_parameters
    from .problems import square_well_problem

    rng = np.random.default_rng(seed)
    basis = default_parameters(d, p)
    rank = check_rank(p, basis)
    rows = []

    def add(name, coeffs, point, pot):
        m = match_taylor(basis, coeffs, point, p, pot)
        rows.append(TaylorCheckRow(name, tuple(float(v) for v in point), float(pot),
                                   check_recurrence(coeffs, pot, d, p), m.residual,
                                   float(np.abs(m.coefficients - m.lstsq_coefficients).max())))

    if d == 1:
        sigma_s = float("nan")
        problem = square_well_problem(v_star)
        inner = (rng.uniform(-0.9, 0.9), rng.uniform(0, 1))
        outer = (rng.choice([-1, 1]) * rng.uniform(1.1, 1.9), rng.uniform(0, 1))
        for name, pt in (("bound state, well", inner), ("bound state, barrier", outer)):
            coeffs, pot = square_well_taylor(problem, pt, p)
            add(name, coeffs, pt, pot)
        k = rng.uniform(0.3, p + 0.7)
        pot = rng.uniform(0, 5)
        pt = (rng.uniform(-1, 1), rng.uniform(0, 1))
        a, b = plane_wave_rates([[k]], pot)
        add(f"plane wave k={k:.4f}", exponential_taylor(a, b, pt, p)[:, 0], pt, pot)
    else:
        k, th = _polar(basis.wavevectors)
        sigma_s = float(np.linalg.svd(s_matrix(k, th, 0.0, p), compute_uv=False)[-1])
        kv = rng.normal(size=(2, 2)) * 1.5
        pt = tuple(rng.uniform(-1, 1, size=3))
        a, b = plane_wave_rates(kv, 0.0)
        terms = exponential_taylor(a, b, pt, p)
        for j in range(2):
            add(f"plane wave k=({kv[j, 0]:.4f},{kv[j, 1]:.4f})", terms[:, j], pt, 0.0)
        add("sum of both waves", terms.sum(axis=1), pt, 0.0)
    return TaylorCheck(d, p, rank, sigma_s, tuple(rows))
