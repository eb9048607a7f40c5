import numpy as np
import pytest

from trefftz_schrodinger.basis import basis_1d, default_parameters
from trefftz_schrodinger.problems import square_well_problem
from trefftz_schrodinger.taylor import (
    InadmissibleParameters,
    basis_taylor_coeffs,
    check_rank,
    check_recurrence,
    exponential_taylor,
    match_taylor,
    multi_indices,
    p_matrix,
    plane_wave_rates,
    s_matrix,
    square_well_taylor,
    taylor_check,
    taylor_matrix,
    taylor_size,
    vandermonde_1d,
)


def wavevectors_2d(ks, angle_groups):
    kv = []
    for k, angles in zip(ks, angle_groups):
        kv += [[k * np.cos(a), k * np.sin(a)] for a in angles]
    return np.array(kv)


def test_multi_indices_ordering():
    assert multi_indices(1, 2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    for d, p in ((1, 4), (2, 3)):
        idx = multi_indices(d, p)
        assert idx.shape == (taylor_size(d, p), d + 1)
        assert np.all(np.diff(idx.sum(axis=1)) >= 0)
        assert len({tuple(r) for r in idx.tolist()}) == idx.shape[0]


def test_constant_function_coefficients():
    c = basis_taylor_coeffs(basis_1d([-1.0, 0.0, 1.0]), 1, (0.3, 0.2), 3)
    assert c[0] == 1 and np.all(c[1:] == 0)


def test_first_order_coefficients():
    idx = multi_indices(1, 2).tolist()
    c = basis_taylor_coeffs(basis_1d([-1.0, 0.0, 1.0]), 2, (0.0, 0.0), 2)
    assert c[idx.index([1, 0])] == pytest.approx(1j)
    assert c[idx.index([0, 1])] == pytest.approx(-1j)


@pytest.mark.parametrize("d", [1, 2])
def test_coefficients_match_finite_differences(d):
    rng = np.random.default_rng(10 + d)
    kv = rng.uniform(-2, 2, d)
    v = rng.uniform(0, 5)
    point = rng.uniform(-1, 1, d + 1)
    a, b = plane_wave_rates([kv], v)
    f = lambda y: np.exp(a[0] @ y[:d] + b[0] * y[d])
    c = exponential_taylor(a, b, point, 2)[:, 0]
    idx = multi_indices(d, 2).tolist()
    h = 1e-4
    for axis in range(d + 1):
        e = np.zeros(d + 1)
        e[axis] = h
        first = (f(point + e) - f(point - e)) / (2 * h)
        second = (f(point + e) - 2 * f(point) + f(point - e)) / (2 * h * h)
        j1 = [0] * (d + 1)
        j1[axis] = 1
        j2 = [0] * (d + 1)
        j2[axis] = 2
        assert abs(first - c[idx.index(j1)]) <= 1e-6 * max(1, abs(first))
        assert abs(second - c[idx.index(j2)]) <= 1e-6 * max(1, abs(second))


def test_vandermonde_determinant():
    rows, v = vandermonde_1d([-1.0, 0.0, 1.0], 0.0, 1)
    assert rows == [(0, 0), (1, 0), (0, 1)]
    assert abs(np.linalg.det(v)) == pytest.approx(2.0, abs=1e-14)
    rep = check_rank(1, np.array([[-1.0], [0.0], [1.0]]))
    assert rep.full_rank and rep.rank == 3


def test_square_block_factorization():
    rng = np.random.default_rng(11)
    for p in (1, 2, 3):
        k = np.arange(-p, p + 1, dtype=float)
        v, point = rng.uniform(0, 20), rng.uniform(-1, 1, 2)
        m = taylor_matrix(k[:, None], p, point, v)
        rows = [r for r, (jx, _) in enumerate(m.indices.tolist()) if jx <= 1]
        _, vm = vandermonde_1d(k, v, p)
        dz = np.exp(1j * (k * point[0] - (k ** 2 + v) * point[1]))
        assert np.allclose(np.abs(dz), 1.0, atol=1e-15)
        assert np.max(np.abs(m.matrix[rows] - vm * dz[None, :])) <= 1e-12


@pytest.mark.parametrize("p", [1, 2, 3])
def test_full_rank_1d(p):
    rep = check_rank(p, default_parameters(1, p))
    assert rep.full_rank and rep.rank == 2 * p + 1


def test_repeated_wavenumbers_lose_rank():
    rep = check_rank(2, np.array([[1.0], [1.0], [0.0], [-1.0], [-2.0]]))
    assert rep.rank < 5 and not rep.full_rank


@pytest.mark.parametrize("p", [1, 2, 3])
def test_full_rank_2d_and_s_invertible(p):
    b = default_parameters(2, p)
    rep = check_rank(p, b)
    assert rep.full_rank and rep.rank == (p + 1) ** 2
    k = np.linalg.norm(b.wavevectors, axis=1)
    th = np.arctan2(b.wavevectors[:, 1], b.wavevectors[:, 0])
    s = s_matrix(k, th, 0.0, p)
    assert s.shape == (b.size, b.size)
    assert np.linalg.svd(s, compute_uv=False)[-1] > 0
    assert np.linalg.matrix_rank(s) == b.size


@pytest.mark.parametrize("p", [1, 2, 3])
def test_s_equals_p_times_phase_free_matrix(p):
    b = default_parameters(2, p)
    g = taylor_matrix(b, p, np.zeros(3), 2.5).matrix
    k = np.linalg.norm(b.wavevectors, axis=1)
    th = np.arctan2(b.wavevectors[:, 1], b.wavevectors[:, 0])
    assert np.max(np.abs(s_matrix(k, th, 2.5, p) - p_matrix(p) @ g)) <= 1e-10 * np.abs(g).max()


def test_2d_admissibility_counterexamples():
    angles = [[0.0], [0.0, 2 * np.pi / 3, 4 * np.pi / 3]]
    # equal k^2 across groups
    kv = wavevectors_2d([1.0, 1.0], [[np.pi / 2], angles[1]])
    assert check_rank(1, kv).rank < 4
    # k_m = 0 for m >= 1
    kv = wavevectors_2d([1.0, 0.0], angles)
    assert check_rank(1, kv).rank < 4
    # repeated angles within a group
    kv = wavevectors_2d([1.0, 2.0], [[0.0], [0.0, 0.0, np.pi]])
    assert check_rank(1, kv).rank < 4


def test_recurrence_of_basis_functions():
    for d, p in ((1, 4), (2, 3)):
        b = default_parameters(d, p)
        m = taylor_matrix(b, p, np.full(d + 1, 0.3), 7.0).matrix
        for ell in range(b.size):
            assert check_recurrence(m[:, ell], 7.0, d, p) <= 1e-12 * np.abs(m[:, ell]).max()


def test_recurrence_detects_non_solution():
    c = exponential_taylor([[1j]], [1j], (0.0, 0.0), 2)[:, 0]
    assert check_recurrence(c, 0.0, 1, 2) == pytest.approx(2.0, abs=1e-15)


def test_recurrence_of_square_well_solution():
    prob = square_well_problem(20.0)
    for point in ((0.4, 0.2), (1.5, 0.7), (-1.3, 0.1)):
        c, v = square_well_taylor(prob, point, 4)
        assert check_recurrence(c, v, 1, 4) <= 1e-8
        assert c[0] == pytest.approx(prob.exact.value(np.array([[point[0]]]), point[1])[0],
                                     abs=1e-12)


def test_match_member_of_span():
    b = default_parameters(1, 2)
    m = taylor_matrix(b, 2, (0.2, 0.1)).matrix
    r = match_taylor(b, m[:, 3], (0.2, 0.1))
    assert np.allclose(r.coefficients, np.eye(5)[3], atol=1e-12)
    assert r.residual <= 1e-14
    target = 2 * m[:, 1] - 1j * m[:, 2]
    r = match_taylor(b, target, (0.2, 0.1))
    assert np.allclose(r.coefficients, [0, 2, -1j, 0, 0], atol=1e-12)


def test_match_linear_combination_2d():
    b = default_parameters(2, 2)
    m = taylor_matrix(b, 2, (0.1, -0.2, 0.3), 1.0).matrix
    coeffs = np.arange(b.size) * (1 - 0.5j)
    r = match_taylor(b, m @ coeffs, (0.1, -0.2, 0.3), potential=1.0)
    assert np.allclose(r.coefficients, coeffs, atol=1e-10)
    assert np.allclose(r.lstsq_coefficients, coeffs, atol=1e-10)


def test_match_bound_state_inside_well():
    prob = square_well_problem(20.0)
    c, v = square_well_taylor(prob, (0.3, 0.4), 2)
    r = match_taylor(default_parameters(1, 2), c, (0.3, 0.4), potential=v)
    assert r.matched and r.residual <= 1e-8


def test_match_rejects_singular_subsystem():
    kv = np.array([[1.0], [1.0], [0.0]])
    with pytest.raises(InadmissibleParameters):
        match_taylor(kv, np.ones(3), (0.0, 0.0), p=1)


@pytest.mark.parametrize("d, p", [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2)])
def test_taylor_check_driver(d, p):
    check = taylor_check(d, p, seed=0)
    assert check.passed
    assert all(row.recurrence <= 1e-8 for row in check.rows)
