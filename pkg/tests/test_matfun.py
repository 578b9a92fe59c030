import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from _fixtures import accretive, rng_for, unitary
from accretive_pencil.exceptions import ExpmOverflow, NegativeRealEigenvalue
from accretive_pencil.matfun import (
    QuadratureRule,
    balakrishnan_power,
    expm,
    gauss_legendre_rule,
    grading_exponent,
    kato_square_inequality_check,
    moment_inequality_check,
    moment_prefactor,
    phi_functions,
    principal_sqrt,
    sqrt_denman_beavers,
    sqrt_schur,
)
from accretive_pencil.operator_core import Sector, sector_test

B35 = np.array([[4 - 1j, 4j], [4j, 16 + 4j]])


def test_quadrature_rule_validation():
    with pytest.raises(ValueError):
        QuadratureRule(np.array([0.5]), np.array([-1.0]), 1)
    with pytest.raises(ValueError):
        QuadratureRule(np.array([0.0]), np.array([1.0]), 1)


@pytest.mark.parametrize("panels", [1, 4])
def test_gauss_legendre_exact_on_monomials(panels):
    rule = gauss_legendre_rule(8, panels)
    for k in range(rule.degree + 1):
        assert rule.integrate(lambda t: t**k) == pytest.approx(1 / (k + 1), rel=1e-13)
    rule2 = QuadratureRule.from_json(rule.to_json(), rule.degree)
    np.testing.assert_array_equal(rule2.nodes, rule.nodes)


def test_principal_sqrt_examples():
    np.testing.assert_allclose(principal_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
    with pytest.raises(NegativeRealEigenvalue):
        principal_sqrt(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(NegativeRealEigenvalue):
        principal_sqrt(np.diag([-1.0, 1.0]))


def test_principal_sqrt_singular_accretive():
    S = principal_sqrt(np.diag([0.0, 1.0]))
    np.testing.assert_allclose(S, np.diag([0.0, 1.0]), atol=1e-14)


def test_principal_sqrt_eigen_oracle():
    for k in range(10):
        rng = rng_for(20, k)
        B = principal_sqrt(accretive(6, rng, floor=0.1))
        Lam = B @ B + accretive(6, rng)
        w, V = np.linalg.eig(Lam)
        oracle = V @ np.diag(np.sqrt(w)) @ np.linalg.inv(V)
        S = principal_sqrt(Lam)
        np.testing.assert_allclose(S, oracle, atol=1e-9 * np.linalg.norm(Lam, 2))
        assert sector_test(S, Sector(np.pi / 4 + 1e-8))[0]


@given(st.integers(0, 10_000), st.sampled_from([2, 5, 12]))
def test_root_consistency(seed, n):
    A = accretive(n, rng_for(seed), floor=1e-3)
    for S in (sqrt_schur(A), sqrt_denman_beavers(A)):
        assert np.linalg.norm(S @ S - A, 2) <= 1e-10 * np.linalg.norm(A, 2)


def test_methods_agree_with_scipy():
    A = accretive(16, rng_for(21), floor=0.2)
    ref = sla.sqrtm(A)
    for method in ("schur", "denman-beavers"):
        np.testing.assert_allclose(principal_sqrt(A, method), ref, atol=1e-10 * np.linalg.norm(ref, 2))


def test_expm_examples():
    np.testing.assert_array_equal(expm(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(expm(np.diag([1.0, -2.0])), np.diag([np.e, np.exp(-2)]), rtol=1e-15)
    with pytest.raises(ExpmOverflow):
        expm(np.diag([1000.0, 0.0]))
    assert issubclass(ExpmOverflow, OverflowError)


def test_expm_ode_oracle():
    rng = rng_for(22)
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    n = A.shape[0]

    def rhs(t, y):
        return (A @ y.reshape(n, n)).ravel()

    sol = solve_ivp(rhs, (0, 1), np.eye(n, dtype=complex).ravel(), method="DOP853", rtol=1e-13, atol=1e-13)
    X = sol.y[:, -1].reshape(n, n)
    np.testing.assert_allclose(expm(A), X, atol=1e-9 * np.linalg.norm(X, 2))


@given(st.integers(0, 10_000), st.sampled_from([0.1, 0.5, 1.0]), st.sampled_from([0.1, 0.5, 1.0]))
def test_semigroup_law(seed, s, t):
    T = accretive(5, rng_for(seed))
    lhs = expm(-(s + t) * T)
    rhs = expm(-s * T) @ expm(-t * T)
    assert np.linalg.norm(lhs - rhs, 2) <= 1e-9 * np.linalg.cond(T)


def test_phi_functions_scalar():
    for z in (0.0, 1e-3, -2.0 + 1j, 5.0):
        E, p1, p2 = phi_functions(np.array([[z]]))
        if z == 0:
            ref1, ref2 = 1.0, 0.5
        else:
            ref1 = (np.exp(z) - 1) / z
            ref2 = (np.exp(z) - 1 - z) / z**2
        assert E[0, 0] == pytest.approx(np.exp(z), rel=1e-13)
        assert p1[0, 0] == pytest.approx(ref1, rel=1e-12)
        assert p2[0, 0] == pytest.approx(ref2, rel=1e-10)


def test_grading_exponent():
    assert grading_exponent(0.5) == 2
    assert grading_exponent(0.25) == 4
    assert grading_exponent(0.75) == 4


def test_balakrishnan_examples():
    np.testing.assert_allclose(balakrishnan_power(np.eye(3), 0.5), np.eye(3), atol=1e-12)
    np.testing.assert_allclose(balakrishnan_power(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]), atol=1e-10)
    for alpha in (0.25, 0.75):
        ref = np.diag([4.0, 9.0]) ** alpha * np.eye(2)
        np.testing.assert_allclose(balakrishnan_power(np.diag([4.0, 9.0]), alpha), ref, atol=1e-9)


def test_balakrishnan_matches_sqrt():
    for k in range(5):
        T = accretive(8, rng_for(23, k), floor=0.05)
        S = principal_sqrt(T)
        assert np.linalg.norm(balakrishnan_power(T, 0.5) - S, 2) <= 1e-6 * np.linalg.norm(S, 2)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_fractional_power_angle(alpha):
    for k in range(20):
        T = accretive(5, rng_for(24, k), floor=0.05, skew=2.0)
        P = balakrishnan_power(T, alpha)
        assert sector_test(P, Sector(alpha * np.pi / 2 + 1e-3))[0]


def test_kato_square_inequality():
    assert kato_square_inequality_check(np.eye(3), 1.0, 100) == pytest.approx(1.0)
    assert kato_square_inequality_check(B35, 1.0, 10_000) >= 0
    for t in (2.0, 5.0, 20.0):
        slack = kato_square_inequality_check(np.diag([t, 1 / t]), t**2, 10_000)
        assert slack >= -1e-12
    for k in range(5):
        B = accretive(4, rng_for(25, k))
        for nu in (0.1, 1.0, 10.0):
            assert kato_square_inequality_check(B, nu, 2000, seed=k) >= -1e-10


def test_moment_inequality_normal_cases():
    assert moment_inequality_check(np.eye(3), 200) == pytest.approx(0.0, abs=1e-12)
    assert moment_inequality_check(np.diag([1.0, 4.0]), 2000) >= -1e-12
    for k in range(5):
        U = unitary(4, rng_for(26, k))
        T = U @ np.diag(rng_for(27, k).uniform(0.1, 3, 4)) @ U.conj().T
        assert moment_inequality_check(T, 5000, seed=k) >= -1e-10 * np.linalg.norm(T, 2)


def test_moment_inequality_general_accretive_needs_constant_two():
    # a non-normal accretive matrix violates the constant-1 form
    T = np.array([[1.0, 4.0], [0.0, 1.0]]) + 0j
    T = T + 1.1 * np.eye(2)
    assert moment_inequality_check(T, 20_000) < 0
    for k in range(10):
        T = accretive(4, rng_for(28, k), skew=3.0)
        assert moment_inequality_check(T, 5000, seed=k, constant=2.0) >= -1e-10 * np.linalg.norm(T, 2)


def test_moment_prefactor_exceeds_inverse_pi_squared():
    c = moment_prefactor(np.eye(2), rho=1.0, samples=100)
    assert c == pytest.approx(0.5)
    assert c > 1 / np.pi**2
