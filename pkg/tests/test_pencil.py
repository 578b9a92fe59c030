import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from _fixtures import accretive, accretive_pencil, commuting_pencil, rng_for, sectorial, unitary
from accretive_pencil.exceptions import NegativeRealEigenvalue, SearchFailed
from accretive_pencil.pencil import (
    ConditionC1Params,
    ConditionC2Params,
    ConditionReport,
    Convention,
    PencilSpec,
    build_lambda,
    check_c1,
    check_c2,
    check_c3,
    check_c4_c5,
    estimate_c2,
    evaluate_pencil,
    factor_shift_search,
    factorize,
    _min_shift,
    eigenvalue_localization_check,
    kernel_identity_z1,
    kernel_inclusion_lambda,
    ordered_residual,
    pencil_eigen,
    pencil_from_json,
    pencil_to_json,
    symmetrized_residual,
)

B35 = np.array([[4 - 1j, 4j], [4j, 16 + 4j]])
I2 = np.eye(2)


def scale(p, lam):
    return abs(lam) ** 2 + p.scale()


def test_pencil_spec_validation():
    with pytest.raises(ValueError):
        PencilSpec(np.eye(2), np.eye(3))
    assert pencil_from_json(pencil_to_json(PencilSpec(B35, I2))).dim == 2


def test_condition_params_validation():
    with pytest.raises(ValueError):
        ConditionC1Params(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        ConditionC2Params(0.0, -1.0)


def test_condition_report_consistency():
    with pytest.raises(ValueError):
        ConditionReport("x", True, -1.0, 0.0)
    r = ConditionReport("x", False, 0.5, 0.0, "hypothesis_unmet")
    assert r.to_dict()["mode"] == "hypothesis_unmet"


def test_check_c1_examples():
    r = check_c1(PencilSpec(I2, I2), ConditionC1Params(0, 0, 0))
    assert r.passed and r.margin == pytest.approx(1.0)
    B = np.diag([1.0, np.sqrt(2.0)])
    r = check_c1(PencilSpec(B, np.diag([-0.5, 1.0])), ConditionC1Params(1, 0, 0))
    assert r.passed and r.margin == pytest.approx(0.5)
    r = check_c1(PencilSpec(I2, -3 * I2), ConditionC1Params(1, 0.5, 0))
    assert not r.passed and r.margin == pytest.approx(-1.5)


def test_check_c1_sampled_mode():
    p = accretive_pencil(3, rng_for(30))
    r = check_c1(p, ConditionC1Params(1.0, 0.5, 0.5), samples=5000, seed=3)
    assert r.mode != "exact" and r.samples == 5000 and r.seed == 3
    r2 = check_c1(p, ConditionC1Params(1.0, 0.5, 0.5), samples=5000, seed=3)
    assert r.margin == r2.margin


def test_estimate_c2_examples():
    b, a, r = estimate_c2(PencilSpec(I2, np.zeros((2, 2))))
    assert b == 0 and a == 0 and r.passed
    c = 0.4
    b, a, _ = estimate_c2(PencilSpec(I2, c * I2))
    assert b == pytest.approx(c**2, rel=1e-5)
    B = np.diag([1.0, np.sqrt(10.0)])
    C = np.array([[0.0, 1.0], [0.0, 0.0]])
    b, _, _ = estimate_c2(PencilSpec(B, C))
    ts = np.logspace(-8, 8, 20001)
    brute = max(np.linalg.norm(C @ np.linalg.inv(np.diag([1.0, 10.0]) + t * I2), 2) for t in ts)
    assert b == pytest.approx(brute**2, rel=1e-4)


def test_check_c2_certified_params():
    q = accretive_pencil(4, rng_for(31))
    p = PencilSpec(q.B, 0.05 * q.C)
    b, a, r = estimate_c2(p)
    assert r.passed and b < 1
    assert check_c2(p, ConditionC2Params(a, b)).passed


def test_check_c3_examples():
    r = check_c3(PencilSpec(I2, np.zeros((2, 2))), t0=2.0)
    assert r.passed and r.margin == pytest.approx(1.0)
    B = accretive(3, rng_for(32))
    r = check_c3(PencilSpec(B, -(B @ B + 1.5 * np.eye(3))), t0=1.5)
    assert not r.passed and r.margin == pytest.approx(0.0, abs=1e-12)


def test_check_c4_c5_examples():
    r = check_c4_c5(PencilSpec(B35, I2))
    assert r.passed and r.margin == pytest.approx(4.0)
    assert not check_c4_c5(PencilSpec(-I2, I2)).passed
    r = check_c4_c5(PencilSpec(np.array([[0, 1], [0, 0]]), I2))
    assert not r.passed and r.margin == pytest.approx(-0.5)


def test_build_lambda_examples():
    C = accretive(3, rng_for(33))
    Lam, _ = build_lambda(PencilSpec(np.zeros((3, 3)), C))
    np.testing.assert_array_equal(Lam, C)
    Lam, r = build_lambda(PencilSpec(np.diag([1.0, np.sqrt(2)]), I2))
    np.testing.assert_allclose(Lam, np.diag([2.0, 3.0]))
    assert r.passed and r.margin == pytest.approx(2.0)
    _, r = build_lambda(PencilSpec(B35, I2))
    assert r.mode == "hypothesis_unmet" and r.params["margin_B2"] < 0


def test_factorize_examples():
    f = factorize(PencilSpec(np.zeros((2, 2)), np.diag([4.0, 9.0])))
    np.testing.assert_allclose(f.Z1, np.diag([2.0, 3.0]), atol=1e-14)
    np.testing.assert_allclose(f.Z2, -np.diag([2.0, 3.0]), atol=1e-14)
    p = PencilSpec(np.diag([1.0, 2.0]), np.diag([3.0, 5.0]))
    f = factorize(p)
    np.testing.assert_allclose(f.Z1, np.diag([3.0, 5.0]), atol=1e-14)
    np.testing.assert_allclose(f.Z2, np.diag([-1.0, -1.0]), atol=1e-14)
    assert f.commutator_norm == 0.0


def test_factorize_degenerate_lambda():
    B = accretive(3, rng_for(34))
    f = factorize(PencilSpec(B, -B @ B))
    assert f.defective_lambda
    np.testing.assert_allclose(f.Z1, B)
    np.testing.assert_allclose(f.Z2, B)


def test_factorize_missing_root():
    with pytest.raises(NegativeRealEigenvalue):
        factorize(PencilSpec(np.zeros((1, 1)), -np.eye(1)))
    f = factorize(PencilSpec(np.zeros((1, 1)), -np.eye(1)), "rotated")
    assert f.convention is Convention.ROTATED_ROOT
    assert ordered_residual(f, PencilSpec(np.zeros((1, 1)), -np.eye(1)), 0.7) < 1e-14


@given(st.integers(0, 10_000), st.sampled_from(list(Convention)))
def test_factorization_invariants(seed, conv):
    rng = rng_for(seed)
    p = accretive_pencil(4, rng)
    if conv is Convention.ROTATED_ROOT:
        p = PencilSpec(p.B, -p.C - 2 * p.B2)
    try:
        f = factorize(p, conv)
    except NegativeRealEigenvalue:
        return
    np.testing.assert_allclose(f.Z1 + f.Z2, 2 * p.B, atol=1e-13 * np.linalg.norm(p.B, 2))
    assert f.root_residual() <= 1e-10 * max(1.0, np.linalg.norm(f.Lambda, 2))
    assert np.trace(f.Z1) + np.trace(f.Z2) == pytest.approx(2 * np.trace(p.B), abs=1e-12 * np.linalg.norm(p.B, 2))


def test_evaluate_pencil_examples():
    p = accretive_pencil(3, rng_for(35))
    x = rng_for(36).standard_normal(3) + 0j
    np.testing.assert_allclose(evaluate_pencil(p, 0, x), -p.C @ x)
    d = PencilSpec(np.diag([1.0, 2.0]), np.diag([3.0, 4.0]))
    assert evaluate_pencil(d, 2.0, [1, 0])[0] == pytest.approx(4 - 4 - 3)


def test_symmetrized_residual_examples():
    p = commuting_pencil(4, rng_for(37))
    f = factorize(p)
    assert symmetrized_residual(f, p, 1 + 1j) <= 1e-12 * scale(p, 1 + 1j)
    p = accretive_pencil(5, rng_for(38))
    f = factorize(p)
    for lam in rng_for(39).standard_normal(20) + 1j * rng_for(40).standard_normal(20):
        assert symmetrized_residual(f, p, lam) <= 1e-10 * scale(p, lam)
    core = np.linalg.norm(-p.C - 0.5 * (f.Z1 @ f.Z2 + f.Z2 @ f.Z1), 2)
    assert symmetrized_residual(f, p, 0) == pytest.approx(core, abs=1e-12 * p.scale())
    assert core <= 1e-10 * p.scale()


def test_ordered_residual_equals_commutator():
    p = accretive_pencil(5, rng_for(41))
    f = factorize(p)
    assert f.commutator_norm > 1e-3
    vals = [ordered_residual(f, p, lam) for lam in rng_for(42).standard_normal(20) * (1 + 1j)]
    np.testing.assert_allclose(vals, f.commutator_norm, rtol=1e-10, atol=1e-10 * p.scale())


def test_ordered_residual_commuting_zero():
    p = commuting_pencil(5, rng_for(43))
    f = factorize(p)
    assert ordered_residual(f, p, 0.3 - 2j) <= 1e-12 * scale(p, 0.3 - 2j)


def test_kernel_inclusion_examples():
    p = PencilSpec(np.diag([0.0, 1.0]), np.diag([0.0, 1.0]))
    r = kernel_inclusion_lambda(p, np.pi / 4)
    assert r.passed and r.params["dim_N_Lambda"] == 1
    r = kernel_inclusion_lambda(PencilSpec(I2, I2), np.pi / 4)
    assert r.passed and r.params["dim_N_Lambda"] == 0
    U = unitary(4, rng_for(44))
    B = U @ np.diag([0, 1 + 0.2j, 2, 1.5]) @ U.conj().T
    C = U @ np.diag([0, 1, 2 + 0.5j, 1]) @ U.conj().T
    r = kernel_inclusion_lambda(PencilSpec(B, C), np.pi / 3)
    assert r.passed and r.params["dim_N_Lambda"] == 1
    with pytest.raises(ValueError):
        kernel_inclusion_lambda(p, np.pi / 2)


def test_kernel_identity_examples():
    p = PencilSpec(np.diag([0.0, 1.0]), np.zeros((2, 2)))
    f = factorize(p)
    np.testing.assert_allclose(f.Z1, np.diag([0.0, 2.0]), atol=1e-14)
    r = kernel_identity_z1(f, p, np.pi / 4)
    assert r.passed and r.params["dim_N_Z1"] == 1
    p = PencilSpec(B35, I2)
    assert kernel_identity_z1(factorize(p), p, np.pi / 4).params["dim_N_Z1"] == 0
    U = unitary(3, rng_for(45))
    p = PencilSpec(U @ np.diag([0, 1, 2 + 1j]) @ U.conj().T, U @ np.diag([0, 1, 1]) @ U.conj().T)
    assert kernel_identity_z1(factorize(p), p, np.pi / 4).passed


def test_factor_shift_search_examples():
    p = PencilSpec(np.diag([1.0, 2.0]), np.diag([1.0, 3.0]))
    assert factor_shift_search(factorize(p), 0.0)[0] == 0.0
    r1, r2 = factor_shift_search(factorize(PencilSpec(-I2, 5 * I2)), 0.01)
    assert r1 == 0.0 and r2 == 0.0
    for k in range(5):
        rng = rng_for(46, k)
        m = rng.uniform(0.1, 1.0)
        U = unitary(3, rng)
        B = U @ np.diag(rng.uniform(-m, 2, 3) + 1j * rng.uniform(-1, 1, 3)) @ U.conj().T
        B = B - (np.linalg.eigvalsh((B + B.conj().T) / 2)[0] + m) * np.eye(3)
        p = PencilSpec(B, 4 * np.eye(3))
        f = factorize(p)
        r1, _ = factor_shift_search(f, 0.0)
        Z1 = f.Z1
        deficit = max(0.0, -np.linalg.eigvalsh((Z1 + Z1.conj().T) / 2)[0])
        # the shift needed for the pi/4 sector is at least the accretivity deficit
        assert r1 >= deficit - 1e-6


def test_factor_shift_search_failure():
    p = PencilSpec(I2, I2)
    with pytest.raises(ValueError):
        factor_shift_search(factorize(p), -1.0)
    with pytest.raises(SearchFailed):
        _min_shift(-5 * I2, np.pi / 4, 1.0, 1e-6)
    assert _min_shift(-5 * I2, np.pi / 4, 10.0, 1e-6) == pytest.approx(5.0, abs=1e-5)


def test_pencil_eigen_examples():
    w, _ = pencil_eigen(PencilSpec(np.zeros((1, 1)), np.eye(1)))
    np.testing.assert_allclose(np.sort(w.real), [-1, 1], atol=1e-14)
    w, _ = pencil_eigen(PencilSpec(np.eye(1), 3 * np.eye(1)))
    np.testing.assert_allclose(np.sort(w.real), [-1, 3], atol=1e-13)


def test_pencil_eigenpairs_solve_pencil():
    p = accretive_pencil(5, rng_for(47))
    w, V = pencil_eigen(p)
    for lam, v in zip(w, V.T):
        assert np.linalg.norm(evaluate_pencil(p, lam, v)) <= 1e-9 * (abs(lam) ** 2 + p.scale())


@given(st.integers(0, 10_000))
def test_root_spectrum_split(seed):
    p = commuting_pencil(4, rng_for(seed))
    f = factorize(p)
    assert f.commutator_norm <= 1e-12 * p.scale()
    w, _ = pencil_eigen(p)
    z = np.concatenate([np.linalg.eigvals(f.Z1), np.linalg.eigvals(f.Z2)])
    cost = np.abs(w[:, None] - z[None, :])
    rows, cols = linear_sum_assignment(cost)
    assert cost[rows, cols].max() <= 1e-8 * p.scale()


def test_eigenvalue_localization_examples():
    r = eigenvalue_localization_check(PencilSpec(np.eye(1), 3 * np.eye(1)))
    assert r.passed
    r = eigenvalue_localization_check(PencilSpec(0.01 * I2, I2))
    assert r.passed
    r = eigenvalue_localization_check(PencilSpec(1e-9 * I2, I2))
    assert r.passed


def test_eigenvalue_localization_hypothesis():
    r = eigenvalue_localization_check(PencilSpec(-I2, I2))
    assert r.mode == "hypothesis_unmet"
    p = PencilSpec(sectorial(4, rng_for(48)), accretive(4, rng_for(49)))
    assert eigenvalue_localization_check(p).passed
