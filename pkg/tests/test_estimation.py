import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fofdesign.basis import BasisSpec, build_basis
from fofdesign.errors import ConfigError, DomainError, EstimationError
from fofdesign.estimation import (
    CoefficientEstimate,
    FunctionalDataset,
    NoiseCovariance,
    beta_surface,
    estimate_sigma,
    fit,
    project_responses,
    reconstruct_beta,
    residuals,
    vec_variance,
)

GRID = np.linspace(0.0, 1.0, 1001)
THETA7 = build_basis(BasisSpec.fourier(7))
THETA2 = build_basis(BasisSpec.fourier(2))
THETA3 = build_basis(BasisSpec.fourier(3))


def dataset(rows):
    return FunctionalDataset(GRID, np.atleast_2d(rows))


def test_projection_of_basis_function():
    Y = project_responses(dataset(THETA7.eval(GRID)[:, 1]), THETA7)
    np.testing.assert_allclose(Y[0], np.eye(7)[1], atol=1e-6)


def test_projection_of_zero():
    np.testing.assert_array_equal(project_responses(dataset(np.zeros(GRID.size)), THETA7), 0.0)


def test_projection_linear_combination():
    th = THETA7.eval(GRID)
    Y = project_responses(dataset(3 * th[:, 0] - 2 * th[:, 4]), THETA7)
    np.testing.assert_allclose(Y[0], [3, 0, 0, 0, -2, 0, 0], atol=1e-6)


def test_projection_matches_analytic_integral():
    # integral of t^2 * sqrt(2) cos(2 pi t) over [0, 1] is sqrt(2) / (2 pi^2).
    Y = project_responses(dataset(GRID**2), THETA7)
    assert Y[0, 2] == pytest.approx(np.sqrt(2) / (2 * np.pi**2), abs=1e-6)
    assert Y[0, 0] == pytest.approx(1 / 3, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5), st.floats(-5, 5))
def test_projection_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    y1, y2 = rng.standard_normal((2, GRID.size))
    lhs = project_responses(dataset(a * y1 + b * y2), THETA7)
    rhs = a * project_responses(dataset(y1), THETA7) + b * project_responses(dataset(y2), THETA7)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_projection_needs_enough_points():
    with pytest.raises(ConfigError):
        project_responses(FunctionalDataset(np.linspace(0, 1, 5), np.zeros((2, 5))), THETA7)


def test_dataset_validation():
    with pytest.raises(ConfigError):
        FunctionalDataset(np.array([0.0, 0.5, 0.5, 1.0]), np.zeros((1, 4)))
    with pytest.raises(ConfigError):
        FunctionalDataset(np.linspace(0, 1, 4), np.zeros((1, 5)))


def _Z(rng, n=12, q=5):
    return rng.uniform(-1, 1, (n, q))


def test_fit_exact_recovery_and_zero(rng):
    Z = _Z(rng)
    B = rng.standard_normal((5, 7))
    est = fit(Z, Z @ B, THETA7)
    np.testing.assert_allclose(est.B_hat, B, atol=1e-9)
    np.testing.assert_array_equal(fit(Z, np.zeros((12, 7)), THETA7).B_hat, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_fit_idempotent(seed):
    rng = np.random.default_rng(seed)
    Z = _Z(rng)
    est = fit(Z, rng.standard_normal((12, 7)), THETA7)
    np.testing.assert_allclose(fit(Z, Z @ est.B_hat, THETA7).B_hat, est.B_hat, atol=1e-10)


def test_fit_agrees_with_normal_equations(rng):
    Z = _Z(rng)
    Y = rng.standard_normal((12, 7))
    np.testing.assert_allclose(
        fit(Z, Y, THETA7).B_hat, np.linalg.solve(Z.T @ Z, Z.T @ Y), atol=1e-10
    )


def test_fit_names_rank_deficient_block(rng):
    c = build_basis(BasisSpec.bspline(0, 3))
    Z = _Z(rng, q=5)
    Z[:, 4] = Z[:, 3]
    with pytest.raises(EstimationError, match="factor 2"):
        fit(Z, np.zeros((12, 7)), THETA7, [c, c])
    with pytest.raises(EstimationError, match="intercept"):
        fit(np.zeros((12, 3)), np.zeros((12, 7)), THETA7, [c])


def test_fit_unbiased_monte_carlo():
    rng = np.random.default_rng(7)
    Z = _Z(rng, 10, 3)
    B = rng.standard_normal((3, 3))
    reps = np.stack([fit(Z, Z @ B + rng.standard_normal((10, 3)), THETA3).B_hat for _ in range(2000)])
    se = reps.std(axis=0, ddof=1) / np.sqrt(reps.shape[0])
    assert np.all(np.abs(reps.mean(axis=0) - B) < 3 * se + 1e-12)


def test_vec_variance_examples():
    np.testing.assert_allclose(vec_variance(np.eye(3), np.eye(4)), np.eye(12))
    V = vec_variance(np.diag([2.0, 3.0]), np.diag([np.sqrt(5.0), np.sqrt(7.0)]))
    np.testing.assert_allclose(V, np.diag([2 / 5, 2 / 7, 3 / 5, 3 / 7]))
    with pytest.raises(EstimationError):
        vec_variance(np.eye(2), np.zeros((4, 2)))


def test_vec_variance_column_stacking_monte_carlo():
    rng = np.random.default_rng(3)
    Z = _Z(rng, 8, 3)
    A = rng.standard_normal((2, 2))
    S = A @ A.T + 0.5 * np.eye(2)
    L = np.linalg.cholesky(S)
    reps = []
    for _ in range(5000):
        E = rng.standard_normal((8, 2)) @ L.T
        reps.append(fit(Z, E, THETA2).B_hat.flatten(order="F"))
    emp = np.cov(np.array(reps), rowvar=False)
    V = vec_variance(S, Z)
    assert np.linalg.norm(emp - V) / np.linalg.norm(V) < 0.1


def test_noise_covariance_validation():
    with pytest.raises(ConfigError):
        NoiseCovariance(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ConfigError):
        NoiseCovariance(np.diag([1.0, -1.0]))


def test_reconstruct_beta_examples():
    eta = build_basis(BasisSpec.bspline(2, 3))
    B = np.zeros((5, 7))
    B[0, 0] = 1.0
    est = CoefficientEstimate(B, THETA7, (eta,))
    np.testing.assert_allclose(reconstruct_beta(est, 0.3, 0.8), [1.0, 0.0], atol=1e-15)
    zero = CoefficientEstimate(np.zeros((5, 7)), THETA7, (eta,))
    np.testing.assert_array_equal(reconstruct_beta(zero, 0.1, 0.2), [0.0, 0.0])
    with pytest.raises(DomainError):
        reconstruct_beta(est, 1.2, 0.5)


def test_reconstruct_rank_one_double_sum(rng):
    eta = build_basis(BasisSpec.bspline(2, 3))
    u, v = rng.standard_normal(4), rng.standard_normal(7)
    B = np.zeros((5, 7))
    B[1:] = np.outer(u, v)
    est = CoefficientEstimate(B, THETA7, (eta,))
    for s, t in rng.uniform(0, 1, (25, 2)):
        e, th = eta.eval(s), THETA7.eval(t)
        direct = sum(e[k] * u[k] * v[l] * th[l] for k in range(4) for l in range(7))
        assert reconstruct_beta(est, s, t)[1] == pytest.approx(direct, rel=1e-12, abs=1e-14)


def test_beta_surface_matches_pointwise(rng):
    eta = build_basis(BasisSpec.bspline(1, 4))
    est = CoefficientEstimate(rng.standard_normal((5, 7)), THETA7, (eta,))
    sg, tg = np.linspace(0, 1, 6), np.linspace(0, 1, 5)
    surf = beta_surface(est, 1, sg, tg)
    for i, s in enumerate(sg):
        for j, t in enumerate(tg):
            assert surf[i, j] == pytest.approx(reconstruct_beta(est, s, t)[1], rel=1e-12)


def test_estimate_sigma_examples():
    np.testing.assert_array_equal(estimate_sigma(np.zeros((10, 3)), 4).sigma, 0.0)
    r = np.array([[1.0], [-1.0], [2.0], [0.0]])
    assert estimate_sigma(r, 1).sigma.shape == (1, 1)
    assert estimate_sigma(r, 1).sigma[0, 0] == pytest.approx(6 / 3)
    with pytest.raises(EstimationError):
        estimate_sigma(np.zeros((3, 2)), 3)


def test_estimate_sigma_consistency():
    rng = np.random.default_rng(11)
    S = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, -0.2], [0.0, -0.2, 0.5]])
    R = rng.multivariate_normal(np.zeros(3), S, size=10_000)
    est = estimate_sigma(R, 0).sigma
    assert np.linalg.norm(est - S) / np.linalg.norm(S) < 0.05


def test_residuals_orthogonal_to_Z(rng):
    Z = _Z(rng)
    Y = rng.standard_normal((12, 7))
    R = residuals(Z, Y, fit(Z, Y, THETA7))
    np.testing.assert_allclose(Z.T @ R, 0.0, atol=1e-10)


def test_block_access():
    c1, c2 = build_basis(BasisSpec.bspline(0, 3)), build_basis(BasisSpec.bspline(1, 3))
    B = np.arange(6 * 2, dtype=float).reshape(6, 2)
    est = CoefficientEstimate(B, build_basis(BasisSpec.fourier(2)), (c1, c2))
    np.testing.assert_array_equal(est.intercept, B[0])
    np.testing.assert_array_equal(est.block(1), B[1:3])
    np.testing.assert_array_equal(est.block(2), B[3:6])
