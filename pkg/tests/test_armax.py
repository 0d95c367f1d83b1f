import numpy as np
import pytest

from qosm.errors import InsufficientSamplesError, SchemaMismatchError
from qosm.learners import ArmaxModel, FeatureLayout, fit_armax
from qosm.learners.armax import solve_least_squares
from qosm.models import Algorithm, LearnerConfig

from .factories import hardware, series_source

X1 = hardware("pm0/vm0", "cpu")
X2 = hardware("pm0/vm0", "memory")
LINEAR = LearnerConfig.default(Algorithm.armax, autoregressive=False)


def test_matches_normal_equations_on_random_systems():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n, d = int(rng.integers(20, 60)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, d))
        y = X @ rng.normal(size=d) + rng.normal(scale=0.5, size=n) + 3.0
        coefficients, intercept = solve_least_squares(X, y)
        A = np.column_stack([X, np.ones(n)])
        expected = np.linalg.solve(A.T @ A, A.T @ y)
        np.testing.assert_allclose(coefficients, expected[:-1], atol=1e-6)
        assert intercept == pytest.approx(expected[-1], abs=1e-6)


def test_exact_linear_target_keeps_q_at_one():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 10, size=(40, 2))
    model = fit_armax(series_source([X1, X2], X, 2.0 * X[:, 0] + 3.0 * X[:, 1]), LINEAR)
    assert model.layout.q == 1
    np.testing.assert_allclose(model.coefficients, [2.0, 3.0], atol=1e-6)
    assert model.intercept == pytest.approx(0.0, abs=1e-6)


def test_constant_target():
    rng = np.random.default_rng(2)
    X = rng.uniform(0, 10, size=(30, 2))
    model = fit_armax(series_source([X1, X2], X, np.full(30, 7.0)), LINEAR)
    assert model.intercept == pytest.approx(7.0)
    np.testing.assert_allclose(model.coefficients, 0.0, atol=1e-12)


def test_lagged_dependence_raises_q():
    rng = np.random.default_rng(3)
    x = rng.normal(size=80)
    y = np.empty(80)
    y[0] = x[0]
    y[1:] = x[1:] + 0.8 * x[:-1]
    model = fit_armax(series_source([X1], x, y), LINEAR)
    assert model.layout.q >= 2
    assert model.coefficients[1] == pytest.approx(0.8, abs=1e-6)


def test_autoregressive_terms_follow_the_primitives():
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 5, 60)
    y = np.empty(60)
    y[0] = 1.0
    for t in range(1, 60):
        y[t] = 0.5 * y[t - 1] + 2.0 * x[t]
    model = fit_armax(series_source([X1], x, y), LearnerConfig.default(Algorithm.armax))
    assert model.layout.autoregressive
    assert model.layout.q == 1
    np.testing.assert_allclose(model.coefficients, [2.0, 0.5], atol=1e-6)


def test_duplicate_columns_fall_back_to_ridge():
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 10, 30)
    X = np.column_stack([x, x])
    coefficients, intercept = solve_least_squares(X, 4.0 * x + 1.0)
    np.testing.assert_allclose(X @ coefficients + intercept, 4.0 * x + 1.0, atol=1e-4)


def test_predict_is_affine():
    model = ArmaxModel(FeatureLayout((X1, X2)), np.array([2.0, 3.0]), 0.0)
    assert model.predict([1.0, 1.0]) == 5.0
    assert model.describe()["params"] == 3
    with pytest.raises(SchemaMismatchError):
        model.predict([1.0])


def test_needs_two_rows():
    with pytest.raises(InsufficientSamplesError):
        fit_armax(series_source([X1], [1.0], [2.0]), LINEAR)
