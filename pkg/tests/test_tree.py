import numpy as np
import pytest

from qosm.learners import FeatureLayout, TrainingSet, fit_rt
from qosm.learners.tree import best_split
from qosm.models import Algorithm, LearnerConfig

from .factories import hardware, leaf_model

CONFIG = LearnerConfig.default(Algorithm.rt)


def _data(X, y) -> TrainingSet:
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    columns = tuple(hardware(f"pm0/vm{j}", "cpu") for j in range(X.shape[1]))
    return TrainingSet(X, np.asarray(y, dtype=float), np.arange(len(y)), FeatureLayout(columns))


def _exhaustive_sse(X, y, min_leaf):
    best = np.inf
    for j in range(X.shape[1]):
        values = np.unique(X[:, j])
        for lo, hi in zip(values, values[1:]):
            left = X[:, j] <= 0.5 * (lo + hi)
            if left.sum() < min_leaf or (~left).sum() < min_leaf:
                continue
            sse = np.sum((y[left] - y[left].mean()) ** 2) + np.sum((y[~left] - y[~left].mean()) ** 2)
            best = min(best, sse)
    return best


def test_step_function_splits_at_the_step():
    x = np.linspace(0.0, 1.0, 21)
    model = fit_rt(_data(x, (x > 0.5).astype(float)), CONFIG)
    assert model.feature[0] == 0
    assert abs(model.threshold[0] - 0.5) <= 0.05
    assert model.predict([0.2]) == 0.0
    assert model.predict([0.9]) == 1.0


def test_root_split_matches_exhaustive_search():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n, d = int(rng.integers(6, 30)), int(rng.integers(1, 4))
        X = rng.integers(0, 8, (n, d)).astype(float)
        cut = rng.integers(1, 7)
        y = np.where(X[:, 0] > cut, 3.0, 1.0) + rng.integers(0, 2, n)
        split = best_split(X, y, 2)
        oracle = _exhaustive_sse(X, y, 2)
        if np.isinf(oracle):
            assert split is None
        else:
            assert split.sse == pytest.approx(oracle, abs=1e-9)


def test_single_row_is_a_leaf():
    model = fit_rt(_data([[3.0]], [7.0]), CONFIG)
    assert model.n_leaves == 1
    assert model.predict([100.0]) == 7.0


def test_equal_targets_make_a_single_leaf():
    rng = np.random.default_rng(1)
    model = fit_rt(_data(rng.uniform(0, 1, (20, 2)), np.full(20, 4.0)), CONFIG)
    assert model.n_leaves == 1


def test_training_rows_predict_their_leaf_mean():
    rng = np.random.default_rng(2)
    X = rng.uniform(0, 1, (40, 3))
    y = np.round(10 * X[:, 0] + 5 * X[:, 2] ** 2, 1)
    model = fit_rt(_data(X, y), CONFIG)
    leaves = np.array([model.leaf_of(row) for row in X])
    for leaf in np.unique(leaves):
        assert model.value[leaf] == pytest.approx(y[leaves == leaf].mean())
    tree_sse = np.sum((model.predict_many(X) - y) ** 2)
    assert tree_sse <= np.sum((y - y.mean()) ** 2)


def test_single_leaf_model():
    model = leaf_model(7.0, (hardware("pm0/vm0", "cpu"),))
    assert model.predict([123.0]) == 7.0
    assert model.describe()["leaves"] == 1
    assert model.describe()["params"] == 1
