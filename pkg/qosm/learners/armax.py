# qosm/learners/armax.py
"""
ARMAX: affine model over the lagged selected primitives plus lagged QoS,
fitted by batch least squares. q is chosen by hill climbing.
"""
import logging
from typing import Any, Dict, List, Tuple

import numpy as np

from ..errors import InsufficientSamplesError
from ..models import Algorithm, LearnerConfig
from ..trace import SeriesSource
from .base import (FeatureLayout, TrainedModel, TrainingSet, build_training_set,
                   layout_for, require_samples, split_point)

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


class ArmaxModel(TrainedModel):
    algorithm = Algorithm.armax

    def __init__(self, layout: FeatureLayout, coefficients: np.ndarray, intercept: float):
        super().__init__(layout)
        coefficients = np.array(coefficients, dtype=float).reshape(layout.width)
        coefficients.setflags(write=False)
        self.coefficients = coefficients
        self.intercept = float(intercept)

    def _predict(self, x: np.ndarray) -> float:
        return float(x @ self.coefficients + self.intercept)

    @property
    def n_params(self) -> int:
        return self.layout.width + 1

    def params(self) -> Dict[str, Any]:
        return {"coefficients": self.coefficients.tolist(), "intercept": self.intercept}

    @classmethod
    def from_params(cls, layout: FeatureLayout, params: Dict[str, Any]) -> "ArmaxModel":
        return cls(layout, np.array(params["coefficients"], dtype=float), params["intercept"])


def solve_least_squares(X: np.ndarray, y: np.ndarray, ridge: float = 1e-8) -> Tuple[np.ndarray, float]:
    """
    Normal-equations solve on centred, scaled columns. Constant columns get
    a zero coefficient; an ill-conditioned Gram matrix gets a ridge term.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    coefficients = np.zeros(d)
    y_mean = float(y.mean())
    if d == 0:
        return coefficients, y_mean

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    active = scale > 1e-12 * np.maximum(1.0, np.abs(mean))
    if not active.any():
        return coefficients, y_mean

    Z = (X[:, active] - mean[active]) / scale[active]
    gram = Z.T @ Z
    rhs = Z.T @ (y - y_mean)
    try:
        if np.linalg.cond(gram) > MAX_CONDITION:
            raise np.linalg.LinAlgError("ill-conditioned")
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        logger.debug("least squares falling back to ridge=%g rows=%d cols=%d", ridge, n, int(active.sum()))
        beta = np.linalg.solve(gram + ridge * np.eye(gram.shape[0]), rhs)

    coefficients[active] = beta / scale[active]
    intercept = y_mean - float(coefficients @ mean)
    return coefficients, intercept


def fit_armax_fixed(data: TrainingSet, config: LearnerConfig) -> ArmaxModel:
    """Least-squares fit at the q already baked into data.layout."""
    require_samples(data, 1, "ARMAX")
    coefficients, intercept = solve_least_squares(data.X, data.y, config.ridge)
    return ArmaxModel(data.layout, coefficients, intercept)


def _holdout_error(train: TrainingSet, test: TrainingSet, config: LearnerConfig) -> float:
    model = fit_armax_fixed(train, config)
    residual = model.predict_many(test.X) - test.y
    return float(np.mean(residual ** 2))


def fit_armax(history: SeriesSource, config: LearnerConfig) -> ArmaxModel:
    """
    Climbs q from 1, scoring each candidate on the same chronological tail
    of target intervals, and stops at the first step that fails to improve
    by the configured relative tolerance (or when the next q has more
    parameters than training rows). Refits on all rows at the chosen q.
    """
    base = build_training_set(history, layout_for(config, history.columns, 1))
    require_samples(base, 2, "ARMAX")
    cutoff = int(base.intervals[split_point(len(base), 1.0 - config.holdout_fraction) - 1])

    best_q, best_error = 1, None
    errors: List[Tuple[int, float]] = []
    misses = 0
    # Below this the fit is exact up to rounding and further lags cannot help.
    exact = 1e-20 * (1.0 + float(np.mean(base.y ** 2)))
    for q in range(1, config.max_q + 1):
        if best_error is not None and best_error <= exact:
            break
        data = base if q == 1 else build_training_set(history, base.layout.with_q(q))
        train = data.take(data.intervals <= cutoff)
        test = data.take(data.intervals > cutoff)
        if len(test) == 0 or len(train) <= data.layout.width + 1:
            break
        error = _holdout_error(train, test, config)
        errors.append((q, error))
        if best_error is None or error < best_error * (1.0 - config.improvement_tolerance):
            best_q, best_error = q, error
            misses = 0
        else:
            misses += 1
            if misses >= config.patience:
                break

    logger.debug("armax hill climb errors=%s q=%d", [(q, round(e, 6)) for q, e in errors], best_q)
    data = base if best_q == 1 else build_training_set(history, base.layout.with_q(best_q))
    if len(data) < 1:
        raise InsufficientSamplesError("ARMAX has no rows at the chosen q")
    return fit_armax_fixed(data, config)
