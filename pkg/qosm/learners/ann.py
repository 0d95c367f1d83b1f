# qosm/learners/ann.py
"""
Three-layer network: sigmoid hidden layer, linear output, trained with
iRprop- on min/max normalized inputs and target.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np

from ..models import Algorithm, LearnerConfig
from ..seeding import child_rng
from .base import FeatureLayout, TrainedModel, TrainingSet, require_samples

logger = logging.getLogger(__name__)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# --- Parameter packing ---

def n_weights(inputs: int, hidden: int) -> int:
    return hidden * inputs + hidden + hidden + 1


def unpack(params: np.ndarray, inputs: int, hidden: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    i = hidden * inputs
    w1 = params[:i].reshape(hidden, inputs)
    b1 = params[i:i + hidden]
    w2 = params[i + hidden:i + 2 * hidden]
    return w1, b1, w2, float(params[-1])


def forward(params: np.ndarray, X: np.ndarray, hidden: int) -> np.ndarray:
    w1, b1, w2, b2 = unpack(params, X.shape[1], hidden)
    return sigmoid(X @ w1.T + b1) @ w2 + b2


def loss_and_gradient(params: np.ndarray, X: np.ndarray, y: np.ndarray, hidden: int) -> Tuple[float, np.ndarray]:
    """Half mean squared error and its gradient with respect to params."""
    n, inputs = X.shape
    w1, b1, w2, b2 = unpack(params, inputs, hidden)
    h = sigmoid(X @ w1.T + b1)
    residual = h @ w2 + b2 - y
    loss = 0.5 * float(np.mean(residual ** 2))

    d_out = residual / n
    g_w2 = h.T @ d_out
    g_b2 = d_out.sum()
    d_hidden = np.outer(d_out, w2) * h * (1.0 - h)
    g_w1 = d_hidden.T @ X
    g_b1 = d_hidden.sum(axis=0)
    return loss, np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])


# --- Training ---

@dataclass(frozen=True)
class TrainingOutcome:
    params: np.ndarray
    history: Tuple[float, ...]  # best-so-far loss per epoch, non-increasing
    epochs: int


def train_network(
    X: np.ndarray, y: np.ndarray, hidden: int, config: LearnerConfig, rng: np.random.Generator
) -> TrainingOutcome:
    """
    iRprop- over the whole batch. Returns the lowest-loss weights seen,
    stopping at the epoch cap or when the best loss stalls.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    params = rng.uniform(-config.weight_init, config.weight_init, n_weights(X.shape[1], hidden))
    steps = np.full(params.shape, config.step_init)
    previous = np.zeros(params.shape)

    best_loss, best_params = np.inf, params.copy()
    history: List[float] = []
    stalled = 0
    for epoch in range(1, config.max_epochs + 1):
        loss, grad = loss_and_gradient(params, X, y, hidden)
        if loss < best_loss - config.plateau_tolerance:
            stalled = 0
        else:
            stalled += 1
        if loss < best_loss:
            best_loss, best_params = loss, params.copy()
        history.append(best_loss)
        if stalled >= config.plateau_epochs:
            break

        agreement = grad * previous
        grow = agreement > 0
        shrink = agreement < 0
        steps[grow] = np.minimum(steps[grow] * config.eta_plus, config.step_max)
        steps[shrink] = np.maximum(steps[shrink] * config.eta_minus, config.step_min)
        grad = np.where(shrink, 0.0, grad)
        params = params - np.sign(grad) * steps
        previous = grad

    final_loss, _ = loss_and_gradient(params, X, y, hidden)
    if final_loss < best_loss:
        best_loss, best_params = final_loss, params.copy()
        history.append(best_loss)
    best_params.setflags(write=False)
    return TrainingOutcome(best_params, tuple(history), len(history))


# --- Normalization ---

def _span(low: np.ndarray, high: np.ndarray) -> np.ndarray:
    span = np.asarray(high, dtype=float) - low
    return np.where(span > 0, span, 0.0)


def _scale(values: np.ndarray, low: np.ndarray, span: np.ndarray) -> np.ndarray:
    # Zero-span columns map to 0.
    return (values - low) / np.where(span > 0, span, 1.0)


class AnnModel(TrainedModel):
    algorithm = Algorithm.ann

    def __init__(
        self,
        layout: FeatureLayout,
        hidden: int,
        weights: np.ndarray,
        x_low: np.ndarray,
        x_span: np.ndarray,
        y_low: float,
        y_span: float,
    ):
        super().__init__(layout)
        self.hidden = int(hidden)
        self.weights = np.array(weights, dtype=float)
        self.x_low = np.array(x_low, dtype=float).reshape(layout.width)
        self.x_span = np.array(x_span, dtype=float).reshape(layout.width)
        self.y_low = float(y_low)
        self.y_span = float(y_span)
        for arr in (self.weights, self.x_low, self.x_span):
            arr.setflags(write=False)
        if self.weights.shape[0] != n_weights(layout.width, self.hidden):
            raise ValueError("weight vector does not match the network shape")

    def _predict(self, x: np.ndarray) -> float:
        z = _scale(x, self.x_low, self.x_span).reshape(1, self.layout.width)
        out = float(forward(self.weights, z, self.hidden)[0])
        return self.y_low + out * self.y_span

    @property
    def n_params(self) -> int:
        return self.weights.shape[0]

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "hidden": self.hidden}

    def params(self) -> Dict[str, Any]:
        return {
            "hidden": self.hidden,
            "weights": self.weights.tolist(),
            "x_low": self.x_low.tolist(),
            "x_span": self.x_span.tolist(),
            "y_low": self.y_low,
            "y_span": self.y_span,
        }

    @classmethod
    def from_params(cls, layout: FeatureLayout, params: Dict[str, Any]) -> "AnnModel":
        return cls(
            layout,
            params["hidden"],
            np.array(params["weights"], dtype=float),
            np.array(params["x_low"], dtype=float),
            np.array(params["x_span"], dtype=float),
            params["y_low"],
            params["y_span"],
        )


def fit_ann_fixed(data: TrainingSet, config: LearnerConfig, hidden: int, seed: int) -> AnnModel:
    """Trains one network with the given hidden count on every row."""
    require_samples(data, 1, "ANN")
    x_low = data.column_low
    x_span = _span(x_low, data.column_high)
    y_low = data.y.min(keepdims=True)
    y_span = _span(y_low, data.y.max(keepdims=True))
    X = _scale(data.X, x_low, x_span)
    y = _scale(data.y.reshape(-1, 1), y_low, y_span).ravel()
    outcome = train_network(X, y, hidden, config, child_rng(seed, "hidden", hidden))
    return AnnModel(data.layout, hidden, outcome.params, x_low, x_span, float(y_low[0]), float(y_span[0]))


def fit_ann(data: TrainingSet, config: LearnerConfig, seed: int = 0) -> AnnModel:
    """
    Climbs the hidden-unit count from 1, training each candidate on the
    chronological head and scoring it on the held-out tail. The winning
    count is refit on all rows.
    """
    require_samples(data, 2, "ANN")
    train, test = data.split(1.0 - config.holdout_fraction)

    best_hidden, best_error = 1, None
    misses = 0
    errors: List[Tuple[int, float]] = []
    for hidden in range(1, config.max_hidden + 1):
        candidate = fit_ann_fixed(train, config, hidden, seed)
        error = float(np.mean((candidate.predict_many(test.X) - test.y) ** 2))
        errors.append((hidden, error))
        if best_error is None or error < best_error * (1.0 - config.improvement_tolerance):
            best_hidden, best_error = hidden, error
            misses = 0
        else:
            misses += 1
            if misses >= config.patience:
                break
    logger.debug("ann hill climb errors=%s hidden=%d", [(h, round(e, 6)) for h, e in errors], best_hidden)
    return fit_ann_fixed(data, config, best_hidden, seed)
