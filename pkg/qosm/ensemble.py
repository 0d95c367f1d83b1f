# qosm/ensemble.py
"""
Adaptive multi-learner bucket. Each candidate learner contributes a
<main, sub, local error pattern> vector; at prediction time every vector
is scored with

    E = alpha * E_local + beta * E_global

where E_local is the sub-model's error on the pattern sample nearest to
the current input (symmetric-uncertainty weighted distance) and E_global
is the mean pattern error. The lowest E wins and its main model predicts.
"""
import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import (EmptySeriesError, InsufficientSamplesError, LengthMismatchError,
                     NoValidTermsError, SchemaMismatchError, UntrainedBucketError)
from .learners import TrainedModel, build_training_set, feature_row, fit_model, refit_like
from .learners.base import FeatureLayout, require_samples
from .models import Algorithm, LearnerConfig, PrimitiveId
from .seeding import child_int
from .selection import SelectionResult
from .trace import SeriesSource

logger = logging.getLogger(__name__)

DEFAULT_TRAIN_FRACTION = 0.7
DEFAULT_WEIGHT = 0.1
MIN_SAMPLES = 4


def relative_error(predicted: float, actual: float) -> float:
    """|p - a| / (|p| + |a|), 0 when both are 0."""
    denominator = abs(predicted) + abs(actual)
    if denominator == 0.0:
        return 0.0
    return abs(predicted - actual) / denominator


# --- Bucket structure ---

@dataclass(frozen=True, eq=False)
class LocalErrorPattern:
    """Sub-model error on each held-out sample, keyed by its normalized input."""
    inputs: np.ndarray = field(repr=False)
    errors: np.ndarray = field(repr=False)
    intervals: Tuple[int, ...] = ()

    def __post_init__(self):
        errors = np.array(self.errors, dtype=float).reshape(-1)
        inputs = np.array(self.inputs, dtype=float)
        if inputs.ndim != 2 or inputs.shape[0] != len(errors):
            raise ValueError("pattern needs one input row per error")
        if np.any(errors < 0):
            raise ValueError("pattern errors must be nonnegative")
        inputs.setflags(write=False)
        errors.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "errors", errors)

    def __len__(self) -> int:
        return len(self.errors)

    @property
    def global_error(self) -> float:
        return float(np.mean(self.errors)) if len(self.errors) else 0.0


@dataclass(frozen=True)
class ModelVector:
    main: TrainedModel
    sub: TrainedModel
    pattern: LocalErrorPattern

    @property
    def algorithm(self) -> Algorithm:
        return self.main.algorithm

    @property
    def global_error(self) -> float:
        return self.pattern.global_error


@dataclass(frozen=True, eq=False)
class BucketInput:
    """Everything the bucket reads to predict one interval."""
    interval: int
    pattern_input: np.ndarray = field(repr=False)
    model_inputs: Tuple[np.ndarray, ...] = field(repr=False)


@dataclass(frozen=True, eq=False)
class Bucket:
    vectors: Tuple[ModelVector, ...]
    alpha: float
    beta: float
    columns: Tuple[PrimitiveId, ...]
    su_weights: Mapping[PrimitiveId, float]
    input_low: np.ndarray = field(repr=False)
    input_span: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        missing = [c.label for c in self.columns if c not in self.su_weights]
        if missing:
            raise ValueError(f"su_weights has no entry for {missing}")
        object.__setattr__(self, "vectors", tuple(self.vectors))
        object.__setattr__(self, "su_weights", MappingProxyType(dict(self.su_weights)))

    @property
    def trained(self) -> bool:
        return len(self.vectors) > 0

    @property
    def algorithms(self) -> Tuple[Algorithm, ...]:
        return tuple(v.algorithm for v in self.vectors)

    def su_vector(self) -> np.ndarray:
        return np.array([self.su_weights[c] for c in self.columns], dtype=float)

    def normalize(self, first_row: np.ndarray) -> np.ndarray:
        return normalize_row(first_row, self.input_low, self.input_span)

    def with_weights(self, alpha: float, beta: float) -> "Bucket":
        return replace(self, alpha=alpha, beta=beta)

    def inputs_at(self, source: SeriesSource, t: int) -> BucketInput:
        return BucketInput(
            interval=t,
            pattern_input=self.normalize(feature_row(source, pattern_layout(self.columns), t)),
            model_inputs=tuple(feature_row(source, v.main.layout, t) for v in self.vectors),
        )


def pattern_layout(columns: Sequence[PrimitiveId]) -> FeatureLayout:
    """First row of the selected primitives matrix, no autoregressive terms."""
    return FeatureLayout(tuple(columns), 1, False)


def normalize_row(row: np.ndarray, low: np.ndarray, span: np.ndarray) -> np.ndarray:
    return (np.asarray(row, dtype=float) - low) / np.where(span > 0, span, 1.0)


def vector_seeds(seed: int, algorithm: Algorithm) -> Tuple[int, int]:
    return child_int(seed, algorithm.value, "main"), child_int(seed, algorithm.value, "sub")


# --- Training ---

def _train_vector(
    config: LearnerConfig,
    source: SeriesSource,
    seed: int,
    train_fraction: float,
    low: np.ndarray,
    span: np.ndarray,
) -> ModelVector:
    main_seed, sub_seed = vector_seeds(seed, config.algorithm)
    main = fit_model(config, source, main_seed)
    data = build_training_set(source, main.layout)
    require_samples(data, MIN_SAMPLES, f"{config.algorithm.value} bucket vector")
    head, tail = data.split(train_fraction)
    sub = refit_like(main, head, config, sub_seed)

    predicted = sub.predict_many(tail.X)
    errors = [relative_error(p, a) for p, a in zip(predicted, tail.y)]
    layout = pattern_layout(source.columns)
    inputs = [normalize_row(feature_row(source, layout, int(t)), low, span) for t in tail.intervals]
    pattern = LocalErrorPattern(
        inputs=np.array(inputs, dtype=float).reshape(len(errors), len(source.columns)),
        errors=np.array(errors),
        intervals=tuple(int(t) for t in tail.intervals),
    )
    return ModelVector(main=main, sub=sub, pattern=pattern)


def train_bucket(
    selection: SelectionResult,
    source: SeriesSource,
    learners: Sequence[LearnerConfig],
    prior: Optional[Bucket] = None,
    seed: int = 0,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    alpha_init: float = DEFAULT_WEIGHT,
    beta_init: float = DEFAULT_WEIGHT,
    executor: Optional[Executor] = None,
) -> Bucket:
    """
    Fits one vector per learner config: main on every row, sub on the
    chronological first part, local error pattern from the rest.
    alpha and beta carry over from prior.
    """
    if not learners:
        raise ValueError("at least one learner config is required")
    columns = selection.columns
    if source.columns != columns:
        source = source.select(columns)

    base = build_training_set(source, pattern_layout(columns))
    require_samples(base, MIN_SAMPLES, "Bucket training")
    low = base.X.min(axis=0)
    span = base.X.max(axis=0) - low

    def train(config: LearnerConfig) -> ModelVector:
        return _train_vector(config, source, seed, train_fraction, low, span)

    if executor is not None:
        vectors = list(executor.map(train, learners))
    else:
        vectors = [train(config) for config in learners]

    alpha, beta = (prior.alpha, prior.beta) if prior is not None else (alpha_init, beta_init)
    return Bucket(
        vectors=tuple(vectors),
        alpha=alpha,
        beta=beta,
        columns=columns,
        su_weights={c: selection.scores[c].value for c in columns},
        input_low=low,
        input_span=span,
    )


# --- Prediction ---

def similarity_distance(p: Sequence[float], s: Sequence[float], su: Sequence[float]) -> float:
    p, s, su = (np.asarray(v, dtype=float).reshape(-1) for v in (p, s, su))
    if not (p.shape == s.shape == su.shape):
        raise SchemaMismatchError(f"Distance inputs differ in size: {p.size}, {s.size}, {su.size}")
    return float(np.sqrt(np.sum(su * (p - s) ** 2)))


def nearest_pattern(pattern: LocalErrorPattern, p: np.ndarray, su: np.ndarray) -> Tuple[int, float]:
    """Index and distance of the closest pattern sample; ties go to the earliest."""
    if len(pattern) == 0:
        raise UntrainedBucketError("Local error pattern is empty")
    if pattern.inputs.shape[1] != len(p) or len(su) != len(p):
        raise SchemaMismatchError(
            f"Pattern width {pattern.inputs.shape[1]} does not match input width {len(p)}"
        )
    distances = np.sqrt(np.sum(su * (pattern.inputs - p) ** 2, axis=1))
    index = int(np.argmin(distances))
    return index, float(distances[index])


@dataclass(frozen=True)
class VectorError:
    algorithm: Algorithm
    e_local: float
    e_global: float
    e: float


@dataclass(frozen=True)
class Prediction:
    value: float
    algorithm: Algorithm
    index: int
    errors: Tuple[VectorError, ...]


def component_errors(bucket: Bucket, pattern_input: np.ndarray) -> List[Tuple[float, float]]:
    """(E_local, E_global) per vector."""
    if not bucket.trained:
        raise UntrainedBucketError("Bucket has no trained vectors")
    su = bucket.su_vector()
    result = []
    for vector in bucket.vectors:
        index, _ = nearest_pattern(vector.pattern, pattern_input, su)
        result.append((float(vector.pattern.errors[index]), vector.global_error))
    return result


def arbitrate(errors: Sequence[Tuple[float, float]], alpha: float, beta: float) -> Tuple[int, List[float]]:
    """Index of the lowest combined error (first on ties) and every combined error."""
    combined = [alpha * local + beta * global_ for local, global_ in errors]
    best = 0
    for i, value in enumerate(combined):
        if value < combined[best]:
            best = i
    return best, combined


def predict_with_bucket(bucket: Bucket, inputs: BucketInput) -> Prediction:
    errors = component_errors(bucket, inputs.pattern_input)
    index, combined = arbitrate(errors, bucket.alpha, bucket.beta)
    vector = bucket.vectors[index]
    value = vector.main.predict(inputs.model_inputs[index])
    return Prediction(
        value=value,
        algorithm=vector.algorithm,
        index=index,
        errors=tuple(
            VectorError(v.algorithm, local, global_, e)
            for v, (local, global_), e in zip(bucket.vectors, errors, combined)
        ),
    )


# --- Weight adaptation ---

def strategy_errors(bucket: Bucket, samples: Sequence[Tuple[BucketInput, float]]) -> Tuple[float, float]:
    """
    Mean error of the predictions obtained when vectors are picked by
    local error alone and by global error alone.
    """
    local_only, global_only = [], []
    for inputs, actual in samples:
        errors = component_errors(bucket, inputs.pattern_input)
        for weights, sink in (((1.0, 0.0), local_only), ((0.0, 1.0), global_only)):
            index, _ = arbitrate(errors, *weights)
            predicted = bucket.vectors[index].main.predict(inputs.model_inputs[index])
            sink.append(relative_error(predicted, actual))
    return float(np.mean(local_only)), float(np.mean(global_only))


def update_weights(bucket: Bucket, samples: Sequence[Tuple[BucketInput, float]]) -> Bucket:
    """
    Moves weight towards whichever pure strategy did better on the new
    samples, by the gap between the two. Equal errors change nothing.
    """
    if not samples:
        raise InsufficientSamplesError("Weight update needs at least one new sample")
    e_local, e_global = strategy_errors(bucket, samples)
    alpha, beta = bucket.alpha, bucket.beta
    if e_local < e_global:
        alpha += e_global - e_local
    elif e_local > e_global:
        beta += e_local - e_global
    logger.debug("weights e_local=%.6f e_global=%.6f alpha=%.6f beta=%.6f", e_local, e_global, alpha, beta)
    return bucket.with_weights(alpha, beta)


# --- Accuracy ---

@dataclass(frozen=True)
class SmapeResult:
    value: float
    n_terms: int
    skipped: int


def smape_detail(predicted: Sequence[float], actual: Sequence[float]) -> SmapeResult:
    predicted = np.asarray(predicted, dtype=float).reshape(-1)
    actual = np.asarray(actual, dtype=float).reshape(-1)
    if predicted.size != actual.size:
        raise LengthMismatchError(f"SMAPE series lengths differ: {predicted.size} vs {actual.size}")
    if predicted.size == 0:
        raise EmptySeriesError("SMAPE needs at least one term")
    denominator = predicted + actual
    valid = denominator > 0
    skipped = int(predicted.size - valid.sum())
    if skipped:
        logger.debug("smape skipped_terms=%d of %d", skipped, predicted.size)
    if not valid.any():
        raise NoValidTermsError("Every SMAPE term has a non-positive denominator")
    terms = np.abs(predicted[valid] - actual[valid]) / denominator[valid]
    return SmapeResult(value=float(100.0 * terms.mean()), n_terms=int(valid.sum()), skipped=skipped)


def smape(predicted: Sequence[float], actual: Sequence[float]) -> float:
    return smape_detail(predicted, actual).value
