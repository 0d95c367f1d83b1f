# qosm/learners/base.py
import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, Optional, Sequence, Tuple, Type

import numpy as np

from .. import schemas
from ..errors import (InsufficientHistoryError, InsufficientSamplesError,
                      ModelFormatError, SchemaMismatchError)
from ..models import Algorithm, LearnerConfig, PrimitiveId
from ..trace import SeriesSource


# --- Input layout ---

@dataclass(frozen=True)
class FeatureLayout:
    """
    Column schema of a model input vector: the selected primitives matrix
    flattened row by row (lag 0 first), followed by QoS(t-1) ... QoS(t-q)
    when the layout is autoregressive.
    """
    columns: Tuple[PrimitiveId, ...]
    q: int = 1
    autoregressive: bool = False

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be at least 1")
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def width(self) -> int:
        return self.q * len(self.columns) + (self.q if self.autoregressive else 0)

    @property
    def max_lag(self) -> int:
        """How far behind a target interval its oldest input lies."""
        needs_previous = self.autoregressive or any(not c.is_control for c in self.columns)
        return self.q - 1 + (1 if needs_previous else 0)

    def with_q(self, q: int) -> "FeatureLayout":
        return FeatureLayout(self.columns, q, self.autoregressive)

    def to_dump(self) -> schemas.LayoutDump:
        return schemas.LayoutDump(columns=list(self.columns), q=self.q, autoregressive=self.autoregressive)

    @classmethod
    def from_dump(cls, dump: schemas.LayoutDump) -> "FeatureLayout":
        return cls(tuple(dump.columns), dump.q, dump.autoregressive)


def layout_for(config: LearnerConfig, columns: Sequence[PrimitiveId], q: Optional[int] = None) -> FeatureLayout:
    q = q or config.fixed_q or 1
    autoregressive = config.autoregressive and config.algorithm == Algorithm.armax
    return FeatureLayout(tuple(columns), q, autoregressive)


def feature_row(source: SeriesSource, layout: FeatureLayout, t: int) -> np.ndarray:
    """Input vector for predicting QoS at interval t."""
    if layout.columns != source.columns:
        source = source.select(layout.columns)
    first = t - layout.max_lag
    if first < source.first_interval or t > source.last_interval:
        raise InsufficientHistoryError(
            f"Interval {t} needs history from {first}; source covers "
            f"[{source.first_interval}, {source.last_interval}]"
        )
    row = np.empty(layout.width)
    n_lagged = layout.q * len(layout.columns)
    row[:n_lagged] = source.matrix(t, layout.q).flatten()
    if layout.autoregressive:
        row[n_lagged:] = source.qos[t - source.first_interval - 1 - np.arange(layout.q)]
    if not np.all(np.isfinite(row)):
        raise InsufficientHistoryError(f"Inputs for interval {t} include values not observed yet")
    return row


# --- Training data ---

@dataclass(frozen=True, eq=False)
class TrainingSet:
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    intervals: np.ndarray = field(repr=False)
    layout: FeatureLayout

    def __post_init__(self):
        X = np.array(self.X, dtype=float).reshape(len(self.y), self.layout.width)
        y = np.array(self.y, dtype=float)
        intervals = np.array(self.intervals, dtype=int)
        if len(intervals) != len(y):
            raise ValueError("one interval index per row is required")
        for arr in (X, y, intervals):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "intervals", intervals)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def column_low(self) -> np.ndarray:
        return self.X.min(axis=0) if len(self) else np.zeros(self.layout.width)

    @property
    def column_high(self) -> np.ndarray:
        return self.X.max(axis=0) if len(self) else np.zeros(self.layout.width)

    def take(self, rows) -> "TrainingSet":
        return TrainingSet(self.X[rows], self.y[rows], self.intervals[rows], self.layout)

    def split(self, fraction: float) -> Tuple["TrainingSet", "TrainingSet"]:
        """Chronological split: the first `fraction` of rows, then the rest."""
        cut = split_point(len(self), fraction)
        return self.take(slice(0, cut)), self.take(slice(cut, None))


def split_point(n: int, fraction: float) -> int:
    if n < 2:
        raise InsufficientSamplesError(f"Cannot split {n} sample(s) into train and test parts")
    cut = int(math.floor(n * fraction + 1e-9))
    return min(n - 1, max(1, cut))


def build_training_set(source: SeriesSource, layout: FeatureLayout, until: Optional[int] = None) -> TrainingSet:
    """
    One row per interval t whose inputs and QoS(t) are all observed, from
    the first interval with enough lag history up to `until`.
    """
    if layout.columns != source.columns:
        source = source.select(layout.columns)
    observed = np.flatnonzero(np.isfinite(source.qos))
    if observed.size == 0:
        return TrainingSet(np.empty((0, layout.width)), np.empty(0), np.empty(0, dtype=int), layout)
    last = source.first_interval + int(observed[-1])
    if until is not None:
        last = min(last, until)
    rows, targets, intervals = [], [], []
    for t in range(source.first_interval + layout.max_lag, last + 1):
        target = source.qos[t - source.first_interval]
        if not np.isfinite(target):
            continue
        try:
            rows.append(feature_row(source, layout, t))
        except InsufficientHistoryError:
            continue
        targets.append(target)
        intervals.append(t)
    X = np.array(rows, dtype=float).reshape(len(rows), layout.width)
    return TrainingSet(X, np.array(targets, dtype=float), np.array(intervals, dtype=int), layout)


def require_samples(data: TrainingSet, minimum: int, what: str):
    if len(data) < minimum:
        raise InsufficientSamplesError(f"{what} needs at least {minimum} samples, got {len(data)}")


# --- Trained models ---

class TrainedModel:
    """
    Immutable fitted learner. Subclasses register themselves by algorithm
    and round-trip through schemas.ModelDump.
    """
    algorithm: ClassVar[Algorithm]
    registry: ClassVar[Dict[Algorithm, Type["TrainedModel"]]] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        TrainedModel.registry[cls.algorithm] = cls

    def __init__(self, layout: FeatureLayout):
        self.layout = layout

    def predict(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.layout.width:
            raise SchemaMismatchError(
                f"{self.algorithm.value} model expects {self.layout.width} inputs, got {x.shape[0]}"
            )
        return float(self._predict(x))

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict(row) for row in np.asarray(X, dtype=float)])

    def _predict(self, x: np.ndarray) -> float:
        raise NotImplementedError

    # --- Structure ---

    @property
    def n_params(self) -> int:
        raise NotImplementedError

    def describe(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm.value,
            "q": self.layout.q,
            "inputs": self.layout.width,
            "params": self.n_params,
        }

    # --- Serialization ---

    def params(self) -> Dict[str, Any]:
        raise NotImplementedError

    @classmethod
    def from_params(cls, layout: FeatureLayout, params: Dict[str, Any]) -> "TrainedModel":
        raise NotImplementedError

    def to_dump(self) -> schemas.ModelDump:
        return schemas.ModelDump(algorithm=self.algorithm, layout=self.layout.to_dump(), params=self.params())

    @staticmethod
    def from_dump(dump: schemas.ModelDump) -> "TrainedModel":
        if dump.format != schemas.MODEL_FORMAT:
            raise ModelFormatError(f"Unsupported model format '{dump.format}'")
        cls = TrainedModel.registry.get(dump.algorithm)
        if cls is None:
            raise ModelFormatError(f"No model type registered for '{dump.algorithm.value}'")
        try:
            return cls.from_params(FeatureLayout.from_dump(dump.layout), dump.params)
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"Malformed {dump.algorithm.value} parameters: {exc}")
