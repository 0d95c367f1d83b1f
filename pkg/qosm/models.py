# qosm/models.py
import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Metric keys address one series in a trace: (entity path, metric name).
MetricKey = Tuple[str, str]

# --- Python Enums ---
class PrimitiveKind(str, enum.Enum):
    software_control = "software_control"
    hardware_control = "hardware_control"
    environmental = "environmental"

class QoSKind(str, enum.Enum):
    response_time = "response_time"  # ms
    throughput = "throughput"  # req/min
    reliability = "reliability"  # % completed under threshold_ms
    availability = "availability"  # % of time without a timeout over threshold_ms

class Algorithm(str, enum.Enum):
    armax = "armax"
    ann = "ann"
    rt = "rt"

class SelectionMode(str, enum.Enum):
    hybrid = "hybrid"
    single_mr = "single-mr"
    single_mrmr = "single-mrmr"
    fixed = "fixed"


# --- Identifiers ---

class PrimitiveId(BaseModel):
    """
    One model input dimension. Software-control and environmental
    primitives belong to a service-instance, hardware-control ones to a VM.
    """
    model_config = ConfigDict(frozen=True)

    owner: str
    name: str
    kind: PrimitiveKind

    @property
    def key(self) -> MetricKey:
        return (self.owner, self.name)

    @property
    def lag_offset(self) -> int:
        # Environmental primitives enter the model one interval late.
        return 1 if self.kind == PrimitiveKind.environmental else 0

    @property
    def is_control(self) -> bool:
        return self.kind != PrimitiveKind.environmental

    @property
    def label(self) -> str:
        return f"{self.owner}:{self.name}"

    def sort_key(self) -> Tuple[str, str]:
        return self.key


class ServiceInstanceId(BaseModel):
    model_config = ConfigDict(frozen=True)

    concrete_service: int = Field(ge=0)
    replica: int = Field(ge=0)

    @property
    def label(self) -> str:
        return f"S_{self.concrete_service}_{self.replica}"


class QoSAttributeSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: QoSKind
    threshold_ms: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _threshold_when_needed(self):
        if self.kind in (QoSKind.reliability, QoSKind.availability) and self.threshold_ms is None:
            raise ValueError(f"{self.kind.value} attribute '{self.name}' needs a positive threshold_ms")
        return self

    @property
    def is_percentage(self) -> bool:
        return self.kind in (QoSKind.reliability, QoSKind.availability)

    def clamp(self, value: float) -> float:
        if self.is_percentage:
            return min(100.0, max(0.0, value))
        return value


# Four QoS attributes per service by default.
DEFAULT_QOS = (
    QoSAttributeSpec(name="response_time", kind=QoSKind.response_time),
    QoSAttributeSpec(name="throughput", kind=QoSKind.throughput),
    QoSAttributeSpec(name="reliability", kind=QoSKind.reliability, threshold_ms=30.0),
    QoSAttributeSpec(name="availability", kind=QoSKind.availability, threshold_ms=60.0),
)


# --- Learner configuration ---

class LearnerConfig(BaseModel):
    """
    Hyperparameters for one candidate learner. ANN and RT run with a fixed
    single lag row; ARMAX climbs q at training time.
    """
    model_config = ConfigDict(frozen=True)

    algorithm: Algorithm
    fixed_q: Optional[int] = Field(default=None, ge=1)

    # hill climbing (ARMAX q, ANN hidden units)
    patience: int = Field(1, ge=1)
    improvement_tolerance: float = Field(1e-4, ge=0.0)
    holdout_fraction: float = Field(0.3, gt=0.0, lt=1.0)

    # ARMAX
    max_q: int = Field(6, ge=1)
    ridge: float = Field(1e-8, gt=0.0)
    autoregressive: bool = True

    # ANN / RPROP
    eta_plus: float = Field(1.2, gt=1.0)
    eta_minus: float = Field(0.5, gt=0.0, lt=1.0)
    step_min: float = Field(1e-6, gt=0.0)
    step_max: float = Field(50.0, gt=0.0)
    step_init: float = Field(0.1, gt=0.0)
    max_epochs: int = Field(500, ge=1)
    max_hidden: int = Field(8, ge=1)
    weight_init: float = Field(0.5, gt=0.0)
    plateau_epochs: int = Field(25, ge=1)
    plateau_tolerance: float = Field(1e-7, ge=0.0)

    # RT
    min_leaf: int = Field(2, ge=1)

    @model_validator(mode="after")
    def _lag_rule(self):
        if self.algorithm == Algorithm.armax and self.fixed_q is not None:
            raise ValueError("ARMAX determines q by hill climbing; fixed_q must be absent")
        if self.algorithm in (Algorithm.ann, Algorithm.rt) and self.fixed_q != 1:
            raise ValueError(f"{self.algorithm.value} runs with fixed_q = 1")
        return self

    @classmethod
    def default(cls, algorithm: Algorithm, **overrides) -> "LearnerConfig":
        fixed_q = None if algorithm == Algorithm.armax else 1
        return cls(algorithm=algorithm, fixed_q=fixed_q, **overrides)


# --- Traces and matrices ---

@dataclass(frozen=True)
class IntervalTrace:
    """
    Per-interval means of every primitive and QoS attribute, keyed by
    (entity path, metric name).
    """
    interval_index: int
    values: Mapping[MetricKey, float]

    def __post_init__(self):
        if self.interval_index < 0:
            raise ValueError("interval_index must be nonnegative")
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))

    def __getitem__(self, key: MetricKey) -> float:
        return self.values[key]


@dataclass(frozen=True, eq=False)
class SelectedPrimitivesMatrix:
    """
    Lagged input matrix. cells[r, c] is column c at lag r behind its
    kind's offset (control primitives at t - r, environmental at t - 1 - r).
    """
    columns: Tuple[PrimitiveId, ...]
    q: int
    interval: int
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be at least 1")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("matrix columns must be distinct")
        cells = np.array(self.cells, dtype=float).reshape(self.q, len(self.columns))
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    def first_row(self) -> np.ndarray:
        return self.cells[0]

    def flatten(self) -> np.ndarray:
        return self.cells.reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SelectedPrimitivesMatrix):
            return NotImplemented
        return (
            self.columns == other.columns
            and self.q == other.q
            and self.interval == other.interval
            and np.array_equal(self.cells, other.cells)
        )
