# qosm/schemas.py
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from .models import DEFAULT_QOS, Algorithm, PrimitiveId, QoSAttributeSpec, SelectionMode

REPORT_FORMAT = "qosm.report/1"
MODEL_FORMAT = "qosm.model/1"
TRUTH_FORMAT = "qosm.truth/1"


# --- Topology file ---
class ServiceConfig(BaseModel):
    name: str
    concrete_service: int = Field(ge=0)
    replica: int = Field(ge=0)
    software_primitives: List[str] = ["thread"]
    environmental_primitives: List[str] = ["workload"]
    qos: List[QoSAttributeSpec] = list(DEFAULT_QOS)

class VirtualMachineConfig(BaseModel):
    name: str
    hardware_primitives: List[str] = ["cpu", "memory"]
    services: List[ServiceConfig] = []

class PhysicalMachineConfig(BaseModel):
    name: str
    virtual_machines: List[VirtualMachineConfig] = []

class DependencyConfig(BaseModel):
    source: str  # service path, e.g. pm0/vm0/svc0
    target: str

class TopologyConfig(BaseModel):
    physical_machines: List[PhysicalMachineConfig]
    dependencies: List[DependencyConfig] = []


# --- Run reports ---
class VectorErrorRecord(BaseModel):
    algorithm: Algorithm
    e_local: float
    e_global: float
    e: float

class IntervalRecord(BaseModel):
    kind: Literal["interval"] = "interval"
    interval: int
    selected: List[str] = []
    vectors: List[VectorErrorRecord] = []
    chosen: Optional[Algorithm] = None
    prediction: Optional[float] = None  # None while warming up
    actual: float
    term_error: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    wall_time: Optional[float] = None  # seconds, only with --record-timing
    selection_time: Optional[float] = None
    training_time: Optional[float] = None

class RunSummary(BaseModel):
    kind: Literal["summary"] = "summary"
    format: str = REPORT_FORMAT
    service: str
    qos: str
    selection: SelectionMode
    learners: List[Algorithm]
    seed: int
    eval_window: int
    smape: Optional[float] = None
    n_terms: int = 0
    skipped_terms: int = 0
    mean_inputs: Optional[float] = None
    mean_wall_time: Optional[float] = None
    mean_selection_time: Optional[float] = None
    mean_training_time: Optional[float] = None

class RunReport(BaseModel):
    records: List[IntervalRecord]
    summary: RunSummary


# --- Trained model dumps ---
class LayoutDump(BaseModel):
    columns: List[PrimitiveId]
    q: int = Field(ge=1)
    autoregressive: bool = False

class ModelDump(BaseModel):
    format: str = MODEL_FORMAT
    algorithm: Algorithm
    layout: LayoutDump
    params: Dict[str, Any]


# --- Scenario file ---
class WorkloadPhase(BaseModel):
    """Intervals [start, end) driven by one generator. Rates are req/min."""
    start: int = Field(ge=0)
    end: int = Field(gt=0)
    generator: Literal["constant", "seasonal"] = "constant"
    level: float = Field(0.0, ge=0.0)
    base: float = Field(0.0, ge=0.0)
    amplitude: float = Field(0.0, ge=0.0)
    period: float = Field(48.0, gt=0.0)  # intervals
    noise: float = Field(0.0, ge=0.0)
    burst_rate: float = Field(0.0, ge=0.0, le=1.0)  # burst onsets per interval
    burst_height: float = Field(0.0, ge=0.0)  # relative to the phase level
    burst_width: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if self.end <= self.start:
            raise ValueError(f"phase [{self.start}, {self.end}) is empty")
        return self

class WorkloadProfile(BaseModel):
    phases: List[WorkloadPhase]
    seed: int = 0

    @model_validator(mode="after")
    def _contiguous(self):
        if not self.phases:
            raise ValueError("a workload profile needs at least one phase")
        if self.phases[0].start != 0:
            raise ValueError("the first workload phase must start at interval 0")
        for before, after in zip(self.phases, self.phases[1:]):
            if after.start != before.end:
                raise ValueError(f"phase starting at {after.start} does not follow the one ending at {before.end}")
        return self

class ServiceBehavior(BaseModel):
    """Closed-form parameters of one simulated service-instance."""
    service: str  # service path
    base_service_time: float = Field(8.0, gt=0.0)  # ms
    cpu_demand_per_request: float = Field(0.5, gt=0.0)  # cpu % per req/min
    thread_rate: float = Field(4.0, gt=0.0)  # req/min per thread
    memory_sensitivity: float = Field(0.3, ge=0.0)
    memory_reference: float = Field(2048.0, gt=0.0)  # MB
    gamma: float = Field(0.3, ge=0.0)
    overload_weight: float = Field(2.0, ge=0.0)
    dependency_weight: float = Field(0.2, ge=0.0)
    workload_share: float = Field(0.04, ge=0.0)
    workload_noise: float = Field(0.05, ge=0.0)
    rt_noise: float = Field(0.02, ge=0.0)
    throughput_noise: float = Field(0.01, ge=0.0)
    # contention coefficients keyed by co-located service path / co-hosted VM path
    k_thread: Dict[str, float] = {}
    k_workload: Dict[str, float] = {}
    k_cpu: Dict[str, float] = {}
    k_memory: Dict[str, float] = {}

    @model_validator(mode="after")
    def _nonnegative(self):
        for table in (self.k_thread, self.k_workload, self.k_cpu, self.k_memory):
            if any(v < 0 for v in table.values()):
                raise ValueError(f"contention coefficients of '{self.service}' must be nonnegative")
        return self

class ControlRange(BaseModel):
    initial: float
    low: float
    high: float
    walk: float = Field(0.03, ge=0.0)  # step std as a fraction of (high - low)
    step_probability: float = Field(0.02, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _bounded(self):
        if not self.low <= self.initial <= self.high:
            raise ValueError("initial control value must lie within [low, high]")
        return self

class ControlSchedule(BaseModel):
    """
    Per control-primitive name: a bounded random walk with occasional jumps.
    Primitives listed in `static` (as owner:name labels) stay at their
    initial value.
    """
    ranges: Dict[str, ControlRange] = {
        "cpu": ControlRange(initial=40.0, low=20.0, high=80.0),
        "memory": ControlRange(initial=2048.0, low=1024.0, high=4096.0),
        "thread": ControlRange(initial=20.0, low=8.0, high=40.0),
    }
    static: List[str] = []

class ScenarioConfig(BaseModel):
    seed: int = 0
    intervals: int = Field(500, gt=0)
    topology: TopologyConfig
    workload: WorkloadProfile
    behaviors: List[ServiceBehavior]
    controls: ControlSchedule = ControlSchedule()


# --- Ground-truth sidecar ---
class TruthDump(BaseModel):
    format: str = TRUTH_FORMAT
    scenario: ScenarioConfig
    first_interval: int = 0
    # "entity:metric" -> noise-free QoS per interval
    qos: Dict[str, List[float]]
    noise: Dict[str, List[List[float]]]  # service path -> [eps_rt, eps_tp] per interval
