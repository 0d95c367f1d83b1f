# qosm/simulator.py
"""
Seeded synthetic cloud traces. Workload follows a phased profile, control
primitives follow a bounded random walk, and QoS comes from a closed-form
model with interference from co-located services and co-hosted VMs:

    demand      = cpu_demand_per_request * (1 + memory_sensitivity * max(0, memory_reference / m - 1))
    capacity    = min(thread_rate * T, c / demand)
    utilization = w / capacity
    penalty(u)  = min(u, .95) / (1 - min(u, .95)) + overload_weight * max(0, u - 1)
    contention  = sum_co-located (k_thread * T' + k_workload * w') + sum_co-hosted (k_cpu * c' + k_memory * m')
    dependency  = sum_dependencies dependency_weight * penalty(u_d)
    rt          = max(0.05 * base, base * (1 + gamma * penalty(u) + contention + dependency) * (1 + eps_rt))
    throughput  = min(w, capacity) * (1 - min(1, |eps_tp|))
    reliability = 100 * (1 - exp(-threshold / rt))
    availability= 100 * exp(-(throughput / 60) * exp(-threshold / rt))

The ground truth is the same model with both noise terms at zero.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from . import schemas
from .errors import ConfigError
from .models import IntervalTrace, MetricKey, QoSAttributeSpec, QoSKind
from .seeding import child_int, child_rng
from .topology import Topology, validate_topology
from .trace import TraceTable

logger = logging.getLogger(__name__)

THREAD = "thread"
WORKLOAD = "workload"
CPU = "cpu"
MEMORY = "memory"
UTILIZATION_CAP = 0.95
MIN_RT_FRACTION = 0.05

Noise = Tuple[float, float]  # (eps_rt, eps_tp)


# --- Workload ---

def _phase_values(phase: schemas.WorkloadPhase, start: int, stop: int, rng: np.random.Generator) -> np.ndarray:
    span = np.arange(start, stop)
    if phase.generator == "constant":
        level = np.full(span.size, phase.level, dtype=float)
    else:
        angle = 2.0 * np.pi * (span - phase.start) / phase.period
        level = phase.base + phase.amplitude * np.sin(angle)
    anchor = phase.level if phase.generator == "constant" else phase.base
    bursts = np.zeros(span.size)
    if phase.burst_rate > 0 and phase.burst_height > 0:
        onsets = np.flatnonzero(rng.random(span.size) < phase.burst_rate)
        decay = np.exp(-np.arange(phase.burst_width) / max(1.0, phase.burst_width / 2.0))
        for onset in onsets:
            width = min(phase.burst_width, span.size - onset)
            bursts[onset:onset + width] += phase.burst_height * anchor * decay[:width]
    noise = phase.noise * rng.standard_normal(span.size) if phase.noise > 0 else 0.0
    return np.maximum(0.0, (level + bursts) * (1.0 + noise))


def generate_workload(profile: schemas.WorkloadProfile, intervals: int) -> np.ndarray:
    """Total request rate per interval. Intervals past the final phase continue it."""
    if intervals <= 0:
        raise ValueError("intervals must be positive")
    values = np.empty(intervals)
    for i, phase in enumerate(profile.phases):
        start = phase.start
        stop = intervals if i == len(profile.phases) - 1 else min(phase.end, intervals)
        if start >= intervals:
            break
        values[start:stop] = _phase_values(phase, start, stop, child_rng(profile.seed, "phase", i))
    return values


# --- Controls ---

def control_paths(
    topology: Topology, schedule: schemas.ControlSchedule, intervals: int, seed: int
) -> Dict[MetricKey, np.ndarray]:
    static = set(schedule.static)
    paths: Dict[MetricKey, np.ndarray] = {}
    for primitive in topology.primitives():
        if not primitive.is_control:
            continue
        spec = schedule.ranges.get(primitive.name)
        if spec is None:
            raise ConfigError(f"Control schedule has no range for '{primitive.name}' ({primitive.label})")
        values = np.full(intervals, spec.initial, dtype=float)
        if primitive.label not in static:
            rng = child_rng(seed, "control", primitive.label)
            width = spec.high - spec.low
            jumps = rng.random(intervals) < spec.step_probability
            steps = spec.walk * width * rng.standard_normal(intervals)
            targets = rng.uniform(spec.low, spec.high, intervals)
            for t in range(1, intervals):
                value = targets[t] if jumps[t] else values[t - 1] + steps[t]
                # reflect at the bounds
                if value < spec.low:
                    value = 2 * spec.low - value
                if value > spec.high:
                    value = 2 * spec.high - value
                values[t] = min(spec.high, max(spec.low, value))
        paths[primitive.key] = values
    return paths


# --- Closed form ---

def penalty(utilization: float, overload_weight: float) -> float:
    u = min(utilization, UTILIZATION_CAP)
    return u / (1.0 - u) + overload_weight * max(0.0, utilization - 1.0)


def capacity(behavior: schemas.ServiceBehavior, threads: float, cpu: float, memory: float) -> float:
    squeeze = behavior.memory_sensitivity * max(0.0, behavior.memory_reference / memory - 1.0)
    demand = behavior.cpu_demand_per_request * (1.0 + squeeze)
    return min(behavior.thread_rate * threads, cpu / demand)


def utilization(behavior: schemas.ServiceBehavior, workload: float, threads: float, cpu: float, memory: float) -> float:
    cap = capacity(behavior, threads, cpu, memory)
    if cap <= 0:
        return float("inf") if workload > 0 else 0.0
    return workload / cap


def interval_noise(seed: int, t: int, service_index: int, behavior: schemas.ServiceBehavior) -> Noise:
    z = child_rng(seed, "noise", t, service_index).standard_normal(2)
    return float(behavior.rt_noise * z[0]), float(behavior.throughput_noise * z[1])


@dataclass(frozen=True)
class ServiceOutcome:
    response_time: float  # ms
    throughput: float  # req/min

    def qos(self, spec: QoSAttributeSpec) -> float:
        if spec.kind == QoSKind.response_time:
            value = self.response_time
        elif spec.kind == QoSKind.throughput:
            value = self.throughput
        elif spec.kind == QoSKind.reliability:
            value = 100.0 * (1.0 - np.exp(-spec.threshold_ms / self.response_time))
        else:
            value = 100.0 * np.exp(-(self.throughput / 60.0) * np.exp(-spec.threshold_ms / self.response_time))
        return spec.clamp(float(value))


def _get(values: Mapping[MetricKey, float], key: MetricKey, what: str) -> float:
    try:
        return float(values[key])
    except KeyError:
        raise ConfigError(f"Missing {what} setting for {key[0]}:{key[1]}")


def simulate_interval(
    topology: Topology,
    behaviors: Mapping[str, schemas.ServiceBehavior],
    workloads: Mapping[MetricKey, float],
    controls: Mapping[MetricKey, float],
    t: int,
    noise: Optional[Mapping[str, Noise]] = None,
) -> IntervalTrace:
    """
    One interval of primitives and QoS. `noise` maps service paths to
    (eps_rt, eps_tp); absent entries mean zero noise.
    """
    noise = noise or {}
    values: Dict[MetricKey, float] = {}
    for primitive in topology.primitives():
        if primitive.is_control:
            values[primitive.key] = _get(controls, primitive.key, "control")
        else:
            values[primitive.key] = _get(workloads, primitive.key, "workload")

    def vm_cpu(vm_path: str) -> float:
        return values[(vm_path, CPU)]

    def vm_memory(vm_path: str) -> float:
        return values[(vm_path, MEMORY)]

    loads: Dict[str, float] = {}
    for path, record in topology.services.items():
        behavior = behaviors[path]
        loads[path] = utilization(
            behavior, values[(path, WORKLOAD)], values[(path, THREAD)], vm_cpu(record.vm), vm_memory(record.vm)
        )

    for path, record in topology.services.items():
        eps_rt, eps_tp = noise.get(path, (0.0, 0.0))
        outcome = service_outcome(topology, behaviors, values, loads, path, eps_rt, eps_tp)
        for spec in record.qos:
            values[(path, spec.name)] = outcome.qos(spec)
    return IntervalTrace(interval_index=t, values=values)


def service_outcome(
    topology: Topology,
    behaviors: Mapping[str, schemas.ServiceBehavior],
    values: Mapping[MetricKey, float],
    loads: Mapping[str, float],
    path: str,
    eps_rt: float = 0.0,
    eps_tp: float = 0.0,
) -> ServiceOutcome:
    record = topology.service(path)
    behavior = behaviors[path]
    workload = values[(path, WORKLOAD)]
    cap = capacity(behavior, values[(path, THREAD)], values[(record.vm, CPU)], values[(record.vm, MEMORY)])

    contention = 0.0
    for neighbour in topology.co_located(path):
        contention += behavior.k_thread.get(neighbour, 0.0) * values[(neighbour, THREAD)]
        contention += behavior.k_workload.get(neighbour, 0.0) * values[(neighbour, WORKLOAD)]
    for vm_path in topology.co_hosted_vms(record.vm):
        contention += behavior.k_cpu.get(vm_path, 0.0) * values[(vm_path, CPU)]
        contention += behavior.k_memory.get(vm_path, 0.0) * values[(vm_path, MEMORY)]
    dependency = sum(
        behavior.dependency_weight * penalty(loads[target], behaviors[target].overload_weight)
        for target in topology.dependencies_of(path)
    )

    clean = behavior.base_service_time * (
        1.0 + behavior.gamma * penalty(loads[path], behavior.overload_weight) + contention + dependency
    )
    response_time = max(MIN_RT_FRACTION * behavior.base_service_time, clean * (1.0 + eps_rt))
    throughput = min(workload, max(0.0, cap)) * (1.0 - min(1.0, abs(eps_tp)))
    return ServiceOutcome(response_time=response_time, throughput=throughput)


# --- Scenario ---

@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Noise-free QoS per interval plus the noise that was applied."""
    scenario: schemas.ScenarioConfig
    first_interval: int
    qos: Dict[MetricKey, np.ndarray] = field(repr=False)
    noise: Dict[str, np.ndarray] = field(repr=False)  # service path -> (n, 2)

    def to_dump(self) -> schemas.TruthDump:
        return schemas.TruthDump(
            scenario=self.scenario,
            first_interval=self.first_interval,
            qos={f"{k[0]}:{k[1]}": v.tolist() for k, v in self.qos.items()},
            noise={path: arr.tolist() for path, arr in self.noise.items()},
        )


def _check_scenario(topology: Topology, config: schemas.ScenarioConfig) -> Dict[str, schemas.ServiceBehavior]:
    behaviors: Dict[str, schemas.ServiceBehavior] = {}
    for behavior in config.behaviors:
        if behavior.service not in topology.services:
            raise ConfigError(f"Behavior given for undeclared service '{behavior.service}'")
        if behavior.service in behaviors:
            raise ConfigError(f"Service '{behavior.service}' has two behaviors")
        behaviors[behavior.service] = behavior
    for path, record in topology.services.items():
        if path not in behaviors:
            raise ConfigError(f"Service '{path}' has no behavior")
        if THREAD not in record.software or WORKLOAD not in record.environmental:
            raise ConfigError(f"Simulated service '{path}' needs '{THREAD}' and '{WORKLOAD}' primitives")
    for vm in topology.vms.values():
        if CPU not in vm.hardware or MEMORY not in vm.hardware:
            raise ConfigError(f"Simulated VM '{vm.path}' needs '{CPU}' and '{MEMORY}' primitives")
    return behaviors


def service_workloads(
    topology: Topology,
    behaviors: Mapping[str, schemas.ServiceBehavior],
    total: np.ndarray,
    seed: int,
) -> Dict[MetricKey, np.ndarray]:
    """Splits the total rate by each service's share, with idiosyncratic noise."""
    result: Dict[MetricKey, np.ndarray] = {}
    for index, path in enumerate(topology.services):
        behavior = behaviors[path]
        jitter = behavior.workload_noise * child_rng(seed, "share", index).standard_normal(total.size)
        result[(path, WORKLOAD)] = np.maximum(0.0, total * behavior.workload_share * (1.0 + jitter))
    return result


def run_scenario(config: schemas.ScenarioConfig) -> Tuple[TraceTable, GroundTruth]:
    topology = validate_topology(config.topology)
    behaviors = _check_scenario(topology, config)
    n = config.intervals

    profile = config.workload.model_copy(update={"seed": child_int(config.seed, "workload", config.workload.seed)})
    total = generate_workload(profile, n)
    workloads = service_workloads(topology, behaviors, total, config.seed)
    controls = control_paths(topology, config.controls, n, config.seed)

    services = list(topology.services)
    traces: List[IntervalTrace] = []
    truth = {key: np.empty(n) for key in topology.qos_keys()}
    noise = {path: np.empty((n, 2)) for path in services}
    for t in range(n):
        at_t = {key: float(series[t]) for key, series in workloads.items()}
        settings = {key: float(series[t]) for key, series in controls.items()}
        eps = {path: interval_noise(config.seed, t, i, behaviors[path]) for i, path in enumerate(services)}
        traces.append(simulate_interval(topology, behaviors, at_t, settings, t, eps))
        clean = simulate_interval(topology, behaviors, at_t, settings, t)
        for key in truth:
            truth[key][t] = clean[key]
        for path in services:
            noise[path][t] = eps[path]

    table = TraceTable.from_intervals(traces, required_keys=topology.metric_keys())
    logger.info("simulated intervals=%d services=%d seed=%d", n, len(services), config.seed)
    return table, GroundTruth(scenario=config, first_interval=0, qos=truth, noise=noise)
