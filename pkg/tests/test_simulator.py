import numpy as np
import pytest

from qosm import schemas
from qosm.errors import ConfigError
from qosm.models import QoSKind
from qosm.partitioning import partition
from qosm.relevance import discretize, su_value
from qosm.scenarios import DATABASE, DEFAULT_SUBJECT, default_scenario, default_topology
from qosm.simulator import (ServiceOutcome, capacity, control_paths, generate_workload, penalty,
                            run_scenario, simulate_interval)
from qosm.topology import validate_topology

from .factories import SUBJECT, hardware, small_scenario


def _behaviors(scenario: schemas.ScenarioConfig):
    return {b.service: b for b in scenario.behaviors}


def _settings(topology, workload=40.0, overrides=None):
    """Every primitive at a fixed value: cpu 40, memory 2048, 20 threads."""
    fixed = {"cpu": 40.0, "memory": 2048.0, "thread": 20.0, "workload": workload}
    values = {p.key: fixed[p.name] for p in topology.primitives()}
    values.update(overrides or {})
    return values


def _plain_behaviors(topology, **subject):
    return {
        path: schemas.ServiceBehavior(service=path, **(subject if path == SUBJECT else {}))
        for path in topology.services
    }


# --- Workload ---

def test_constant_phases_and_boundaries():
    profile = schemas.WorkloadProfile(phases=[
        schemas.WorkloadPhase(start=0, end=5, level=10.0),
        schemas.WorkloadPhase(start=5, end=10, level=20.0),
    ])
    values = generate_workload(profile, 15)
    assert values[:5].tolist() == [10.0] * 5
    # intervals past the last phase continue it
    assert values[5:].tolist() == [20.0] * 10


def test_seasonal_phase_without_amplitude_is_its_base():
    profile = schemas.WorkloadProfile(phases=[
        schemas.WorkloadPhase(start=0, end=30, generator="seasonal", base=700.0, amplitude=0.0),
    ])
    assert np.all(generate_workload(profile, 30) == 700.0)


def test_seasonal_phase_peaks_a_quarter_period_in():
    profile = schemas.WorkloadProfile(phases=[
        schemas.WorkloadPhase(start=0, end=3, level=50.0),
        schemas.WorkloadPhase(start=3, end=20, generator="seasonal", base=100.0, amplitude=40.0, period=8.0),
    ])
    values = generate_workload(profile, 20)
    assert values[3] == pytest.approx(100.0)
    assert values[5] == pytest.approx(140.0)
    assert values[9] == pytest.approx(60.0)


def test_workload_is_seeded_and_nonnegative():
    profile = schemas.WorkloadProfile(seed=4, phases=[
        schemas.WorkloadPhase(start=0, end=200, level=10.0, noise=2.0, burst_rate=0.2, burst_height=1.0),
    ])
    first = generate_workload(profile, 200)
    assert np.array_equal(first, generate_workload(profile, 200))
    assert first.min() >= 0.0


# --- Controls ---

def test_control_walks_stay_in_bounds(small_topology):
    schedule = schemas.ControlSchedule(static=[hardware("pm0/vm0", "cpu").label])
    paths = control_paths(small_topology, schedule, 300, seed=1)
    assert np.all(paths[("pm0/vm0", "cpu")] == 40.0)
    for (owner, name), values in paths.items():
        spec = schedule.ranges[name]
        assert values.min() >= spec.low and values.max() <= spec.high
    assert np.ptp(paths[("pm0/vm1", "cpu")]) > 0.0


def test_control_schedule_needs_every_control_name(small_topology):
    schedule = schemas.ControlSchedule(ranges={"cpu": schemas.ControlRange(initial=40.0, low=20.0, high=80.0)})
    with pytest.raises(ConfigError):
        control_paths(small_topology, schedule, 10, seed=0)


# --- Closed form ---

def test_penalty():
    assert penalty(0.0, 2.0) == 0.0
    assert penalty(0.5, 2.0) == pytest.approx(1.0)
    assert penalty(2.0, 2.0) == pytest.approx(0.95 / 0.05 + 2.0)


def test_idle_service_answers_at_base_time(small_topology):
    values = _settings(small_topology, overrides={(SUBJECT, "workload"): 0.0})
    trace = simulate_interval(small_topology, _plain_behaviors(small_topology), values, values, 0)
    assert trace[(SUBJECT, "response_time")] == 8.0
    assert trace[(SUBJECT, "throughput")] == 0.0


def test_overloaded_service_is_capped_at_capacity(small_topology):
    behaviors = _plain_behaviors(small_topology)
    values = _settings(small_topology, overrides={(SUBJECT, "workload"): 1e6})
    trace = simulate_interval(small_topology, behaviors, values, values, 0)
    assert trace[(SUBJECT, "throughput")] == capacity(behaviors[SUBJECT], 20.0, 40.0, 2048.0) == 80.0


def test_co_hosted_cpu_raises_response_time(small_topology):
    values = _settings(small_topology)
    weak = simulate_interval(small_topology, _plain_behaviors(small_topology, k_cpu={"pm0/vm1": 0.004}), values, values, 0)
    strong = simulate_interval(small_topology, _plain_behaviors(small_topology, k_cpu={"pm0/vm1": 0.008}), values, values, 0)
    assert strong[(SUBJECT, "response_time")] > weak[(SUBJECT, "response_time")]


def test_busy_dependency_slows_its_caller(small_topology):
    behaviors = _plain_behaviors(small_topology)
    calm = _settings(small_topology, overrides={("pm1/vm2/svc0", "workload"): 10.0})
    busy = _settings(small_topology, overrides={("pm1/vm2/svc0", "workload"): 75.0})
    caller = ("pm0/vm0/svc0", "response_time")
    assert simulate_interval(small_topology, behaviors, busy, busy, 0)[caller] > \
        simulate_interval(small_topology, behaviors, calm, calm, 0)[caller]


def test_missing_setting_is_a_config_error(small_topology):
    values = _settings(small_topology)
    del values[("pm0/vm1", "memory")]
    with pytest.raises(ConfigError):
        simulate_interval(small_topology, _plain_behaviors(small_topology), values, values, 0)


def test_percentage_attributes():
    outcome = ServiceOutcome(response_time=30.0, throughput=0.0)
    reliability = schemas.QoSAttributeSpec(name="r", kind=QoSKind.reliability, threshold_ms=30.0)
    availability = schemas.QoSAttributeSpec(name="a", kind=QoSKind.availability, threshold_ms=30.0)
    assert outcome.qos(reliability) == pytest.approx(100.0 * (1.0 - np.exp(-1.0)))
    assert outcome.qos(availability) == 100.0


# --- Scenarios ---

def test_scenario_is_deterministic():
    first, _ = run_scenario(small_scenario(seed=3, intervals=20))
    second, _ = run_scenario(small_scenario(seed=3, intervals=20))
    other, _ = run_scenario(small_scenario(seed=4, intervals=20))
    assert np.array_equal(first.data, second.data)
    assert not np.array_equal(first.data, other.data)


def test_trace_is_the_closed_form_plus_recorded_noise(small_run):
    table, truth = small_run
    topology = validate_topology(truth.scenario.topology)
    behaviors = _behaviors(truth.scenario)
    for t in (0, 17, 39):
        values = {p.key: table.value(p.key, t) for p in topology.primitives()}
        noise = {path: tuple(truth.noise[path][t]) for path in topology.services}
        noisy = simulate_interval(topology, behaviors, values, values, t, noise)
        clean = simulate_interval(topology, behaviors, values, values, t)
        for key in topology.qos_keys():
            assert noisy[key] == table.value(key, t)
            assert clean[key] == truth.qos[key][t]


def test_trace_respects_physical_limits(small_trace):
    for path in validate_topology(small_scenario().topology).services:
        workload = small_trace.column((path, "workload"))
        assert np.all(small_trace.column((path, "throughput")) <= workload)
        assert np.all(small_trace.column((path, "response_time")) > 0.0)
        for name in ("reliability", "availability"):
            column = small_trace.column((path, name))
            assert column.min() >= 0.0 and column.max() <= 100.0


def test_truth_dump_uses_metric_labels(small_run):
    _, truth = small_run
    dump = truth.to_dump()
    assert f"{SUBJECT}:response_time" in dump.qos
    assert len(dump.noise[SUBJECT]) == 40


def test_behaviors_must_match_the_topology():
    scenario = small_scenario(intervals=5)
    with pytest.raises(ConfigError):
        run_scenario(scenario.model_copy(update={"behaviors": scenario.behaviors[:-1]}))
    stray = schemas.ServiceBehavior(service="pm9/vm9/svc0")
    with pytest.raises(ConfigError):
        run_scenario(scenario.model_copy(update={"behaviors": scenario.behaviors + [stray]}))


def test_static_primitive_without_coefficients_is_irrelevant():
    memory = hardware("pm1/vm2", "memory")
    scenario = small_scenario(seed=5, intervals=120)
    behaviors = [
        b.model_copy(update={"memory_sensitivity": 0.0}) if b.service == "pm1/vm2/svc0" else b
        for b in scenario.behaviors
    ]
    assert all(memory.owner not in b.k_memory for b in behaviors)
    scenario = scenario.model_copy(update={
        "behaviors": behaviors,
        "controls": schemas.ControlSchedule(static=[memory.label]),
    })
    table, _ = run_scenario(scenario)
    topology = validate_topology(scenario.topology)
    discretized = discretize(table.column(memory.key))
    for key in topology.qos_keys():
        assert su_value(discretized, discretize(table.column(key))) < 2 * 1e-9


def test_default_scenario_layout():
    scenario = default_scenario(seed=0)
    assert scenario.intervals == 500
    topology = validate_topology(default_topology())
    assert len(topology.services) == 21
    assert len(partition(topology, DEFAULT_SUBJECT).direct) == 4
    assert len(partition(topology, "pm0/vm0/svc0").direct) == 8
    assert topology.dependencies_of("pm0/vm0/svc0") == (DATABASE,)
    subject = _behaviors(scenario)[DEFAULT_SUBJECT]
    assert subject.k_workload and subject.k_cpu


def test_short_default_scenario_runs():
    table, _ = run_scenario(default_scenario(seed=1, intervals=12))
    assert table.n_intervals == 12
    assert table.has((DEFAULT_SUBJECT, "response_time"))
