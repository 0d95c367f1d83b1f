# qosm/scenarios.py
import sys
from typing import Dict, List

import yaml

from . import schemas
from .seeding import child_rng

# PM -> [(VM, number of services)]; VM names are global.
DEFAULT_PLACEMENT = [
    ("pm0", [("vm0", 8), ("vm1", 4), ("vm2", 4)]),
    ("pm1", [("vm3", 1), ("vm4", 2), ("vm5", 2)]),
]
DATABASE = "pm1/vm3/svc0"
DEPENDENCIES = [("pm0/vm0/svc0", DATABASE)]
# The service the acceptance runs model.
DEFAULT_SUBJECT = "pm0/vm0/svc1"

STATIC_INTERVALS = 150
TOTAL_INTERVALS = 500
NONZERO_FRACTION = 0.3


def default_topology() -> schemas.TopologyConfig:
    """
    Six VMs on two PMs. Services on vm2 are replicas of the ones on vm1;
    every other service is its own concrete service.
    """
    pms = []
    concrete = 0
    replicated: Dict[int, int] = {}
    for pm_name, vms in DEFAULT_PLACEMENT:
        vm_configs = []
        for vm_name, count in vms:
            services = []
            for k in range(count):
                if vm_name == "vm2" and k in replicated:
                    concrete_id, replica = replicated[k], 1
                else:
                    concrete_id, replica = concrete, 0
                    concrete += 1
                    if vm_name == "vm1":
                        replicated[k] = concrete_id
                services.append(schemas.ServiceConfig(name=f"svc{k}", concrete_service=concrete_id, replica=replica))
            vm_configs.append(schemas.VirtualMachineConfig(name=vm_name, services=services))
        pms.append(schemas.PhysicalMachineConfig(name=pm_name, virtual_machines=vm_configs))
    dependencies = [schemas.DependencyConfig(source=s, target=t) for s, t in DEPENDENCIES]
    return schemas.TopologyConfig(physical_machines=pms, dependencies=dependencies)


def default_workload(intervals: int = TOTAL_INTERVALS) -> schemas.WorkloadProfile:
    """A flat warm-up followed by a seasonal trend with bursts."""
    static = min(STATIC_INTERVALS, intervals)
    phases = [schemas.WorkloadPhase(start=0, end=static, generator="constant", level=1000.0, noise=0.02)]
    if intervals > static:
        phases.append(schemas.WorkloadPhase(
            start=static,
            end=intervals,
            generator="seasonal",
            base=1000.0,
            amplitude=400.0,
            period=48.0,
            noise=0.03,
            burst_rate=0.03,
            burst_height=0.4,
            burst_width=6,
        ))
    return schemas.WorkloadProfile(phases=phases)


def _paths(topology: schemas.TopologyConfig):
    for pm in topology.physical_machines:
        for vm in pm.virtual_machines:
            vm_path = f"{pm.name}/{vm.name}"
            yield pm.name, vm_path, [f"{vm_path}/{svc.name}" for svc in vm.services]


def default_behaviors(topology: schemas.TopologyConfig, seed: int = 0) -> List[schemas.ServiceBehavior]:
    """
    Roughly 30% of neighbour coefficients are nonzero. The default subject
    always feels one co-located workload and one co-hosted CPU.
    """
    layout = list(_paths(topology))
    n_services = sum(len(services) for _, _, services in layout)
    behaviors = []
    for pm, vm_path, services in layout:
        co_hosted = [other for other_pm, other, _ in layout if other_pm == pm and other != vm_path]
        for path in services:
            rng = child_rng(seed, "behavior", path)
            share = float(rng.uniform(0.5, 1.5)) / n_services
            k_thread, k_workload, k_cpu, k_memory = {}, {}, {}, {}
            for neighbour in services:
                if neighbour == path:
                    continue
                if rng.random() < NONZERO_FRACTION:
                    k_thread[neighbour] = float(rng.uniform(0.002, 0.006))
                if rng.random() < NONZERO_FRACTION:
                    k_workload[neighbour] = float(rng.uniform(0.001, 0.004))
            for other in co_hosted:
                if rng.random() < NONZERO_FRACTION:
                    k_cpu[other] = float(rng.uniform(0.002, 0.006))
                if rng.random() < NONZERO_FRACTION:
                    k_memory[other] = float(rng.uniform(2e-5, 6e-5))
            if path == DEFAULT_SUBJECT:
                k_workload.setdefault(services[2], 0.003)
                k_cpu.setdefault(co_hosted[0], 0.004)
            extra = {}
            if path == DATABASE:
                extra = {"base_service_time": 12.0, "cpu_demand_per_request": 0.3}
                share *= 2.5
            behaviors.append(schemas.ServiceBehavior(
                service=path,
                workload_share=share,
                k_thread=k_thread,
                k_workload=k_workload,
                k_cpu=k_cpu,
                k_memory=k_memory,
                **extra,
            ))
    return behaviors


def default_scenario(seed: int = 0, intervals: int = TOTAL_INTERVALS) -> schemas.ScenarioConfig:
    topology = default_topology()
    return schemas.ScenarioConfig(
        seed=seed,
        intervals=intervals,
        topology=topology,
        workload=default_workload(intervals),
        behaviors=default_behaviors(topology, seed),
    )


if __name__ == "__main__":
    # Prints the default scenario as an editable YAML scenario file.
    scenario_seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    print(f"# default scenario, seed {scenario_seed}")
    print(yaml.safe_dump(default_scenario(scenario_seed).model_dump(mode="json"), sort_keys=False))
