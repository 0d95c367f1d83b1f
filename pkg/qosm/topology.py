# qosm/topology.py
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, FrozenSet, List, Mapping, Tuple, Union

from . import schemas
from .errors import (DanglingDependencyError, DuplicatePlacementError,
                     DuplicatePrimitiveError, SelfDependencyError,
                     UnknownServiceError)
from .models import (MetricKey, PrimitiveId, PrimitiveKind, QoSAttributeSpec,
                     ServiceInstanceId)

ServiceRef = Union[str, ServiceInstanceId]


# --- Placement records ---

@dataclass(frozen=True)
class ServiceRecord:
    path: str
    name: str
    sid: ServiceInstanceId
    vm: str
    pm: str
    software: Tuple[str, ...]
    environmental: Tuple[str, ...]
    qos: Tuple[QoSAttributeSpec, ...]

@dataclass(frozen=True)
class VirtualMachine:
    path: str
    name: str
    pm: str
    hardware: Tuple[str, ...]
    services: Tuple[str, ...]

@dataclass(frozen=True)
class PhysicalMachine:
    name: str
    vms: Tuple[str, ...]


@dataclass(frozen=True)
class Topology:
    """
    Validated placement graph: PMs hold VMs, VMs hold service-instances,
    and directed edges record direct functional dependencies.
    Build it with validate_topology.
    """
    physical_machines: Tuple[PhysicalMachine, ...]
    vms: Mapping[str, VirtualMachine]
    services: Mapping[str, ServiceRecord]
    dependencies: FrozenSet[Tuple[str, str]]

    # --- Lookups ---

    def service(self, ref: ServiceRef) -> ServiceRecord:
        if isinstance(ref, ServiceInstanceId):
            for record in self.services.values():
                if record.sid == ref:
                    return record
            raise UnknownServiceError(f"Unknown service-instance {ref.label}")
        record = self.services.get(ref)
        if record is None:
            raise UnknownServiceError(f"Unknown service-instance '{ref}'")
        return record

    def vm_of(self, ref: ServiceRef) -> VirtualMachine:
        return self.vms[self.service(ref).vm]

    def service_primitives(self, ref: ServiceRef) -> Tuple[PrimitiveId, ...]:
        record = self.service(ref)
        software = tuple(
            PrimitiveId(owner=record.path, name=name, kind=PrimitiveKind.software_control)
            for name in record.software
        )
        environmental = tuple(
            PrimitiveId(owner=record.path, name=name, kind=PrimitiveKind.environmental)
            for name in record.environmental
        )
        return software + environmental

    def hardware_primitives(self, vm_path: str) -> Tuple[PrimitiveId, ...]:
        vm = self.vms[vm_path]
        return tuple(
            PrimitiveId(owner=vm.path, name=name, kind=PrimitiveKind.hardware_control)
            for name in vm.hardware
        )

    def co_located(self, ref: ServiceRef) -> Tuple[str, ...]:
        record = self.service(ref)
        return tuple(path for path in self.vms[record.vm].services if path != record.path)

    def co_hosted_vms(self, vm_path: str) -> Tuple[str, ...]:
        vm = self.vms[vm_path]
        pm = next(pm for pm in self.physical_machines if pm.name == vm.pm)
        return tuple(path for path in pm.vms if path != vm_path)

    def dependencies_of(self, ref: ServiceRef) -> Tuple[str, ...]:
        source = self.service(ref).path
        return tuple(sorted(target for src, target in self.dependencies if src == source))

    def primitives(self) -> Tuple[PrimitiveId, ...]:
        result: List[PrimitiveId] = []
        for pm in self.physical_machines:
            for vm_path in pm.vms:
                result.extend(self.hardware_primitives(vm_path))
                for service_path in self.vms[vm_path].services:
                    result.extend(self.service_primitives(service_path))
        return tuple(result)

    def qos_spec(self, ref: ServiceRef, name: str) -> QoSAttributeSpec:
        record = self.service(ref)
        for spec in record.qos:
            if spec.name == name:
                return spec
        raise UnknownServiceError(f"Service '{record.path}' declares no QoS attribute '{name}'")

    def qos_keys(self) -> Tuple[MetricKey, ...]:
        return tuple(
            (record.path, spec.name)
            for record in self.services.values()
            for spec in record.qos
        )

    def metric_keys(self) -> Tuple[MetricKey, ...]:
        return tuple(p.key for p in self.primitives()) + self.qos_keys()

    # --- Serialization ---

    def to_config(self) -> schemas.TopologyConfig:
        pms = []
        for pm in self.physical_machines:
            vms = []
            for vm_path in pm.vms:
                vm = self.vms[vm_path]
                services = [
                    schemas.ServiceConfig(
                        name=record.name,
                        concrete_service=record.sid.concrete_service,
                        replica=record.sid.replica,
                        software_primitives=list(record.software),
                        environmental_primitives=list(record.environmental),
                        qos=list(record.qos),
                    )
                    for record in (self.services[path] for path in vm.services)
                ]
                vms.append(schemas.VirtualMachineConfig(
                    name=vm.name, hardware_primitives=list(vm.hardware), services=services
                ))
            pms.append(schemas.PhysicalMachineConfig(name=pm.name, virtual_machines=vms))
        dependencies = [
            schemas.DependencyConfig(source=src, target=target)
            for src, target in sorted(self.dependencies)
        ]
        return schemas.TopologyConfig(physical_machines=pms, dependencies=dependencies)


# --- Validation ---

def _check_unique_names(owner: str, names: List[str]):
    seen = set()
    for name in names:
        if name in seen:
            raise DuplicatePrimitiveError(f"'{owner}' declares metric '{name}' more than once")
        seen.add(name)


def validate_topology(config: schemas.TopologyConfig) -> Topology:
    """
    Checks placement, primitive and dependency invariants and returns the
    immutable Topology.
    """
    pm_records: List[PhysicalMachine] = []
    vms: Dict[str, VirtualMachine] = {}
    services: Dict[str, ServiceRecord] = {}
    vm_names: Dict[str, str] = {}
    placed: Dict[ServiceInstanceId, str] = {}

    pm_names = set()
    for pm in config.physical_machines:
        if pm.name in pm_names:
            raise DuplicatePlacementError(f"Physical machine '{pm.name}' is declared twice")
        pm_names.add(pm.name)

        vm_paths = []
        for vm in pm.virtual_machines:
            if vm.name in vm_names:
                raise DuplicatePlacementError(
                    f"VM '{vm.name}' is placed on both '{vm_names[vm.name]}' and '{pm.name}'"
                )
            vm_names[vm.name] = pm.name
            vm_path = f"{pm.name}/{vm.name}"
            _check_unique_names(vm_path, vm.hardware_primitives)

            service_paths = []
            for svc in vm.services:
                sid = ServiceInstanceId(concrete_service=svc.concrete_service, replica=svc.replica)
                path = f"{vm_path}/{svc.name}"
                if sid in placed or path in services:
                    where = placed.get(sid, path)
                    raise DuplicatePlacementError(
                        f"Service-instance {sid.label} is placed on more than one VM ({where}, {path})"
                    )
                placed[sid] = path
                _check_unique_names(
                    path,
                    svc.software_primitives + svc.environmental_primitives + [q.name for q in svc.qos],
                )
                services[path] = ServiceRecord(
                    path=path,
                    name=svc.name,
                    sid=sid,
                    vm=vm_path,
                    pm=pm.name,
                    software=tuple(svc.software_primitives),
                    environmental=tuple(svc.environmental_primitives),
                    qos=tuple(svc.qos),
                )
                service_paths.append(path)

            vms[vm_path] = VirtualMachine(
                path=vm_path,
                name=vm.name,
                pm=pm.name,
                hardware=tuple(vm.hardware_primitives),
                services=tuple(service_paths),
            )
            vm_paths.append(vm_path)
        pm_records.append(PhysicalMachine(name=pm.name, vms=tuple(vm_paths)))

    edges = set()
    for dep in config.dependencies:
        for end in (dep.source, dep.target):
            if end not in services:
                raise DanglingDependencyError(
                    f"Dependency {dep.source} -> {dep.target} references undeclared service '{end}'"
                )
        if dep.source == dep.target:
            raise SelfDependencyError(f"Service '{dep.source}' cannot depend on itself")
        edges.add((dep.source, dep.target))

    return Topology(
        physical_machines=tuple(pm_records),
        vms=MappingProxyType(vms),
        services=MappingProxyType(services),
        dependencies=frozenset(edges),
    )
