# qosm/partitioning.py
"""
Possible-relevant primitive space of a service-instance and its split into
direct and indirect sub-spaces.

    direct   own software/environmental primitives, own VM hardware,
             and the same for every service it directly depends on
    indirect software/environmental primitives of co-located services,
             hardware of co-hosted VMs

A primitive that qualifies for both lands in the direct space. Dependencies
are followed one edge deep only.
"""
import logging
from dataclasses import dataclass
from typing import FrozenSet, Set, Tuple

from .models import PrimitiveId, ServiceInstanceId
from .topology import ServiceRef, Topology

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrimitiveSpaces:
    subject: ServiceInstanceId
    direct: FrozenSet[PrimitiveId]
    indirect: FrozenSet[PrimitiveId]

    @property
    def all(self) -> FrozenSet[PrimitiveId]:
        return self.direct | self.indirect

    def sorted_direct(self) -> Tuple[PrimitiveId, ...]:
        return tuple(sorted(self.direct, key=PrimitiveId.sort_key))

    def sorted_indirect(self) -> Tuple[PrimitiveId, ...]:
        return tuple(sorted(self.indirect, key=PrimitiveId.sort_key))


def _direct_space(topology: Topology, ref: ServiceRef) -> Set[PrimitiveId]:
    record = topology.service(ref)
    space = set(topology.service_primitives(record.path))
    space.update(topology.hardware_primitives(record.vm))
    for target in topology.dependencies_of(record.path):
        space.update(topology.service_primitives(target))
        space.update(topology.hardware_primitives(topology.service(target).vm))
    return space


def _indirect_space(topology: Topology, ref: ServiceRef) -> Set[PrimitiveId]:
    record = topology.service(ref)
    space: Set[PrimitiveId] = set()
    for neighbour in topology.co_located(record.path):
        space.update(topology.service_primitives(neighbour))
    for vm_path in topology.co_hosted_vms(record.vm):
        space.update(topology.hardware_primitives(vm_path))
    return space


def possible_relevant_space(topology: Topology, s: ServiceRef) -> FrozenSet[PrimitiveId]:
    return frozenset(_direct_space(topology, s) | _indirect_space(topology, s))


def partition(topology: Topology, s: ServiceRef) -> PrimitiveSpaces:
    record = topology.service(s)
    direct = _direct_space(topology, record.path)
    indirect = _indirect_space(topology, record.path) - direct
    logger.debug("partition service=%s direct=%d indirect=%d", record.path, len(direct), len(indirect))
    return PrimitiveSpaces(subject=record.sid, direct=frozenset(direct), indirect=frozenset(indirect))


def repartition_on_change(old: PrimitiveSpaces, topology: Topology) -> PrimitiveSpaces:
    """
    Recomputes the spaces of old.subject against a changed topology. The
    previous spaces only identify the subject.
    """
    return partition(topology, old.subject)
