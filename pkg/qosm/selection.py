# qosm/selection.py
"""
Hybrid primitive selection. The direct space keeps every primitive with
positive relevance to the QoS series (mR); the indirect space trades
relevance against pairwise redundancy (mRMR),

    phi(S) = sum_{x in S} U(x, qos) / (1 + sum_{x < x' in S} U(x, x')),

optimised by a seeded incremental random search.
"""
import logging
from concurrent.futures import Executor
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import InsufficientHistoryError, LengthMismatchError
from .models import PrimitiveId, SelectionMode
from .partitioning import PrimitiveSpaces
from .relevance import (DEFAULT_BINS, DiscretizedSeries, RelevanceScore,
                        discretize, redundancy_matrix, su_value)
from .topology import Topology
from .trace import TraceLike, as_table

logger = logging.getLogger(__name__)

EPSILON = 1e-9
DEFAULT_BUDGET = 200
# Total proposals are capped at this multiple of the stagnation budget.
PROPOSAL_CAP_FACTOR = 50


@dataclass(frozen=True)
class SelectionResult:
    direct_selected: FrozenSet[PrimitiveId]
    indirect_selected: FrozenSet[PrimitiveId]
    scores: Mapping[PrimitiveId, RelevanceScore]

    @property
    def columns(self) -> Tuple[PrimitiveId, ...]:
        """Column entries of the selected primitives matrix, in key order."""
        return tuple(sorted(self.direct_selected | self.indirect_selected, key=PrimitiveId.sort_key))

    def weights(self) -> Dict[PrimitiveId, float]:
        return {column: self.scores[column].value for column in self.columns}


class RelevanceContext:
    """
    Discretizes the QoS history once and each primitive on first use, so
    the sub-space learners of one modeling interval share the work.
    """

    def __init__(self, trace: TraceLike, qos_history: Sequence[float], bins: int = DEFAULT_BINS):
        self.table = as_table(trace)
        qos = np.asarray(qos_history, dtype=float)
        if self.table.n_intervals < 2:
            raise InsufficientHistoryError("Primitive selection needs at least 2 intervals of history")
        if len(qos) != self.table.n_intervals:
            raise LengthMismatchError(
                f"QoS history has {len(qos)} values but the trace covers {self.table.n_intervals} intervals"
            )
        self.bins = bins
        self.qos = discretize(qos, bins)
        self._series: Dict[PrimitiveId, DiscretizedSeries] = {}
        self._relevance: Dict[PrimitiveId, float] = {}

    def series(self, primitive: PrimitiveId) -> DiscretizedSeries:
        if primitive not in self._series:
            self._series[primitive] = discretize(self.table.column(primitive.key), self.bins)
        return self._series[primitive]

    def relevance(self, primitive: PrimitiveId) -> float:
        if primitive not in self._relevance:
            self._relevance[primitive] = su_value(self.series(primitive), self.qos)
        return self._relevance[primitive]

    def scores(self, primitives: Iterable[PrimitiveId]) -> Dict[PrimitiveId, RelevanceScore]:
        return {p: RelevanceScore(self.relevance(p)) for p in primitives}


def _ordered(space: Iterable[PrimitiveId]) -> List[PrimitiveId]:
    return sorted(space, key=PrimitiveId.sort_key)


# --- mR ---

def select_direct(
    space: Iterable[PrimitiveId],
    qos_history: Sequence[float],
    trace: TraceLike,
    bins: int = DEFAULT_BINS,
    epsilon: float = EPSILON,
    context: Optional[RelevanceContext] = None,
) -> FrozenSet[PrimitiveId]:
    context = context or RelevanceContext(trace, qos_history, bins)
    return frozenset(p for p in _ordered(space) if context.relevance(p) > epsilon)


# --- mRMR ---

def mrmr_objective(subset: Sequence[int], relevance: np.ndarray, redundancy: np.ndarray) -> float:
    if len(subset) == 0:
        return 0.0
    idx = np.asarray(subset, dtype=int)
    gain = relevance[idx].sum()
    # Unordered distinct pairs; the diagonal of redundancy is zero.
    penalty = redundancy[np.ix_(idx, idx)].sum() / 2.0
    return float(gain / (1.0 + penalty))


def incremental_random_search(
    relevance: np.ndarray,
    redundancy: np.ndarray,
    budget: int,
    rng: np.random.Generator,
) -> FrozenSet[int]:
    """
    Starts from the single most relevant candidate and proposes random
    add / remove / swap moves, keeping a move only when phi strictly
    improves. Stops after `budget` consecutive rejected proposals.
    """
    n = len(relevance)
    if n == 0:
        return frozenset()
    current = {int(np.argmax(relevance))}
    best = mrmr_objective(sorted(current), relevance, redundancy)
    stagnant = 0
    proposals = 0
    cap = budget * PROPOSAL_CAP_FACTOR
    while stagnant < budget and proposals < cap:
        proposals += 1
        inside = sorted(current)
        outside = [i for i in range(n) if i not in current]
        moves = []
        if outside:
            moves.append("add")
        if len(inside) > 1:
            moves.append("remove")
        if inside and outside:
            moves.append("swap")
        if not moves:
            break
        move = moves[int(rng.integers(len(moves)))]
        candidate = set(current)
        if move == "add":
            candidate.add(outside[int(rng.integers(len(outside)))])
        elif move == "remove":
            candidate.discard(inside[int(rng.integers(len(inside)))])
        else:
            candidate.discard(inside[int(rng.integers(len(inside)))])
            candidate.add(outside[int(rng.integers(len(outside)))])
        score = mrmr_objective(sorted(candidate), relevance, redundancy)
        if score > best:
            current, best = candidate, score
            stagnant = 0
        else:
            stagnant += 1
    return frozenset(current)


def select_indirect(
    space: Iterable[PrimitiveId],
    qos_history: Sequence[float],
    trace: TraceLike,
    budget: int = DEFAULT_BUDGET,
    bins: int = DEFAULT_BINS,
    epsilon: float = EPSILON,
    seed: int = 0,
    context: Optional[RelevanceContext] = None,
) -> FrozenSet[PrimitiveId]:
    if budget < 1:
        raise ValueError("budget must be at least 1")
    context = context or RelevanceContext(trace, qos_history, bins)
    candidates = [p for p in _ordered(space) if context.relevance(p) > epsilon]
    if not candidates:
        return frozenset()
    relevance = np.array([context.relevance(p) for p in candidates])
    redundancy = redundancy_matrix([context.series(p) for p in candidates])
    chosen = incremental_random_search(relevance, redundancy, budget, np.random.default_rng(seed))
    return frozenset(candidates[i] for i in chosen)


# --- Combined ---

def hybrid_select(
    spaces: PrimitiveSpaces,
    qos_history: Sequence[float],
    trace: TraceLike,
    budget: int = DEFAULT_BUDGET,
    bins: int = DEFAULT_BINS,
    epsilon: float = EPSILON,
    seed: int = 0,
    executor: Optional[Executor] = None,
) -> SelectionResult:
    """
    mR over the direct space and mRMR over the indirect space, recomputed
    from scratch; the matrix columns are their union.
    """
    context = RelevanceContext(trace, qos_history, bins)
    # Warm the shared cache before the two learners run side by side.
    scores = context.scores(_ordered(spaces.all))
    if executor is not None:
        direct_job = executor.submit(
            select_direct, spaces.direct, qos_history, trace, bins, epsilon, context
        )
        indirect_job = executor.submit(
            select_indirect, spaces.indirect, qos_history, trace, budget, bins, epsilon, seed, context
        )
        direct, indirect = direct_job.result(), indirect_job.result()
    else:
        direct = select_direct(spaces.direct, qos_history, trace, bins, epsilon, context)
        indirect = select_indirect(spaces.indirect, qos_history, trace, budget, bins, epsilon, seed, context)
    return SelectionResult(
        direct_selected=direct, indirect_selected=indirect, scores=MappingProxyType(scores)
    )


def select_primitives(
    mode: SelectionMode,
    spaces: PrimitiveSpaces,
    topology: Topology,
    qos_history: Sequence[float],
    trace: TraceLike,
    budget: int = DEFAULT_BUDGET,
    bins: int = DEFAULT_BINS,
    epsilon: float = EPSILON,
    seed: int = 0,
    fixed_names: Sequence[str] = ("cpu", "memory"),
    executor: Optional[Executor] = None,
) -> SelectionResult:
    """
    Runs one of the selection techniques under comparison. The single-learner
    modes treat direct and indirect as one space; fixed always takes the
    subject VM's named hardware primitives.
    """
    if mode == SelectionMode.hybrid:
        result = hybrid_select(spaces, qos_history, trace, budget, bins, epsilon, seed, executor)
    else:
        context = RelevanceContext(trace, qos_history, bins)
        scores = context.scores(_ordered(spaces.all))
        if mode == SelectionMode.single_mr:
            chosen = select_direct(spaces.all, qos_history, trace, bins, epsilon, context)
        elif mode == SelectionMode.single_mrmr:
            chosen = select_indirect(spaces.all, qos_history, trace, budget, bins, epsilon, seed, context)
        else:
            vm = topology.vm_of(topology.service(spaces.subject).path)
            chosen = frozenset(p for p in topology.hardware_primitives(vm.path) if p.name in fixed_names)
        result = SelectionResult(
            direct_selected=chosen & spaces.direct,
            indirect_selected=chosen & spaces.indirect,
            scores=MappingProxyType(scores),
        )
    logger.debug(
        "selection mode=%s direct=%d indirect=%d",
        mode.value, len(result.direct_selected), len(result.indirect_selected),
    )
    return result
