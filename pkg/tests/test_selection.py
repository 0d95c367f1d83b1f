import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from qosm.errors import InsufficientHistoryError, LengthMismatchError
from qosm.models import SelectionMode
from qosm.partitioning import partition
from qosm.relevance import discretize, su_value
from qosm.selection import (RelevanceContext, incremental_random_search, mrmr_objective,
                            select_direct, select_indirect, select_primitives)
from qosm.trace import TraceTable

from .factories import SUBJECT, environmental, hardware, software

QOS = (SUBJECT, "response_time")


def _trace(columns, n=120, seed=0):
    """
    QoS follows the first column; the second is its exact copy, the third
    is independent noise and the fourth is constant.
    """
    rng = np.random.default_rng(seed)
    driver = rng.uniform(0, 100, n)
    data = np.column_stack([driver, driver, rng.uniform(0, 100, n), np.full(n, 7.0), 3.0 * driver + 1.0])
    return TraceTable(0, [c.key for c in columns] + [QOS], data)


COLUMNS = [
    hardware("pm0/vm0", "cpu"),
    hardware("pm0/vm1", "cpu"),
    software("pm0/vm0/svc0"),
    environmental("pm0/vm0/svc0"),
]


def test_relevance_context_guards():
    table = _trace(COLUMNS)
    with pytest.raises(InsufficientHistoryError):
        RelevanceContext(table.window(0, 0), [1.0])
    with pytest.raises(LengthMismatchError):
        RelevanceContext(table, [1.0, 2.0])


def test_direct_selection_is_the_epsilon_filter():
    table = _trace(COLUMNS)
    qos = table.column(QOS)
    chosen = select_direct(COLUMNS, qos, table)
    expected = {c for c in COLUMNS if su_value(discretize(table.column(c.key)), discretize(qos)) > 1e-9}
    assert chosen == expected
    assert COLUMNS[3] not in chosen  # constant series
    assert COLUMNS[0] in chosen


def test_driver_scores_highest():
    table = _trace(COLUMNS)
    context = RelevanceContext(table, table.column(QOS))
    scores = context.scores(COLUMNS)
    assert scores[COLUMNS[0]].value == pytest.approx(1.0)
    assert scores[COLUMNS[2]].value < scores[COLUMNS[0]].value


def test_exact_copy_is_not_selected_twice():
    table = _trace(COLUMNS)
    chosen = select_indirect(COLUMNS[:2], table.column(QOS), table, seed=1)
    assert len(chosen) == 1


def test_indirect_selection_ignores_irrelevant_primitives():
    table = _trace(COLUMNS)
    for seed in range(5):
        chosen = select_indirect(COLUMNS, table.column(QOS), table, seed=seed)
        assert COLUMNS[3] not in chosen


def test_empty_space():
    table = _trace(COLUMNS)
    assert select_indirect([], table.column(QOS), table) == frozenset()
    assert select_direct([], table.column(QOS), table) == frozenset()
    with pytest.raises(ValueError):
        select_indirect(COLUMNS, table.column(QOS), table, budget=0)


def test_mrmr_objective_counts_each_pair_once():
    relevance = np.array([0.5, 0.5])
    redundancy = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert mrmr_objective([0], relevance, redundancy) == 0.5
    assert mrmr_objective([0, 1], relevance, redundancy) == 0.5
    assert mrmr_objective([], relevance, redundancy) == 0.0


def test_search_reaches_the_unique_local_optimum():
    relevance = np.array([0.9, 0.85, 0.3])
    redundancy = np.array([[0.0, 0.9, 0.05], [0.9, 0.0, 0.05], [0.05, 0.05, 0.0]])
    for seed in range(5):
        assert incremental_random_search(relevance, redundancy, 200, np.random.default_rng(seed)) == {0, 2}


def test_redundant_copy_does_not_grow_the_selection():
    relevance = np.array([0.8, 0.5])
    redundancy = np.array([[0.0, 0.1], [0.1, 0.0]])
    before = incremental_random_search(relevance, redundancy, 200, np.random.default_rng(0))
    relevance_copy = np.array([0.8, 0.5, 0.8])
    redundancy_copy = np.array([[0.0, 0.1, 1.0], [0.1, 0.0, 0.1], [1.0, 0.1, 0.0]])
    after = incremental_random_search(relevance_copy, redundancy_copy, 200, np.random.default_rng(0))
    assert len(after) <= len(before) == 2


def test_search_ends_at_a_local_optimum():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 8))
        relevance = rng.uniform(0.05, 1.0, n)
        upper = np.triu(rng.uniform(0.0, 0.6, (n, n)), 1)
        redundancy = upper + upper.T
        chosen = incremental_random_search(relevance, redundancy, 1500, np.random.default_rng(seed))
        best = mrmr_objective(sorted(chosen), relevance, redundancy)
        inside, outside = sorted(chosen), [i for i in range(n) if i not in chosen]
        neighbours = [set(chosen) | {j} for j in outside]
        neighbours += [set(chosen) - {i} for i in inside if len(inside) > 1]
        neighbours += [(set(chosen) - {i}) | {j} for i, j in itertools.product(inside, outside)]
        for candidate in neighbours:
            assert mrmr_objective(sorted(candidate), relevance, redundancy) <= best


def test_search_is_deterministic_under_a_seed():
    rng = np.random.default_rng(9)
    relevance = rng.uniform(0, 1, 9)
    upper = np.triu(rng.uniform(0, 0.5, (9, 9)), 1)
    redundancy = upper + upper.T
    first = incremental_random_search(relevance, redundancy, 50, np.random.default_rng(4))
    assert first == incremental_random_search(relevance, redundancy, 50, np.random.default_rng(4))


# --- Modes over a simulated trace ---

def test_hybrid_selection_respects_the_spaces(small_topology, small_trace):
    spaces = partition(small_topology, SUBJECT)
    qos = small_trace.column(QOS)
    result = select_primitives(SelectionMode.hybrid, spaces, small_topology, qos, small_trace, seed=3)
    assert result.direct_selected <= spaces.direct
    assert result.indirect_selected <= spaces.indirect
    assert result.direct_selected.isdisjoint(result.indirect_selected)
    assert all(result.scores[c].value > 0 for c in result.columns)
    assert list(result.columns) == sorted(result.columns, key=lambda c: c.key)


def test_parallel_selection_matches_sequential(small_topology, small_trace):
    spaces = partition(small_topology, SUBJECT)
    qos = small_trace.column(QOS)
    sequential = select_primitives(SelectionMode.hybrid, spaces, small_topology, qos, small_trace, seed=3)
    with ThreadPoolExecutor(2) as pool:
        parallel = select_primitives(
            SelectionMode.hybrid, spaces, small_topology, qos, small_trace, seed=3, executor=pool
        )
    assert parallel == sequential


def test_fixed_mode_takes_own_vm_hardware(small_topology, small_trace):
    spaces = partition(small_topology, SUBJECT)
    result = select_primitives(
        SelectionMode.fixed, spaces, small_topology, small_trace.column(QOS), small_trace
    )
    assert result.columns == (hardware("pm0/vm0", "cpu"), hardware("pm0/vm0", "memory"))


def test_single_mr_covers_the_whole_space(small_topology, small_trace):
    spaces = partition(small_topology, SUBJECT)
    qos = small_trace.column(QOS)
    result = select_primitives(SelectionMode.single_mr, spaces, small_topology, qos, small_trace)
    assert set(result.columns) == select_direct(spaces.all, qos, small_trace)
