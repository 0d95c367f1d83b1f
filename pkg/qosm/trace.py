# qosm/trace.py
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InsufficientHistoryError, TraceFormatError
from .models import IntervalTrace, MetricKey, PrimitiveId, SelectedPrimitivesMatrix


class TraceTable:
    """
    Columnar view over a contiguous sequence of IntervalTrace records.
    Row i holds interval first_interval + i.
    """

    def __init__(self, first_interval: int, keys: Sequence[MetricKey], data: np.ndarray):
        data = np.array(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(keys):
            raise TraceFormatError("Trace data must be a 2-D array with one column per metric key")
        if len(set(keys)) != len(keys):
            raise TraceFormatError("Trace metric keys must be unique")
        if first_interval < 0:
            raise TraceFormatError("Interval indices must be nonnegative")
        if not np.all(np.isfinite(data)):
            raise TraceFormatError("Trace holds missing or non-finite values")
        data.setflags(write=False)
        self.first_interval = first_interval
        self.keys: Tuple[MetricKey, ...] = tuple(keys)
        self.data = data
        self._index: Dict[MetricKey, int] = {key: i for i, key in enumerate(self.keys)}

    # --- Construction ---

    @classmethod
    def from_intervals(
        cls, traces: Sequence[IntervalTrace], required_keys: Optional[Iterable[MetricKey]] = None
    ) -> "TraceTable":
        if not traces:
            raise TraceFormatError("Trace sequence is empty")
        keys = sorted(required_keys) if required_keys is not None else sorted(traces[0].values)
        first = traces[0].interval_index
        data = np.empty((len(traces), len(keys)))
        for row, trace in enumerate(traces):
            if trace.interval_index != first + row:
                raise TraceFormatError(
                    f"Interval {trace.interval_index} breaks the contiguous sequence starting at {first}"
                )
            if len(trace.values) != len(keys):
                missing = set(keys) - set(trace.values)
                extra = set(trace.values) - set(keys)
                raise TraceFormatError(
                    f"Interval {trace.interval_index}: missing {sorted(missing)[:3]} extra {sorted(extra)[:3]}"
                )
            try:
                data[row] = [trace.values[key] for key in keys]
            except KeyError as exc:
                raise TraceFormatError(f"Interval {trace.interval_index} has no value for {exc.args[0]}")
        return cls(first, keys, data)

    def to_intervals(self) -> List[IntervalTrace]:
        return [
            IntervalTrace(
                interval_index=self.first_interval + row,
                values={key: float(self.data[row, i]) for i, key in enumerate(self.keys)},
            )
            for row in range(self.n_intervals)
        ]

    # --- Access ---

    @property
    def n_intervals(self) -> int:
        return self.data.shape[0]

    @property
    def last_interval(self) -> int:
        return self.first_interval + self.n_intervals - 1

    def has(self, key: MetricKey) -> bool:
        return key in self._index

    def column(self, key: MetricKey) -> np.ndarray:
        try:
            return self.data[:, self._index[key]]
        except KeyError:
            raise TraceFormatError(f"Trace has no series for {key[0]}:{key[1]}")

    def value(self, key: MetricKey, interval: int) -> float:
        return float(self.column(key)[self._row(interval)])

    def series(self, key: MetricKey, start: int, stop: int) -> np.ndarray:
        """Values of key for intervals [start, stop)."""
        return self.column(key)[self._row(start):self._row(stop - 1) + 1]

    def window(self, start: int, stop: int) -> "TraceTable":
        """Intervals [start, stop] as a new table."""
        return TraceTable(start, self.keys, self.data[self._row(start):self._row(stop) + 1])

    def _row(self, interval: int) -> int:
        row = interval - self.first_interval
        if row < 0 or row >= self.n_intervals:
            raise InsufficientHistoryError(
                f"Interval {interval} is outside the trace [{self.first_interval}, {self.last_interval}]"
            )
        return row

    def source(
        self,
        columns: Sequence[PrimitiveId],
        qos_key: MetricKey,
        start: int,
        stop: int,
        observed_until: Optional[int] = None,
    ) -> "SeriesSource":
        """
        Slice intervals [start, stop] into a SeriesSource. Environmental and
        QoS values after observed_until are masked with NaN; control
        primitives stay visible because they are set ahead of the interval.
        """
        lo, hi = self._row(start), self._row(stop)
        primitives = np.empty((hi - lo + 1, len(columns)))
        for c, column in enumerate(columns):
            primitives[:, c] = self.column(column.key)[lo:hi + 1]
        qos = np.array(self.column(qos_key)[lo:hi + 1], dtype=float)
        if observed_until is not None and observed_until < stop:
            cut = max(0, observed_until - start + 1)
            qos[cut:] = np.nan
            for c, column in enumerate(columns):
                if not column.is_control:
                    primitives[cut:, c] = np.nan
        return SeriesSource(columns=tuple(columns), first_interval=start, primitives=primitives, qos=qos)


@dataclass(frozen=True, eq=False)
class SeriesSource:
    """
    Selected primitive columns and the modelled QoS series over a
    contiguous interval range. NaN marks values not yet observed.
    """
    columns: Tuple[PrimitiveId, ...]
    first_interval: int
    primitives: np.ndarray = field(repr=False)
    qos: np.ndarray = field(repr=False)

    def __post_init__(self):
        primitives = np.array(self.primitives, dtype=float).reshape(len(self.qos), len(self.columns))
        qos = np.array(self.qos, dtype=float)
        primitives.setflags(write=False)
        qos.setflags(write=False)
        object.__setattr__(self, "primitives", primitives)
        object.__setattr__(self, "qos", qos)

    @property
    def n_intervals(self) -> int:
        return len(self.qos)

    @property
    def last_interval(self) -> int:
        return self.first_interval + self.n_intervals - 1

    @property
    def offsets(self) -> np.ndarray:
        return np.array([c.lag_offset for c in self.columns], dtype=int)

    def matrix(self, t: int, q: int) -> SelectedPrimitivesMatrix:
        """Selected primitives matrix for interval t over this source's columns."""
        _check_history(self.columns, q, t, self.first_interval, self.last_interval)
        cells = lagged_cells(self.primitives, self.first_interval, self.offsets, q, t)
        return SelectedPrimitivesMatrix(columns=self.columns, q=q, interval=t, cells=cells)

    def select(self, columns: Sequence[PrimitiveId]) -> "SeriesSource":
        index = {c: i for i, c in enumerate(self.columns)}
        picks = [index[c] for c in columns]
        return SeriesSource(
            columns=tuple(columns),
            first_interval=self.first_interval,
            primitives=self.primitives[:, picks],
            qos=self.qos,
        )


TraceLike = Union[TraceTable, Sequence[IntervalTrace]]


def as_table(trace: TraceLike) -> TraceTable:
    if isinstance(trace, TraceTable):
        return trace
    return TraceTable.from_intervals(list(trace))


# --- Lagged matrices ---

def lagged_cells(values: np.ndarray, first_interval: int, offsets: np.ndarray, q: int, t: int) -> np.ndarray:
    """
    cells[r, c] = values at interval t - r - offsets[c] in column c, where
    row i of `values` holds interval first_interval + i.
    """
    rows = (t - first_interval) - np.arange(q)[:, None] - np.asarray(offsets, dtype=int)[None, :]
    return values[rows, np.arange(values.shape[1])[None, :]]


def _check_history(columns: Sequence[PrimitiveId], q: int, t: int, first: int, last: int):
    if q < 1:
        raise ValueError("q must be at least 1")
    for column in columns:
        oldest = t - (q - 1) - column.lag_offset
        if oldest < first or t > last:
            raise InsufficientHistoryError(
                f"q={q} at interval {t} needs {column.label} from interval {oldest}; "
                f"trace covers [{first}, {last}]"
            )


def build_matrix(trace: TraceLike, columns: Sequence[PrimitiveId], q: int, t: int) -> SelectedPrimitivesMatrix:
    """
    Builds the selected primitives matrix for interval t: row r holds
    control primitives at t - r and environmental primitives at t - 1 - r.
    """
    table = as_table(trace)
    _check_history(columns, q, t, table.first_interval, table.last_interval)
    values = np.empty((table.n_intervals, len(columns)))
    for c, column in enumerate(columns):
        values[:, c] = table.column(column.key)
    offsets = np.array([c.lag_offset for c in columns], dtype=int)
    cells = lagged_cells(values, table.first_interval, offsets, q, t)
    return SelectedPrimitivesMatrix(columns=tuple(columns), q=q, interval=t, cells=cells)
