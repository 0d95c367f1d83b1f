# qosm/relevance.py
"""
Symmetric uncertainty between discretized time series:

    U(X, Y) = 2 * I(X; Y) / (H(X) + H(Y))

with entropies in bits estimated from empirical frequencies. Bins are
equal-width over [min, max] and closed on the right, except the first
which also includes min.
"""
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from .errors import EmptySeriesError, LengthMismatchError

DEFAULT_BINS = 10


@dataclass(frozen=True, eq=False)
class DiscretizedSeries:
    symbols: np.ndarray = field(repr=False)
    bin_count: int
    bin_edges: Tuple[float, ...]

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.int64)
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        if self.bin_count < 1:
            raise ValueError("bin_count must be positive")
        if symbols.size and (symbols.min() < 0 or symbols.max() >= self.bin_count):
            raise ValueError("symbols must lie in [0, bin_count)")
        if any(b <= a for a, b in zip(self.bin_edges, self.bin_edges[1:])):
            raise ValueError("bin edges must be strictly increasing")

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class RelevanceScore:
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"relevance {self.value} outside [0, 1]")

    def __float__(self) -> float:
        return self.value


def discretize(series: Sequence[float], bins: int = DEFAULT_BINS) -> DiscretizedSeries:
    values = np.asarray(series, dtype=float).reshape(-1)
    if values.size == 0:
        raise EmptySeriesError("Cannot discretize an empty series")
    if bins < 1:
        raise ValueError("bins must be at least 1")
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return _single_bin(values.size, lo, hi)
    width = (hi - lo) / bins
    edges = lo + width * np.arange(bins + 1)
    edges[-1] = hi
    if np.any(np.diff(edges) <= 0):
        # Spread below float resolution at this magnitude.
        return _single_bin(values.size, lo, hi)
    symbols = np.searchsorted(edges[1:-1], values, side="left")
    return DiscretizedSeries(symbols, bins, tuple(float(e) for e in edges))


def _single_bin(n: int, lo: float, hi: float) -> DiscretizedSeries:
    """Degenerate: every value in one bin around [lo, hi]."""
    low = lo - 0.5 if lo - 0.5 < lo else np.nextafter(lo, -np.inf)
    high = hi + 0.5 if hi + 0.5 > hi else np.nextafter(hi, np.inf)
    return DiscretizedSeries(np.zeros(n, dtype=np.int64), 1, (float(low), float(high)))


def _entropy(counts: np.ndarray) -> float:
    counts = np.sort(counts[counts > 0])
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(-np.sum(p * np.log2(p)))


def _entropies(x: DiscretizedSeries, y: DiscretizedSeries) -> Tuple[float, float, float]:
    h_x = _entropy(np.bincount(x.symbols, minlength=x.bin_count))
    h_y = _entropy(np.bincount(y.symbols, minlength=y.bin_count))
    joint = x.symbols * y.bin_count + y.symbols
    h_xy = _entropy(np.bincount(joint))
    return h_x, h_y, h_xy


def mutual_information(x: DiscretizedSeries, y: DiscretizedSeries) -> float:
    _check_pair(x, y)
    h_x, h_y, h_xy = _entropies(x, y)
    return max(0.0, (h_x + h_y) - h_xy)


def su_value(x: DiscretizedSeries, y: DiscretizedSeries) -> float:
    _check_pair(x, y)
    h_x, h_y, h_xy = _entropies(x, y)
    denominator = h_x + h_y
    if denominator <= 0.0:
        return 0.0
    info = denominator - h_xy
    return min(1.0, max(0.0, 2.0 * info / denominator))


def symmetric_uncertainty(x: DiscretizedSeries, y: DiscretizedSeries) -> RelevanceScore:
    return RelevanceScore(su_value(x, y))


def _check_pair(x: DiscretizedSeries, y: DiscretizedSeries):
    if len(x) == 0 or len(y) == 0:
        raise EmptySeriesError("Symmetric uncertainty needs nonempty series")
    if len(x) != len(y):
        raise LengthMismatchError(f"Series lengths differ: {len(x)} vs {len(y)}")


def redundancy_matrix(series: Sequence[DiscretizedSeries]) -> np.ndarray:
    """Pairwise U between candidate primitives; the diagonal is left at 0."""
    n = len(series)
    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            matrix[i, j] = matrix[j, i] = su_value(series[i], series[j])
    return matrix
