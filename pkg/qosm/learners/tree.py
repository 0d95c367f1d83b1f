# qosm/learners/tree.py
"""
CART regression tree: greedy splits minimising the children's summed
squared deviation, no pruning. Nodes live in flat arrays; a node with
feature -1 is a leaf.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..models import Algorithm, LearnerConfig
from .base import FeatureLayout, TrainedModel, TrainingSet, require_samples

LEAF = -1


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    sse: float  # summed squared deviation of both children


def best_split(X: np.ndarray, y: np.ndarray, min_leaf: int) -> Optional[Split]:
    """
    Exhaustive search over features and midpoints between distinct sorted
    values. Ties keep the lowest feature index, then the lowest threshold.
    """
    n, d = X.shape
    if n < 2 * min_leaf:
        return None
    best: Optional[Split] = None
    cuts = np.arange(min_leaf, n - min_leaf + 1)
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys ** 2)
        left_sum, left_sq = csum[cuts - 1], csq[cuts - 1]
        right_sum, right_sq = csum[-1] - left_sum, csq[-1] - left_sq
        left_sse = np.maximum(0.0, left_sq - left_sum ** 2 / cuts)
        right_sse = np.maximum(0.0, right_sq - right_sum ** 2 / (n - cuts))
        sse = np.where(xs[cuts - 1] < xs[cuts], left_sse + right_sse, np.inf)
        k = int(np.argmin(sse))
        if np.isfinite(sse[k]) and (best is None or sse[k] < best.sse):
            i = cuts[k]
            best = Split(j, float(0.5 * (xs[i - 1] + xs[i])), float(sse[k]))
    return best


def grow_tree(X: np.ndarray, y: np.ndarray, min_leaf: int = 2) -> Dict[str, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[float] = []

    def new_node(rows: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(np.mean(y[rows])))
        return len(value) - 1

    root = new_node(np.arange(len(y)))
    pending: List[Tuple[int, np.ndarray]] = [(root, np.arange(len(y)))]
    while pending:
        node, rows = pending.pop()
        ys = y[rows]
        if np.all(ys == ys[0]):
            continue
        split = best_split(X[rows], ys, min_leaf)
        parent_sse = float(np.sum((ys - ys.mean()) ** 2))
        if split is None or split.sse >= parent_sse:
            continue
        go_left = X[rows, split.feature] <= split.threshold
        feature[node] = split.feature
        threshold[node] = split.threshold
        left[node] = new_node(rows[go_left])
        right[node] = new_node(rows[~go_left])
        pending.append((right[node], rows[~go_left]))
        pending.append((left[node], rows[go_left]))

    return {
        "feature": np.array(feature, dtype=int),
        "threshold": np.array(threshold, dtype=float),
        "left": np.array(left, dtype=int),
        "right": np.array(right, dtype=int),
        "value": np.array(value, dtype=float),
    }


class TreeModel(TrainedModel):
    algorithm = Algorithm.rt

    def __init__(self, layout: FeatureLayout, nodes: Dict[str, np.ndarray]):
        super().__init__(layout)
        self.feature = np.array(nodes["feature"], dtype=int)
        self.threshold = np.array(nodes["threshold"], dtype=float)
        self.left = np.array(nodes["left"], dtype=int)
        self.right = np.array(nodes["right"], dtype=int)
        self.value = np.array(nodes["value"], dtype=float)
        for arr in (self.feature, self.threshold, self.left, self.right, self.value):
            arr.setflags(write=False)
        if len({len(self.feature), len(self.threshold), len(self.left), len(self.right), len(self.value)}) != 1:
            raise ValueError("tree node arrays differ in length")

    def leaf_of(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] != LEAF:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return int(node)

    def _predict(self, x: np.ndarray) -> float:
        return float(self.value[self.leaf_of(x)])

    @property
    def n_params(self) -> int:
        return len(self.value)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    def describe(self) -> Dict[str, Any]:
        return {**super().describe(), "nodes": len(self.value), "leaves": self.n_leaves}

    def params(self) -> Dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_params(cls, layout: FeatureLayout, params: Dict[str, Any]) -> "TreeModel":
        return cls(layout, {key: np.array(params[key]) for key in ("feature", "threshold", "left", "right", "value")})


def fit_rt(data: TrainingSet, config: LearnerConfig) -> TreeModel:
    require_samples(data, 1, "RT")
    return TreeModel(data.layout, grow_tree(data.X, data.y, config.min_leaf))
