"""Recursive-partitioning regression tree with variance-reduction splits.

Splits are found by exhaustive scan over the midpoints of consecutive
distinct feature values; ties are broken toward the lowest feature index
and then the lowest threshold, which makes refits reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TooFewRows


@dataclass
class TreeNode:
    value: float
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _sse(targets: np.ndarray) -> float:
    return float(((targets - targets.mean()) ** 2).sum())


def _best_split(X: np.ndarray, targets: np.ndarray, min_leaf: int):
    """(feature, threshold, sse) of the best admissible split, or None."""
    n, n_feat = X.shape
    best = None
    for j in range(n_feat):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ts = targets[order]
        csum = np.cumsum(ts)
        csq = np.cumsum(ts**2)
        total_sum = csum[-1]
        total_sq = csq[-1]
        for i in range(min_leaf - 1, n - min_leaf):
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            sse_l = csq[i] - csum[i] ** 2 / nl
            sse_r = (total_sq - csq[i]) - (total_sum - csum[i]) ** 2 / nr
            sse = sse_l + sse_r
            if best is None or sse < best[2] - 1e-12:
                best = (j, (xs[i] + xs[i + 1]) / 2.0, sse)
    return best


def _grow(X: np.ndarray, targets: np.ndarray, depth: int, max_depth: int, min_leaf: int) -> TreeNode:
    node = TreeNode(value=float(targets.mean()))
    if depth >= max_depth or len(targets) < 2 * min_leaf:
        return node
    split = _best_split(X, targets, min_leaf)
    if split is None or split[2] >= _sse(targets) - 1e-12:
        return node
    j, thr, _ = split
    mask = X[:, j] <= thr
    node.feature = j
    node.threshold = thr
    node.left = _grow(X[mask], targets[mask], depth + 1, max_depth, min_leaf)
    node.right = _grow(X[~mask], targets[~mask], depth + 1, max_depth, min_leaf)
    return node


@dataclass
class TreePredictor:
    root: TreeNode
    max_depth: int
    min_leaf: int

    def predict(self, query: np.ndarray) -> float:
        node = self.root
        while not node.is_leaf:
            node = node.left if query[node.feature] <= node.threshold else node.right
        return node.value


def tree_fit(X: np.ndarray, targets: np.ndarray, max_depth: int = 4, min_leaf: int = 5) -> TreePredictor:
    X = np.asarray(X, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if X.shape[0] < 2 * min_leaf:
        raise TooFewRows(
            f"tree with min_leaf={min_leaf} needs at least {2 * min_leaf} rows, got {X.shape[0]}"
        )
    return TreePredictor(
        root=_grow(X, targets, 0, max_depth, min_leaf),
        max_depth=max_depth,
        min_leaf=min_leaf,
    )
