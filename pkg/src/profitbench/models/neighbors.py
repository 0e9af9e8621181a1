"""K-nearest-neighbors regression in the normalized feature space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TooFewRows


@dataclass
class KnnPredictor:
    X: np.ndarray
    targets: np.ndarray
    k: int
    weights: str  # "uniform" or "distance"

    def predict(self, query: np.ndarray) -> float:
        dist = np.sqrt(((self.X - query) ** 2).sum(axis=1))
        # stable sort keeps the lowest row index first among ties
        nearest = np.argsort(dist, kind="stable")[: self.k]
        d = dist[nearest]
        t = self.targets[nearest]
        if self.weights == "uniform":
            return float(t.mean())
        zero = d == 0.0
        if zero.any():
            # exact match dominates (infinite-weight convention)
            return float(t[zero][0])
        w = 1.0 / d
        return float((w * t).sum() / w.sum())


def knn_fit(X: np.ndarray, targets: np.ndarray, k: int, weights: str) -> KnnPredictor:
    X = np.asarray(X, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if X.shape[0] < k:
        raise TooFewRows(f"KNN with k={k} needs at least {k} rows, got {X.shape[0]}")
    if weights not in ("uniform", "distance"):
        raise ValueError(f"unknown weighting {weights!r}")
    return KnnPredictor(X=X, targets=targets, k=k, weights=weights)
