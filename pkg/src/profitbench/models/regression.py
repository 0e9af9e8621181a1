"""Multiple linear regression on the lag design matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TooFewRows


@dataclass
class OlsPredictor:
    """Least-squares fit; rank-deficient designs get the minimum-norm
    solution, so predictions are invariant to duplicated columns."""

    coef: np.ndarray  # intercept first
    rank: int

    def predict(self, query: np.ndarray) -> float:
        return float(self.coef[0] + query @ self.coef[1:])


def ols_fit(X: np.ndarray, targets: np.ndarray) -> OlsPredictor:
    X = np.asarray(X, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n, k = X.shape
    if n <= k + 1:
        raise TooFewRows(f"OLS needs more rows ({n}) than columns ({k + 1})")
    design = np.column_stack([np.ones(n), X])
    coef, _, rank, _ = np.linalg.lstsq(design, targets, rcond=None)
    return OlsPredictor(coef=coef, rank=int(rank))
