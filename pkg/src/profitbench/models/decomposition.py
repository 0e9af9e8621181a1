"""Classical additive decomposition forecaster (DM).

Trend is a centered 2x12 moving average, the seasonal component is the
month-averaged detrended series, and the forecast extrapolates the trend
with the drift of its last year plus the target month's seasonal index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SeriesTooShort
from .base import FittedModel, ForecasterSpec, TrainSlice

PERIOD = 12
HALF = PERIOD // 2


def decompose(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (trend on interior points, 12 seasonal indexes).

    trend[j] corresponds to original index j + 6; seasonal indexes are
    keyed by position-in-series modulo 12 and sum to zero.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    weights = np.full(PERIOD + 1, 1.0 / PERIOD)
    weights[0] = weights[-1] = 0.5 / PERIOD
    trend = np.convolve(y, weights, mode="valid")  # length n - 12
    detrended = y[HALF : n - HALF] - trend
    seasonal = np.zeros(PERIOD)
    for m in range(PERIOD):
        positions = np.arange(len(detrended))[(np.arange(HALF, n - HALF) % PERIOD) == m]
        seasonal[m] = detrended[positions].mean()
    seasonal -= seasonal.mean()
    return trend, seasonal


@dataclass
class DecompositionModel(FittedModel):
    model_id: str
    value: float

    def _predict(self) -> float:
        return self.value


def fit_dm(spec: ForecasterSpec, train: TrainSlice) -> DecompositionModel:
    y = train.y
    n = len(y)
    if n < 3 * PERIOD:
        raise SeriesTooShort(3 * PERIOD, n)
    trend, seasonal = decompose(y)
    drift = (trend[-1] - trend[-1 - PERIOD]) / PERIOD
    # last trend point sits at index n - 7; the forecast month is index n
    extrapolated = trend[-1] + (HALF + 1) * drift
    value = extrapolated + seasonal[n % PERIOD]
    return DecompositionModel(model_id="DM", value=float(value))
