"""Additive Holt-Winters exponential smoothing.

Smoothing constants are picked by Nelder-Mead on the in-sample one-step
squared error; the level/trend/season state is initialized from a
classical decomposition of the first two seasons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import optimize

from ..errors import SeriesTooShort
from .base import FittedModel, ForecasterSpec, TrainSlice

PERIOD = 12


@njit(cache=True)
def _hw_run(y, alpha, beta, gamma, level0, trend0, season0):
    """One smoothing pass; returns (sse, level, trend, season_state)."""
    n = len(y)
    level = level0
    trend = trend0
    season = season0.copy()
    sse = 0.0
    for t in range(n):
        m = t % PERIOD
        pred = level + trend + season[m]
        err = y[t] - pred
        sse += err * err
        prev_level = level
        level = alpha * (y[t] - season[m]) + (1.0 - alpha) * (level + trend)
        trend = beta * (level - prev_level) + (1.0 - beta) * trend
        season[m] = gamma * (y[t] - level) + (1.0 - gamma) * season[m]
    return sse, level, trend, season


def _initial_state(y: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Level/trend/season from the first two seasons, trend-adjusted."""
    m1 = float(np.mean(y[:PERIOD]))
    m2 = float(np.mean(y[PERIOD : 2 * PERIOD]))
    trend0 = (m2 - m1) / PERIOD
    # line through the two season midpoints, evaluated at t = -1
    level0 = m1 - 6.5 * trend0
    line = m1 + trend0 * (np.arange(2 * PERIOD) - 5.5)
    detrended = y[: 2 * PERIOD] - line
    season0 = 0.5 * (detrended[:PERIOD] + detrended[PERIOD : 2 * PERIOD])
    season0 = season0 - season0.mean()
    return level0, trend0, season0


def hw_sse(y: np.ndarray, alpha: float, beta: float, gamma: float) -> float:
    """In-sample one-step SSE for a given smoothing triple."""
    level0, trend0, season0 = _initial_state(np.asarray(y, dtype=float))
    sse, _, _, _ = _hw_run(np.asarray(y, dtype=float), alpha, beta, gamma, level0, trend0, season0)
    return float(sse)


@dataclass
class HoltWintersModel(FittedModel):
    model_id: str
    level: float
    trend: float
    season: np.ndarray
    next_position: int  # (training length) % 12
    smoothing: tuple[float, float, float]
    sse: float

    def _predict(self) -> float:
        return self.level + self.trend + self.season[self.next_position]


_STARTS = [(0.2, 0.1, 0.1), (0.5, 0.1, 0.3), (0.8, 0.05, 0.2)]
_EPS = 1e-4


def fit_hw(spec: ForecasterSpec, train: TrainSlice) -> HoltWintersModel:
    y = train.y
    if len(y) < 2 * PERIOD:
        raise SeriesTooShort(2 * PERIOD, len(y))
    level0, trend0, season0 = _initial_state(y)

    def objective(v):
        a, b, g = v
        if not (_EPS <= a <= 1 - _EPS and _EPS <= b <= 1 - _EPS and _EPS <= g <= 1 - _EPS):
            return 1e300
        sse, _, _, _ = _hw_run(y, a, b, g, level0, trend0, season0)
        return sse

    best_v, best_sse = None, np.inf
    for start in _STARTS:
        res = optimize.minimize(
            objective, np.array(start), method="Nelder-Mead",
            options={"xatol": 1e-4, "fatol": 1e-8, "maxfev": 600},
        )
        for cand in (np.array(start), res.x):
            val = objective(cand)
            if val < best_sse:
                best_sse, best_v = val, cand
    a, b, g = best_v
    sse, level, trend, season = _hw_run(y, a, b, g, level0, trend0, season0)
    return HoltWintersModel(
        model_id="HW",
        level=level,
        trend=trend,
        season=season,
        next_position=len(y) % PERIOD,
        smoothing=(float(a), float(b), float(g)),
        sse=float(sse),
    )
