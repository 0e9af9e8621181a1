"""Expanding-window helpers shared by tuning, feature selection and the
backtest driver: training-slice assembly, per-task seeding, and the
sequential one-step validation loop that accumulates expected profit.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .core import Dataset
from .errors import MissingExogForecastRow
from .metrics import ProfitParams, expected_profit
from .models import ForecasterSpec, TrainSlice, fit
from .preprocess import DifferencingDecision, decide_differencing


def task_seed(master: int, *tokens) -> int:
    """Deterministic per-task seed, independent of execution order."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode())
    for tok in tokens:
        h.update(b"\x1f")
        h.update(str(tok).encode())
    return int.from_bytes(h.digest(), "little")


class DiffCache:
    """Memoizes the unit-root differencing decision per training window."""

    def __init__(self):
        self._cache: dict[tuple[str, int], DifferencingDecision] = {}

    def get(self, dataset: Dataset, end: int) -> DifferencingDecision:
        key = (dataset.id, end)
        if key not in self._cache:
            self._cache[key] = decide_differencing(dataset.series.values[:end])
        return self._cache[key]


def make_train_slice(
    dataset: Dataset,
    end: int,
    features: tuple[str, ...],
    seed: int,
    diff: DifferencingDecision,
) -> TrainSlice:
    """Training slice covering indices [0, end) that forecasts index ``end``."""
    series = dataset.series
    if not 0 < end <= len(series):
        raise IndexError(f"training end {end} outside the series")
    months = np.array([series.month_of_year(i) for i in range(end)])
    exog = exog_next = None
    if features:
        if dataset.exog is None:
            raise MissingExogForecastRow(
                f"dataset {dataset.id!r} has no exogenous table but features were requested"
            )
        matrix = dataset.exog.select(tuple(features))
        if end >= len(dataset.exog):
            raise MissingExogForecastRow(
                f"no exogenous row for the forecast month (index {end})"
            )
        exog = matrix[:end]
        exog_next = matrix[end]
    return TrainSlice(
        y=series.values[:end],
        months=months,
        month_next=series.month_of_year(end),
        exog=exog,
        exog_next=exog_next,
        feature_names=tuple(features),
        diff=diff,
        seed=seed,
    )


def sequential_validation_profit(
    spec: ForecasterSpec,
    dataset: Dataset,
    val_start: int,
    val_len: int,
    features: tuple[str, ...],
    params: ProfitParams,
    master_seed: int,
    diff_cache: DiffCache,
) -> float:
    """Total expected profit of one-step forecasts over a validation window.

    Each validated month is appended to the training set before the next
    step, mirroring the expanding-window test procedure.
    """
    total = 0.0
    for j in range(val_len):
        origin = val_start + j
        seed = task_seed(master_seed, dataset.id, spec.model_id, "val", origin)
        train = make_train_slice(dataset, origin, features, seed, diff_cache.get(dataset, origin))
        model = fit(spec, train)
        forecast = model.forecast_one()
        total += expected_profit(
            float(dataset.series.values[origin]), forecast, dataset.beta, params
        )
    return total
