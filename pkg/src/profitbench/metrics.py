"""Accuracy metrics and the asymmetric expected-profit function.

Percentage error is (actual - forecast) / actual * 100, so negative values
mean over-forecasting. Expected profit pays the margin-weighted forecast
volume in full while the error stays inside the [delta, gamma] band and
penalizes it linearly (alpha per percentage point) outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Dataset, ForecastRecord, TimeSeries
from .errors import (
    ConstantSeasonalSeries,
    EmptySet,
    MixedDatasets,
    SeriesTooShort,
    ZeroActual,
)


@dataclass(frozen=True)
class ProfitParams:
    """Business parameters of the expected-profit function.

    alpha: penalty fraction per percentage point of |PE| outside the band.
    gamma/delta: upper and lower no-penalty bounds on PE, in percent.
    """

    alpha: float = 0.015
    gamma: float = 1.0
    delta: float = -1.0

    def __post_init__(self):
        if not self.gamma > self.delta:
            raise ValueError(f"gamma ({self.gamma}) must exceed delta ({self.delta})")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")


@dataclass(frozen=True)
class MetricSummary:
    """Aggregates over a record set: the five benchmark criteria."""

    mape: float
    rmse: float
    mase: float
    total_profit: float
    total_seconds: float
    n_records: int


def percentage_error(actual: float, forecast: float) -> float:
    """Signed percentage error; negative when the forecast overshoots."""
    if actual <= 0:
        raise ZeroActual(f"percentage error needs actual > 0, got {actual}")
    return (actual - forecast) / actual * 100.0


def expected_profit(
    actual: float, forecast: float, beta: float, params: ProfitParams
) -> float:
    """Margin-weighted forecast volume, penalized outside the PE band.

    Inside [delta, gamma] the full beta * forecast is earned; outside, the
    payoff shrinks by alpha per percentage point of |PE| and may go
    negative for very large errors. The volume is the forecast (not the
    actual), which is what makes small over-forecasts preferable.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if forecast < 0:
        raise ValueError(f"forecast volume must be >= 0, got {forecast}")
    pe = percentage_error(actual, forecast)
    volume = beta * forecast
    if params.delta <= pe <= params.gamma:
        return volume
    return (1.0 - params.alpha * abs(pe)) * volume


def _errors(records: Sequence[ForecastRecord]) -> np.ndarray:
    return np.array([r.actual - r.forecast for r in records])


def mape(records: Sequence[ForecastRecord]) -> float:
    """Mean absolute percentage error over the records."""
    records = list(records)
    if not records:
        raise EmptySet("mape of an empty record set")
    return float(
        np.mean([abs(percentage_error(r.actual, r.forecast)) for r in records])
    )


def rmse(records: Sequence[ForecastRecord]) -> float:
    records = list(records)
    if not records:
        raise EmptySet("rmse of an empty record set")
    return float(np.sqrt(np.mean(_errors(records) ** 2)))


def mase_denominator(insample: np.ndarray, m: int = 12) -> float:
    """Mean absolute in-sample seasonal-naive error, the MASE scale."""
    insample = np.asarray(insample, dtype=float)
    t = len(insample)
    if t <= m:
        raise SeriesTooShort(m + 1, t, "MASE in-sample series")
    denom = float(np.mean(np.abs(insample[m:] - insample[:-m])))
    if denom == 0.0:
        raise ConstantSeasonalSeries(
            "in-sample series is exactly periodic; seasonal-naive error is zero"
        )
    return denom


def mase(records: Sequence[ForecastRecord], insample: TimeSeries | np.ndarray, m: int = 12) -> float:
    """Sum of absolute test errors scaled by the seasonal-naive benchmark."""
    records = list(records)
    if not records:
        raise EmptySet("mase of an empty record set")
    values = insample.values if isinstance(insample, TimeSeries) else np.asarray(insample)
    denom = mase_denominator(values, m)
    return float(np.sum(np.abs(_errors(records)))) / denom


def score_record(
    record: ForecastRecord,
    beta: float,
    params: ProfitParams,
    scale: float,
) -> ForecastRecord:
    """Return a copy of ``record`` with its per-record criterion values set.

    ``scale`` is the dataset's MASE denominator, so ``scaled_err`` entries
    sum to the record set's MASE.
    """
    pe = percentage_error(record.actual, record.forecast)
    err = record.actual - record.forecast
    return ForecastRecord(
        dataset_id=record.dataset_id,
        model_id=record.model_id,
        origin=record.origin,
        forecast=record.forecast,
        actual=record.actual,
        compute_seconds=record.compute_seconds,
        selected_features=record.selected_features,
        abs_pe=abs(pe),
        sq_err=err * err,
        scaled_err=abs(err) / scale,
        profit=expected_profit(record.actual, record.forecast, beta, params),
    )


def summarize(
    records: Iterable[ForecastRecord],
    dataset: Dataset,
    params: ProfitParams,
) -> MetricSummary:
    """All five aggregate criteria for one model's records on one dataset."""
    records = list(records)
    if not records:
        raise EmptySet("cannot summarize an empty record set")
    ids = {r.dataset_id for r in records}
    if ids != {dataset.id}:
        raise MixedDatasets(f"records cover datasets {sorted(ids)}, expected {dataset.id!r}")
    first_origin = min(r.origin for r in records)
    insample = dataset.series.values[:first_origin]
    total_profit = math.fsum(
        expected_profit(r.actual, r.forecast, dataset.beta, params) for r in records
    )
    return MetricSummary(
        mape=mape(records),
        rmse=rmse(records),
        mase=mase(records, insample),
        total_profit=total_profit,
        total_seconds=math.fsum(r.compute_seconds for r in records),
        n_records=len(records),
    )
