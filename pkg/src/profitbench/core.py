"""Domain data model: monthly series, exogenous drivers, splits, forecast records.

All containers are immutable after construction (arrays are marked
read-only) and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    MisalignedExogenous,
    NonFiniteValue,
    SeriesTooShort,
)

PERIODS_PER_YEAR = 12

EXOG_CATEGORIES = ("weather", "macro", "holiday", "pricing")


def shift_month(start: tuple[int, int], k: int) -> tuple[int, int]:
    """Return the (year, month) that lies k months after ``start``."""
    year, month = start
    total = year * 12 + (month - 1) + k
    return total // 12, total % 12 + 1


def month_offset(start: tuple[int, int], other: tuple[int, int]) -> int:
    """Number of months from ``start`` to ``other`` (negative if earlier)."""
    return (other[0] - start[0]) * 12 + (other[1] - start[1])


def _check_month(start: tuple[int, int]) -> None:
    if not (1 <= start[1] <= 12):
        raise ValueError(f"month must be in 1..12, got {start[1]}")


def _frozen_array(values, dtype=float, ndim=1) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-d data, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """A monthly sales series with identity and calendar anchor."""

    id: str
    start: tuple[int, int]
    values: np.ndarray
    freq: int = PERIODS_PER_YEAR

    def __post_init__(self):
        _check_month(self.start)
        if self.freq != PERIODS_PER_YEAR:
            raise ValueError("only monthly series (freq=12) are supported")
        object.__setattr__(self, "values", _frozen_array(self.values))
        if len(self.values) < 1:
            raise SeriesTooShort(1, 0)
        if not np.isfinite(self.values).all():
            raise NonFiniteValue(f"series {self.id!r} contains NaN/inf values")

    def __len__(self) -> int:
        return len(self.values)

    def month_at(self, index: int) -> tuple[int, int]:
        """Calendar (year, month) of the observation at ``index``."""
        return shift_month(self.start, index)

    def index_of(self, month: tuple[int, int]) -> int:
        return month_offset(self.start, month)

    def month_of_year(self, index: int) -> int:
        """Month-of-year (1..12) at ``index``; valid for any integer index."""
        return (self.start[1] - 1 + index) % 12 + 1


@dataclass(frozen=True)
class ExogenousTable:
    """Time-aligned external driver columns, tagged by category."""

    names: tuple[str, ...]
    categories: tuple[str, ...]
    values: np.ndarray  # rows x columns, row i is the month start + i
    start: tuple[int, int]
    units: tuple[str, ...] = ()

    def __post_init__(self):
        _check_month(self.start)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "values", _frozen_array(self.values, ndim=2))
        if not self.units:
            object.__setattr__(self, "units", ("",) * len(self.names))
        else:
            object.__setattr__(self, "units", tuple(self.units))
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate exogenous column names")
        if self.values.shape[1] != len(self.names):
            raise ValueError("column count does not match names")
        if len(self.categories) != len(self.names):
            raise ValueError("category count does not match names")
        if len(self.units) != len(self.names):
            raise ValueError("unit count does not match names")
        for cat in self.categories:
            if cat not in EXOG_CATEGORIES:
                raise ValueError(
                    f"unknown exog category {cat!r}; expected one of {EXOG_CATEGORIES}"
                )
        if not np.isfinite(self.values).all():
            raise NonFiniteValue("exogenous table contains NaN/inf cells")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return len(self.names)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def select(self, names: tuple[str, ...]) -> np.ndarray:
        """Matrix restricted to ``names``, preserving the given order."""
        idx = [self.names.index(n) for n in names]
        return self.values[:, idx]


@dataclass(frozen=True)
class Dataset:
    """One sales series with its margin weight and optional drivers."""

    series: TimeSeries
    beta: float
    exog: ExogenousTable | None = None
    location: str = ""

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.exog is not None:
            if self.exog.start != self.series.start:
                raise MisalignedExogenous(
                    "exog start differs from series start; use align() first"
                )
            if len(self.exog) != len(self.series):
                raise MisalignedExogenous(
                    f"exog has {len(self.exog)} rows for a series of "
                    f"length {len(self.series)}"
                )

    @property
    def id(self) -> str:
        return self.series.id


def align(series: TimeSeries, exog: ExogenousTable) -> Dataset:
    """Trim ``exog`` to the series index and bundle both into a Dataset.

    Exogenous rows outside the series range are dropped; any series month
    without a matching exog row raises MisalignedExogenous.

    The returned Dataset carries ``beta=1``; callers normally rebuild it
    with the proper margin weight.
    """
    offset = month_offset(exog.start, series.start)
    if offset < 0 or offset + len(series) > len(exog):
        raise MisalignedExogenous(
            f"exog covers months {exog.start}..{shift_month(exog.start, len(exog) - 1)} "
            f"but the series needs {series.start}.."
            f"{shift_month(series.start, len(series) - 1)}"
        )
    trimmed = ExogenousTable(
        names=exog.names,
        categories=exog.categories,
        values=exog.values[offset : offset + len(series)],
        start=series.start,
        units=exog.units,
    )
    return Dataset(series=series, beta=1.0, exog=trimmed)


@dataclass(frozen=True)
class SplitPlan:
    """Expanding-window backtest layout.

    The k-th test origin is the absolute index ``len(series) - test_len + k``;
    everything strictly before an origin is available for fitting at that
    step. The tuning validation window is the ``val_len`` months preceding
    the first origin.
    """

    series_length: int
    test_len: int = 24
    val_len: int = 12

    def __post_init__(self):
        needed = self.test_len + self.val_len + 2 * PERIODS_PER_YEAR
        if self.series_length < needed:
            raise SeriesTooShort(needed, self.series_length)

    @property
    def origins(self) -> range:
        return range(self.series_length - self.test_len, self.series_length)

    @property
    def first_origin(self) -> int:
        return self.series_length - self.test_len

    @property
    def val_start(self) -> int:
        return self.first_origin - self.val_len

    def origin(self, k: int) -> int:
        if not 0 <= k < self.test_len:
            raise IndexError(f"test step {k} outside 0..{self.test_len - 1}")
        return self.first_origin + k


def make_split_plan(series: TimeSeries, test_len: int = 24, val_len: int = 12) -> SplitPlan:
    return SplitPlan(series_length=len(series), test_len=test_len, val_len=val_len)


@dataclass(frozen=True)
class ForecastRecord:
    """One model's one-step forecast at one origin, with its actual.

    The per-record criterion values (absolute percentage error, squared
    error, scaled error, expected profit) are filled in by the scoring
    helper in :mod:`profitbench.metrics` so reports and rank matrices can
    be rebuilt from the record alone.
    """

    dataset_id: str
    model_id: str
    origin: int
    forecast: float
    actual: float
    compute_seconds: float
    selected_features: tuple[str, ...] = ()
    horizon: int = 1
    abs_pe: float = field(default=float("nan"))
    sq_err: float = field(default=float("nan"))
    scaled_err: float = field(default=float("nan"))
    profit: float = field(default=float("nan"))

    def __post_init__(self):
        if self.horizon != 1:
            raise ValueError("only one-step-ahead records are supported")
        if self.compute_seconds < 0:
            raise ValueError("compute_seconds must be >= 0")
        if not np.isfinite(self.forecast):
            raise NonFiniteValue("forecast must be finite")
        object.__setattr__(self, "selected_features", tuple(self.selected_features))
