"""Bundled synthetic corpus.

Two families: trend-plus-season sales series for directional experiments,
and series shaped like the classic public monthly sales datasets (same
lengths, start dates and margin weights). Every series comes with twelve
exogenous driver columns (four weather, seven macro, one holiday); a few
drivers genuinely influence the sales so feature selection has signal to
find. Everything is generated from one seed.
"""

from __future__ import annotations

import numpy as np

from .core import Dataset, ExogenousTable, TimeSeries

EXOG_COLUMNS = (
    ("max_temp", "weather"),
    ("max_temp_sq", "weather"),
    ("precipitation", "weather"),
    ("sunshine_hours", "weather"),
    ("cpi_change", "macro"),
    ("unemployment_rate", "macro"),
    ("exchange_rate", "macro"),
    ("interest_rate", "macro"),
    ("industrial_production", "macro"),
    ("gdp_growth", "macro"),
    ("private_consumption", "macro"),
    ("public_holidays", "holiday"),
)

# (name, months, start, beta) mirroring the public-data shapes
PUBLIC_SHAPES = (
    ("beer", 476, (1956, 1), 0.1),
    ("car_sales_1", 156, (1996, 1), 2.1),
    ("car_sales_2", 108, (1960, 1), 0.6),
    ("champagne", 105, (1964, 1), 1.0),
    ("paper", 120, (1963, 1), 1.9),
    ("petrol_1", 252, (1971, 1), 0.1),
    ("petrol_2", 252, (1971, 1), 1.2),
    ("petrol_3", 252, (1971, 1), 0.1),
    ("petrol_4", 252, (1971, 1), 2.8),
    ("wine_1", 187, (1980, 1), 2.2),
    ("wine_2", 187, (1980, 1), 2.2),
    ("wine_3", 187, (1980, 1), 2.1),
    ("wine_4", 187, (1980, 1), 1.5),
    ("wine_5", 187, (1980, 1), 0.4),
    ("wine_6", 187, (1980, 1), 2.7),
)


def _ar1(rng: np.random.Generator, n: int, phi: float, sd: float, mean: float = 0.0) -> np.ndarray:
    out = np.empty(n)
    out[0] = mean + rng.normal(0, sd / np.sqrt(1 - phi * phi))
    for t in range(1, n):
        out[t] = mean + phi * (out[t - 1] - mean) + rng.normal(0, sd)
    return out


def _exog_table(rng: np.random.Generator, n: int, start: tuple[int, int]) -> ExogenousTable:
    month0 = start[1] - 1
    phase = 2 * np.pi * (np.arange(n) + month0) / 12.0
    temp = 18.0 + 9.0 * np.sin(phase - 2.0) + rng.normal(0, 1.2, n)
    cols = {
        "max_temp": temp,
        "max_temp_sq": temp**2,
        "precipitation": 3.0 - 1.2 * np.sin(phase - 2.0) + np.abs(rng.normal(0, 0.7, n)),
        "sunshine_hours": 7.0 + 3.0 * np.sin(phase - 2.0) + rng.normal(0, 0.8, n),
        "cpi_change": _ar1(rng, n, 0.6, 0.15, 0.2),
        "unemployment_rate": _ar1(rng, n, 0.97, 0.12, 7.0),
        "exchange_rate": _ar1(rng, n, 0.98, 0.02, 1.1),
        "interest_rate": np.abs(_ar1(rng, n, 0.97, 0.15, 4.0)),
        "industrial_production": _ar1(rng, n, 0.4, 0.6, 0.3),
        "gdp_growth": _ar1(rng, n, 0.5, 0.4, 0.25),
        "private_consumption": _ar1(rng, n, 0.5, 0.5, 0.3),
        "public_holidays": np.tile([2, 1, 1, 2, 3, 1, 1, 1, 1, 1, 2, 3], n // 12 + 1)[
            month0 : month0 + n
        ].astype(float),
    }
    names = tuple(name for name, _ in EXOG_COLUMNS)
    cats = tuple(cat for _, cat in EXOG_COLUMNS)
    values = np.column_stack([cols[name] for name in names])
    return ExogenousTable(names=names, categories=cats, values=values, start=start)


def make_synthetic_dataset(
    name: str,
    n: int,
    start: tuple[int, int],
    beta: float,
    seed: int,
    base: float = 1000.0,
    trend: float = 3.0,
    season_amp: float = 180.0,
    noise_sd: float = 35.0,
    driver_weight: float = 1.0,
) -> Dataset:
    """One trend-plus-season sales series with aligned drivers.

    Sales respond to temperature and holiday count (scaled by
    ``driver_weight``), so multivariate models have something to gain.
    """
    rng = np.random.default_rng(seed)
    exog = _exog_table(rng, n, start)
    shape = rng.normal(0, 1, 12)
    shape -= shape.mean()
    month0 = start[1] - 1
    season = season_amp * np.tile(shape, n // 12 + 2)[month0 : month0 + n]
    phase = 2 * np.pi * (np.arange(n) + month0) / 12.0
    season += 0.4 * season_amp * np.sin(phase - 2.0)
    temp_effect = driver_weight * 6.0 * (exog.column("max_temp") - 18.0)
    holiday_effect = driver_weight * 30.0 * (exog.column("public_holidays") - 1.5)
    noise = _ar1(rng, n, 0.4, noise_sd)
    values = base + trend * np.arange(n) + season + temp_effect + holiday_effect + noise
    values = np.maximum(values, base * 0.05)
    series = TimeSeries(id=name, start=start, values=values)
    return Dataset(series=series, beta=beta, exog=exog, location="synthetic")


def synthetic_corpus(seed: int = 7, count: int = 10) -> list[Dataset]:
    """Trend-plus-season series synth_01..synth_NN with varied shapes."""
    datasets = []
    rng = np.random.default_rng(seed)
    for i in range(count):
        datasets.append(
            make_synthetic_dataset(
                name=f"synth_{i + 1:02d}",
                n=int(rng.integers(10, 14)) * 12,
                start=(2005 + i % 4, 1),
                beta=float(np.round(rng.uniform(0.2, 2.9), 1)),
                seed=seed * 1000 + i,
                base=float(rng.uniform(600, 2200)),
                trend=float(rng.uniform(1.0, 6.0)),
                season_amp=float(rng.uniform(120, 320)),
                noise_sd=float(rng.uniform(20, 60)),
            )
        )
    return datasets


def public_shaped_corpus(seed: int = 7, names: tuple[str, ...] | None = None) -> list[Dataset]:
    """Series mimicking the public-dataset shapes and margin weights."""
    datasets = []
    for i, (name, n, start, beta) in enumerate(PUBLIC_SHAPES):
        if names is not None and name not in names:
            continue
        datasets.append(
            make_synthetic_dataset(
                name=name,
                n=n,
                start=start,
                beta=beta,
                seed=seed * 5000 + i,
                base=1200.0 + 150.0 * (i % 5),
                trend=2.0 + 0.8 * (i % 3),
                season_amp=200.0 + 30.0 * (i % 4),
                noise_sd=40.0,
            )
        )
    return datasets
