"""Dataset ingestion and run-configuration parsing.

Input series are monthly CSV files with a header, a YYYY-MM date column,
a sales column and optional driver columns. Run configurations are JSON;
every key is validated up front and unknown keys are rejected so a typo
cannot silently change a run.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import EXOG_CATEGORIES, Dataset, ExogenousTable, TimeSeries, shift_month
from .errors import (
    ConfigError,
    NegativeSales,
    NonContiguousMonths,
    ParseError,
)
from .harness import GRID_MODES, RunPlan
from .metrics import ProfitParams
from .models import LAG_MODELS, MODEL_IDS, ForecasterSpec, make_spec


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of one dataset file plus its run metadata."""

    id: str
    beta: float
    date_col: str = "month"
    value_col: str = "sales"
    exog: tuple[tuple[str, str], ...] = ()  # (column, category)
    location: str = ""


def _parse_month(text: str, line: int) -> tuple[int, int]:
    parts = text.strip().split("-")
    if len(parts) < 2:
        raise ParseError(f"expected YYYY-MM date, got {text!r}", line)
    try:
        year, month = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(f"expected YYYY-MM date, got {text!r}", line) from None
    if not 1 <= month <= 12:
        raise ParseError(f"month out of range in {text!r}", line)
    return year, month


def _parse_float(text: str, column: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: cannot parse {text!r} as a number", line) from None
    if not np.isfinite(value):
        raise ParseError(f"column {column!r}: non-finite value {text!r}", line)
    return value


def ingest_csv(path: str | Path, schema: CsvSchema) -> Dataset:
    """Read one monthly CSV into a Dataset with validated alignment."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        needed = [schema.date_col, schema.value_col] + [name for name, _ in schema.exog]
        for col in needed:
            if col not in header:
                raise ParseError(f"{path} is missing column {col!r} (header: {header})")
        idx = {col: header.index(col) for col in needed}

        start = None
        expected = None
        values: list[float] = []
        exog_rows: list[list[float]] = []
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            month = _parse_month(row[idx[schema.date_col]], line)
            if start is None:
                start = month
                expected = month
            elif month != expected:
                raise NonContiguousMonths(
                    f"{path} line {line}: expected {expected[0]}-{expected[1]:02d}, "
                    f"got {month[0]}-{month[1]:02d}"
                )
            expected = shift_month(month, 1)
            sales = _parse_float(row[idx[schema.value_col]], schema.value_col, line)
            if sales < 0:
                raise NegativeSales(f"{path} line {line}: negative sales {sales}")
            values.append(sales)
            exog_rows.append(
                [_parse_float(row[idx[name]], name, line) for name, _ in schema.exog]
            )
    if start is None:
        raise ParseError(f"{path} has a header but no data rows")
    series = TimeSeries(id=schema.id, start=start, values=np.array(values))
    exog = None
    if schema.exog:
        exog = ExogenousTable(
            names=tuple(name for name, _ in schema.exog),
            categories=tuple(cat for _, cat in schema.exog),
            values=np.array(exog_rows),
            start=start,
        )
    return Dataset(series=series, beta=schema.beta, exog=exog, location=schema.location)


def write_csv_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset back out in the ingestible CSV layout."""
    path = Path(path)
    series = dataset.series
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        exog_names = dataset.exog.names if dataset.exog is not None else ()
        writer.writerow(["month", "sales", *exog_names])
        for i in range(len(series)):
            year, month = series.month_at(i)
            row = [f"{year:04d}-{month:02d}", repr(float(series.values[i]))]
            if dataset.exog is not None:
                row.extend(repr(float(v)) for v in dataset.exog.values[i])
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Run configuration


@dataclass(frozen=True)
class DatasetConfig:
    id: str
    path: str
    beta: float
    date_col: str = "month"
    value_col: str = "sales"
    exog: tuple[tuple[str, str], ...] = ()
    location: str = ""


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[DatasetConfig, ...]
    roster: tuple[ForecasterSpec, ...]
    profit: ProfitParams = field(default_factory=ProfitParams)
    out_dir: str = "out"
    seed: int = 0
    jobs: int = 1
    grid: str = "reduced"
    test_len: int = 24
    val_len: int = 12
    refresh_every: int = 3
    top_k: int | None = None
    lags: int = 3


def _require(mapping: dict, key: str, kind, where: str):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key {key!r}")
    value = mapping[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{where}: key {key!r} must be {kind.__name__}, got {type(value).__name__}")
    return value


def _reject_unknown(mapping: dict, allowed: set[str], where: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}; allowed {sorted(allowed)}")


def _parse_roster(raw, lags: int, where: str) -> tuple[ForecasterSpec, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{where}: roster must be a non-empty list")
    specs = []
    for i, entry in enumerate(raw):
        item = f"{where}.roster[{i}]"
        if isinstance(entry, str):
            entry = {"model": entry}
        if not isinstance(entry, dict):
            raise ConfigError(f"{item}: expected a model id or an object")
        model = _require(entry, "model", str, item)
        if model not in MODEL_IDS:
            raise ConfigError(f"{item}: unknown model {model!r}; known: {MODEL_IDS}")
        params = {k: v for k, v in entry.items() if k != "model"}
        if model in LAG_MODELS:
            params.setdefault("lags", lags)
        try:
            specs.append(make_spec(model, **params))
        except ValueError as exc:
            raise ConfigError(f"{item}: {exc}") from None
    return tuple(specs)


def _parse_dataset(entry, where: str) -> DatasetConfig:
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: expected an object")
    allowed = {"id", "path", "beta", "date_col", "value_col", "exog", "location"}
    _reject_unknown(entry, allowed, where)
    exog_raw = entry.get("exog", {})
    if not isinstance(exog_raw, dict):
        raise ConfigError(f"{where}: exog must map column names to categories")
    exog = []
    for name, cat in exog_raw.items():
        if cat not in EXOG_CATEGORIES:
            raise ConfigError(
                f"{where}: exog column {name!r} has unknown category {cat!r}; "
                f"allowed {EXOG_CATEGORIES}"
            )
        exog.append((name, cat))
    beta = _require(entry, "beta", float, where)
    if beta <= 0:
        raise ConfigError(f"{where}: beta must be > 0, got {beta}")
    return DatasetConfig(
        id=_require(entry, "id", str, where),
        path=_require(entry, "path", str, where),
        beta=beta,
        date_col=entry.get("date_col", "month"),
        value_col=entry.get("value_col", "sales"),
        exog=tuple(exog),
        location=entry.get("location", ""),
    )


def load_config(path: str | Path) -> RunConfig:
    """Parse and fully validate a JSON run configuration."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    allowed = {
        "datasets", "roster", "profit", "out_dir", "seed", "jobs", "grid",
        "test_len", "val_len", "refresh_every", "top_k", "lags",
    }
    _reject_unknown(raw, allowed, str(path))

    profit_raw = raw.get("profit", {})
    if not isinstance(profit_raw, dict):
        raise ConfigError(f"{path}: profit must be an object")
    _reject_unknown(profit_raw, {"alpha", "gamma", "delta"}, f"{path}.profit")
    try:
        profit = ProfitParams(
            alpha=float(profit_raw.get("alpha", 0.015)),
            gamma=float(profit_raw.get("gamma", 1.0)),
            delta=float(profit_raw.get("delta", -1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.profit: {exc}") from None

    grid = raw.get("grid", "reduced")
    if grid not in GRID_MODES:
        raise ConfigError(f"{path}: grid must be one of {GRID_MODES}, got {grid!r}")
    lags = raw.get("lags", 3)
    if not isinstance(lags, int) or not 1 <= lags <= 7:
        raise ConfigError(f"{path}: lags must be an integer in 1..7")
    top_k = raw.get("top_k")
    if top_k is not None and (not isinstance(top_k, int) or top_k < 1):
        raise ConfigError(f"{path}: top_k must be a positive integer or null")

    datasets_raw = raw.get("datasets")
    if not isinstance(datasets_raw, list) or not datasets_raw:
        raise ConfigError(f"{path}: datasets must be a non-empty list")
    datasets = tuple(
        _parse_dataset(d, f"{path}.datasets[{i}]") for i, d in enumerate(datasets_raw)
    )
    ids = [d.id for d in datasets]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"{path}: duplicate dataset ids")

    def _int(key, default, low=None):
        value = raw.get(key, default)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{path}: {key} must be an integer")
        if low is not None and value < low:
            raise ConfigError(f"{path}: {key} must be >= {low}")
        return value

    return RunConfig(
        datasets=datasets,
        roster=_parse_roster(raw.get("roster"), lags, str(path)),
        profit=profit,
        out_dir=raw.get("out_dir", "out"),
        seed=_int("seed", 0, 0),
        jobs=_int("jobs", 1, 1),
        grid=grid,
        test_len=_int("test_len", 24, 1),
        val_len=_int("val_len", 12, 1),
        refresh_every=_int("refresh_every", 3, 1),
        top_k=top_k,
        lags=lags,
    )


def load_datasets(config: RunConfig, base_dir: str | Path) -> tuple[Dataset, ...]:
    """Ingest every dataset file, resolving paths against ``base_dir``."""
    base = Path(base_dir)
    out = []
    for dc in config.datasets:
        path = Path(dc.path)
        if not path.is_absolute():
            path = base / path
        schema = CsvSchema(
            id=dc.id,
            beta=dc.beta,
            date_col=dc.date_col,
            value_col=dc.value_col,
            exog=dc.exog,
            location=dc.location,
        )
        out.append(ingest_csv(path, schema))
    return tuple(out)


def build_plan(config: RunConfig, base_dir: str | Path, **overrides) -> RunPlan:
    """RunPlan from a config; ``overrides`` replace seed/jobs/grid fields."""
    allowed = {"seed", "jobs", "grid"}
    unknown = set(overrides) - allowed
    if unknown:
        raise ConfigError(f"unknown plan overrides {sorted(unknown)}")
    return RunPlan(
        datasets=load_datasets(config, base_dir),
        roster=config.roster,
        profit=config.profit,
        grid=overrides.get("grid", config.grid),
        refresh_every=config.refresh_every,
        seed=overrides.get("seed", config.seed),
        test_len=config.test_len,
        val_len=config.val_len,
        top_k=config.top_k,
        jobs=overrides.get("jobs", config.jobs),
    )
