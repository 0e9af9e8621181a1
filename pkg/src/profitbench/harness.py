"""Backtest orchestration: profit-based grid tuning once per cell, mRMR +
wrapper feature refreshes every few months, and the 24-step
expanding-window forecast loop with per-forecast wall-clock timing.

A cell is one (dataset, model) pair. Cells are independent and can run in
parallel worker processes; everything inside a cell is strictly
sequential. All randomness is derived per task from the plan seed, so a
plan reruns to identical records regardless of worker count.
"""

from __future__ import annotations

import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .core import Dataset, ExogenousTable, ForecastRecord, SplitPlan, make_split_plan
from .errors import AllGridPointsFailed, ProfitbenchError
from .featsel import FeatureRanking, default_top_k, mrmr_rank, wrapper_select
from .metrics import MetricSummary, ProfitParams, mase_denominator, score_record, summarize
from .models import ForecasterSpec, fit
from .windows import DiffCache, make_train_slice, sequential_validation_profit, task_seed

GRID_MODES = ("reduced", "paper")

REFRESH_EVERY = 3


def model_grid(model_id: str, grid: str = "reduced") -> tuple[dict, ...] | None:
    """Hyperparameter grid points in lexicographic order, or None when the
    model is grid-free."""
    if grid not in GRID_MODES:
        raise ValueError(f"unknown grid mode {grid!r}; expected one of {GRID_MODES}")
    if model_id in ("SARIMA", "SARIMAX"):
        top = 2 if grid == "reduced" else 5
        span = range(top + 1)
        return tuple(
            {"p": p, "q": q, "P": P, "Q": Q}
            for p, q, P, Q in itertools.product(span, span, span, span)
        )
    if model_id.startswith("KNN"):
        return tuple(
            {"k": k, "weights": w}
            for k in range(2, 6)
            for w in ("distance", "uniform")
        )
    if model_id.startswith("MLP"):
        return tuple({"hidden": h} for h in range(1, 11))
    return None


@dataclass(frozen=True)
class RunPlan:
    datasets: tuple[Dataset, ...]
    roster: tuple[ForecasterSpec, ...]
    profit: ProfitParams = field(default_factory=ProfitParams)
    grid: str = "reduced"
    refresh_every: int = REFRESH_EVERY
    seed: int = 0
    test_len: int = 24
    val_len: int = 12
    top_k: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.refresh_every < 1:
            raise ValueError("feature-refresh cadence must be >= 1 month")
        if self.grid not in GRID_MODES:
            raise ValueError(f"unknown grid mode {self.grid!r}")
        ids = [d.id for d in self.datasets]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate dataset ids in plan")
        models = [s.model_id for s in self.roster]
        if len(set(models)) != len(models):
            raise ValueError("duplicate model ids in roster")


@dataclass(frozen=True)
class FailureLog:
    dataset_id: str
    model_id: str
    origin: int  # -1 for failures before the backtest loop
    stage: str  # "dataset", "tune", "featsel", "fit"
    message: str


@dataclass(frozen=True)
class TuneLog:
    dataset_id: str
    model_id: str
    params: tuple[tuple[str, object], ...]
    profit: float
    n_grid_points: int


@dataclass(frozen=True)
class SelectionLog:
    dataset_id: str
    model_id: str
    origin: int
    prefix_size: int
    features: tuple[str, ...]
    profit: float


@dataclass(frozen=True)
class RunResult:
    records: tuple[ForecastRecord, ...]
    failures: tuple[FailureLog, ...]
    tuning: tuple[TuneLog, ...]
    selections: tuple[SelectionLog, ...]
    summaries: tuple[tuple[str, str, MetricSummary], ...]  # (dataset, model, summary)


def time_forecast(thunk) -> tuple[float, float]:
    """(forecast, wall-clock seconds) of a fit-plus-forecast callable."""
    t0 = time.perf_counter()
    value = thunk()
    return value, time.perf_counter() - t0


def tune(
    spec: ForecasterSpec,
    dataset: Dataset,
    split: SplitPlan,
    params: ProfitParams,
    features: tuple[str, ...],
    master_seed: int,
    grid: str = "reduced",
    diff_cache: DiffCache | None = None,
) -> tuple[ForecasterSpec, float, int]:
    """Exhaustive grid search on the first validation window.

    Every grid point produces val_len sequential one-step forecasts; the
    highest total expected profit wins and ties keep the earliest point in
    lexicographic order. Returns (tuned spec, best profit, points tried).
    """
    grid_points = model_grid(spec.model_id, grid)
    if grid_points is None:
        return spec, float("nan"), 0
    if diff_cache is None:
        diff_cache = DiffCache()
    best_spec, best_profit = None, -float("inf")
    for point in grid_points:
        candidate = spec.replace(**point)
        try:
            profit = sequential_validation_profit(
                candidate, dataset, split.val_start, split.val_len,
                features, params, master_seed, diff_cache,
            )
        except ProfitbenchError:
            continue
        if profit > best_profit:
            best_spec, best_profit = candidate, profit
    if best_spec is None:
        raise AllGridPointsFailed(
            f"every {spec.model_id} grid point failed on dataset {dataset.id!r}"
        )
    return best_spec, best_profit, len(grid_points)


def _rank_features(dataset: Dataset, end: int, top_k: int | None) -> FeatureRanking:
    """mRMR ranking computed on rows strictly before ``end``."""
    exog = dataset.exog
    window = ExogenousTable(
        names=exog.names,
        categories=exog.categories,
        values=exog.values[:end],
        start=exog.start,
        units=exog.units,
    )
    pool = exog.n_columns
    k = top_k if top_k is not None else default_top_k(pool)
    k = min(k, pool)
    return mrmr_rank(window, dataset.series.values[:end], k)


def run_cell(
    dataset: Dataset, base_spec: ForecasterSpec, plan: RunPlan
) -> tuple[list[ForecastRecord], list[FailureLog], list[TuneLog], list[SelectionLog]]:
    """Tune, select features and backtest one (dataset, model) cell."""
    records: list[ForecastRecord] = []
    failures: list[FailureLog] = []
    tuning: list[TuneLog] = []
    selections: list[SelectionLog] = []
    model_id = base_spec.model_id
    diff_cache = DiffCache()

    split = make_split_plan(dataset.series, plan.test_len, plan.val_len)
    uses_vars = base_spec.uses_variables
    if uses_vars and (dataset.exog is None or dataset.exog.n_columns == 0):
        for k in range(plan.test_len):
            failures.append(FailureLog(
                dataset.id, model_id, split.origin(k), "fit",
                "model requires exogenous columns but the dataset has none",
            ))
        return records, failures, tuning, selections

    # hyperparameters: tuned once on the first validation window, with the
    # full mRMR prefix as the feature set for variable-using models
    try:
        tune_features: tuple[str, ...] = ()
        if uses_vars:
            tune_features = _rank_features(dataset, split.val_start, plan.top_k).names
        spec, tune_profit, n_points = tune(
            base_spec, dataset, split, plan.profit, tune_features,
            plan.seed, plan.grid, diff_cache,
        )
        if n_points:
            tuning.append(TuneLog(dataset.id, model_id, spec.params, tune_profit, n_points))
    except ProfitbenchError as exc:
        for k in range(plan.test_len):
            failures.append(FailureLog(dataset.id, model_id, split.origin(k), "fit",
                                       f"tuning failed: {exc}"))
        return records, failures, tuning, selections

    features: tuple[str, ...] = ()
    have_selection = False
    for k in range(plan.test_len):
        origin = split.origin(k)
        if uses_vars and k % plan.refresh_every == 0:
            try:
                ranking = _rank_features(dataset, origin - plan.val_len, plan.top_k)
                chosen = wrapper_select(
                    ranking, spec, dataset, origin - plan.val_len, plan.val_len,
                    plan.profit, plan.seed, diff_cache,
                )
                if chosen.profits and max(chosen.profits) > -float("inf"):
                    features = chosen.features
                    have_selection = True
                    selections.append(SelectionLog(
                        dataset.id, model_id, origin, chosen.chosen_size,
                        chosen.features, max(chosen.profits),
                    ))
                else:
                    failures.append(FailureLog(dataset.id, model_id, origin, "featsel",
                                               "every ranking prefix failed"))
            except ProfitbenchError as exc:
                failures.append(FailureLog(dataset.id, model_id, origin, "featsel", str(exc)))
        if uses_vars and not have_selection:
            failures.append(FailureLog(dataset.id, model_id, origin, "fit",
                                       "no usable feature set for this origin"))
            continue
        seed = task_seed(plan.seed, dataset.id, model_id, "test", origin)
        try:
            diff = diff_cache.get(dataset, origin)
            train = make_train_slice(dataset, origin, features, seed, diff)
            forecast, seconds = time_forecast(lambda: fit(spec, train).forecast_one())
            records.append(ForecastRecord(
                dataset_id=dataset.id,
                model_id=model_id,
                origin=origin,
                forecast=forecast,
                actual=float(dataset.series.values[origin]),
                compute_seconds=seconds,
                selected_features=features,
            ))
        except ProfitbenchError as exc:
            failures.append(FailureLog(dataset.id, model_id, origin, "fit", str(exc)))
    return records, failures, tuning, selections


def _run_cell_task(args):
    dataset, spec, plan = args
    return run_cell(dataset, spec, plan)


def run_backtest(plan: RunPlan) -> RunResult:
    """Run every (dataset, model) cell of the plan and aggregate.

    Fit failures are logged and excluded pairwise; a dataset that cannot
    even be split is dropped with one failure entry per model.
    """
    cells = []
    failures: list[FailureLog] = []
    for dataset in plan.datasets:
        try:
            make_split_plan(dataset.series, plan.test_len, plan.val_len)
        except ProfitbenchError as exc:
            for spec in plan.roster:
                failures.append(FailureLog(dataset.id, spec.model_id, -1, "dataset", str(exc)))
            continue
        for spec in plan.roster:
            cells.append((dataset, spec, plan))

    if plan.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            outputs = list(pool.map(_run_cell_task, cells, chunksize=1))
    else:
        outputs = [_run_cell_task(c) for c in cells]

    records: list[ForecastRecord] = []
    tuning: list[TuneLog] = []
    selections: list[SelectionLog] = []
    for recs, fails, tunes, sels in outputs:
        records.extend(recs)
        failures.extend(fails)
        tuning.extend(tunes)
        selections.extend(sels)

    by_dataset = {d.id: d for d in plan.datasets}
    scored: list[ForecastRecord] = []
    scales: dict[str, float] = {}
    for rec in records:
        ds = by_dataset[rec.dataset_id]
        if rec.dataset_id not in scales:
            first_origin = len(ds.series) - plan.test_len
            scales[rec.dataset_id] = mase_denominator(ds.series.values[:first_origin])
        scored.append(score_record(rec, ds.beta, plan.profit, scales[rec.dataset_id]))
    scored.sort(key=lambda r: (r.dataset_id, r.model_id, r.origin))

    summaries = []
    for (ds_id, model_id), group in itertools.groupby(
        scored, key=lambda r: (r.dataset_id, r.model_id)
    ):
        summaries.append(
            (ds_id, model_id, summarize(list(group), by_dataset[ds_id], plan.profit))
        )

    failures.sort(key=lambda f: (f.dataset_id, f.model_id, f.origin, f.stage))
    tuning.sort(key=lambda t: (t.dataset_id, t.model_id))
    selections.sort(key=lambda s: (s.dataset_id, s.model_id, s.origin))
    return RunResult(
        records=tuple(scored),
        failures=tuple(failures),
        tuning=tuple(tuning),
        selections=tuple(selections),
        summaries=tuple(summaries),
    )


def plan_to_json(plan: RunPlan) -> str:
    """Compact JSON echo of the plan settings (not the data)."""
    return json.dumps(
        {
            "datasets": [d.id for d in plan.datasets],
            "roster": [
                {"model": s.model_id, **{k: v for k, v in s.params}} for s in plan.roster
            ],
            "profit": {
                "alpha": plan.profit.alpha,
                "gamma": plan.profit.gamma,
                "delta": plan.profit.delta,
            },
            "grid": plan.grid,
            "refresh_every": plan.refresh_every,
            "seed": plan.seed,
            "test_len": plan.test_len,
            "val_len": plan.val_len,
            "top_k": plan.top_k,
        },
        indent=2,
        sort_keys=True,
    )
