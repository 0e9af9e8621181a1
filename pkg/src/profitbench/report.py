"""Report emission: delimited tables plus vector rank charts.

The records file is fully deterministic for a fixed plan and seed;
wall-clock timings live in their own file so the records can be compared
byte for byte between runs. Charts are SVG with a fixed hash salt and no
embedded creation date, so they are reproducible too (up to timing-driven
rank changes in the time criterion).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "profitbench"

import matplotlib.pyplot as plt
import numpy as np

from .core import ForecastRecord
from .errors import ParseError, TooFewModels
from .harness import RunResult
from .stats import (
    CRITERIA,
    CategoryContrast,
    FriedmanResult,
    NemenyiResult,
    RankMatrix,
    category_contrast,
    friedman,
    nemenyi,
    rank_matrix,
)

_RECORD_FIELDS = (
    "dataset", "model", "origin", "forecast", "actual",
    "abs_pe", "sq_err", "scaled_err", "profit", "features",
)


def _fmt(value: float) -> str:
    return repr(float(value))


def write_records(records: Iterable[ForecastRecord], path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_RECORD_FIELDS)
        for r in records:
            writer.writerow([
                r.dataset_id, r.model_id, r.origin,
                _fmt(r.forecast), _fmt(r.actual),
                _fmt(r.abs_pe), _fmt(r.sq_err), _fmt(r.scaled_err), _fmt(r.profit),
                ";".join(r.selected_features),
            ])


def write_timings(records: Iterable[ForecastRecord], path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["dataset", "model", "origin", "seconds"])
        for r in records:
            writer.writerow([r.dataset_id, r.model_id, r.origin, _fmt(r.compute_seconds)])


def read_records(records_path: Path, timings_path: Path | None = None) -> list[ForecastRecord]:
    """Rebuild records (optionally with timings) from report files."""
    timings: dict[tuple[str, str, int], float] = {}
    if timings_path is not None:
        with Path(timings_path).open(newline="") as handle:
            reader = csv.DictReader(handle)
            for row in reader:
                timings[(row["dataset"], row["model"], int(row["origin"]))] = float(
                    row["seconds"]
                )
    records = []
    with Path(records_path).open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or tuple(reader.fieldnames) != _RECORD_FIELDS:
            raise ParseError(
                f"{records_path}: expected header {','.join(_RECORD_FIELDS)}"
            )
        for line, row in enumerate(reader, start=2):
            try:
                key = (row["dataset"], row["model"], int(row["origin"]))
                records.append(ForecastRecord(
                    dataset_id=key[0],
                    model_id=key[1],
                    origin=key[2],
                    forecast=float(row["forecast"]),
                    actual=float(row["actual"]),
                    compute_seconds=timings.get(key, 0.0),
                    selected_features=tuple(f for f in row["features"].split(";") if f),
                    abs_pe=float(row["abs_pe"]),
                    sq_err=float(row["sq_err"]),
                    scaled_err=float(row["scaled_err"]),
                    profit=float(row["profit"]),
                ))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad record row ({exc})", line) from None
    return records


@dataclass(frozen=True)
class ReportBundle:
    out_dir: Path
    records: Path
    timings: Path | None
    summary: Path
    friedman: Path
    nemenyi: dict[str, Path]
    wilcoxon: Path
    features: Path | None
    metrics: Path | None
    tuning: Path | None
    charts: tuple[Path, ...]


@dataclass(frozen=True)
class CriterionStats:
    rank: RankMatrix
    friedman: FriedmanResult
    nemenyi: NemenyiResult


def analyze(records: Sequence[ForecastRecord], criteria: Sequence[str] = CRITERIA,
            alpha: float = 0.05) -> dict[str, CriterionStats]:
    """Rank matrix, Friedman and Nemenyi results per criterion."""
    out = {}
    for criterion in criteria:
        rm = rank_matrix(records, criterion)
        out[criterion] = CriterionStats(
            rank=rm, friedman=friedman(rm), nemenyi=nemenyi(rm, alpha)
        )
    return out


def _write_summary(stats: dict[str, CriterionStats], path: Path) -> None:
    """Per-model average ranks and p-values against the best model, one
    criterion pair of columns at a time (the benchmark-table layout)."""
    criteria = list(stats)
    models = stats[criteria[0]].rank.models
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        header = ["model"]
        for c in criteria:
            header += [f"rank_{c}", f"p_best_{c}"]
        writer.writerow(header)
        p_best = {c: stats[c].nemenyi.p_versus_best() for c in criteria}
        for i, model in enumerate(models):
            row = [model]
            for c in criteria:
                row.append(_fmt(stats[c].rank.average_ranks[i]))
                row.append(_fmt(p_best[c][i]))
            writer.writerow(row)


def _write_friedman(stats: dict[str, CriterionStats], path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["criterion", "n_instances", "n_models", "chi2", "df", "p_value",
             "dropped_rows", "nemenyi_cd"]
        )
        for criterion, cs in stats.items():
            fr = cs.friedman
            writer.writerow([
                criterion, fr.n_instances, fr.n_models, _fmt(fr.statistic), fr.df,
                _fmt(fr.p_value), cs.rank.dropped_rows, _fmt(cs.nemenyi.cd),
            ])


def _write_nemenyi(result: NemenyiResult, path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["model", *result.models])
        for i, model in enumerate(result.models):
            writer.writerow([model] + [_fmt(v) for v in result.p_values[i]])


def _write_wilcoxon(contrasts: Iterable[CategoryContrast], path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["partition", "criterion", "p_value", "better", "mean_rank_in",
             "mean_rank_out", "n_instances", "all_zero"]
        )
        for c in contrasts:
            writer.writerow([
                c.partition, c.criterion, _fmt(c.p_value), c.better,
                _fmt(c.mean_rank_in), _fmt(c.mean_rank_out), c.n_instances,
                int(c.all_zero),
            ])


def emit_chart(stats: dict[str, CriterionStats], path: Path) -> Path:
    """Rank-comparison chart: criteria on the x axis, one line per model,
    lower (better) ranks plotted on top."""
    criteria = list(stats)
    models = stats[criteria[0]].rank.models
    if len(models) < 2:
        raise TooFewModels("a rank comparison needs at least 2 models")
    fig, ax = plt.subplots(figsize=(1.9 + 1.6 * len(criteria), 0.45 * len(models) + 2.2))
    x = np.arange(len(criteria))
    ranks = np.array([stats[c].rank.average_ranks for c in criteria])  # criteria x models
    order = np.argsort(ranks[0])
    cmap = plt.get_cmap("tab20")
    for pos, j in enumerate(order):
        ax.plot(x, ranks[:, j], marker="o", markersize=3.5,
                color=cmap(pos % 20), linewidth=1.4, label=models[j])
    ax.set_xticks(x)
    ax.set_xticklabels(criteria)
    ax.invert_yaxis()
    ax.set_ylabel("average rank (1 = best)")
    ax.grid(True, axis="y", linewidth=0.4, alpha=0.5)
    ax.legend(loc="center left", bbox_to_anchor=(1.01, 0.5), fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def emit_criterion_chart(cs: CriterionStats, path: Path) -> Path:
    """Average ranks for one criterion as horizontal bars with the
    Nemenyi critical distance marked from the best model."""
    rm = cs.rank
    order = np.argsort(rm.average_ranks)
    names = [rm.models[i] for i in order]
    values = rm.average_ranks[order]
    fig, ax = plt.subplots(figsize=(7.0, 0.38 * len(names) + 1.8))
    ax.barh(np.arange(len(names)), values, color="#4878a8", height=0.6)
    best = values[0]
    ax.axvline(best + cs.nemenyi.cd, color="#b04030", linewidth=1.2, linestyle="--",
               label=f"best + CD ({cs.nemenyi.cd:.2f})")
    ax.set_yticks(np.arange(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel(f"average rank by {rm.criterion} (N={rm.n_instances})")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def write_report(
    records: Sequence[ForecastRecord],
    out_dir: str | Path,
    result: RunResult | None = None,
    criteria: Sequence[str] = CRITERIA,
    alpha: float = 0.05,
    charts: bool = True,
) -> ReportBundle:
    """Write the full report bundle for a record set.

    When ``result`` is given (a fresh run), the records, timings, tuning
    and feature-selection logs are written too; a bare record set (the
    re-ranking path) only re-emits the statistics and charts.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = sorted(records, key=lambda r: (r.dataset_id, r.model_id, r.origin))

    records_path = out / "records.csv"
    write_records(records, records_path)
    timings_path = None
    metrics_path = None
    features_path = None
    tuning_path = None
    if result is not None:
        timings_path = out / "timings.csv"
        write_timings(records, timings_path)
        metrics_path = out / "metrics.csv"
        with metrics_path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["dataset", "model", "n_records", "mape", "rmse", "mase",
                 "total_profit", "total_seconds"]
            )
            for ds_id, model_id, s in result.summaries:
                writer.writerow([
                    ds_id, model_id, s.n_records, _fmt(s.mape), _fmt(s.rmse),
                    _fmt(s.mase), _fmt(s.total_profit), _fmt(s.total_seconds),
                ])
        features_path = out / "features.csv"
        with features_path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["dataset", "model", "origin", "prefix_size", "profit", "features"])
            for s in result.selections:
                writer.writerow([
                    s.dataset_id, s.model_id, s.origin, s.prefix_size,
                    _fmt(s.profit), ";".join(s.features),
                ])
        tuning_path = out / "tuning.csv"
        with tuning_path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["dataset", "model", "n_grid_points", "profit", "params"])
            for t in result.tuning:
                writer.writerow([
                    t.dataset_id, t.model_id, t.n_grid_points, _fmt(t.profit),
                    ";".join(f"{k}={v}" for k, v in t.params),
                ])
        failures_path = out / "failures.csv"
        with failures_path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["dataset", "model", "origin", "stage", "message"])
            for f in result.failures:
                writer.writerow([f.dataset_id, f.model_id, f.origin, f.stage, f.message])

    stats = analyze(records, criteria, alpha)
    summary_path = out / "summary.csv"
    _write_summary(stats, summary_path)
    friedman_path = out / "friedman.csv"
    _write_friedman(stats, friedman_path)
    nemenyi_paths = {}
    for criterion, cs in stats.items():
        p = out / f"nemenyi_{criterion}.csv"
        _write_nemenyi(cs.nemenyi, p)
        nemenyi_paths[criterion] = p

    contrasts = []
    for partition in ("variables", "seasonal", "ml"):
        for criterion in criteria:
            try:
                contrasts.append(category_contrast(records, partition, criterion))
            except Exception:
                continue  # partition empty on one side for this roster
    wilcoxon_path = out / "wilcoxon.csv"
    _write_wilcoxon(contrasts, wilcoxon_path)

    chart_paths: list[Path] = []
    if charts:
        chart_paths.append(emit_chart(stats, out / "rank_comparison.svg"))
        for criterion, cs in stats.items():
            chart_paths.append(emit_criterion_chart(cs, out / f"ranks_{criterion}.svg"))

    return ReportBundle(
        out_dir=out,
        records=records_path,
        timings=timings_path,
        summary=summary_path,
        friedman=friedman_path,
        nemenyi=nemenyi_paths,
        wilcoxon=wilcoxon_path,
        features=features_path,
        metrics=metrics_path,
        tuning=tuning_path,
        charts=tuple(chart_paths),
    )
