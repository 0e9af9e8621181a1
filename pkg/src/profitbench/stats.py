"""Nonparametric comparison machinery: per-forecast rank matrices, the
Friedman chi-squared test, Nemenyi post-hoc pairwise comparisons, the
Wilcoxon signed-rank test, and model-category contrasts.

Nemenyi critical distances use studentized-range quantiles (infinite
degrees of freedom) from an embedded Monte-Carlo table; pairwise p-values
come from the exact single-integral form of the range distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate
from scipy import stats as spstats
from scipy.special import ndtr

from .core import ForecastRecord
from .errors import (
    DegenerateMatrix,
    EmptyCategory,
    NoCompleteRows,
    TooShort,
)
from .models import MODEL_FLAGS

CRITERIA = ("mape", "rmse", "mase", "profit", "time")

# criteria where a higher per-record value is better (ranked descending)
_DESCENDING = frozenset({"profit"})


def record_criterion_value(record: ForecastRecord, criterion: str) -> float:
    if criterion == "mape":
        return record.abs_pe
    if criterion == "rmse":
        return record.sq_err
    if criterion == "mase":
        return record.scaled_err
    if criterion == "profit":
        return record.profit
    if criterion == "time":
        return record.compute_seconds
    raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ascending ranks 1..k with ties replaced by their average."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RankMatrix:
    """Within-instance ranks (lower = better) of all competing models."""

    models: tuple[str, ...]
    ranks: np.ndarray  # instances x models
    criterion: str
    dropped_rows: int
    instances: tuple[tuple[str, int], ...]  # (dataset, origin) per row

    @property
    def n_instances(self) -> int:
        return self.ranks.shape[0]

    @property
    def n_models(self) -> int:
        return self.ranks.shape[1]

    @property
    def average_ranks(self) -> np.ndarray:
        return self.ranks.mean(axis=0)


def rank_matrix(records: Iterable[ForecastRecord], criterion: str) -> RankMatrix:
    """Rank all models within every (dataset, origin) forecast instance.

    Profit ranks descending (more is better); every other criterion ranks
    ascending. Instances missing any model are dropped listwise.
    """
    records = list(records)
    models = tuple(sorted({r.model_id for r in records}))
    cells: dict[tuple[str, int], dict[str, float]] = {}
    for r in records:
        cells.setdefault((r.dataset_id, r.origin), {})[r.model_id] = record_criterion_value(
            r, criterion
        )
    rows = []
    instances = []
    dropped = 0
    for key in sorted(cells):
        row = cells[key]
        if len(row) != len(models):
            dropped += 1
            continue
        values = np.array([row[m] for m in models])
        if criterion in _DESCENDING:
            values = -values
        rows.append(_average_ranks(values))
        instances.append(key)
    if not rows:
        raise NoCompleteRows(f"no forecast instance covers all {len(models)} models")
    return RankMatrix(
        models=models,
        ranks=np.array(rows),
        criterion=criterion,
        dropped_rows=dropped,
        instances=tuple(instances),
    )


# ---------------------------------------------------------------------------
# Friedman test


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    df: int
    p_value: float
    n_instances: int
    n_models: int


def friedman(rm: RankMatrix) -> FriedmanResult:
    """Friedman chi-squared over the average ranks."""
    n, k = rm.ranks.shape
    if n < 2 or k < 2:
        raise DegenerateMatrix(f"Friedman needs N >= 2 and k >= 2, got N={n}, k={k}")
    avg = rm.average_ranks
    statistic = 12.0 * n / (k * (k + 1)) * (np.sum(avg**2) - k * (k + 1) ** 2 / 4.0)
    statistic = max(0.0, float(statistic))
    p_value = float(spstats.chi2.sf(statistic, k - 1))
    return FriedmanResult(
        statistic=statistic, df=k - 1, p_value=p_value, n_instances=n, n_models=k
    )


# ---------------------------------------------------------------------------
# Studentized range (infinite degrees of freedom)

# 0.90/0.95/0.99 quantiles of the range of k iid standard normals,
# generated by generate_q_table(draws=2_000_000, seed 20240403).
Q_TABLE: dict[float, dict[int, float]] = {
    0.10: {2: 2.3266, 3: 2.9049, 4: 3.2404, 5: 3.4777, 6: 3.6622, 7: 3.8078,
           8: 3.9324, 9: 4.0368, 10: 4.1296, 11: 4.2111, 12: 4.2850, 13: 4.3517,
           14: 4.4116, 15: 4.4683, 16: 4.5203, 17: 4.5679, 18: 4.6117, 19: 4.6565,
           20: 4.6951, 21: 4.7290, 22: 4.7666, 23: 4.7987, 24: 4.8312, 25: 4.8640,
           26: 4.8910, 27: 4.9210, 28: 4.9471, 29: 4.9732, 30: 4.9974},
    0.05: {2: 2.7744, 3: 3.3187, 4: 3.6351, 5: 3.8579, 6: 4.0304, 7: 4.1702,
           8: 4.2873, 9: 4.3887, 10: 4.4740, 11: 4.5514, 12: 4.6216, 13: 4.6847,
           14: 4.7427, 15: 4.7958, 16: 4.8452, 17: 4.8901, 18: 4.9314, 19: 4.9773,
           20: 5.0131, 21: 5.0449, 22: 5.0821, 23: 5.1123, 24: 5.1417, 25: 5.1730,
           26: 5.1998, 27: 5.2266, 28: 5.2530, 29: 5.2789, 30: 5.3022},
    0.01: {2: 3.6413, 3: 4.1223, 4: 4.4034, 5: 4.6044, 6: 4.7569, 7: 4.8875,
           8: 4.9895, 9: 5.0799, 10: 5.1580, 11: 5.2270, 12: 5.2872, 13: 5.3477,
           14: 5.4036, 15: 5.4485, 16: 5.4958, 17: 5.5308, 18: 5.5669, 19: 5.6152,
           20: 5.6442, 21: 5.6757, 22: 5.7116, 23: 5.7356, 24: 5.7679, 25: 5.7942,
           26: 5.8210, 27: 5.8450, 28: 5.8684, 29: 5.8876, 30: 5.9146},
}


def studentized_range_cdf(q: float, k: int) -> float:
    """P(range of k iid standard normals <= q), by quadrature."""
    if q <= 0.0:
        return 0.0

    def integrand(z):
        return np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi) * (ndtr(z) - ndtr(z - q)) ** (k - 1)

    value, _ = integrate.quad(integrand, -8.0 - q, 8.0 + q, limit=200)
    return float(min(1.0, k * value))


def studentized_range_sf(q: float, k: int) -> float:
    return max(0.0, 1.0 - studentized_range_cdf(q, k))


def studentized_range_q(k: int, alpha: float = 0.05) -> float:
    """Upper-alpha quantile from the embedded Monte-Carlo table."""
    try:
        return Q_TABLE[alpha][k]
    except KeyError:
        raise ValueError(
            f"no tabulated studentized-range quantile for k={k}, alpha={alpha}; "
            f"available alphas {sorted(Q_TABLE)} and k 2..{max(Q_TABLE[0.05], default=0)}"
        ) from None


def generate_q_table(
    ks: Sequence[int] = tuple(range(2, 31)),
    quantiles: Sequence[float] = (0.90, 0.95, 0.99),
    draws: int = 2_000_000,
    seed: int = 20240403,
) -> dict[float, dict[int, float]]:
    """Monte-Carlo quantiles of the k-sample standard-normal range."""
    rng = np.random.default_rng(seed)
    table: dict[float, dict[int, float]] = {round(1 - p, 10): {} for p in quantiles}
    chunk = 200_000
    for k in ks:
        ranges = np.empty(draws)
        done = 0
        while done < draws:
            size = min(chunk, draws - done)
            z = rng.standard_normal((size, k))
            ranges[done : done + size] = z.max(axis=1) - z.min(axis=1)
            done += size
        for p in quantiles:
            table[round(1 - p, 10)][k] = float(np.quantile(ranges, p))
    return table


# ---------------------------------------------------------------------------
# Nemenyi post-hoc test


@dataclass(frozen=True)
class NemenyiResult:
    cd: float
    alpha: float
    p_values: np.ndarray  # symmetric pairwise matrix, unit diagonal
    models: tuple[str, ...]
    average_ranks: np.ndarray

    def p_versus_best(self) -> np.ndarray:
        """Each model's p-value against the best-ranked model."""
        best = int(np.argmin(self.average_ranks))
        return self.p_values[:, best]


def nemenyi(rm: RankMatrix, alpha: float = 0.05) -> NemenyiResult:
    """Critical distance and pairwise p-values over average ranks."""
    n, k = rm.ranks.shape
    if n < 2 or k < 2:
        raise DegenerateMatrix(f"Nemenyi needs N >= 2 and k >= 2, got N={n}, k={k}")
    scale = np.sqrt(k * (k + 1) / (6.0 * n))
    cd = studentized_range_q(k, alpha) / np.sqrt(2.0) * scale
    avg = rm.average_ranks
    p = np.ones((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            q_obs = abs(avg[i] - avg[j]) / scale * np.sqrt(2.0)
            p[i, j] = p[j, i] = studentized_range_sf(q_obs, k)
    return NemenyiResult(
        cd=float(cd), alpha=alpha, p_values=p, models=rm.models, average_ranks=avg
    )


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    statistic: float  # rank sum of positive differences
    n: int  # pairs after dropping zero differences
    all_zero: bool = False


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """Two-sided test via the normal approximation with tie and
    continuity corrections. All-zero differences return p = 1, flagged."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b):
        raise ValueError(f"paired samples differ in length: {len(a)} vs {len(b)}")
    d = a - b
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(p_value=1.0, statistic=0.0, n=0, all_zero=True)
    if n < 10:
        raise TooShort(f"need at least 10 nonzero differences, got {n}")
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(np.abs(d), return_counts=True)
    var -= float(np.sum(counts**3 - counts)) / 48.0
    if var <= 0.0:
        return WilcoxonResult(p_value=1.0, statistic=w_plus, n=n)
    shift = w_plus - mean
    corrected = shift - 0.5 * np.sign(shift)
    z = corrected / np.sqrt(var)
    p = float(min(1.0, 2.0 * ndtr(-abs(z))))
    return WilcoxonResult(p_value=max(p, np.nextafter(0.0, 1.0)), statistic=w_plus, n=n)


# ---------------------------------------------------------------------------
# Category contrasts


_PARTITIONS = {
    "variables": 0,
    "seasonal": 1,
    "ml": 2,
}


@dataclass(frozen=True)
class CategoryContrast:
    partition: str
    criterion: str
    p_value: float
    better: str  # which side has the lower (better) mean rank
    mean_rank_in: float
    mean_rank_out: float
    n_instances: int
    all_zero: bool = False


def category_contrast(
    records: Iterable[ForecastRecord], partition: str, criterion: str = "mape"
) -> CategoryContrast:
    """Wilcoxon over per-instance average ranks of a two-way roster split."""
    if partition not in _PARTITIONS:
        raise ValueError(f"unknown partition {partition!r}; expected one of {sorted(_PARTITIONS)}")
    flag = _PARTITIONS[partition]
    rm = rank_matrix(records, criterion)
    in_cat = [i for i, m in enumerate(rm.models) if MODEL_FLAGS[m][flag]]
    out_cat = [i for i, m in enumerate(rm.models) if not MODEL_FLAGS[m][flag]]
    if not in_cat or not out_cat:
        raise EmptyCategory(
            f"partition {partition!r} leaves an empty side for roster {rm.models}"
        )
    avg_in = rm.ranks[:, in_cat].mean(axis=1)
    avg_out = rm.ranks[:, out_cat].mean(axis=1)
    res = wilcoxon_signed_rank(avg_in, avg_out)
    better = partition if avg_in.mean() < avg_out.mean() else f"non-{partition}"
    return CategoryContrast(
        partition=partition,
        criterion=criterion,
        p_value=res.p_value,
        better=better,
        mean_rank_in=float(avg_in.mean()),
        mean_rank_out=float(avg_out.mean()),
        n_instances=rm.n_instances,
        all_zero=res.all_zero,
    )
