"""Feature selection: mutual-information mRMR filter plus the
profit-maximizing forward wrapper.

The filter greedily ranks driver columns by relevance to the sales series
minus their average redundancy against already-ranked columns. The
wrapper then walks the ranking prefixes, forecasting the validation year
one month at a time, and keeps the prefix with the highest total expected
profit (smallest prefix on ties).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, ExogenousTable, TimeSeries
from .errors import LengthMismatch, ProfitbenchError, TooFewFeatures, TooShort
from .metrics import ProfitParams
from .models import ForecasterSpec
from .windows import DiffCache, sequential_validation_profit

MAX_BINS = 10
MIN_LENGTH = 20


@dataclass(frozen=True)
class MIEstimate:
    """Plug-in mutual information (nats) on equal-frequency bins."""

    value: float
    bins_x: int
    bins_y: int


@dataclass(frozen=True)
class FeatureRanking:
    names: tuple[str, ...]
    scores: tuple[float, ...]  # relevance-minus-redundancy at selection time

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class WrapperResult:
    chosen_size: int
    features: tuple[str, ...]
    profits: tuple[float, ...]  # one total per ranking prefix


def _discretize(x: np.ndarray, n_bins: int) -> tuple[np.ndarray, int]:
    """Equal-frequency bin codes; duplicate quantile edges collapse."""
    edges = np.unique(np.quantile(x, np.arange(1, n_bins) / n_bins))
    codes = np.searchsorted(edges, x, side="right")
    return codes, len(edges) + 1


def mutual_information(x: np.ndarray, y: np.ndarray) -> MIEstimate:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise LengthMismatch(f"column lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < MIN_LENGTH:
        raise TooShort(f"mutual information needs at least {MIN_LENGTH} rows, got {n}")
    n_bins = min(int(np.sqrt(n)), MAX_BINS)
    cx, bx = _discretize(x, n_bins)
    cy, by = _discretize(y, n_bins)
    joint = np.zeros((bx, by))
    np.add.at(joint, (cx, cy), 1.0)
    joint /= n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    value = float(np.sum(joint[nz] * np.log(joint[nz] / np.outer(px, py)[nz])))
    return MIEstimate(value=max(0.0, value), bins_x=bx, bins_y=by)


def _as_matrix(exog) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(exog, ExogenousTable):
        return exog.values, exog.names
    raise TypeError("mrmr_rank expects an ExogenousTable")


def mrmr_rank(exog: ExogenousTable, target: TimeSeries | np.ndarray, k: int) -> FeatureRanking:
    """Greedy incremental ranking: each pick maximizes relevance to the
    target minus mean redundancy against the already-selected set."""
    matrix, names = _as_matrix(exog)
    values = target.values if isinstance(target, TimeSeries) else np.asarray(target, dtype=float)
    if matrix.shape[0] != len(values):
        raise LengthMismatch(
            f"exog has {matrix.shape[0]} rows but the target has {len(values)}"
        )
    n_feat = matrix.shape[1]
    if n_feat < k:
        raise TooFewFeatures(f"need {k} candidate columns, found {n_feat}")
    relevance = np.array(
        [mutual_information(matrix[:, j], values).value for j in range(n_feat)]
    )
    pair_cache: dict[tuple[int, int], float] = {}

    def pair_mi(a: int, b: int) -> float:
        key = (min(a, b), max(a, b))
        if key not in pair_cache:
            pair_cache[key] = mutual_information(matrix[:, key[0]], matrix[:, key[1]]).value
        return pair_cache[key]

    selected: list[int] = []
    scores: list[float] = []
    remaining = list(range(n_feat))
    while len(selected) < k:
        best_j, best_score = None, -np.inf
        for j in remaining:
            if selected:
                redundancy = np.mean([pair_mi(j, s) for s in selected])
            else:
                redundancy = 0.0
            score = relevance[j] - redundancy
            if score > best_score + 1e-12:
                best_j, best_score = j, score
        selected.append(best_j)
        scores.append(best_score)
        remaining.remove(best_j)
    return FeatureRanking(
        names=tuple(names[j] for j in selected),
        scores=tuple(float(s) for s in scores),
    )


def default_top_k(n_candidates: int) -> int:
    """10 for small public-style pools, 15 for wide industry-style ones."""
    return 10 if n_candidates <= 12 else 15


def wrapper_select(
    ranking: FeatureRanking,
    spec: ForecasterSpec,
    dataset: Dataset,
    val_start: int,
    val_len: int,
    params: ProfitParams,
    master_seed: int,
    diff_cache: DiffCache | None = None,
) -> WrapperResult:
    """Forward incremental wrapper over the ranking prefixes.

    Prefix i is scored by val_len sequential one-step forecasts (each
    validated month joins the training set before the next step); the
    training/validation split resets between prefixes. A prefix whose fit
    fails scores -inf and is skipped.
    """
    if diff_cache is None:
        diff_cache = DiffCache()
    profits: list[float] = []
    for i in range(1, len(ranking) + 1):
        features = ranking.names[:i]
        try:
            total = sequential_validation_profit(
                spec, dataset, val_start, val_len, features, params, master_seed, diff_cache
            )
        except ProfitbenchError:
            total = -np.inf
        profits.append(total)
    best = int(np.argmax(profits))  # argmax keeps the smallest index on ties
    return WrapperResult(
        chosen_size=best + 1,
        features=ranking.names[: best + 1],
        profits=tuple(profits),
    )
