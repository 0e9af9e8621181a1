"""Forecaster contract: specs, training slices, fitted-model interface."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..preprocess import DifferencingDecision

# model id -> (uses_variables, seasonal, ml)
MODEL_FLAGS: dict[str, tuple[bool, bool, bool]] = {
    "RW": (False, False, False),
    "SRW": (False, True, False),
    "HW": (False, True, False),
    "DM": (False, True, False),
    "SARIMA": (False, True, False),
    "SARIMAX": (True, True, False),
    "LRUni": (False, False, False),
    "LRMulti": (True, False, False),
    "KNNUni": (False, False, True),
    "KNNMulti": (True, False, True),
    "RpartUni": (False, False, True),
    "RpartMulti": (True, False, True),
    "MLPUni": (False, False, True),
    "MLPMulti": (True, False, True),
}

MODEL_IDS = tuple(MODEL_FLAGS)

# models whose design matrix is built from lag embedding
LAG_MODELS = frozenset(
    {"LRUni", "LRMulti", "KNNUni", "KNNMulti", "RpartUni", "RpartMulti", "MLPUni", "MLPMulti"}
)

_PARAM_BOUNDS: dict[str, dict[str, tuple[int, int]]] = {
    "SARIMA": {"p": (0, 5), "q": (0, 5), "P": (0, 5), "Q": (0, 5)},
    "SARIMAX": {"p": (0, 5), "q": (0, 5), "P": (0, 5), "Q": (0, 5)},
}


@dataclass(frozen=True)
class ForecasterSpec:
    """A model id plus its (validated) hyperparameter assignment."""

    model_id: str
    params: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.model_id not in MODEL_FLAGS:
            raise ValueError(f"unknown model id {self.model_id!r}")
        object.__setattr__(self, "params", tuple(sorted(dict(self.params).items())))
        p = dict(self.params)
        for name, (lo, hi) in _PARAM_BOUNDS.get(self.model_id, {}).items():
            if name in p and not lo <= p[name] <= hi:
                raise ValueError(f"{self.model_id}.{name}={p[name]} outside [{lo}, {hi}]")
        if self.model_id.startswith("KNN"):
            if "k" in p and not 2 <= p["k"] <= 5:
                raise ValueError(f"KNN neighbor count {p['k']} outside [2, 5]")
            if "weights" in p and p["weights"] not in ("uniform", "distance"):
                raise ValueError(f"unknown KNN weighting {p['weights']!r}")
        if self.model_id.startswith("MLP") and "hidden" in p:
            if not 1 <= p["hidden"] <= 10:
                raise ValueError(f"MLP hidden size {p['hidden']} outside [1, 10]")
        if self.model_id in LAG_MODELS and "lags" in p:
            if not 1 <= p["lags"] <= 7:
                raise ValueError(f"lag count {p['lags']} outside [1, 7]")

    def get(self, name: str, default: Any = None) -> Any:
        return dict(self.params).get(name, default)

    def as_dict(self) -> dict[str, Any]:
        return dict(self.params)

    def replace(self, **updates: Any) -> "ForecasterSpec":
        merged = {**dict(self.params), **updates}
        return ForecasterSpec(self.model_id, tuple(merged.items()))

    @property
    def uses_variables(self) -> bool:
        return MODEL_FLAGS[self.model_id][0]

    @property
    def seasonal(self) -> bool:
        return MODEL_FLAGS[self.model_id][1]

    @property
    def ml(self) -> bool:
        return MODEL_FLAGS[self.model_id][2]


def make_spec(model_id: str, **params: Any) -> ForecasterSpec:
    return ForecasterSpec(model_id, tuple(params.items()))


@dataclass(frozen=True)
class TrainSlice:
    """Everything a forecaster sees when fitting one expanding window.

    ``y`` holds the training values only; ``exog`` rows align with ``y``
    and ``exog_next`` is the (known) driver row of the month being
    forecast. ``diff`` carries the unit-root differencing decision for the
    window; models that handle trend and season internally ignore it.
    """

    y: np.ndarray
    months: np.ndarray  # month-of-year 1..12 per training index
    month_next: int
    exog: np.ndarray | None = None
    exog_next: np.ndarray | None = None
    feature_names: tuple[str, ...] = ()
    diff: DifferencingDecision = field(default_factory=lambda: DifferencingDecision(0, 0))
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "months", np.asarray(self.months, dtype=int))
        if len(self.months) != len(self.y):
            raise ValueError("months must align with y")
        if self.exog is not None:
            object.__setattr__(self, "exog", np.asarray(self.exog, dtype=float))
            if self.exog.shape[0] != len(self.y):
                raise ValueError("exog rows must align with y")


class FittedModel:
    """A model ready to emit exactly one next-month forecast.

    Subclasses store whatever state they need (including a ``model_id``);
    ``_predict`` returns the raw forecast on the original sales scale,
    which is floored at zero.
    """

    def _predict(self) -> float:
        raise NotImplementedError

    def forecast_one(self) -> float:
        value = float(self._predict())
        if not np.isfinite(value):
            from ..errors import NumericalFailure

            raise NumericalFailure(f"{self.model_id} produced a non-finite forecast")
        return max(0.0, value)
