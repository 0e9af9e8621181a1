"""Forecaster roster behind a single fit/forecast contract.

Univariate naive and time-series models consume the raw training values;
the lag-based models (linear regression, KNN, tree, MLP) share one
pipeline that differences per the window's unit-root decision, scales to
the training range, lag-embeds, and attaches month dummies for seasonal
windows. Every forecast comes back on the original sales scale, floored
at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import MissingExogForecastRow
from ..preprocess import (
    DifferencingSpec,
    ScalerState,
    difference,
    integrate_next,
    lag_embed,
    minmax_apply,
    minmax_fit,
    minmax_invert,
)
from .base import (
    LAG_MODELS,
    MODEL_FLAGS,
    MODEL_IDS,
    FittedModel,
    ForecasterSpec,
    TrainSlice,
    make_spec,
)
from .decomposition import fit_dm
from .holt_winters import fit_hw
from .mlp import mlp_fit
from .naive import fit_rw, fit_srw
from .neighbors import knn_fit
from .regression import ols_fit
from .sarima import fit_sarima, fit_sarimax
from .tree import tree_fit

__all__ = [
    "MODEL_FLAGS",
    "MODEL_IDS",
    "LAG_MODELS",
    "FittedModel",
    "ForecasterSpec",
    "TrainSlice",
    "make_spec",
    "fit",
    "forecast_one",
    "default_lags",
]

DEFAULT_LAGS = 3


def default_lags(spec: ForecasterSpec) -> int:
    return int(spec.get("lags", DEFAULT_LAGS))


@dataclass
class LagModel(FittedModel):
    model_id: str
    predictor: object
    scaler_y: ScalerState
    w: np.ndarray = field(repr=False, default=None)
    dspec: DifferencingSpec = field(repr=False, default=None)
    query: np.ndarray = field(repr=False, default=None)
    columns: tuple[str, ...] = ()

    def _predict(self) -> float:
        pred_norm = self.predictor.predict(self.query)
        w_next = float(minmax_invert(self.scaler_y, np.array([pred_norm]))[0])
        return integrate_next(self.w, w_next, self.dspec)


def _fit_lag_model(spec: ForecasterSpec, train: TrainSlice) -> LagModel:
    d, D = train.diff.d, train.diff.D
    w, dspec = difference(train.y, d, D)
    scaler_y = minmax_fit(w)
    wn = minmax_apply(scaler_y, w)

    exog_n = exog_next_n = None
    names: tuple[str, ...] = ()
    if spec.uses_variables:
        if train.exog is None or train.exog.shape[1] == 0:
            raise MissingExogForecastRow(
                f"{spec.model_id} needs exogenous columns in the training slice"
            )
        if train.exog_next is None:
            raise MissingExogForecastRow(
                "exogenous values for the forecast month are missing"
            )
        scaler_x = minmax_fit(train.exog)
        exog_n = minmax_apply(scaler_x, train.exog)[dspec.lost :]
        exog_next_n = minmax_apply(scaler_x, np.asarray(train.exog_next, dtype=float))
        names = train.feature_names or tuple(f"x{j}" for j in range(train.exog.shape[1]))

    lm = lag_embed(
        wn,
        default_lags(spec),
        exog=exog_n,
        exog_next=exog_next_n,
        exog_names=names,
        months=train.months[dspec.lost :],
        month_next=train.month_next,
        dummies=train.diff.seasonal,
    )

    family = spec.model_id[:-len("Uni")] if spec.model_id.endswith("Uni") else spec.model_id[:-len("Multi")]
    if family == "LR":
        predictor = ols_fit(lm.X, lm.targets)
    elif family == "KNN":
        predictor = knn_fit(
            lm.X, lm.targets, k=int(spec.get("k", 3)), weights=spec.get("weights", "uniform")
        )
    elif family == "Rpart":
        predictor = tree_fit(
            lm.X, lm.targets,
            max_depth=int(spec.get("max_depth", 4)),
            min_leaf=int(spec.get("min_leaf", 5)),
        )
    elif family == "MLP":
        predictor = mlp_fit(lm.X, lm.targets, hidden=int(spec.get("hidden", 5)), seed=train.seed)
    else:
        raise ValueError(f"unknown lag-model family {family!r}")

    return LagModel(
        model_id=spec.model_id,
        predictor=predictor,
        scaler_y=scaler_y,
        w=w,
        dspec=dspec,
        query=lm.query,
        columns=lm.columns,
    )


_FITTERS = {
    "RW": fit_rw,
    "SRW": fit_srw,
    "HW": fit_hw,
    "DM": fit_dm,
    "SARIMA": fit_sarima,
    "SARIMAX": fit_sarimax,
}


def fit(spec: ForecasterSpec, train: TrainSlice) -> FittedModel:
    """Fit ``spec`` on one training slice, ready for a single forecast."""
    if spec.model_id in _FITTERS:
        return _FITTERS[spec.model_id](spec, train)
    if spec.model_id in LAG_MODELS:
        return _fit_lag_model(spec, train)
    raise ValueError(f"unknown model id {spec.model_id!r}")


def forecast_one(model: FittedModel) -> float:
    """The model's single next-month forecast on the sales scale."""
    return model.forecast_one()
