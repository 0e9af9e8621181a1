"""Random walk and seasonal random walk forecasters."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SeriesTooShort
from .base import FittedModel, ForecasterSpec, TrainSlice


@dataclass
class NaiveModel(FittedModel):
    model_id: str
    value: float

    def _predict(self) -> float:
        return self.value


def fit_rw(spec: ForecasterSpec, train: TrainSlice) -> NaiveModel:
    if len(train.y) < 1:
        raise SeriesTooShort(1, 0)
    return NaiveModel("RW", float(train.y[-1]))


def fit_srw(spec: ForecasterSpec, train: TrainSlice) -> NaiveModel:
    if len(train.y) < 12:
        raise SeriesTooShort(12, len(train.y))
    return NaiveModel("SRW", float(train.y[-12]))
