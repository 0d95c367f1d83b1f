# qosm/learners/__init__.py
from typing import Sequence

from ..models import Algorithm, LearnerConfig
from ..trace import SeriesSource
from .ann import AnnModel, fit_ann, fit_ann_fixed
from .armax import ArmaxModel, fit_armax, fit_armax_fixed
from .base import (FeatureLayout, TrainedModel, TrainingSet, build_training_set,
                   feature_row, layout_for)
from .tree import TreeModel, fit_rt

__all__ = [
    "AnnModel", "ArmaxModel", "TreeModel", "TrainedModel", "TrainingSet", "FeatureLayout",
    "build_training_set", "feature_row", "layout_for", "fit_model", "refit_like", "predict",
    "fit_armax", "fit_ann", "fit_rt", "load_model",
]


def fit_model(config: LearnerConfig, history: SeriesSource, seed: int = 0) -> TrainedModel:
    """
    Structure search plus a final fit on every usable row of history:
    ARMAX climbs q, the ANN climbs its hidden count, the tree just grows.
    """
    if config.algorithm == Algorithm.armax:
        return fit_armax(history, config)
    data = build_training_set(history, layout_for(config, history.columns))
    if config.algorithm == Algorithm.ann:
        return fit_ann(data, config, seed)
    return fit_rt(data, config)


def refit_like(model: TrainedModel, data: TrainingSet, config: LearnerConfig, seed: int = 0) -> TrainedModel:
    """Fits `data` with the structure already chosen for `model`."""
    if isinstance(model, ArmaxModel):
        return fit_armax_fixed(data, config)
    if isinstance(model, AnnModel):
        return fit_ann_fixed(data, config, model.hidden, seed)
    return fit_rt(data, config)


def predict(model: TrainedModel, x: Sequence[float]) -> float:
    return model.predict(x)


load_model = TrainedModel.from_dump
