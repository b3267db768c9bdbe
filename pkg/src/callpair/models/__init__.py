"""Classifiers behind one fit/predict/evaluate interface."""

from ._backend import BACKEND
from .config import KINDS, LEARNED_KINDS, config_from_dict, default_config
from .core import (
    ClassifierModel,
    RunSummary,
    evaluate,
    fit,
    load_model,
    predict,
    predict_proba,
    repeat_runs,
    save_model,
    select_threshold,
)
from .rules import RuleSet

__all__ = [
    "BACKEND",
    "KINDS",
    "LEARNED_KINDS",
    "ClassifierModel",
    "RuleSet",
    "RunSummary",
    "config_from_dict",
    "default_config",
    "evaluate",
    "fit",
    "load_model",
    "predict",
    "predict_proba",
    "repeat_runs",
    "save_model",
    "select_threshold",
]
