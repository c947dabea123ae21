"""Classifier families with uniform fit/predict contracts."""
from .base import (
    KINDS,
    ClassifierSpec,
    ImportanceReport,
    Standardizer,
    TrainedModel,
    dump_model_json,
    fit,
    gini_importance,
    load_model,
    model_from_doc,
    model_to_doc,
    predict,
    save_model,
    standardize_apply,
    standardize_fit,
)

__all__ = [
    "KINDS",
    "ClassifierSpec",
    "ImportanceReport",
    "Standardizer",
    "TrainedModel",
    "dump_model_json",
    "fit",
    "gini_importance",
    "load_model",
    "model_from_doc",
    "model_to_doc",
    "predict",
    "save_model",
    "standardize_apply",
    "standardize_fit",
]
