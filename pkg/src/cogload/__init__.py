"""Offline cognitive-load modeling from pupil, EDA, and heart-rate streams.

Pipeline: clean raw recordings, cut fixed windows before each self-report,
extract interpretable features, train and select classifiers over window and
hyperparameter grids, and compare unimodal against multimodal models with
paired statistics. A synthetic cohort generator with planted effects closes
the loop for end-to-end validation.
"""
from . import errors
from .classifiers import (
    KINDS,
    ClassifierSpec,
    TrainedModel,
    fit,
    gini_importance,
    load_model,
    predict,
    save_model,
)
from .config import PipelineConfig, config_hash, load_config
from .features import CANONICAL_ORDER, SCHEMAS, build_feature_vector, schema_features
from .labels import LEVELS, discretize, label_segments, score_questionnaire
from .preprocess import CleaningConfig, clean_session, design_butterworth
from .selection import (
    DEFAULT_WINDOWS,
    GridSpace,
    SplitConfig,
    extract_cohort,
    grid_search,
    kfold,
    split,
    window_sweep,
)
from .sensors import Session, SensorSeries, load_session, save_session, segment_windows
from .stats import accuracy, cochran_q, cohen_kappa, mcnemar, pairwise_mcnemar
from .synth import GeneratorParams, generate_cohort, generate_session, write_cohort

__version__ = "0.1.0"

__all__ = [
    "KINDS", "ClassifierSpec", "TrainedModel", "fit", "predict", "gini_importance",
    "save_model", "load_model",
    "PipelineConfig", "load_config", "config_hash",
    "CANONICAL_ORDER", "SCHEMAS", "build_feature_vector", "schema_features",
    "LEVELS", "discretize", "label_segments", "score_questionnaire",
    "CleaningConfig", "clean_session", "design_butterworth",
    "DEFAULT_WINDOWS", "GridSpace", "SplitConfig", "extract_cohort", "grid_search",
    "kfold", "split", "window_sweep",
    "Session", "SensorSeries", "load_session", "save_session", "segment_windows",
    "accuracy", "cochran_q", "cohen_kappa", "mcnemar", "pairwise_mcnemar",
    "GeneratorParams", "generate_cohort", "generate_session", "write_cohort",
    "errors",
    "__version__",
]
