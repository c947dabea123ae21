"""Shared classifier contracts: specs, standardization, fit/predict
dispatch, Gini importance, and JSON model persistence.

Internally every family works on a name-canonical column order (features
sorted by name), so fitting on a column-permuted matrix with the matching
schema permutation produces bit-identical parameters and predictions. Class
codes follow the fixed level order, which is also the tie-break order.

RF trees and one-vs-rest submodels draw independent seeded generators, so
they could be fit concurrently and merged deterministically; the serial loop
here keeps the same results.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import (
    DegenerateLabels,
    InvalidParams,
    NonFiniteInput,
    SchemaMismatch,
    WrongKind,
)
from ..features import FEATURE_GROUPS
from ..labels import LEVELS
from . import forest, naive_bayes, svm_rbf
from .linear import fit_logreg, fit_svm_linear, predict_logreg, predict_svm_linear
from .tree import Tree, grow_tree

KINDS = ("nb", "dt", "svm_linear", "svm_rbf", "logreg", "rf")

_DEFAULT_HYPERS = {
    "nb": {"alpha": 1.0, "n_bins": 10, "variant": "categorical"},
    "dt": {"criterion": "gini"},
    "svm_linear": {"C": 1.0, "kernel": "linear"},
    "svm_rbf": {"C": 1.0, "kernel": "rbf", "gamma_rule": "scale"},
    "logreg": {"C": 1.0, "penalty": "l2"},
    "rf": {"n_trees": 100, "criterion": "gini"},
}


def _check_hyper(kind: str, name: str, v) -> None:
    if name == "alpha" and not (isinstance(v, (int, float)) and v > 0):
        raise InvalidParams("alpha", f"must be positive, got {v!r}")
    if name == "n_bins" and not (isinstance(v, int) and v >= 2):
        raise InvalidParams("n_bins", f"must be an integer >= 2, got {v!r}")
    if name == "variant" and v not in ("categorical", "gaussian"):
        raise InvalidParams("variant", f"must be 'categorical' or 'gaussian', got {v!r}")
    if name == "criterion" and v not in ("gini", "entropy"):
        raise InvalidParams("criterion", f"must be 'gini' or 'entropy', got {v!r}")
    if name == "C" and not (isinstance(v, (int, float)) and v > 0):
        raise InvalidParams("C", f"must be positive, got {v!r}")
    if name == "penalty" and v != "l2":
        raise InvalidParams("penalty", f"only 'l2' is supported, got {v!r}")
    if name == "n_trees" and not (isinstance(v, int) and v >= 1):
        raise InvalidParams("n_trees", f"must be a positive integer, got {v!r}")
    if name == "gamma_rule" and v != "scale":
        raise InvalidParams("gamma_rule", f"only 'scale' is supported, got {v!r}")
    if name == "kernel":
        expected = "linear" if kind == "svm_linear" else "rbf"
        if v != expected:
            raise InvalidParams("kernel", f"kind {kind} requires kernel {expected!r}, got {v!r}")


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams("kind", f"must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise InvalidParams("seed", f"must be a non-negative integer, got {self.seed!r}")
        merged = dict(_DEFAULT_HYPERS[self.kind])
        for name, v in self.hyperparameters.items():
            if name not in merged:
                raise InvalidParams(name, f"unknown hyperparameter for kind {self.kind}")
            _check_hyper(self.kind, name, v)
            merged[name] = v
        object.__setattr__(self, "hyperparameters", merged)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-scoring on training statistics (sample SD); features
    with zero variance pass through untouched."""

    shift: np.ndarray
    scale: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - self.shift) / self.scale

    def invert(self, Z: np.ndarray) -> np.ndarray:
        return Z * self.scale + self.shift


def standardize_fit(X: np.ndarray) -> Standardizer:
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    constant = sd == 0.0
    return Standardizer(
        shift=np.where(constant, 0.0, mean),
        scale=np.where(constant, 1.0, sd),
    )


def standardize_apply(s: Standardizer, X: np.ndarray) -> np.ndarray:
    return s.apply(np.asarray(X, dtype=np.float64))


_STANDARDIZED_KINDS = frozenset({"svm_linear", "svm_rbf", "logreg"})


@dataclass(frozen=True)
class TrainedModel:
    spec: ClassifierSpec
    standardizer: Optional[Standardizer]
    params: dict
    schema: tuple[str, ...]
    classes: tuple
    window_s: Optional[float] = None

    @property
    def internal_order(self) -> np.ndarray:
        return np.argsort(np.asarray(self.schema))


def _class_order(y) -> list:
    uniq = list(dict.fromkeys(y))
    if all(isinstance(v, str) and v in LEVELS for v in uniq):
        return [lv for lv in LEVELS if lv in uniq]
    return sorted(uniq, key=str)


def _validate_matrix(X, n_rows: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise SchemaMismatch(f"feature matrix must be 2-d, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise NonFiniteInput("feature matrix contains non-finite values")
    if n_rows is not None and X.shape[0] != n_rows:
        raise SchemaMismatch(f"X has {X.shape[0]} rows but y has {n_rows}")
    return X


def fit(spec: ClassifierSpec, X, y, feature_names: Sequence[str] | None = None,
        window_s: float | None = None) -> TrainedModel:
    y = list(y)
    X = _validate_matrix(X, n_rows=len(y))
    n, p = X.shape
    if feature_names is None:
        feature_names = tuple(f"f{j}" for j in range(p))
    names = tuple(str(s) for s in feature_names)
    if len(names) != p:
        raise SchemaMismatch(f"{len(names)} feature names for {p} columns")
    if len(set(names)) != p:
        raise InvalidParams("feature_names", "names must be unique")
    classes = _class_order(y)
    if len(classes) < 2:
        raise DegenerateLabels(f"need >= 2 classes, got {classes!r}")
    code_of = {c: i for i, c in enumerate(classes)}
    y_codes = np.array([code_of[v] for v in y], dtype=np.int64)

    order = np.argsort(np.asarray(names))
    X_int = np.ascontiguousarray(X[:, order])

    standardizer = None
    if spec.kind in _STANDARDIZED_KINDS:
        standardizer = standardize_fit(X_int)
        X_int = standardizer.apply(X_int)

    h = spec.hyperparameters
    k = len(classes)
    if spec.kind == "nb":
        if h["variant"] == "categorical":
            params = naive_bayes.fit_categorical(X_int, y_codes, k, float(h["alpha"]), int(h["n_bins"]))
        else:
            params = naive_bayes.fit_gaussian(X_int, y_codes, k)
    elif spec.kind == "dt":
        tree = grow_tree(X_int, y_codes, k, h["criterion"])
        params = {"tree": tree, "n_classes": k, "n_features": p}
    elif spec.kind == "rf":
        params = forest.fit_rf(X_int, y_codes, k, int(h["n_trees"]), h["criterion"], spec.seed)
    elif spec.kind == "logreg":
        params = fit_logreg(X_int, y_codes, k, float(h["C"]), h["penalty"])
    elif spec.kind == "svm_linear":
        params = fit_svm_linear(X_int, y_codes, k, float(h["C"]), spec.seed)
    else:
        params = svm_rbf.fit_svm_rbf(X_int, y_codes, k, float(h["C"]), h["gamma_rule"], spec.seed)
    return TrainedModel(
        spec=spec,
        standardizer=standardizer,
        params=params,
        schema=names,
        classes=tuple(classes),
        window_s=window_s,
    )


def predict(m: TrainedModel, X, feature_names: Sequence[str] | None = None) -> np.ndarray:
    if feature_names is not None and tuple(str(s) for s in feature_names) != m.schema:
        raise SchemaMismatch(f"feature names do not match the model schema {m.schema}")
    X = _validate_matrix(X)
    if X.shape[1] != len(m.schema):
        raise SchemaMismatch(f"model expects {len(m.schema)} features, got {X.shape[1]}")
    X_int = np.ascontiguousarray(X[:, m.internal_order])
    if m.standardizer is not None:
        X_int = m.standardizer.apply(X_int)
    kind = m.spec.kind
    if kind == "nb":
        codes = naive_bayes.predict_codes(m.params, X_int)
    elif kind == "dt":
        codes = m.params["tree"].predict_codes(X_int)
    elif kind == "rf":
        codes = forest.predict_rf(m.params, X_int)
    elif kind == "logreg":
        codes = predict_logreg(m.params, X_int)
    elif kind == "svm_linear":
        codes = predict_svm_linear(m.params, X_int)
    else:
        codes = svm_rbf.predict_svm_rbf(m.params, X_int)
    return np.asarray(m.classes)[codes]


@dataclass(frozen=True)
class ImportanceReport:
    importances: dict[str, float]
    group_percent: dict[str, float]

    def __post_init__(self):
        total = sum(self.importances.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"importances sum to {total}, expected 1")
        gp = sum(self.group_percent.values())
        if abs(gp - 100.0) > 1e-6:
            raise ValueError(f"group percentages sum to {gp}, expected 100")


def gini_importance(m: TrainedModel, groups: dict[str, str] | None = None) -> ImportanceReport:
    """Mean-decrease-in-impurity importances of a random forest, plus their
    sums per modality group as percentages."""
    if m.spec.kind != "rf":
        raise WrongKind(f"gini importance requires an rf model, got {m.spec.kind}")
    internal = forest.rf_importances(m.params)
    order = m.internal_order
    external = np.empty_like(internal)
    external[order] = internal
    if groups is None:
        groups = FEATURE_GROUPS
    importances = {name: float(v) for name, v in zip(m.schema, external)}
    group_percent: dict[str, float] = {}
    for name, v in importances.items():
        g = groups.get(name, "other")
        group_percent[g] = group_percent.get(g, 0.0) + 100.0 * v
    return ImportanceReport(importances=importances, group_percent=group_percent)


# --- persistence -------------------------------------------------------------

def _encode_params(kind: str, params: dict) -> dict:
    if kind == "nb":
        return naive_bayes.encode(params)
    if kind == "dt":
        return {
            "root": params["tree"].to_record(),
            "importance_raw": params["tree"].importance_raw.tolist(),
            "n_classes": params["n_classes"],
            "n_features": params["n_features"],
        }
    if kind == "rf":
        return forest.encode(params)
    if kind == "logreg":
        return {"coef": params["coef"].tolist(), "intercept": params["intercept"].tolist()}
    if kind == "svm_linear":
        return {"weights": params["weights"].tolist()}
    return {
        "gamma": params["gamma"],
        "n_features": params["n_features"],
        "machines": [
            {"support": m["support"].tolist(), "dual_coef": m["dual_coef"].tolist(), "b": m["b"]}
            for m in params["machines"]
        ],
    }


def _decode_params(kind: str, doc: dict) -> dict:
    if kind == "nb":
        return naive_bayes.decode(doc)
    if kind == "dt":
        n_feat, n_cls = int(doc["n_features"]), int(doc["n_classes"])
        tree = Tree.from_record(doc["root"], n_feat, n_cls,
                                np.asarray(doc["importance_raw"], dtype=np.float64))
        return {"tree": tree, "n_classes": n_cls, "n_features": n_feat}
    if kind == "rf":
        return forest.decode(doc)
    if kind == "logreg":
        return {
            "coef": np.asarray(doc["coef"], dtype=np.float64),
            "intercept": np.asarray(doc["intercept"], dtype=np.float64),
        }
    if kind == "svm_linear":
        return {"weights": np.asarray(doc["weights"], dtype=np.float64)}
    p = int(doc["n_features"])
    return {
        "gamma": float(doc["gamma"]),
        "n_features": p,
        "machines": [
            {
                "support": np.asarray(m["support"], dtype=np.float64).reshape(len(m["dual_coef"]), p),
                "dual_coef": np.asarray(m["dual_coef"], dtype=np.float64),
                "b": float(m["b"]),
            }
            for m in doc["machines"]
        ],
    }


def model_to_doc(m: TrainedModel) -> dict:
    return {
        "kind": m.spec.kind,
        "hyperparameters": m.spec.hyperparameters,
        "seed": m.spec.seed,
        "schema": list(m.schema),
        "classes": list(m.classes),
        "window_s": m.window_s,
        "standardizer": None if m.standardizer is None else {
            "shift": m.standardizer.shift.tolist(),
            "scale": m.standardizer.scale.tolist(),
        },
        "params": _encode_params(m.spec.kind, m.params),
    }


def model_from_doc(doc: dict) -> TrainedModel:
    spec = ClassifierSpec(kind=doc["kind"], hyperparameters=doc["hyperparameters"], seed=doc["seed"])
    std = doc["standardizer"]
    return TrainedModel(
        spec=spec,
        standardizer=None if std is None else Standardizer(
            shift=np.asarray(std["shift"], dtype=np.float64),
            scale=np.asarray(std["scale"], dtype=np.float64),
        ),
        params=_decode_params(doc["kind"], doc["params"]),
        schema=tuple(doc["schema"]),
        classes=tuple(doc["classes"]),
        window_s=doc["window_s"],
    )


def dump_model_json(m: TrainedModel) -> str:
    """Canonical JSON text; floats round-trip exactly via repr."""
    return json.dumps(model_to_doc(m), sort_keys=True, indent=1)


def save_model(m: TrainedModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_model_json(m))
        fh.write("\n")


def load_model(path: str) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_doc(json.load(fh))
