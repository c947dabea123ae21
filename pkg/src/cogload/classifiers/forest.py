"""Random forest: bootstrap-resampled CART trees with per-split feature
subsampling and majority vote.

Every tree draws its own generator from SeedSequence([seed, tree_index]), so
fits are reproducible and insensitive to tree build order.
"""
from __future__ import annotations

import math

import numpy as np

from .tree import Tree, grow_tree


def max_features_rule(p: int) -> int:
    return max(1, int(math.isqrt(p)))


def fit_rf(X: np.ndarray, y: np.ndarray, n_classes: int, n_trees: int,
           criterion: str, seed: int) -> dict:
    n, p = X.shape
    m_try = max_features_rule(p)
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        rows = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[rows], y[rows], n_classes, criterion,
                               max_features=m_try, rng=rng, n_root_weight=n))
    return {"trees": trees, "n_classes": n_classes, "n_features": p}


def predict_rf(params: dict, X: np.ndarray) -> np.ndarray:
    votes = np.zeros((X.shape[0], params["n_classes"]), dtype=np.int64)
    for tree in params["trees"]:
        codes = tree.predict_codes(X)
        votes[np.arange(X.shape[0]), codes] += 1
    return np.argmax(votes, axis=1)


def rf_importances(params: dict) -> np.ndarray:
    """Mean over trees of per-tree normalized impurity-decrease totals.

    Trees whose splits produced no impurity decrease carry no signal and are
    left out of the mean; if every tree is in that state the mass spreads
    uniformly so the total still sums to one.
    """
    p = params["n_features"]
    acc = np.zeros(p)
    contributing = 0
    for tree in params["trees"]:
        total = float(tree.importance_raw.sum())
        if total > 0.0:
            acc += tree.importance_raw / total
            contributing += 1
    if contributing == 0:
        return np.full(p, 1.0 / p)
    return acc / contributing


def encode(params: dict) -> dict:
    return {
        "n_classes": params["n_classes"],
        "n_features": params["n_features"],
        "trees": [
            {"root": tree.to_record(), "importance_raw": tree.importance_raw.tolist()}
            for tree in params["trees"]
        ],
    }


def decode(doc: dict) -> dict:
    return {
        "n_classes": int(doc["n_classes"]),
        "n_features": int(doc["n_features"]),
        "trees": [
            Tree.from_record(t["root"], int(doc["n_features"]), int(doc["n_classes"]),
                             np.asarray(t["importance_raw"], dtype=np.float64))
            for t in doc["trees"]
        ],
    }
