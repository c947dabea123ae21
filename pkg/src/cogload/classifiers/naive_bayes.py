"""Naive Bayes over quantile-binned features.

Each feature is discretized into (default 10) bins whose edges are training
quantiles, and class-conditional bin frequencies get additive (Laplace)
smoothing with strength alpha, so bins unseen for a class still carry
probability mass. A Gaussian-likelihood variant is available for comparison;
it ignores binning and alpha.
"""
from __future__ import annotations

import numpy as np


def _bin_edges(x: np.ndarray, n_bins: int) -> np.ndarray:
    """Interior quantile edges; duplicates collapse so no bin is a priori empty."""
    q = np.arange(1, n_bins) / n_bins
    return np.unique(np.quantile(x, q))


def _assign_bins(x: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # left-closed bins: value == edge goes to the upper bin; out-of-range
    # values land in the first/last bin, where smoothing keeps mass finite
    return np.searchsorted(edges, x, side="right")


def fit_categorical(X: np.ndarray, y: np.ndarray, n_classes: int,
                    alpha: float, n_bins: int) -> dict:
    n, p = X.shape
    edges = [_bin_edges(X[:, j], n_bins) for j in range(p)]
    class_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    log_likes = []
    for j in range(p):
        b = edges[j].size + 1
        bins = _assign_bins(X[:, j], edges[j])
        counts = np.zeros((n_classes, b), dtype=np.float64)
        np.add.at(counts, (y, bins), 1.0)
        log_likes.append(np.log(counts + alpha) - np.log(class_counts + alpha * b)[:, None])
    return {
        "variant": "categorical",
        "edges": edges,
        "log_like": log_likes,
        "log_prior": np.log(class_counts) - np.log(float(n)),
    }


def fit_gaussian(X: np.ndarray, y: np.ndarray, n_classes: int) -> dict:
    n, p = X.shape
    class_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    mean = np.zeros((n_classes, p))
    var = np.zeros((n_classes, p))
    for c in range(n_classes):
        rows = X[y == c]
        mean[c] = rows.mean(axis=0)
        var[c] = rows.var(axis=0)
    var += 1e-9 * max(float(X.var(axis=0).max()), 1.0)  # variance floor
    return {
        "variant": "gaussian",
        "mean": mean,
        "var": var,
        "log_prior": np.log(class_counts) - np.log(float(n)),
    }


def predict_codes(params: dict, X: np.ndarray) -> np.ndarray:
    scores = np.broadcast_to(params["log_prior"], (X.shape[0], params["log_prior"].size)).copy()
    if params["variant"] == "categorical":
        for j, (edges, ll) in enumerate(zip(params["edges"], params["log_like"])):
            scores += ll[:, _assign_bins(X[:, j], edges)].T
    else:
        mean, var = params["mean"], params["var"]
        for c in range(mean.shape[0]):
            z = (X - mean[c]) ** 2 / var[c]
            scores[:, c] += -0.5 * (z + np.log(2.0 * np.pi * var[c])).sum(axis=1)
    return np.argmax(scores, axis=1)


def encode(params: dict) -> dict:
    if params["variant"] == "categorical":
        return {
            "variant": "categorical",
            "edges": [e.tolist() for e in params["edges"]],
            "log_like": [m.tolist() for m in params["log_like"]],
            "log_prior": params["log_prior"].tolist(),
        }
    return {
        "variant": "gaussian",
        "mean": params["mean"].tolist(),
        "var": params["var"].tolist(),
        "log_prior": params["log_prior"].tolist(),
    }


def decode(doc: dict) -> dict:
    if doc["variant"] == "categorical":
        return {
            "variant": "categorical",
            "edges": [np.asarray(e, dtype=np.float64) for e in doc["edges"]],
            "log_like": [np.asarray(m, dtype=np.float64) for m in doc["log_like"]],
            "log_prior": np.asarray(doc["log_prior"], dtype=np.float64),
        }
    return {
        "variant": "gaussian",
        "mean": np.asarray(doc["mean"], dtype=np.float64),
        "var": np.asarray(doc["var"], dtype=np.float64),
        "log_prior": np.asarray(doc["log_prior"], dtype=np.float64),
    }
