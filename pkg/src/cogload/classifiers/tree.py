"""CART decision trees grown to purity.

Trees store parallel node arrays (feature, threshold, children, leaf class)
rather than node objects; prediction walks all rows level-wise. The split
scan is vectorized with prefix class counts over each feature's sort order.
Candidate thresholds are midpoints between distinct consecutive values, with
a fallback to the lower value when the midpoint rounds up to the upper one.

Feature iteration follows the caller-supplied candidate order, so equal-gain
ties resolve to the earliest candidate. Callers pass candidates in a
canonical (name-derived) order to keep fits invariant to column permutation.
"""
from __future__ import annotations

import numpy as np

_LEAF = -1


def gini_impurity(counts: np.ndarray) -> np.ndarray:
    """Gini impurity for each row of a (m, K) count matrix."""
    n = counts.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        p = counts / n
    return 1.0 - np.nansum(p * p, axis=-1)


def entropy_impurity(counts: np.ndarray) -> np.ndarray:
    """Shannon entropy in bits for each row of a (m, K) count matrix."""
    n = counts.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / n
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    return -terms.sum(axis=-1)


_IMPURITY = {"gini": gini_impurity, "entropy": entropy_impurity}


def _best_split_for_feature(x: np.ndarray, y: np.ndarray, n_classes: int, criterion):
    """Best (gain, threshold) for one feature over one node's rows, or None."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    n = xs.size
    boundaries = np.flatnonzero(xs[:-1] < xs[1:])
    if boundaries.size == 0:
        return None
    onehot = np.zeros((n, n_classes), dtype=np.float64)
    onehot[np.arange(n), y[order]] = 1.0
    prefix = np.cumsum(onehot, axis=0)
    total = prefix[-1]
    left = prefix[boundaries]
    right = total - left
    sizes_l = (boundaries + 1).astype(np.float64)
    sizes_r = n - sizes_l
    imp_parent = criterion(total[None, :])[0]
    gain = imp_parent - (sizes_l * criterion(left) + sizes_r * criterion(right)) / n
    # Zero-gain splits stay eligible: an impure node may need them to reach
    # purity (parity-style label patterns have no single improving cut).
    k = int(np.argmax(gain))
    i = boundaries[k]
    thr = 0.5 * (xs[i] + xs[i + 1])
    if thr >= xs[i + 1]:
        thr = xs[i]
    return float(gain[k]), float(thr)


class Tree:
    """A fitted CART tree over class codes 0..K-1."""

    __slots__ = ("feature", "threshold", "left", "right", "leaf_class", "importance_raw", "n_classes")

    def __init__(self, feature, threshold, left, right, leaf_class, importance_raw, n_classes):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.leaf_class = np.asarray(leaf_class, dtype=np.int64)
        self.importance_raw = np.asarray(importance_raw, dtype=np.float64)
        self.n_classes = int(n_classes)

    def predict_codes(self, X: np.ndarray) -> np.ndarray:
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[nodes] != _LEAF
        while np.any(active):
            idx = np.flatnonzero(active)
            cur = nodes[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            nodes[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[nodes[idx]] != _LEAF
        return self.leaf_class[nodes]

    def to_record(self, node: int = 0) -> dict:
        """Nested node-record form for persistence."""
        if self.feature[node] == _LEAF:
            return {"leaf": int(self.leaf_class[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_record(int(self.left[node])),
            "right": self.to_record(int(self.right[node])),
        }

    @classmethod
    def from_record(cls, record: dict, n_features: int, n_classes: int,
                    importance_raw=None) -> "Tree":
        feature, threshold, left, right, leaf_class = [], [], [], [], []

        def add(rec) -> int:
            i = len(feature)
            feature.append(_LEAF)
            threshold.append(0.0)
            left.append(_LEAF)
            right.append(_LEAF)
            leaf_class.append(0)
            if "leaf" in rec:
                leaf_class[i] = int(rec["leaf"])
            else:
                feature[i] = int(rec["feature"])
                threshold[i] = float(rec["threshold"])
                left[i] = add(rec["left"])
                right[i] = add(rec["right"])
            return i

        add(record)
        if importance_raw is None:
            importance_raw = np.zeros(n_features)
        return cls(feature, threshold, left, right, leaf_class, importance_raw, n_classes)


def grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, criterion_name: str,
              max_features: int | None = None, rng: np.random.Generator | None = None,
              n_root_weight: int | None = None) -> Tree:
    """Fit a CART tree on class codes, growing until nodes are pure or hold
    fewer than 2 samples.

    When max_features is set, each node scans a random sample of that many
    candidate columns (drawn with rng); otherwise all columns, in order.
    Importance accumulates (node fraction) x (impurity decrease) per feature,
    with node fractions relative to n_root_weight (defaults to len(y)).
    """
    criterion = _IMPURITY[criterion_name]
    n, p = X.shape
    n_root = float(n_root_weight if n_root_weight is not None else n)

    feature, threshold, left, right, leaf_class = [], [], [], [], []
    importance = np.zeros(p, dtype=np.float64)

    def new_node() -> int:
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        leaf_class.append(0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        y_node = y[idx]
        counts = np.bincount(y_node, minlength=n_classes).astype(np.float64)
        if idx.size < 2 or np.count_nonzero(counts) == 1:
            leaf_class[node] = int(np.argmax(counts))
            continue
        if max_features is not None and max_features < p:
            candidates = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            candidates = np.arange(p)
        best = None
        for f in candidates:
            found = _best_split_for_feature(X[idx, f], y_node, n_classes, criterion)
            if found is not None and (best is None or found[0] > best[0]):
                best = (found[0], int(f), found[1])
        if best is None:
            leaf_class[node] = int(np.argmax(counts))
            continue
        gain, f, thr = best
        importance[f] += (idx.size / n_root) * max(gain, 0.0)
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        l_node, r_node = new_node(), new_node()
        left[node], right[node] = l_node, r_node
        stack.append((r_node, idx[~go_left]))
        stack.append((l_node, idx[go_left]))
    return Tree(feature, threshold, left, right, leaf_class, importance, n_classes)
