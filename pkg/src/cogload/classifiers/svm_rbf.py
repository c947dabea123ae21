"""RBF-kernel SVM fit with sequential minimal optimization.

Each one-vs-rest binary machine runs the classic two-loop SMO: the outer loop
alternates full passes with passes over non-bound multipliers, the inner loop
pairs the violating example with the cached-error maximizer and falls back to
seeded scans. KKT checks use tolerance 1e-3. gamma follows the "scale" rule
1/(p * mean per-feature variance) computed on the training matrix.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidParams

KKT_TOL = 1e-3
_EPS = 1e-12


def rbf_gamma(X: np.ndarray, rule: str = "scale") -> float:
    if rule != "scale":
        raise InvalidParams("gamma_rule", f"only 'scale' is supported, got {rule!r}")
    mean_var = float(X.var(axis=0).mean())
    if mean_var <= 0.0:
        return 1.0 / X.shape[1]
    return 1.0 / (X.shape[1] * mean_var)


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


class _SMO:
    """State for one binary problem: multipliers, threshold, error cache."""

    def __init__(self, K: np.ndarray, y: np.ndarray, C: float, rng: np.random.Generator):
        self.K = K
        self.y = y
        self.C = float(C)
        self.rng = rng
        n = y.size
        self.alpha = np.zeros(n)
        self.b = 0.0
        # E_i = f(x_i) - y_i with f(x) = sum_j alpha_j y_j k(x_j, x) - b
        self.err = -y.astype(np.float64)

    def _take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        e1, e2 = self.err[i1], self.err[i2]
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - self.C), min(self.C, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(self.C, self.C + a2 - a1)
        if lo == hi:
            return False
        k11, k12, k22 = self.K[i1, i1], self.K[i1, i2], self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2_new = a2 + y2 * (e1 - e2) / eta
            a2_new = min(max(a2_new, lo), hi)
        else:
            # objective at the clip bounds (kernel not strictly PD here)
            f1 = y1 * (e1 + self.b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (e2 + self.b) - s * a1 * k12 - a2 * k22
            l1 = a1 + s * (a2 - lo)
            h1 = a1 + s * (a2 - hi)
            obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12
            obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12
            if obj_lo < obj_hi - _EPS:
                a2_new = lo
            elif obj_lo > obj_hi + _EPS:
                a2_new = hi
            else:
                a2_new = a2
        if abs(a2_new - a2) < _EPS * (a2_new + a2 + _EPS):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        d1, d2 = a1_new - a1, a2_new - a2
        b1 = e1 + y1 * d1 * k11 + y2 * d2 * k12 + self.b
        b2 = e2 + y1 * d1 * k12 + y2 * d2 * k22 + self.b
        if 0.0 < a1_new < self.C:
            b_new = b1
        elif 0.0 < a2_new < self.C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        self.err += y1 * d1 * self.K[i1] + y2 * d2 * self.K[i2] - (b_new - self.b)
        self.alpha[i1], self.alpha[i2] = a1_new, a2_new
        self.b = b_new
        return True

    def _examine(self, i2: int) -> bool:
        a2 = self.alpha[i2]
        r2 = self.err[i2] * self.y[i2]
        if not ((r2 < -KKT_TOL and a2 < self.C) or (r2 > KKT_TOL and a2 > 0.0)):
            return False
        non_bound = np.flatnonzero((self.alpha > 0.0) & (self.alpha < self.C))
        if non_bound.size > 1:
            i1 = int(non_bound[np.argmax(np.abs(self.err[non_bound] - self.err[i2]))])
            if self._take_step(i1, i2):
                return True
        n = self.y.size
        if non_bound.size:
            start = int(self.rng.integers(non_bound.size))
            for i1 in np.roll(non_bound, -start):
                if self._take_step(int(i1), i2):
                    return True
        start = int(self.rng.integers(n))
        for i1 in range(n):
            if self._take_step((i1 + start) % n, i2):
                return True
        return False

    def solve(self, max_passes: int = 10000) -> None:
        examine_all = True
        num_changed = 1
        passes = 0
        while (num_changed > 0 or examine_all) and passes < max_passes:
            passes += 1
            num_changed = 0
            if examine_all:
                targets = range(self.y.size)
            else:
                targets = np.flatnonzero((self.alpha > 0.0) & (self.alpha < self.C))
            for i2 in targets:
                num_changed += int(self._examine(int(i2)))
            if examine_all:
                examine_all = False
            elif num_changed == 0:
                examine_all = True


def fit_svm_rbf(X: np.ndarray, y: np.ndarray, n_classes: int, C: float,
                gamma_rule: str, seed: int) -> dict:
    if not C > 0:
        raise InvalidParams("C", f"must be positive, got {C}")
    gamma = rbf_gamma(X, gamma_rule)
    K = rbf_kernel(X, X, gamma)
    machines = []
    for c in range(n_classes):
        y_pm = np.where(y == c, 1.0, -1.0)
        rng = np.random.default_rng(np.random.SeedSequence([seed, 23, c]))
        smo = _SMO(K, y_pm, C, rng)
        smo.solve()
        sv = np.flatnonzero(smo.alpha > 0.0)
        machines.append({
            "support": X[sv],
            "dual_coef": smo.alpha[sv] * y_pm[sv],
            "b": smo.b,
        })
    return {"gamma": gamma, "n_features": X.shape[1], "machines": machines}


def predict_svm_rbf(params: dict, X: np.ndarray) -> np.ndarray:
    scores = np.empty((X.shape[0], len(params["machines"])))
    for c, m in enumerate(params["machines"]):
        if m["support"].shape[0]:
            k = rbf_kernel(X, m["support"], params["gamma"])
            scores[:, c] = k @ m["dual_coef"] - m["b"]
        else:
            scores[:, c] = -m["b"]
    return np.argmax(scores, axis=1)
