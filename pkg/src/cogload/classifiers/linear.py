"""Linear-decision-boundary families: multinomial logistic regression and
one-vs-rest linear SVM.

Logistic regression minimizes the summed softmax negative log-likelihood plus
an L2 penalty of 1/(2C) on the weights (bias unpenalized), driven to a small
gradient norm with L-BFGS.

The linear SVM solves each one-vs-rest L2-regularized hinge problem in the
dual by coordinate descent with an augmented (regularized) bias column,
stopping at a relative duality gap of 1e-3.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from ..errors import InvalidParams

GRAD_TOL = 1e-6
DUALITY_GAP_TOL = 1e-3


def _softmax_nll_grad(wb: np.ndarray, X: np.ndarray, Y: np.ndarray, inv_c: float):
    n, p = X.shape
    k = Y.shape[1]
    W = wb[: k * p].reshape(k, p)
    b = wb[k * p:]
    logits = X @ W.T + b
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    prob = expl / expl.sum(axis=1, keepdims=True)
    log_prob = logits - np.log(expl.sum(axis=1, keepdims=True))
    nll = -float((Y * log_prob).sum()) + 0.5 * inv_c * float((W * W).sum())
    delta = prob - Y
    grad_w = delta.T @ X + inv_c * W
    grad_b = delta.sum(axis=0)
    return nll, np.concatenate([grad_w.ravel(), grad_b])


def fit_logreg(X: np.ndarray, y: np.ndarray, n_classes: int, C: float, penalty: str) -> dict:
    if penalty != "l2":
        raise InvalidParams("penalty", f"only 'l2' is supported, got {penalty!r}")
    if not C > 0:
        raise InvalidParams("C", f"must be positive, got {C}")
    n, p = X.shape
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    inv_c = 1.0 / C
    wb = np.zeros(n_classes * p + n_classes)
    for _ in range(5):
        res = minimize(
            _softmax_nll_grad,
            wb,
            args=(X, Y, inv_c),
            method="L-BFGS-B",
            jac=True,
            options={"maxiter": 10000, "ftol": 1e-15, "gtol": 1e-9},
        )
        wb = res.x
        grad = _softmax_nll_grad(wb, X, Y, inv_c)[1]
        if float(np.linalg.norm(grad, np.inf)) <= GRAD_TOL * 0.1:
            break
    return {
        "coef": wb[: n_classes * p].reshape(n_classes, p),
        "intercept": wb[n_classes * p:],
    }


def predict_logreg(params: dict, X: np.ndarray) -> np.ndarray:
    return np.argmax(X @ params["coef"].T + params["intercept"], axis=1)


def _cd_binary_svm(Xa: np.ndarray, y_pm: np.ndarray, C: float,
                   rng: np.random.Generator, max_epochs: int = 2000) -> np.ndarray:
    """Dual coordinate descent for min 0.5 w.w + C sum hinge(y w.x) on the
    bias-augmented matrix Xa. Returns w."""
    n, _ = Xa.shape
    q_diag = np.einsum("ij,ij->i", Xa, Xa)
    alpha = np.zeros(n)
    w = np.zeros(Xa.shape[1])
    yx = y_pm[:, None] * Xa
    for _ in range(max_epochs):
        for i in rng.permutation(n):
            g = y_pm[i] * float(w @ Xa[i]) - 1.0
            if alpha[i] == 0.0:
                pg = min(g, 0.0)
            elif alpha[i] == C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                a_new = min(max(alpha[i] - g / q_diag[i], 0.0), C)
                if a_new != alpha[i]:
                    w += (a_new - alpha[i]) * yx[i]
                    alpha[i] = a_new
        w = (alpha * y_pm) @ Xa  # refresh against incremental drift
        margins = 1.0 - y_pm * (Xa @ w)
        primal = 0.5 * float(w @ w) + C * float(np.maximum(margins, 0.0).sum())
        dual = float(alpha.sum()) - 0.5 * float(w @ w)
        if primal - dual <= DUALITY_GAP_TOL * max(1.0, abs(primal)):
            break
    return w


def fit_svm_linear(X: np.ndarray, y: np.ndarray, n_classes: int, C: float, seed: int) -> dict:
    if not C > 0:
        raise InvalidParams("C", f"must be positive, got {C}")
    Xa = np.concatenate([X, np.ones((X.shape[0], 1))], axis=1)
    weights = []
    for c in range(n_classes):
        y_pm = np.where(y == c, 1.0, -1.0)
        rng = np.random.default_rng(np.random.SeedSequence([seed, 11, c]))
        weights.append(_cd_binary_svm(Xa, y_pm, C, rng))
    return {"weights": np.array(weights)}  # one bias-augmented w per class


def predict_svm_linear(params: dict, X: np.ndarray) -> np.ndarray:
    Xa = np.concatenate([X, np.ones((X.shape[0], 1))], axis=1)
    return np.argmax(Xa @ params["weights"].T, axis=1)
