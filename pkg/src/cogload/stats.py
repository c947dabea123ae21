"""Agreement metrics and paired significance tests.

Conventions, stated because several are not uniquely defined in the
literature: McNemar uses the continuity-corrected statistic by default with
effect size eta^2 = chi^2/(n-1); Cochran's Q keeps rows where every model is
right (or wrong) in the formula rather than dropping them, with effect size
eta^2_Q = Q/(n(k-1)). p-values come from the chi-square survival function via
the regularized upper incomplete gamma function.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaincc

from .errors import EmptyInput, InvalidArgs, LengthMismatch


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_value: float
    effect_size: float

    def __post_init__(self):
        if self.statistic < 0:
            raise InvalidArgs(f"statistic must be >= 0, got {self.statistic}")
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidArgs(f"p-value outside [0, 1]: {self.p_value}")


@dataclass(frozen=True)
class PairedPredictions:
    """Predictions from several models on the identical ordered test rows."""

    truth: tuple
    predictions: dict[str, tuple]

    def __post_init__(self):
        object.__setattr__(self, "truth", tuple(self.truth))
        object.__setattr__(
            self, "predictions", {k: tuple(v) for k, v in self.predictions.items()}
        )
        n = len(self.truth)
        for name, pred in self.predictions.items():
            if len(pred) != n:
                raise LengthMismatch(f"model {name!r} has {len(pred)} predictions for {n} rows")

    @property
    def model_names(self) -> tuple[str, ...]:
        return tuple(self.predictions)

    def correctness(self) -> np.ndarray:
        """(n_rows, n_models) binary matrix in model_names order."""
        truth = np.asarray(self.truth)
        cols = [np.asarray(self.predictions[m]) == truth for m in self.model_names]
        return np.stack(cols, axis=1).astype(np.int64)


def _paired(truth, pred) -> tuple[np.ndarray, np.ndarray]:
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise LengthMismatch(f"truth has shape {truth.shape}, predictions {pred.shape}")
    return truth, pred


def accuracy(truth, pred) -> float:
    truth, pred = _paired(truth, pred)
    if truth.size == 0:
        raise EmptyInput("accuracy of zero rows is undefined")
    return float(np.count_nonzero(truth == pred)) / truth.size


def cohen_kappa(truth, pred) -> float:
    """Chance-corrected agreement; 0 by convention when expected agreement
    is already 1 (a single label on both sides)."""
    truth, pred = _paired(truth, pred)
    if truth.size == 0:
        raise EmptyInput("kappa of zero rows is undefined")
    labels = np.unique(np.concatenate([truth, pred]))
    n = truth.size
    p_o = float(np.count_nonzero(truth == pred)) / n
    p_e = 0.0
    for lab in labels:
        p_e += (np.count_nonzero(truth == lab) / n) * (np.count_nonzero(pred == lab) / n)
    if p_e >= 1.0:
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


def chi_square_sf(x: float, df: int) -> float:
    """P(X >= x) for X ~ chi-square with df degrees of freedom."""
    if x < 0:
        raise InvalidArgs(f"x must be >= 0, got {x}")
    if df < 1:
        raise InvalidArgs(f"df must be >= 1, got {df}")
    return float(gammaincc(df / 2.0, x / 2.0))


def mcnemar(truth, pred_a, pred_b, continuity: bool = True) -> TestResult:
    """Paired difference of two models' correctness (df = 1).

    b counts rows only model a got right, c rows only model b got right.
    """
    truth, pred_a = _paired(truth, pred_a)
    _, pred_b = _paired(truth, pred_b)
    ok_a = pred_a == truth
    ok_b = pred_b == truth
    n_b = int(np.count_nonzero(ok_a & ~ok_b))
    n_c = int(np.count_nonzero(~ok_a & ok_b))
    n = truth.size
    if n_b + n_c == 0:
        return TestResult(statistic=0.0, df=1, p_value=1.0, effect_size=0.0)
    diff = abs(n_b - n_c)
    if continuity:
        diff = max(diff - 1.0, 0.0)
    chi2 = diff * diff / (n_b + n_c)
    eta2 = chi2 / (n - 1) if n > 1 else 0.0
    return TestResult(statistic=chi2, df=1, p_value=chi_square_sf(chi2, 1), effect_size=eta2)


def cochran_q(truth, predictions: Mapping[str, Sequence] | Sequence[Sequence]) -> TestResult:
    """Difference in correctness rates across k >= 2 models on shared rows.

    Rows where every model agrees in correctness stay in the formula; when
    all rows are like that the statistic degenerates to 0 with p = 1.
    """
    if isinstance(predictions, Mapping):
        preds = list(predictions.values())
    else:
        preds = list(predictions)
    k = len(preds)
    if k < 2:
        raise InvalidArgs(f"Cochran's Q needs >= 2 models, got {k}")
    truth = np.asarray(truth)
    if truth.size == 0:
        raise EmptyInput("Cochran's Q of zero rows is undefined")
    correct = np.stack([np.asarray(_paired(truth, p)[1]) == truth for p in preds], axis=1)
    correct = correct.astype(np.float64)
    n = truth.size
    g = correct.sum(axis=0)  # per-model totals
    row_tot = correct.sum(axis=1)
    t = float(row_tot.sum())
    denom = k * t - float((row_tot * row_tot).sum())
    df = k - 1
    if denom <= 0.0:
        return TestResult(statistic=0.0, df=df, p_value=1.0, effect_size=0.0)
    q = k * (k - 1) * float(((g - t / k) ** 2).sum()) / denom
    return TestResult(
        statistic=q,
        df=df,
        p_value=chi_square_sf(q, df),
        effect_size=q / (n * (k - 1)),
    )


def pairwise_mcnemar(paired: PairedPredictions, continuity: bool = True) -> list[dict]:
    """Upper-triangle McNemar matrix rows: model_a, model_b, chi2, p, eta2."""
    rows = []
    for a, b in combinations(paired.model_names, 2):
        r = mcnemar(paired.truth, paired.predictions[a], paired.predictions[b], continuity)
        rows.append({
            "model_a": a,
            "model_b": b,
            "chi2": r.statistic,
            "p": r.p_value,
            "eta2": r.effect_size,
        })
    return rows
