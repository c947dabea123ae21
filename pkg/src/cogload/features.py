"""Windowed feature extraction: 7 pupil, 9 EDA, 9 HR features plus IPA.

Statistical features are plain moments and extrema. Dynamic features work on
first differences: speeds use |dx/dt|, the largest monotonic excursion comes
from a run decomposition of the value sequence, and the change frequency
counts direction reversals per second. IPA is a wavelet-based fluctuation
count: one-level Haar detail coefficients, a MAD noise estimate, and the
universal threshold; the rate of threshold-exceeding strict modulus maxima is
reported per second.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonMonotonicTime, NonUniformSampling, TooFewSamples
from .sensors import Segment, SensorSeries

# Canonical feature order. Column order in every exported table and the rank
# order used when classifiers subsample features.
PUPIL_STAT = ("AvgPD", "MaxPD", "MinPD")
PUPIL_DYN = ("AvgPV", "MaxPV", "MaxPC", "PCF")
EDA_STAT = ("AvgE", "SDGE", "MaxE", "MinE", "RngE")
EDA_DYN = ("AvgEV", "MaxEV", "MaxEC", "ECF")
HR_STAT = ("AvgH", "SDH", "MaxH", "MinH", "RngH")
HR_DYN = ("AvgHV", "MaxHV", "MaxHC", "HCF")

CANONICAL_ORDER = (*PUPIL_STAT, *PUPIL_DYN, "IPA", *EDA_STAT, *EDA_DYN, *HR_STAT, *HR_DYN)

FEATURE_GROUPS = {
    **{name: "pupil" for name in (*PUPIL_STAT, *PUPIL_DYN, "IPA")},
    **{name: "eda" for name in (*EDA_STAT, *EDA_DYN)},
    **{name: "hr" for name in (*HR_STAT, *HR_DYN)},
}

SCHEMAS = ("unimodal", "multimodal")

# The unimodal baseline defaults to carrying IPA alongside the 7 pupil
# features; the multimodal schema defaults to the 25 named sensor features.
DEFAULT_INCLUDE_IPA = {"unimodal": True, "multimodal": False}

MIN_IPA_SAMPLES = 32


def schema_features(schema: str, include_ipa: bool | None = None) -> tuple[str, ...]:
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}, expected one of {SCHEMAS}")
    if include_ipa is None:
        include_ipa = DEFAULT_INCLUDE_IPA[schema]
    names = [*PUPIL_STAT, *PUPIL_DYN]
    if include_ipa:
        names.append("IPA")
    if schema == "multimodal":
        names += [*EDA_STAT, *EDA_DYN, *HR_STAT, *HR_DYN]
    return tuple(names)


@dataclass(frozen=True)
class FeatureVector:
    segment_id: str
    values: dict[str, float]
    groups: dict[str, str]

    def __post_init__(self):
        for name, v in self.values.items():
            if not math.isfinite(v):
                raise ValueError(f"feature {name} is not finite: {v}")
            if name not in self.groups:
                raise ValueError(f"feature {name} has no modality group")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.values)

    def as_array(self, order: tuple[str, ...] | None = None) -> np.ndarray:
        order = self.names if order is None else order
        return np.array([self.values[n] for n in order], dtype=np.float64)


@dataclass(frozen=True)
class RunDecomposition:
    """Maximal monotonic runs of a value sequence.

    Each run is (start_index, end_index, direction) over sample indices with
    direction +1 or -1. Zero differences extend the run in progress; leading
    zero differences belong to no run.
    """

    runs: tuple[tuple[int, int, int], ...]

    def max_change(self, values: np.ndarray) -> float:
        if not self.runs:
            return 0.0
        return max(abs(float(values[e] - values[s])) for s, e, _ in self.runs)


def decompose_runs(values: np.ndarray) -> RunDecomposition:
    values = np.asarray(values, dtype=np.float64)
    signs = np.sign(np.diff(values))
    runs: list[tuple[int, int, int]] = []
    run_start = -1
    current = 0
    for j, s in enumerate(signs):
        if s == 0:
            continue
        if current == 0:
            run_start, current = j, int(s)
        elif s != current:
            runs.append((run_start, j, current))
            run_start, current = j, int(s)
    if current != 0:
        runs.append((run_start, values.size - 1, current))
    return RunDecomposition(runs=tuple(runs))


def stat_features(series: SensorSeries, prefix: str) -> dict[str, float]:
    """Mean/extrema block; EDA and HR additionally get sample SD and range."""
    x = series.value
    if x.size < 2:
        raise TooFewSamples(f"stat features need >= 2 samples, have {x.size}")
    avg, mx, mn = float(np.mean(x)), float(np.max(x)), float(np.min(x))
    if prefix == "pupil":
        names = PUPIL_STAT
        vals = (avg, mx, mn)
    else:
        names = EDA_STAT if prefix == "eda" else HR_STAT
        vals = (avg, float(np.std(x, ddof=1)), mx, mn, mx - mn)
    return dict(zip(names, vals))


def dynamic_features(series: SensorSeries, prefix: str) -> dict[str, float]:
    """Speed, excursion, and reversal-rate block over first differences."""
    x, t = series.value, series.t
    if x.size < 3:
        raise TooFewSamples(f"dynamic features need >= 3 samples, have {x.size}")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise NonMonotonicTime("timestamps must be strictly increasing")
    v = np.abs(np.diff(x) / dt)
    duration = float(t[-1] - t[0])
    signs = np.sign(np.diff(x))
    nz = signs[signs != 0]
    reversals = int(np.count_nonzero(nz[1:] != nz[:-1])) if nz.size > 1 else 0
    max_change = decompose_runs(x).max_change(x)
    names = {"pupil": PUPIL_DYN, "eda": EDA_DYN, "hr": HR_DYN}[prefix]
    return dict(zip(names, (float(np.mean(v)), float(np.max(v)), max_change, reversals / duration)))


def _haar_details(x: np.ndarray) -> np.ndarray:
    m = x.size // 2
    pairs = x[: 2 * m].reshape(m, 2)
    return (pairs[:, 0] - pairs[:, 1]) / math.sqrt(2.0)


def ipa(pupil: SensorSeries) -> float:
    """Pupillary-activity rate: threshold-surviving wavelet modulus maxima
    per second.

    One-level Haar details d; noise scale sigma = median(|d|)/0.6745;
    universal threshold lambda = sigma * sqrt(2 ln n) with n the window
    sample count. Counts strict interior local maxima of |d| exceeding
    lambda. Scale-invariant by construction.
    """
    x, t = pupil.value, pupil.t
    if x.size < MIN_IPA_SAMPLES:
        raise TooFewSamples(f"IPA needs >= {MIN_IPA_SAMPLES} samples, have {x.size}")
    dt = np.diff(t)
    step = float(np.median(dt))
    if step <= 0 or np.any(np.abs(dt - step) > 1e-6 * step):
        raise NonUniformSampling("IPA requires a uniformly sampled window")
    d = np.abs(_haar_details(x))
    sigma = float(np.median(d)) / 0.6745
    lam = sigma * math.sqrt(2.0 * math.log(x.size))
    interior = d[1:-1]
    peaks = (interior > d[:-2]) & (interior > d[2:]) & (interior > lam)
    duration = float(t[-1] - t[0])
    return float(np.count_nonzero(peaks)) / duration


def _ipa_on_longest_uniform_run(pupil: SensorSeries) -> float:
    """IPA fallback for windows holed by questionnaire-interval exclusion:
    evaluate on the longest uniformly spaced stretch; 0.0 if every stretch is
    too short to carry the estimate."""
    try:
        return ipa(pupil)
    except NonUniformSampling:
        pass
    dt = np.diff(pupil.t)
    step = float(np.median(dt))
    breaks = np.flatnonzero(np.abs(dt - step) > 1e-6 * step)
    bounds = np.concatenate(([0], breaks + 1, [len(pupil)]))
    spans = np.diff(bounds)
    k = int(np.argmax(spans))
    if spans[k] < MIN_IPA_SAMPLES:
        return 0.0
    lo, hi = int(bounds[k]), int(bounds[k + 1])
    return ipa(pupil.mask_rows(np.arange(lo, hi)))


def _dynamic_block(series: SensorSeries, prefix: str) -> dict[str, float]:
    """dynamic_features, extended to the 2-sample windows the segmentation
    gates allow for heart rate (one difference: CF is 0 by definition)."""
    if len(series) == 2:
        (x0, x1), (t0, t1) = series.value, series.t
        if t1 <= t0:
            raise NonMonotonicTime("timestamps must be strictly increasing")
        speed = abs((x1 - x0) / (t1 - t0))
        names = {"pupil": PUPIL_DYN, "eda": EDA_DYN, "hr": HR_DYN}[prefix]
        return dict(zip(names, (speed, speed, abs(x1 - x0), 0.0)))
    return dynamic_features(series, prefix)


def build_feature_vector(seg: Segment, schema: str = "multimodal",
                         include_ipa: bool | None = None) -> FeatureVector:
    """Extract the named feature set for one segment of cleaned streams."""
    names = schema_features(schema, include_ipa)
    values: dict[str, float] = {}
    values.update(stat_features(seg.pupil, "pupil"))
    values.update(_dynamic_block(seg.pupil, "pupil"))
    if "IPA" in names:
        values["IPA"] = _ipa_on_longest_uniform_run(seg.pupil)
    if schema == "multimodal":
        values.update(stat_features(seg.eda, "eda"))
        values.update(_dynamic_block(seg.eda, "eda"))
        values.update(stat_features(seg.hr, "hr"))
        values.update(_dynamic_block(seg.hr, "hr"))
    ordered = {n: values[n] for n in names}
    return FeatureVector(
        segment_id=seg.segment_id,
        values=ordered,
        groups={n: FEATURE_GROUPS[n] for n in names},
    )
