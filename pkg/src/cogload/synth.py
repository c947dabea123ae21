"""Synthetic cohort generator with planted cognitive-load effects.

Latent load level evolves by a Markov chain from one self-report to the
next. Each channel carries a configurable level effect on top of
participant-specific baselines: pupil diameter gains a per-level dilation
and an oscillation whose direction-reversal rate grows with level, EDA fires
exponential-decay conductance responses at a level-scaled rate over a slow
tonic drift, and heart rate shifts by a per-level offset. Blinks and
low-confidence stretches mimic device artifacts. Questionnaire items are
sampled around level-consistent targets, so scoring the items recovers the
latent level almost surely under default noise.

All randomness derives from SeedSequence([seed, participant_index]); sessions
are independent and can be generated in any order or in parallel.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidParams
from .labels import LEVELS
from .sensors import (
    EDA_RATE_HZ,
    PUPIL_RATE_HZ,
    BlinkEvent,
    ReportEvent,
    Session,
    SensorSeries,
    save_session,
)

_LEVEL_ITEM_MEANS = (2.5, 5.5, 8.5)
_HR_SPAN_S = 10.0


@dataclass(frozen=True)
class GeneratorParams:
    n_participants: int = 34
    session_minutes: float = 60.0
    report_period_s: float = 300.0
    report_duration_s: float = 30.0
    task_overrun_mean_s: float = 35.0
    # effect sizes per channel, sized so no single modality saturates:
    # the pupil channel alone reaches only moderate agreement and the
    # fused feature set clearly beats it
    pupil_dilation_mm_per_level: float = 0.05
    pupil_reversal_rate_gain: float = 0.08
    hr_bpm_per_level: float = 6.0
    eda_scr_rate_gain: float = 1.8
    # noise levels per channel
    pupil_noise_mm: float = 0.12
    eda_noise_us: float = 0.05
    hr_noise_bpm: float = 2.0
    # artifacts
    blink_rate_hz: float = 0.15
    low_confidence_rate: float = 0.02
    # latent dynamics and labels
    transition: tuple = (
        (0.60, 0.30, 0.10),
        (0.20, 0.60, 0.20),
        (0.10, 0.30, 0.60),
    )
    item_sigma: float = 0.9
    # level effects apply only this close before each report (None = always)
    effect_horizon_s: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_participants < 1:
            raise InvalidParams("n_participants", f"must be >= 1, got {self.n_participants}")
        for name in ("session_minutes", "report_period_s"):
            if not getattr(self, name) > 0:
                raise InvalidParams(name, f"must be positive, got {getattr(self, name)}")
        for name in ("report_duration_s", "task_overrun_mean_s", "pupil_dilation_mm_per_level",
                     "pupil_reversal_rate_gain", "hr_bpm_per_level", "eda_scr_rate_gain",
                     "pupil_noise_mm", "eda_noise_us", "hr_noise_bpm", "blink_rate_hz",
                     "low_confidence_rate", "item_sigma"):
            if not getattr(self, name) >= 0:
                raise InvalidParams(name, f"must be >= 0, got {getattr(self, name)}")
        if self.effect_horizon_s is not None and not self.effect_horizon_s > 0:
            raise InvalidParams("effect_horizon_s", f"must be positive, got {self.effect_horizon_s}")
        t = np.asarray(self.transition, dtype=np.float64)
        if t.shape != (3, 3):
            raise InvalidParams("transition", f"must be 3x3 over {LEVELS}, got shape {t.shape}")
        if (t < 0).any():
            raise InvalidParams("transition", "entries must be non-negative")
        if np.abs(t.sum(axis=1) - 1.0).max() > 1e-9:
            raise InvalidParams("transition", f"rows must sum to 1, got {t.sum(axis=1).tolist()}")
        object.__setattr__(self, "transition", tuple(tuple(float(v) for v in row) for row in t))

    @property
    def session_s(self) -> float:
        return self.session_minutes * 60.0


@dataclass(frozen=True)
class GroundTruth:
    participant_id: str
    levels: tuple[str, ...]
    items: tuple[tuple[int, ...], ...]


def stationary_distribution(transition) -> np.ndarray:
    t = np.asarray(transition, dtype=np.float64)
    k = t.shape[0]
    a = np.vstack([t.T - np.eye(k), np.ones(k)])
    b = np.concatenate([np.zeros(k), [1.0]])
    pi = np.linalg.lstsq(a, b, rcond=None)[0]
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def null_effect_params(**overrides) -> GeneratorParams:
    """All channel effects zero and i.i.d. levels: features carry no label
    information at all, not even through label autocorrelation plus
    participant-identifiable baselines."""
    base = GeneratorParams(
        pupil_dilation_mm_per_level=0.0,
        pupil_reversal_rate_gain=0.0,
        hr_bpm_per_level=0.0,
        eda_scr_rate_gain=0.0,
        transition=((0.3, 0.4, 0.3),) * 3,
    )
    return replace(base, **overrides)


def hr_only_params(**overrides) -> GeneratorParams:
    """Only heart rate carries planted signal."""
    base = GeneratorParams(
        pupil_dilation_mm_per_level=0.0,
        pupil_reversal_rate_gain=0.0,
        eda_scr_rate_gain=0.0,
        hr_bpm_per_level=7.0,
    )
    return replace(base, **overrides)


def _report_schedule(p: GeneratorParams, rng: np.random.Generator):
    """Report start/end times: a fixed period after the previous report
    closes, plus an exponential task-overrun delay."""
    starts, ends = [], []
    t = 0.0
    while True:
        overrun = rng.exponential(p.task_overrun_mean_s) if p.task_overrun_mean_s > 0 else 0.0
        start = t + p.report_period_s + overrun
        end = start + p.report_duration_s
        if end > p.session_s:
            break
        starts.append(start)
        ends.append(end)
        t = end
    return np.array(starts), np.array(ends)


def _level_weight(t: np.ndarray, starts: np.ndarray, p: GeneratorParams):
    """Per-sample latent level index and effect weight.

    Each report's level governs the stretch of task time before it; with an
    effect horizon only the last effect_horizon_s before the report carries
    the effect.
    """
    gov = np.minimum(np.searchsorted(starts, t, side="left"), starts.size - 1)
    if p.effect_horizon_s is None:
        w = np.ones(t.size)
    else:
        w = ((starts[gov] - t >= 0.0) & (starts[gov] - t <= p.effect_horizon_s)).astype(np.float64)
    return gov, w


def _sample_levels(n: int, p: GeneratorParams, rng: np.random.Generator) -> np.ndarray:
    t = np.asarray(p.transition)
    levels = np.empty(n, dtype=np.int64)
    levels[0] = rng.choice(3, p=stationary_distribution(t))
    for i in range(1, n):
        levels[i] = rng.choice(3, p=t[levels[i - 1]])
    return levels


def _sample_items(level: int, p: GeneratorParams, rng: np.random.Generator) -> tuple[int, ...]:
    mu = _LEVEL_ITEM_MEANS[level]
    raw = rng.normal(mu, p.item_sigma, size=8)
    return tuple(int(v) for v in np.clip(np.rint(raw), 1, 10))


def _ar1(n: int, time_constant_samples: float, sigma: float, rng: np.random.Generator) -> np.ndarray:
    phi = math.exp(-1.0 / time_constant_samples)
    innov = rng.normal(0.0, sigma * math.sqrt(1.0 - phi * phi), size=n)
    return lfilter([1.0], [1.0, -phi], innov)


def _pupil_stream(p: GeneratorParams, level_of, starts, rng: np.random.Generator):
    n = int(p.session_s * PUPIL_RATE_HZ)
    t = np.arange(n) / PUPIL_RATE_HZ
    gov, w = _level_weight(t, starts, p)
    level = level_of[gov].astype(np.float64) * w

    baseline = rng.normal(4.5, 0.35)
    drift = _ar1(n, 30.0 * PUPIL_RATE_HZ, 0.08, rng)
    freq = 1.2 * (1.0 + p.pupil_reversal_rate_gain * level)
    phase = 2.0 * np.pi * np.cumsum(freq) / PUPIL_RATE_HZ + rng.uniform(0.0, 2.0 * np.pi)
    osc = 0.05 * np.sin(phase)
    noise = rng.normal(0.0, p.pupil_noise_mm, size=n)
    value = baseline + p.pupil_dilation_mm_per_level * level + drift + osc + noise
    confidence = np.clip(rng.normal(0.97, 0.015, size=n), 0.0, 1.0)

    # blinks: diameter collapses, device confidence craters
    blinks = []
    bt = rng.exponential(1.0 / p.blink_rate_hz) if p.blink_rate_hz > 0 else np.inf
    while bt < p.session_s:
        dur = rng.uniform(0.1, 0.35)
        onset, offset = bt, min(bt + dur, p.session_s)
        blinks.append(BlinkEvent(onset, offset))
        lo, hi = np.searchsorted(t, [onset, offset])
        value[lo:hi] = rng.uniform(0.8, 1.4)
        confidence[lo:hi] = np.clip(rng.normal(0.12, 0.05, size=hi - lo), 0.0, 1.0)
        bt = offset + rng.exponential(1.0 / p.blink_rate_hz)

    # sporadic low-confidence stretches outside blinks
    lt = rng.exponential(1.0 / p.low_confidence_rate) if p.low_confidence_rate > 0 else np.inf
    while lt < p.session_s:
        dur = rng.uniform(0.5, 2.0)
        lo, hi = np.searchsorted(t, [lt, lt + dur])
        confidence[lo:hi] = np.minimum(confidence[lo:hi], rng.uniform(0.2, 0.6))
        value[lo:hi] += rng.normal(0.0, 0.3, size=hi - lo)
        lt = lt + dur + rng.exponential(1.0 / p.low_confidence_rate)

    value = np.maximum(value, 0.5)
    series = SensorSeries("pupil", PUPIL_RATE_HZ, t, value, confidence)
    return series, tuple(blinks)


def _eda_stream(p: GeneratorParams, level_of, starts, rng: np.random.Generator):
    n = int(p.session_s * EDA_RATE_HZ)
    t = np.arange(n) / EDA_RATE_HZ
    gov, w = _level_weight(t, starts, p)
    level = level_of[gov].astype(np.float64) * w

    baseline = max(rng.normal(2.0, 0.4), 0.5)
    tonic = 0.3 * np.sin(2.0 * np.pi * t / rng.uniform(500.0, 900.0) + rng.uniform(0.0, 2.0 * np.pi))
    scr_rate = 0.04 * (1.0 + p.eda_scr_rate_gain * level)  # events per second
    impulses = (rng.random(n) < scr_rate / EDA_RATE_HZ) * rng.uniform(0.2, 0.6, size=n)
    decay = math.exp(-1.0 / (4.0 * EDA_RATE_HZ))  # 4 s time constant
    phasic = lfilter([1.0], [1.0, -decay], impulses)
    noise = rng.normal(0.0, p.eda_noise_us, size=n)
    value = np.maximum(baseline + tonic + phasic + noise, 0.05)
    return SensorSeries("eda", EDA_RATE_HZ, t, value)


def _hr_stream(p: GeneratorParams, level_of, starts, rng: np.random.Generator):
    n_spans = int(p.session_s / _HR_SPAN_S)
    t = (np.arange(n_spans) + 1) * _HR_SPAN_S
    mid = t - 0.5 * _HR_SPAN_S
    gov, w = _level_weight(mid, starts, p)
    level = level_of[gov].astype(np.float64) * w

    baseline = rng.normal(72.0, 4.0)
    value = baseline + p.hr_bpm_per_level * level + rng.normal(0.0, p.hr_noise_bpm, size=n_spans)
    return SensorSeries("hr", 1.0 / _HR_SPAN_S, t, value)


def generate_session(p: GeneratorParams, participant_index: int) -> tuple[Session, GroundTruth]:
    if not 0 <= participant_index < p.n_participants:
        raise InvalidParams("participant_index",
                            f"must be in [0, {p.n_participants}), got {participant_index}")
    rng = np.random.default_rng(np.random.SeedSequence([p.seed, participant_index]))
    pid = f"p{participant_index:02d}"

    starts, ends = _report_schedule(p, rng)
    if starts.size == 0:
        raise InvalidParams("session_minutes", "session too short to contain any report")
    levels = _sample_levels(starts.size, p, rng)
    items = tuple(_sample_items(int(lv), p, rng) for lv in levels)

    pupil, blinks = _pupil_stream(p, levels, starts, rng)
    eda = _eda_stream(p, levels, starts, rng)
    hr = _hr_stream(p, levels, starts, rng)

    reports = tuple(
        ReportEvent(
            start=float(s),
            end=float(e),
            intrinsic=it[0:3],
            extraneous=it[3:5],
            germane=it[5:7],
            overall=it[7],
        )
        for s, e, it in zip(starts, ends, items)
    )
    session = Session(
        participant_id=pid,
        pupil=pupil,
        blinks=blinks,
        eda=eda,
        hr=hr,
        reports=reports,
    )
    truth = GroundTruth(
        participant_id=pid,
        levels=tuple(LEVELS[int(lv)] for lv in levels),
        items=items,
    )
    return session, truth


def generate_cohort(p: GeneratorParams) -> list[tuple[Session, GroundTruth]]:
    return [generate_session(p, i) for i in range(p.n_participants)]


def iter_cohort_sessions(p: GeneratorParams):
    """Memory-lean iterator over sessions only (truth discarded)."""
    for i in range(p.n_participants):
        yield generate_session(p, i)[0]


def write_cohort(p: GeneratorParams, out_dir: str) -> list[str]:
    """Write each participant under out_dir/<pid>/ in the manifest/CSV
    layout, next to a truth.csv sidecar. Returns manifest paths."""
    paths = []
    for i in range(p.n_participants):
        session, truth = generate_session(p, i)
        session_dir = os.path.join(out_dir, session.participant_id)
        paths.append(save_session(session, session_dir))
        with open(os.path.join(session_dir, "truth.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("report_index,latent_level\n")
            for idx, level in enumerate(truth.levels):
                fh.write(f"{idx},{level}\n")
    return paths
