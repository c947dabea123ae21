"""Per-modality signal cleaning.

Pupil: blink excision with a guard margin, confidence gating, linear gap
interpolation, uniform resampling, then zero-phase low-pass filtering.
EDA and heart rate: centered simple moving average.

Filtering is forward-backward so diameter-change timing survives; a causal
pass would lag every velocity and inflection feature downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import filtfilt

from .errors import InvalidCutoff, InvalidK, InvalidParams, TooShort, TooSparse
from .sensors import BlinkEvent, SensorSeries


@dataclass(frozen=True)
class FilterCoefficients:
    """Normalized IIR transfer-function coefficients (a[0] = 1)."""

    b: tuple[float, ...]
    a: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if len(self.b) != len(self.a) or len(self.a) < 2:
            raise InvalidParams("a", "coefficient arrays must have equal length >= 2")
        if abs(self.a[0] - 1.0) > 1e-12:
            raise InvalidParams("a", f"a[0] must be 1, got {self.a[0]}")
        dc = sum(self.b) / sum(self.a)
        if abs(abs(dc) - 1.0) > 1e-6:
            raise InvalidParams("b", f"unity DC gain required, |H(0)| = {abs(dc):.8f}")
        poles = np.roots(self.a)
        if poles.size and np.abs(poles).max() >= 1.0:
            raise InvalidParams("a", "unstable filter: pole on or outside the unit circle")

    @property
    def order(self) -> int:
        return len(self.a) - 1

    def response_at(self, freq_hz: float, rate_hz: float) -> float:
        """Magnitude of the frequency response at freq_hz."""
        z = np.exp(-1j * 2.0 * np.pi * freq_hz / rate_hz)
        num = np.polyval(self.b[::-1], z)
        den = np.polyval(self.a[::-1], z)
        return float(np.abs(num / den))


@dataclass(frozen=True)
class CleaningConfig:
    blink_guard_s: float = 0.25
    min_confidence: float = 0.65
    butter_order: int = 3
    butter_cutoff_hz: float = 4.0
    pupil_rate_hz: float = 200.0
    sma_k_eda: int = 5
    sma_k_hr: int = 3

    def __post_init__(self):
        for name in ("blink_guard_s", "min_confidence", "butter_order", "butter_cutoff_hz",
                     "pupil_rate_hz", "sma_k_eda", "sma_k_hr"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidParams(name, f"must be positive and finite, got {v!r}")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise InvalidParams("min_confidence", f"must lie in [0, 1], got {self.min_confidence}")
        if not self.butter_cutoff_hz < self.pupil_rate_hz / 2.0:
            raise InvalidParams(
                "butter_cutoff_hz",
                f"must be below the Nyquist rate {self.pupil_rate_hz / 2.0}, got {self.butter_cutoff_hz}",
            )
        for name in ("butter_order", "sma_k_eda", "sma_k_hr"):
            if int(getattr(self, name)) != getattr(self, name):
                raise InvalidParams(name, "must be an integer")
        for name in ("sma_k_eda", "sma_k_hr"):
            if getattr(self, name) % 2 == 0:
                raise InvalidParams(name, "centered smoothing needs an odd window")


def remove_blink_intervals(pupil: SensorSeries, blinks: list[BlinkEvent] | tuple[BlinkEvent, ...],
                           guard_s: float) -> SensorSeries:
    """Mark samples within guard_s of any blink interval invalid.

    Overlapping guard intervals union cleanly; a sample is invalidated once
    no matter how many blinks cover it.
    """
    if guard_s < 0:
        raise InvalidParams("guard_s", f"must be >= 0, got {guard_s}")
    if not blinks or not len(pupil):
        return pupil
    valid = pupil.valid.copy()
    for blink in blinks:
        lo = int(np.searchsorted(pupil.t, blink.onset - guard_s, side="left"))
        hi = int(np.searchsorted(pupil.t, blink.offset + guard_s, side="right"))
        valid[lo:hi] = False
    return pupil.with_columns(valid=valid)


def filter_low_confidence(pupil: SensorSeries, min_conf: float) -> SensorSeries:
    """Mark samples with confidence strictly below min_conf invalid."""
    if not 0.0 <= min_conf <= 1.0:
        raise InvalidParams("min_conf", f"must lie in [0, 1], got {min_conf}")
    drop = pupil.confidence < min_conf
    if not drop.any():
        return pupil
    return pupil.with_columns(valid=pupil.valid & ~drop)


def interpolate_gaps(series: SensorSeries) -> SensorSeries:
    """Fill invalid samples by linear interpolation between valid neighbors.

    Leading and trailing invalid runs take the nearest valid value. The
    result is fully valid.
    """
    valid = series.valid
    n_valid = int(np.count_nonzero(valid))
    if n_valid < 2:
        raise TooSparse(f"need >= 2 valid samples to interpolate, have {n_valid}")
    if n_valid == len(series):
        return series
    # np.interp clamps outside the valid range, giving the constant extension.
    value = np.interp(series.t, series.t[valid], series.value[valid])
    return series.with_columns(value=value, valid=np.ones(len(series), dtype=bool))


def design_butterworth(order: int, cutoff_hz: float, rate_hz: float) -> FilterCoefficients:
    """Digital low-pass from the analog Butterworth prototype.

    The analog cutoff is pre-warped so the bilinear transform lands the
    half-power point exactly on cutoff_hz.
    """
    if order < 1 or int(order) != order:
        raise InvalidParams("order", f"must be a positive integer, got {order!r}")
    if not (0.0 < cutoff_hz < rate_hz / 2.0):
        raise InvalidCutoff(f"cutoff {cutoff_hz} Hz outside (0, {rate_hz / 2.0}) for rate {rate_hz} Hz")
    wc = 2.0 * rate_hz * math.tan(math.pi * cutoff_hz / rate_hz)
    k = np.arange(1, order + 1)
    # Left-half-plane prototype poles on the circle of radius wc.
    theta = np.pi * (2 * k - 1) / (2 * order) + np.pi / 2
    s_poles = wc * np.exp(1j * theta)
    fs2 = 2.0 * rate_hz
    z_poles = (fs2 + s_poles) / (fs2 - s_poles)
    a = np.real(np.poly(z_poles))
    b0 = np.poly(-np.ones(order))  # all zeros at z = -1
    gain = np.sum(a) / np.sum(b0)
    b = np.real(gain * b0)
    return FilterCoefficients(b=tuple(b), a=tuple(a))


def resample_uniform(series: SensorSeries, rate_hz: float) -> SensorSeries:
    """Resample valid samples onto a uniform grid by linear interpolation.

    The grid starts at the first timestamp with spacing 1/rate_hz and carries
    ceil(duration * rate_hz) samples, all inside the recorded span.
    """
    if not rate_hz > 0:
        raise InvalidParams("rate_hz", f"must be positive, got {rate_hz}")
    valid = series.valid
    if int(np.count_nonzero(valid)) < 2:
        raise TooSparse("need >= 2 valid samples to resample")
    t_src = series.t[valid]
    v_src = series.value[valid]
    duration = float(t_src[-1] - t_src[0])
    n = math.ceil(duration * rate_hz)
    t_new = t_src[0] + np.arange(n) / rate_hz
    return SensorSeries(series.modality, rate_hz, t_new, np.interp(t_new, t_src, v_src))


def lowpass_zero_phase(series: SensorSeries, c: FilterCoefficients) -> SensorSeries:
    """Forward-backward IIR filtering: squared magnitude response, zero phase.

    Expects a uniformly resampled series; output timestamps equal input
    timestamps.
    """
    n = len(series)
    if n < 3 * (c.order + 1):
        raise TooShort(f"need >= {3 * (c.order + 1)} samples for order {c.order}, have {n}")
    padlen = min(3 * (c.order + 1), n - 1)
    filtered = filtfilt(np.asarray(c.b), np.asarray(c.a), series.value, padlen=padlen)
    return series.with_columns(value=filtered)


def moving_average(series: SensorSeries, k: int) -> SensorSeries:
    """Centered simple moving average with edge-truncated windows."""
    if k < 1 or k % 2 == 0:
        raise InvalidK(f"window size must be odd and >= 1, got {k}")
    if k == 1 or len(series) == 0:
        return series
    half = k // 2
    n = len(series)
    csum = np.concatenate(([0.0], np.cumsum(series.value)))
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    smoothed = (csum[hi] - csum[lo]) / (hi - lo)
    return series.with_columns(value=smoothed)


def clean_pupil(pupil: SensorSeries, blinks, cfg: CleaningConfig = CleaningConfig()) -> SensorSeries:
    """Full pupil chain: blink excision, confidence gate, gap interpolation,
    uniform resampling, zero-phase low-pass."""
    s = remove_blink_intervals(pupil, blinks, cfg.blink_guard_s)
    s = filter_low_confidence(s, cfg.min_confidence)
    s = interpolate_gaps(s)
    s = resample_uniform(s, cfg.pupil_rate_hz)
    coeff = design_butterworth(cfg.butter_order, cfg.butter_cutoff_hz, cfg.pupil_rate_hz)
    return lowpass_zero_phase(s, coeff)


def clean_eda(eda: SensorSeries, cfg: CleaningConfig = CleaningConfig()) -> SensorSeries:
    return moving_average(eda, cfg.sma_k_eda)


def clean_hr(hr: SensorSeries, cfg: CleaningConfig = CleaningConfig()) -> SensorSeries:
    return moving_average(hr, cfg.sma_k_hr)


def clean_session(session, cfg: CleaningConfig = CleaningConfig()):
    """Run each stream's cleaning chain over the whole recording; blink and
    report events carry through unchanged."""
    return replace(
        session,
        pupil=clean_pupil(session.pupil, session.blinks, cfg),
        eda=clean_eda(session.eda, cfg),
        hr=clean_hr(session.hr, cfg),
    )
