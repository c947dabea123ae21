import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import signal

from cogload import errors
from cogload.preprocess import (
    CleaningConfig,
    FilterCoefficients,
    clean_eda,
    clean_pupil,
    clean_session,
    design_butterworth,
    filter_low_confidence,
    interpolate_gaps,
    lowpass_zero_phase,
    moving_average,
    remove_blink_intervals,
    resample_uniform,
)
from cogload.sensors import BlinkEvent, SensorSeries
from conftest import make_session


def series(t, v, conf=None, modality="pupil", rate=200.0):
    return SensorSeries(modality, rate, t, v, conf)


class TestCleaningConfig:
    def test_defaults(self):
        cfg = CleaningConfig()
        assert cfg.blink_guard_s == 0.25
        assert cfg.min_confidence == 0.65
        assert (cfg.butter_order, cfg.butter_cutoff_hz) == (3, 4.0)
        assert (cfg.sma_k_eda, cfg.sma_k_hr) == (5, 3)

    @pytest.mark.parametrize("kw", [
        {"blink_guard_s": -0.1},
        {"min_confidence": 1.5},
        {"butter_order": 0},
        {"butter_cutoff_hz": 120.0},  # beyond Nyquist for 200 Hz
        {"sma_k_eda": 4},
    ])
    def test_rejects_bad_fields(self, kw):
        with pytest.raises(errors.CogloadError) as exc:
            CleaningConfig(**kw)
        assert next(iter(kw)) in str(exc.value)


class TestFilterDesign:
    def test_matches_reference_design(self):
        c = design_butterworth(3, 4.0, 200.0)
        b_ref, a_ref = signal.butter(3, 4.0, fs=200.0)
        np.testing.assert_allclose(c.b, b_ref, rtol=0, atol=1e-12)
        np.testing.assert_allclose(c.a, a_ref, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("order,cutoff,rate", [
        (1, 4.0, 200.0), (2, 0.5, 4.0), (3, 4.0, 200.0), (4, 30.0, 128.0), (5, 10.0, 60.0),
    ])
    def test_halfpower_at_cutoff(self, order, cutoff, rate):
        c = design_butterworth(order, cutoff, rate)
        assert c.response_at(0.0, rate) == pytest.approx(1.0, abs=1e-9)
        assert c.response_at(cutoff, rate) == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-9)

    def test_poles_inside_unit_circle(self):
        c = design_butterworth(3, 4.0, 200.0)
        assert np.abs(np.roots(c.a)).max() < 1.0

    def test_coefficient_validation(self):
        with pytest.raises(errors.CogloadError):
            FilterCoefficients(b=(0.5, 0.5), a=(2.0, 0.0))  # a[0] != 1
        with pytest.raises(errors.CogloadError):
            FilterCoefficients(b=(1.0, 1.0), a=(1.0, 0.0))  # DC gain 2
        with pytest.raises(errors.CogloadError):
            FilterCoefficients(b=(2.0, -1.0), a=(1.0, -2.0))  # unstable pole

    def test_invalid_cutoff(self):
        with pytest.raises(errors.InvalidCutoff):
            design_butterworth(3, 100.0, 200.0)
        with pytest.raises(errors.InvalidCutoff):
            design_butterworth(3, 0.0, 200.0)
        with pytest.raises(errors.InvalidParams):
            design_butterworth(0, 4.0, 200.0)


class TestBlinkRemoval:
    def test_guard_interval_marked_invalid(self):
        t = np.arange(0.0, 2.0, 0.01)
        s = series(t, np.full(t.size, 4.0))
        out = remove_blink_intervals(s, [BlinkEvent(1.0, 1.1)], guard_s=0.25)
        dropped = ~out.valid
        assert dropped.any()
        assert t[dropped].min() >= 0.75 - 1e-12
        assert t[dropped].max() <= 1.35 + 1e-12
        assert out.valid[(t < 0.74) | (t > 1.36)].all()

    def test_overlapping_blinks_union(self):
        t = np.arange(0.0, 1.0, 0.01)
        s = series(t, np.full(t.size, 4.0))
        a = remove_blink_intervals(s, [BlinkEvent(0.3, 0.4), BlinkEvent(0.35, 0.5)], 0.0)
        b = remove_blink_intervals(s, [BlinkEvent(0.3, 0.5)], 0.0)
        assert np.array_equal(a.valid, b.valid)

    def test_negative_guard_rejected(self):
        s = series([0.0, 0.1], [4.0, 4.0])
        with pytest.raises(errors.InvalidParams):
            remove_blink_intervals(s, [BlinkEvent(0.0, 0.05)], -1.0)


class TestConfidenceGate:
    def test_strictly_below_dropped(self):
        s = series([0.0, 0.1, 0.2], [4.0, 4.1, 4.2], [0.64, 0.65, 0.9])
        out = filter_low_confidence(s, 0.65)
        assert out.valid.tolist() == [False, True, True]

    def test_bounds_validated(self):
        s = series([0.0], [4.0])
        with pytest.raises(errors.InvalidParams):
            filter_low_confidence(s, 1.2)


class TestInterpolation:
    def test_linear_fill_and_edge_clamp(self):
        s = series([0.0, 1.0, 2.0, 3.0, 4.0], [9.0, 1.0, 5.0, 5.0, 7.0])
        marked = s.with_columns(valid=np.array([False, True, False, True, False]))
        out = interpolate_gaps(marked)
        assert out.valid.all()
        assert out.value.tolist() == [1.0, 1.0, 3.0, 5.0, 5.0]

    def test_all_valid_passthrough(self):
        s = series([0.0, 1.0], [1.0, 2.0])
        assert interpolate_gaps(s) is s

    def test_too_sparse(self):
        s = series([0.0, 1.0], [1.0, 2.0]).with_columns(valid=np.array([True, False]))
        with pytest.raises(errors.TooSparse):
            interpolate_gaps(s)


class TestResample:
    def test_count_and_grid(self):
        s = series([0.5, 1.0, 2.0, 3.6], [1.0, 2.0, 3.0, 4.0], rate=200.0)
        out = resample_uniform(s, 2.0)
        assert len(out) == int(np.ceil(3.1 * 2.0))
        np.testing.assert_allclose(out.t, 0.5 + np.arange(7) / 2.0)
        assert out.t[-1] <= s.t[-1]

    def test_interpolates_only_valid(self):
        s = series([0.0, 1.0, 2.0], [0.0, 100.0, 2.0],
                   ).with_columns(valid=np.array([True, False, True]))
        out = resample_uniform(s, 1.0)
        np.testing.assert_allclose(out.value, [0.0, 1.0])

    @given(st.integers(3, 50), st.floats(0.5, 50.0), st.integers(0, 2**32 - 1))
    def test_output_uniform_and_inside_span(self, n, rate, seed):
        rng = np.random.default_rng(seed)
        t = np.cumsum(rng.uniform(0.01, 0.5, n))
        s = series(t, rng.normal(size=n), rate=200.0)
        out = resample_uniform(s, rate)
        assert len(out) == int(np.ceil(s.duration * rate))
        if len(out) > 1:
            np.testing.assert_allclose(np.diff(out.t), 1.0 / rate, rtol=0, atol=1e-12)
        assert out.t[0] == t[0] and out.t[-1] <= t[-1] + 1e-9


class TestZeroPhase:
    def test_constant_preserved(self):
        c = design_butterworth(3, 4.0, 200.0)
        t = np.arange(0.0, 1.0, 1 / 200.0)
        s = series(t, np.full(t.size, 3.3))
        out = lowpass_zero_phase(s, c)
        np.testing.assert_allclose(out.value, 3.3, rtol=0, atol=1e-9)

    def test_attenuates_above_cutoff(self):
        c = design_butterworth(3, 4.0, 200.0)
        t = np.arange(0.0, 4.0, 1 / 200.0)
        hi = np.sin(2 * np.pi * 30.0 * t)
        out = lowpass_zero_phase(series(t, hi), c)
        core = slice(200, -200)
        assert np.abs(out.value[core]).max() < 0.01

    def test_zero_phase_no_lag(self):
        c = design_butterworth(3, 4.0, 200.0)
        t = np.arange(0.0, 8.0, 1 / 200.0)
        lo = np.sin(2 * np.pi * 1.0 * t)
        out = lowpass_zero_phase(series(t, lo), c)
        core = slice(400, -400)
        lag = np.argmax(np.correlate(out.value[core], lo[core], "same")) - (out.value[core].size // 2)
        assert lag == 0

    def test_too_short(self):
        c = design_butterworth(3, 4.0, 200.0)
        t = np.arange(11) / 200.0
        with pytest.raises(errors.TooShort):
            lowpass_zero_phase(series(t, np.zeros(11)), c)


class TestMovingAverage:
    def test_hand_oracle(self):
        s = series([0.0, 1.0, 2.0, 3.0], [1.0, 2.0, 3.0, 4.0], modality="eda", rate=4.0)
        out = moving_average(s, 3)
        assert out.value.tolist() == [1.5, 2.0, 3.0, 3.5]

    def test_k1_identity(self):
        s = series([0.0, 1.0], [5.0, 6.0], modality="hr", rate=0.1)
        assert moving_average(s, 1) is s

    @pytest.mark.parametrize("k", [0, 2, 4, -3])
    def test_rejects_even_or_nonpositive(self, k):
        s = series([0.0, 1.0], [5.0, 6.0], modality="eda", rate=4.0)
        with pytest.raises(errors.InvalidK):
            moving_average(s, k)

    @given(st.integers(1, 30), st.integers(0, 2**32 - 1))
    def test_matches_truncated_window_bruteforce(self, half, seed):
        k = 2 * (half // 2) + 1
        rng = np.random.default_rng(seed)
        n = rng.integers(1, 40)
        v = rng.normal(size=n)
        s = series(np.arange(n, dtype=float), v, modality="eda", rate=4.0)
        out = moving_average(s, k)
        for i in range(n):
            lo, hi = max(0, i - k // 2), min(n, i + k // 2 + 1)
            assert out.value[i] == pytest.approx(v[lo:hi].mean(), abs=1e-12)


class TestFullChains:
    def test_clean_pupil_uniform_and_filtered(self, session_small):
        out = clean_pupil(session_small.pupil, session_small.blinks)
        assert out.valid.all()
        np.testing.assert_allclose(np.diff(out.t), 1 / 200.0, rtol=0, atol=1e-9)
        # blink artifact region no longer contains collapsed values
        region = (out.t >= 49.0) & (out.t <= 51.5)
        assert out.value[region].min() > 3.5

    def test_clean_eda_smooths(self, session_small):
        out = clean_eda(session_small.eda)
        assert len(out) == len(session_small.eda)
        assert np.abs(np.diff(out.value)).mean() < np.abs(np.diff(session_small.eda.value)).mean()

    def test_clean_session_carries_events(self, session_small):
        cleaned = clean_session(session_small)
        assert cleaned.reports == session_small.reports
        assert cleaned.blinks == session_small.blinks
        assert cleaned.participant_id == session_small.participant_id
