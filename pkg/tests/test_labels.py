import pytest
from hypothesis import given
from hypothesis import strategies as st

from cogload import errors
from cogload.labels import (
    DEFAULT_EDGES,
    LEVELS,
    CognitiveLoadLevel,
    CognitiveLoadScore,
    check_edges,
    discretize,
    label_segments,
    level_distribution,
    score_questionnaire,
    tertile_edges,
)
from cogload.sensors import segment_windows
from conftest import make_report, make_session

items_strategy = st.tuples(*([st.integers(1, 10)] * 8))


class TestScoring:
    def test_hand_oracle(self):
        r = make_report(0.0, 30.0, items=(2, 3, 4, 5, 5, 1, 2, 7))
        s = score_questionnaire(r)
        assert s.intrinsic_mean == 3.0
        assert s.extraneous_mean == 5.0
        assert s.germane_mean == 1.5
        assert s.overall_item == 7.0
        assert s.final == pytest.approx((3.0 + 5.0 + 1.5 + 7.0) / 4.0)

    @given(items_strategy)
    def test_final_is_mean_of_components(self, items):
        s = score_questionnaire(make_report(0.0, 30.0, items=items))
        assert s.final == pytest.approx(
            (s.intrinsic_mean + s.extraneous_mean + s.germane_mean + s.overall_item) / 4.0, abs=1e-12)
        assert 1.0 <= s.final <= 10.0

    def test_component_range_validated(self):
        with pytest.raises(ValueError):
            CognitiveLoadScore(intrinsic_mean=0.5, extraneous_mean=5.0,
                               germane_mean=5.0, overall_item=5.0, final=3.875)

    def test_inconsistent_final_rejected(self):
        with pytest.raises(ValueError):
            CognitiveLoadScore(intrinsic_mean=5.0, extraneous_mean=5.0,
                               germane_mean=5.0, overall_item=5.0, final=6.0)


class TestDiscretize:
    def score(self, final):
        return CognitiveLoadScore(intrinsic_mean=final, extraneous_mean=final,
                                  germane_mean=final, overall_item=final, final=final)

    @pytest.mark.parametrize("final,expected", [
        (1.0, "low"), (3.999999, "low"),
        (4.0, "moderate"), (6.999999, "moderate"),
        (7.0, "high"), (10.0, "high"),
    ])
    def test_left_closed_edges(self, final, expected):
        assert discretize(self.score(final)).value == expected

    def test_custom_edges(self):
        assert discretize(self.score(4.5), edges=(5.0, 8.0)).value == "low"

    @pytest.mark.parametrize("edges", [(7.0, 4.0), (4.0, 4.0), (0.5, 7.0), (4.0, 10.0)])
    def test_bad_edges(self, edges):
        with pytest.raises(errors.InvalidEdges):
            check_edges(edges)

    @given(st.floats(1.0, 10.0), st.floats(1.0, 10.0))
    def test_monotone_in_score(self, f1, f2):
        lo, hi = sorted([f1, f2])
        assert discretize(self.score(lo)) <= discretize(self.score(hi))

    def test_levels_canonical_order(self):
        assert LEVELS == ("low", "moderate", "high")
        assert [m.value for m in CognitiveLoadLevel] == list(LEVELS)


class TestTertiles:
    def test_balanced_sample(self):
        finals = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]
        e1, e2 = tertile_edges(finals)
        assert 1.0 < e1 < e2 < 10.0
        levels = [discretize(TestDiscretize().score(f), (e1, e2)).value for f in finals]
        counts = {lv: levels.count(lv) for lv in LEVELS}
        assert max(counts.values()) - min(counts.values()) <= 1

    def test_degenerate_sample(self):
        with pytest.raises(errors.InvalidEdges):
            tertile_edges([5.0] * 12)


class TestLabelSegments:
    def test_attaches_own_report_level(self):
        session = make_session(report_starts=(250.0, 340.0))
        low = make_report(250.0, 280.0, items=(1, 1, 1, 2, 2, 1, 1, 2))
        high = make_report(340.0, 370.0, items=(9, 9, 9, 8, 8, 9, 9, 9))
        session = type(session)(session.participant_id, session.pupil, session.blinks,
                                session.eda, session.hr, (low, high))
        segs = label_segments(segment_windows(session, 60.0).segments,
                              session.reports, DEFAULT_EDGES)
        assert [s.label.value for s in segs] == ["low", "high"]
        assert level_distribution(segs) == {"low": 1, "moderate": 0, "high": 1}

    def test_unlabeled_in_unlabeled_out(self, session_small):
        segs = segment_windows(session_small, 60.0).segments
        assert all(s.label is None for s in segs)
        labeled = label_segments(segs, session_small.reports, DEFAULT_EDGES)
        assert all(s.label is not None for s in labeled)
