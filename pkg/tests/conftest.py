import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cogload.sensors import BlinkEvent, ReportEvent, SensorSeries, Session

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def make_report(start: float, end: float, items=(5, 5, 5, 5, 5, 5, 5, 5)) -> ReportEvent:
    return ReportEvent(start=start, end=end, intrinsic=tuple(items[0:3]),
                       extraneous=tuple(items[3:5]), germane=tuple(items[5:7]),
                       overall=items[7])


def make_session(participant_id: str = "p00", duration: float = 400.0,
                 report_starts=(250.0, 340.0), seed: int = 0,
                 blinks=(BlinkEvent(50.0, 50.2), BlinkEvent(120.0, 120.3))) -> Session:
    """Small hand-sized session: smooth pupil with artifacts, flat EDA/HR."""
    rng = np.random.default_rng(seed)
    tp = np.arange(0.0, duration, 1.0 / 200.0)
    pupil = SensorSeries(
        "pupil", 200.0, tp,
        4.5 + 0.1 * np.sin(2 * np.pi * 1.2 * tp) + rng.normal(0.0, 0.05, tp.size),
        np.clip(rng.normal(0.97, 0.01, tp.size), 0.0, 1.0),
    )
    te = np.arange(0.0, duration, 0.25)
    eda = SensorSeries("eda", 4.0, te, 2.0 + 0.3 * np.sin(2 * np.pi * te / 97.0)
                       + rng.normal(0.0, 0.05, te.size))
    th = np.arange(10.0, duration + 1e-9, 10.0)
    hr = SensorSeries("hr", 0.1, th, 72.0 + rng.normal(0.0, 2.0, th.size))
    reports = tuple(make_report(s, s + 30.0) for s in report_starts)
    return Session(participant_id, pupil, tuple(blinks), eda, hr, reports)


@pytest.fixture(scope="session")
def session_small() -> Session:
    return make_session()
