"""Domain types for physiological recording sessions, plus ingestion and
label-aligned window segmentation.

A session bundles three timestamped sensor streams (pupil diameter in mm at
200 Hz, electrodermal activity in microsiemens at 4 Hz, heart rate in bpm
emitted once per 10 s span), device-detected blink events, and the
questionnaire self-reports used as labels. All timestamps are seconds since a
manifest-declared epoch, so no cross-device clock reconciliation happens here.

On-disk layout (one directory per participant):

    manifest.json   {participant_id, pupil_csv, blinks_csv, eda_csv,
                     hr_csv, reports_csv, epoch}
    pupil.csv       t,diameter_mm,confidence
    blinks.csv      onset,offset
    eda.csv         t,eda_us
    hr.csv          t,bpm
    reports.csv     start,end,i1,i2,i3,e1,e2,g1,g2,cl

All CSVs are UTF-8 with a required header row and '.' decimal separator.
Note: the questionnaire instrument is described as a 10-item scale but the
enumerated sub-scales carry 3 + 2 + 2 + 1 = 8 items; the file format carries
the 8 enumerated items.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import (
    InvalidSession,
    MalformedRow,
    MissingData,
    MissingFile,
    NonMonotonicClock,
)

MODALITIES = ("pupil", "eda", "hr")

PUPIL_RATE_HZ = 200.0
EDA_RATE_HZ = 4.0
HR_RATE_HZ = 0.1  # one value per 10-second span

# Fraction of consecutive out-of-order rows tolerated before the file is
# rejected instead of silently sorted.
_MAX_DISORDER_FRACTION = 0.01


@dataclass(frozen=True)
class Sample:
    """One timestamped scalar measurement.

    `confidence` is the device-reported certainty in [0, 1]; it is meaningful
    for pupil data only and fixed at 1.0 for the other streams.
    """

    t: float
    value: float
    confidence: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise InvalidSession(f"sample timestamp must be finite and >= 0, got {self.t}")
        if not math.isfinite(self.value):
            raise InvalidSession(f"sample value must be finite, got {self.value}")
        if not (0.0 <= self.confidence <= 1.0):
            raise InvalidSession(f"confidence must lie in [0, 1], got {self.confidence}")


class SensorSeries:
    """A time-ordered scalar stream with per-sample validity.

    Internally array-backed (float64 columns plus a boolean validity mask) so
    that cleaning and feature extraction stay vectorized. The arrays are
    frozen after construction; operations return new series.
    """

    __slots__ = ("modality", "nominal_rate", "t", "value", "confidence", "valid")

    def __init__(self, modality, nominal_rate, t, value, confidence=None, valid=None):
        if modality not in MODALITIES:
            raise InvalidSession(f"unknown modality {modality!r}")
        if not (math.isfinite(nominal_rate) and nominal_rate > 0):
            raise InvalidSession(f"nominal_rate must be positive, got {nominal_rate}")
        t = np.ascontiguousarray(t, dtype=np.float64)
        value = np.ascontiguousarray(value, dtype=np.float64)
        if confidence is None:
            confidence = np.ones_like(value)
        else:
            confidence = np.ascontiguousarray(confidence, dtype=np.float64)
        if valid is None:
            valid = np.ones(t.shape, dtype=bool)
        else:
            valid = np.ascontiguousarray(valid, dtype=bool)
        if not (t.shape == value.shape == confidence.shape == valid.shape) or t.ndim != 1:
            raise InvalidSession("series columns must be 1-d and equally sized")
        if t.size:
            if not np.isfinite(t).all() or t[0] < 0:
                raise InvalidSession("timestamps must be finite and non-negative")
            if not np.isfinite(value).all():
                raise InvalidSession("values must be finite")
            if np.any(np.diff(t) <= 0):
                raise InvalidSession("timestamps must be strictly increasing")
            if confidence.min() < 0.0 or confidence.max() > 1.0:
                raise InvalidSession("confidence must lie in [0, 1]")
        for arr in (t, value, confidence, valid):
            arr.flags.writeable = False
        self.modality = modality
        self.nominal_rate = float(nominal_rate)
        self.t = t
        self.value = value
        self.confidence = confidence
        self.valid = valid

    @classmethod
    def from_samples(cls, modality: str, nominal_rate: float, samples: Iterable[Sample]) -> "SensorSeries":
        samples = list(samples)
        return cls(
            modality,
            nominal_rate,
            np.array([s.t for s in samples]),
            np.array([s.value for s in samples]),
            np.array([s.confidence for s in samples]),
        )

    def __len__(self):
        return self.t.size

    def __eq__(self, other):
        if not isinstance(other, SensorSeries):
            return NotImplemented
        return (
            self.modality == other.modality
            and self.nominal_rate == other.nominal_rate
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.value, other.value)
            and np.array_equal(self.confidence, other.confidence)
            and np.array_equal(self.valid, other.valid)
        )

    @property
    def samples(self) -> list[Sample]:
        """Materialize as Sample records (small series only; O(n) objects)."""
        return [Sample(float(a), float(b), float(c)) for a, b, c in zip(self.t, self.value, self.confidence)]

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if self.t.size > 1 else 0.0

    def with_columns(self, value=None, valid=None, confidence=None) -> "SensorSeries":
        return SensorSeries(
            self.modality,
            self.nominal_rate,
            self.t,
            self.value if value is None else value,
            self.confidence if confidence is None else confidence,
            self.valid if valid is None else valid,
        )

    def slice_time(self, t_lo: float, t_hi: float) -> "SensorSeries":
        """Samples with t in [t_lo, t_hi)."""
        lo = int(np.searchsorted(self.t, t_lo, side="left"))
        hi = int(np.searchsorted(self.t, t_hi, side="left"))
        return SensorSeries(
            self.modality,
            self.nominal_rate,
            self.t[lo:hi],
            self.value[lo:hi],
            self.confidence[lo:hi],
            self.valid[lo:hi],
        )

    def mask_rows(self, keep: np.ndarray) -> "SensorSeries":
        return SensorSeries(
            self.modality,
            self.nominal_rate,
            self.t[keep],
            self.value[keep],
            self.confidence[keep],
            self.valid[keep],
        )


@dataclass(frozen=True)
class BlinkEvent:
    """Device-detected blink interval."""

    onset: float
    offset: float

    def __post_init__(self):
        if not (math.isfinite(self.onset) and math.isfinite(self.offset)):
            raise InvalidSession("blink bounds must be finite")
        if self.onset > self.offset:
            raise InvalidSession(f"blink onset {self.onset} exceeds offset {self.offset}")


@dataclass(frozen=True)
class ReportEvent:
    """One self-report questionnaire administration.

    Items are 1-10 agreement responses: three intrinsic-load items, two
    extraneous-load items, two germane-load items, and a single overall
    cognitive-load item.
    """

    start: float
    end: float
    intrinsic: tuple[int, int, int]
    extraneous: tuple[int, int]
    germane: tuple[int, int]
    overall: int

    def __post_init__(self):
        if not self.start < self.end:
            raise InvalidSession(f"report start {self.start} must precede end {self.end}")
        for item in self.items:
            if not (isinstance(item, (int, np.integer)) and 1 <= item <= 10):
                raise InvalidSession(f"questionnaire items must be integers in [1, 10], got {item!r}")

    @property
    def items(self) -> tuple[int, ...]:
        return (*self.intrinsic, *self.extraneous, *self.germane, self.overall)


@dataclass(frozen=True)
class Session:
    """All recordings for one participant on a shared session clock."""

    participant_id: str
    pupil: SensorSeries
    blinks: tuple[BlinkEvent, ...]
    eda: SensorSeries
    hr: SensorSeries
    reports: tuple[ReportEvent, ...]
    epoch: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "blinks", tuple(self.blinks))
        object.__setattr__(self, "reports", tuple(self.reports))
        prev_end = -math.inf
        for r in self.reports:
            if r.start < prev_end:
                raise InvalidSession("report intervals must be non-overlapping and time-ordered")
            prev_end = r.end

    def stream(self, modality: str) -> SensorSeries:
        return {"pupil": self.pupil, "eda": self.eda, "hr": self.hr}[modality]


@dataclass(frozen=True)
class Segment:
    """Sensor data in the window preceding one self-report.

    Slices cover [report.start - window_s, report.start), with samples
    recorded during any questionnaire interval excised.
    """

    participant_id: str
    report_index: int
    window_s: float
    pupil: SensorSeries
    eda: SensorSeries
    hr: SensorSeries
    label: Optional[object] = None  # CognitiveLoadLevel, attached by the labels module

    @property
    def segment_id(self) -> str:
        return f"{self.participant_id}:{self.report_index}"

    def with_label(self, label) -> "Segment":
        return replace(self, label=label)

    def stream(self, modality: str) -> SensorSeries:
        return {"pupil": self.pupil, "eda": self.eda, "hr": self.hr}[modality]


# --- loading -----------------------------------------------------------------

_STREAM_COLUMNS = {
    "pupil": ["t", "diameter_mm", "confidence"],
    "eda": ["t", "eda_us"],
    "hr": ["t", "bpm"],
}
_BLINK_COLUMNS = ["onset", "offset"]
_REPORT_COLUMNS = ["start", "end", "i1", "i2", "i3", "e1", "e2", "g1", "g2", "cl"]


def _read_csv(path: str, columns: list[str]) -> pd.DataFrame:
    if not os.path.isfile(path):
        raise MissingFile(path)
    try:
        df = pd.read_csv(path, float_precision="round_trip", comment="#")
    except pd.errors.EmptyDataError:
        raise MalformedRow(path, 1, "missing header row")
    except Exception:
        df = _scan_for_bad_row(path, columns)
    if list(df.columns) != columns:
        raise MalformedRow(path, 1, f"expected header {','.join(columns)}, got {','.join(map(str, df.columns))}")
    if df.isna().to_numpy().any():
        _scan_for_bad_row(path, columns)
    for col in columns:
        if not np.issubdtype(df[col].dtype, np.number):
            _scan_for_bad_row(path, columns)
    return df

def _scan_for_bad_row(path: str, columns: list[str]):
    """Slow path: locate the first malformed line for a precise error."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if lineno == 1 or not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(columns):
                raise MalformedRow(path, lineno, f"expected {len(columns)} fields, got {len(parts)}")
            for part in parts:
                try:
                    float(part)
                except ValueError:
                    raise MalformedRow(path, lineno, f"non-numeric field {part!r}")
    raise MalformedRow(path, 1, "unparsable file")


def _order_and_dedupe(path: str, t: np.ndarray) -> np.ndarray:
    """Indices that sort t ascending and keep the last row per duplicate timestamp."""
    n = t.size
    descents = int(np.count_nonzero(np.diff(t) < 0))
    if descents > _MAX_DISORDER_FRACTION * n:
        raise NonMonotonicClock(
            f"{path}: {descents} of {n} rows out of order (> {_MAX_DISORDER_FRACTION:.0%})"
        )
    order = np.argsort(t, kind="stable")
    ts = t[order]
    keep = np.ones(ts.size, dtype=bool)
    keep[:-1] = ts[:-1] != ts[1:]  # drop all but the last of each duplicate
    return order[keep]


def _load_stream(path: str, modality: str, rate: float) -> SensorSeries:
    df = _read_csv(path, _STREAM_COLUMNS[modality])
    if len(df) == 0:
        raise MissingData(modality)
    t = df["t"].to_numpy(dtype=np.float64)
    idx = _order_and_dedupe(path, t)
    value_col = _STREAM_COLUMNS[modality][1]
    conf = df["confidence"].to_numpy(np.float64)[idx] if modality == "pupil" else None
    return SensorSeries(modality, rate, t[idx], df[value_col].to_numpy(np.float64)[idx], conf)


def load_session(manifest_path: str) -> Session:
    """Load a recorded session from its manifest (or its directory).

    Streams are time-sorted (silently, below the disorder threshold) and
    duplicate timestamps collapse to the last occurrence in file order.
    """
    if os.path.isdir(manifest_path):
        manifest_path = os.path.join(manifest_path, "manifest.json")
    if not os.path.isfile(manifest_path):
        raise MissingFile(manifest_path)
    with open(manifest_path, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedRow(manifest_path, exc.lineno, "invalid JSON") from exc
    required = {"participant_id", "pupil_csv", "blinks_csv", "eda_csv", "hr_csv", "reports_csv", "epoch"}
    missing = required - manifest.keys()
    if missing:
        raise MalformedRow(manifest_path, 1, f"manifest missing keys {sorted(missing)}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    p = lambda key: os.path.join(base, manifest[key])

    pupil = _load_stream(p("pupil_csv"), "pupil", PUPIL_RATE_HZ)
    eda = _load_stream(p("eda_csv"), "eda", EDA_RATE_HZ)
    hr = _load_stream(p("hr_csv"), "hr", HR_RATE_HZ)

    bdf = _read_csv(p("blinks_csv"), _BLINK_COLUMNS)
    blinks = tuple(
        BlinkEvent(float(on), float(off))
        for on, off in sorted(zip(bdf["onset"], bdf["offset"]))
    )

    rdf = _read_csv(p("reports_csv"), _REPORT_COLUMNS)
    if len(rdf) == 0:
        raise MissingData("reports")
    reports = []
    for row in rdf.sort_values("start").itertuples(index=False):
        reports.append(
            ReportEvent(
                start=float(row.start),
                end=float(row.end),
                intrinsic=(int(row.i1), int(row.i2), int(row.i3)),
                extraneous=(int(row.e1), int(row.e2)),
                germane=(int(row.g1), int(row.g2)),
                overall=int(row.cl),
            )
        )
    return Session(
        participant_id=str(manifest["participant_id"]),
        pupil=pupil,
        blinks=blinks,
        eda=eda,
        hr=hr,
        reports=tuple(reports),
        epoch=float(manifest["epoch"]),
    )


def save_session(session: Session, out_dir: str) -> str:
    """Write a session in the documented manifest/CSV layout. Returns the
    manifest path. Floats are written with repr so a reload is bit-identical."""
    os.makedirs(out_dir, exist_ok=True)

    def write(name: str, header: list[str], rows: Iterable[tuple]) -> None:
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")

    write("pupil.csv", _STREAM_COLUMNS["pupil"],
          zip(session.pupil.t.tolist(), session.pupil.value.tolist(), session.pupil.confidence.tolist()))
    write("eda.csv", _STREAM_COLUMNS["eda"], zip(session.eda.t.tolist(), session.eda.value.tolist()))
    write("hr.csv", _STREAM_COLUMNS["hr"], zip(session.hr.t.tolist(), session.hr.value.tolist()))
    write("blinks.csv", _BLINK_COLUMNS, ((b.onset, b.offset) for b in session.blinks))
    write("reports.csv", _REPORT_COLUMNS,
          ((r.start, r.end, *r.intrinsic, *r.extraneous, *r.germane, r.overall) for r in session.reports))

    manifest = {
        "participant_id": session.participant_id,
        "pupil_csv": "pupil.csv",
        "blinks_csv": "blinks.csv",
        "eda_csv": "eda.csv",
        "hr_csv": "hr.csv",
        "reports_csv": "reports.csv",
        "epoch": session.epoch,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest_path


# --- validation --------------------------------------------------------------

EXPECTED_REPORT_PERIOD_S = 300.0

_GAP_BIN_EDGES = (0.1, 0.5, 1.0, 5.0)


@dataclass(frozen=True)
class StreamReport:
    coverage: float
    gap_histogram: dict[str, int]
    n_samples: int


@dataclass(frozen=True)
class ValidationReport:
    streams: dict[str, StreamReport]
    low_confidence_fraction: float
    n_reports: int
    cadence_ok: bool
    median_report_spacing_s: float


def _coverage(series: SensorSeries, duration: float) -> float:
    if duration <= 0 or len(series) < 2:
        return 0.0
    gaps = np.diff(series.t)
    excess = np.maximum(gaps - 1.0 / series.nominal_rate, 0.0).sum()
    head = max(series.t[0] - 0.0, 0.0)
    tail = max(duration - series.t[-1], 0.0)
    return float(np.clip(1.0 - (excess + head + tail) / duration, 0.0, 1.0))


def _gap_histogram(series: SensorSeries) -> dict[str, int]:
    gaps = np.diff(series.t)
    edges = (0.0, *_GAP_BIN_EDGES, np.inf)
    counts = np.histogram(gaps, bins=edges)[0]
    labels = [f"[{lo:g}s, {hi:g}s)" for lo, hi in zip(edges[:-1], edges[1:])]
    return dict(zip(labels, counts.tolist()))


def validate_session(session: Session, min_confidence: float = 0.65,
                     expected_period_s: float = EXPECTED_REPORT_PERIOD_S) -> ValidationReport:
    """Report-only data quality summary; never raises on poor data."""
    t_max = max(s.t[-1] for s in (session.pupil, session.eda, session.hr) if len(s))
    streams = {
        m: StreamReport(
            coverage=_coverage(session.stream(m), t_max),
            gap_histogram=_gap_histogram(session.stream(m)),
            n_samples=len(session.stream(m)),
        )
        for m in MODALITIES
    }
    n_pupil = len(session.pupil)
    low_conf = float(np.count_nonzero(session.pupil.confidence < min_confidence)) / n_pupil if n_pupil else 0.0
    starts = np.array([r.start for r in session.reports])
    spacing = float(np.median(np.diff(starts))) if starts.size > 1 else float("nan")
    cadence_ok = bool(starts.size > 1 and abs(spacing - expected_period_s) <= 0.25 * expected_period_s)
    return ValidationReport(
        streams=streams,
        low_confidence_fraction=low_conf,
        n_reports=len(session.reports),
        cadence_ok=cadence_ok,
        median_report_spacing_s=spacing,
    )


# --- segmentation ------------------------------------------------------------

@dataclass(frozen=True)
class SkippedWindow:
    report_index: int
    reason: str
    counts: dict[str, int]


@dataclass(frozen=True)
class SegmentationResult:
    segments: list[Segment]
    skipped: list[SkippedWindow]


def min_samples_required(window_s: float, pupil_rate: float = PUPIL_RATE_HZ,
                         eda_rate: float = EDA_RATE_HZ) -> dict[str, float]:
    """Per-stream sample floor for a window to count as populated."""
    return {"pupil": 0.5 * window_s * pupil_rate, "eda": 0.5 * window_s * eda_rate, "hr": 2.0}


def _report_interval_mask(series: SensorSeries, reports: Sequence[ReportEvent]) -> np.ndarray:
    """True for samples inside any report's [start, end] interval."""
    mask = np.zeros(len(series), dtype=bool)
    for r in reports:
        lo = int(np.searchsorted(series.t, r.start, side="left"))
        hi = int(np.searchsorted(series.t, r.end, side="right"))
        mask[lo:hi] = True
    return mask


def segment_windows(session: Session, window_s: float) -> SegmentationResult:
    """Cut one window per self-report, covering [start - window_s, start).

    Samples recorded while any questionnaire was open are excluded from every
    window. Windows missing the per-stream sample floor are dropped and
    recorded in the skip list instead of raising.
    """
    if not window_s > 0:
        raise InvalidSession(f"window_s must be positive, got {window_s}")
    floors = min_samples_required(window_s, session.pupil.nominal_rate, session.eda.nominal_rate)
    in_report = {m: _report_interval_mask(session.stream(m), session.reports) for m in MODALITIES}

    segments: list[Segment] = []
    skipped: list[SkippedWindow] = []
    for idx, report in enumerate(session.reports):
        t_lo, t_hi = report.start - window_s, report.start
        slices = {}
        counts = {}
        for m in MODALITIES:
            stream = session.stream(m)
            lo = int(np.searchsorted(stream.t, t_lo, side="left"))
            hi = int(np.searchsorted(stream.t, t_hi, side="left"))
            keep = ~in_report[m][lo:hi]
            sl = stream.mask_rows(np.arange(lo, hi)[keep]) if not keep.all() else stream.slice_time(t_lo, t_hi)
            slices[m] = sl
            counts[m] = len(sl)
        if all(counts[m] >= floors[m] for m in MODALITIES):
            segments.append(
                Segment(
                    participant_id=session.participant_id,
                    report_index=idx,
                    window_s=float(window_s),
                    pupil=slices["pupil"],
                    eda=slices["eda"],
                    hr=slices["hr"],
                )
            )
        else:
            short = [m for m in MODALITIES if counts[m] < floors[m]]
            skipped.append(SkippedWindow(idx, f"under-populated: {','.join(short)}", counts))
    return SegmentationResult(segments=segments, skipped=skipped)
