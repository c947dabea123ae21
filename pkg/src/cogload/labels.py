"""Questionnaire scoring and discretization into the three-level target.

Each self-report carries three intrinsic-load items, two extraneous-load
items, two germane-load items, and one overall item, all on a 1-10 agreement
scale. The final score is the unweighted mean of the three sub-scale means
and the overall item, then cut into low / moderate / high.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidEdges
from .sensors import ReportEvent, Segment

DEFAULT_EDGES = (4.0, 7.0)


@functools.total_ordering
class CognitiveLoadLevel(enum.Enum):
    LOW = "low"
    MODERATE = "moderate"
    HIGH = "high"

    def __lt__(self, other):
        if not isinstance(other, CognitiveLoadLevel):
            return NotImplemented
        return LEVELS.index(self.value) < LEVELS.index(other.value)


# Canonical class order used everywhere a fixed ordering matters
# (confusion matrices, tie-breaking, report columns).
LEVELS = tuple(m.value for m in CognitiveLoadLevel)


@dataclass(frozen=True)
class CognitiveLoadScore:
    intrinsic_mean: float
    extraneous_mean: float
    germane_mean: float
    overall_item: float
    final: float

    def __post_init__(self):
        parts = (self.intrinsic_mean, self.extraneous_mean, self.germane_mean, self.overall_item)
        for v in (*parts, self.final):
            if not 1.0 <= v <= 10.0:
                raise ValueError(f"score component {v} outside [1, 10]")
        expected = sum(parts) / 4.0
        if abs(self.final - expected) > 1e-9:
            raise ValueError(f"final {self.final} != mean of components {expected}")


def score_questionnaire(r: ReportEvent) -> CognitiveLoadScore:
    im = sum(r.intrinsic) / len(r.intrinsic)
    em = sum(r.extraneous) / len(r.extraneous)
    gm = sum(r.germane) / len(r.germane)
    ov = float(r.overall)
    return CognitiveLoadScore(
        intrinsic_mean=im,
        extraneous_mean=em,
        germane_mean=gm,
        overall_item=ov,
        final=(im + em + gm + ov) / 4.0,
    )


def check_edges(edges) -> tuple[float, float]:
    e1, e2 = float(edges[0]), float(edges[1])
    if not (1.0 < e1 < e2 < 10.0):
        raise InvalidEdges(f"edges must satisfy 1 < e1 < e2 < 10, got ({e1}, {e2})")
    return e1, e2


def discretize(s: CognitiveLoadScore, edges=DEFAULT_EDGES) -> CognitiveLoadLevel:
    """Left-closed bins: low < e1 <= moderate < e2 <= high."""
    e1, e2 = check_edges(edges)
    if s.final < e1:
        return CognitiveLoadLevel.LOW
    if s.final < e2:
        return CognitiveLoadLevel.MODERATE
    return CognitiveLoadLevel.HIGH


def tertile_edges(finals) -> tuple[float, float]:
    """Data-driven alternative to the fixed edges: the 1/3 and 2/3 quantiles."""
    finals = np.asarray(finals, dtype=np.float64)
    if finals.size < 3:
        raise InvalidEdges(f"need >= 3 scores for tertiles, have {finals.size}")
    e1, e2 = np.quantile(finals, [1.0 / 3.0, 2.0 / 3.0]).tolist()
    if not e1 < e2:
        raise InvalidEdges("degenerate tertiles: score distribution too concentrated")
    return float(e1), float(e2)


def label_segments(segments: list[Segment], reports: tuple[ReportEvent, ...],
                   edges=DEFAULT_EDGES) -> list[Segment]:
    """Attach the discretized level of each segment's own report."""
    return [
        seg.with_label(discretize(score_questionnaire(reports[seg.report_index]), edges))
        for seg in segments
    ]


def level_distribution(segments: list[Segment]) -> dict[str, int]:
    counts = {name: 0 for name in LEVELS}
    for seg in segments:
        if seg.label is None:
            raise ValueError(f"segment {seg.segment_id} has no label")
        counts[seg.label.value] += 1
    return counts
