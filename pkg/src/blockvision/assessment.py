"""Session scoring: error counts, the accuracy statistic, move timing.

Two error-counting modes exist because the original system recounted a
persistent wrong block on every frame (CumulativeLegacy); UniquePerBlock
tracks each wrong block once by following its centroid across frames.

The accuracy formula was reconstructed by fitting the published result
rows: accuracy = 100 * (moved - (perceived - actual)) / moved. It
reproduces every row to two decimals, but it is a reconstruction, not a
quoted equation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum

from .blocks import BlockColor
from .errors import DomainError, MalformedLog, MismatchedLengths
from .session import EventKind, ProgressEvent, SessionConfig, parse_log

MATCH_RADIUS_PX = 15.0


class ErrorMode(Enum):
    CUMULATIVE_LEGACY = "cumulativeLegacy"
    UNIQUE_PER_BLOCK = "uniquePerBlock"


@dataclass(frozen=True)
class TimingReport:
    mean_color_change_ms: float | None
    mean_same_color_ms: float | None
    per_move_durations: tuple[int, ...]


@dataclass(frozen=True)
class AssessmentReport:
    blocks_moved: int
    actual_errors: int
    perceived_errors: int
    accuracy_percent: float
    mean_color_change_ms: float | None
    mean_same_color_ms: float | None
    per_move_durations: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "blocksMoved": self.blocks_moved,
            "actualErrors": self.actual_errors,
            "perceivedErrors": self.perceived_errors,
            "accuracyPercent": self.accuracy_percent,
            "meanColorChangeMs": self.mean_color_change_ms,
            "meanSameColorMs": self.mean_same_color_ms,
            "perMoveDurations": list(self.per_move_durations),
        }


def report_json(report: AssessmentReport) -> str:
    """The one canonical byte serialization of a report."""
    return json.dumps(report.to_dict(), separators=(",", ":"))


def _frame_blocks(frame) -> list[tuple[str, tuple[float, float]]]:
    """Normalize one detection result to (color, centroid) pairs."""
    if isinstance(frame, dict):
        out = []
        for b in frame.get("blocks", []):
            xs = [c[0] for c in b["corners"]]
            ys = [c[1] for c in b["corners"]]
            out.append((b["color"], (sum(xs) / 4.0, sum(ys) / 4.0)))
        return out
    return [(b.color.value, b.centroid) for b in frame]


def _expected_counts(expected) -> dict[str, int]:
    out: dict[str, int] = {}
    for color, n in expected.items():
        key = color.value if isinstance(color, BlockColor) else str(color)
        out[key] = int(n)
    return out


def count_perceived_errors(frames, expected, mode: ErrorMode) -> int:
    """Count wrong-color blocks over a frame sequence.

    ``frames`` holds one detection result per completed move (dicts in
    the detection JSON shape, or DetectedBlock lists); ``expected`` the
    matching cumulative color multisets. Per frame and color, any
    detected count above the expected one is an error. CumulativeLegacy
    adds those up across frames; UniquePerBlock assigns the excess
    blocks of each frame to persistent tracks (same color, centroid
    within 15 px) and counts tracks.
    """
    if len(frames) != len(expected):
        raise MismatchedLengths(
            f"{len(frames)} frames but {len(expected)} expected multisets"
        )

    cumulative = 0
    tracks: dict[str, list[tuple[float, float]]] = {}
    for frame, exp in zip(frames, expected):
        blocks = _frame_blocks(frame)
        exp_counts = _expected_counts(exp)
        by_color: dict[str, list[tuple[float, float]]] = {}
        for color, centroid in blocks:
            by_color.setdefault(color, []).append(centroid)

        for color, centroids in sorted(by_color.items()):
            excess = len(centroids) - exp_counts.get(color, 0)
            if excess <= 0:
                continue
            cumulative += excess
            known = tracks.setdefault(color, [])

            def nearest(c):
                if not known:
                    return math.inf
                return min(math.dist(c, k) for k in known)

            ranked = sorted(centroids, key=lambda c: (nearest(c), c[1], c[0]))
            for centroid in ranked[:excess]:
                close = [
                    (math.dist(centroid, k), i)
                    for i, k in enumerate(known)
                    if math.dist(centroid, k) <= MATCH_RADIUS_PX
                ]
                if close:
                    known[min(close)[1]] = centroid
                else:
                    known.append(centroid)

    if mode is ErrorMode.CUMULATIVE_LEGACY:
        return cumulative
    return sum(len(v) for v in tracks.values())


def accuracy(moved: int, actual: int, perceived: int) -> float:
    """Percentage of moves not marred by a false positive, 2 decimals."""
    if moved < 1:
        raise DomainError("moved must be >= 1")
    if actual < 0 or perceived < actual:
        raise DomainError("need perceived >= actual >= 0")
    false_positives = perceived - actual
    if false_positives > moved:
        raise DomainError("more false positives than moves")
    return round(100.0 * (moved - false_positives) / moved, 2)


def _cycle_colors(events: list[ProgressEvent]) -> dict[tuple[str, int], BlockColor]:
    colors: dict[tuple[str, int], BlockColor] = {}
    for ev in events:
        if ev.kind is EventKind.FEEDBACK_ISSUED or ev.color_instructed is None:
            continue
        key = (ev.hand.value, ev.cycle_index)
        if key in colors and colors[key] is not ev.color_instructed:
            raise MalformedLog(f"conflicting colors for cycle {key}")
        colors[key] = ev.color_instructed
    return colors


def timing_report(events: list[ProgressEvent]) -> TimingReport:
    """Move durations split into color-change and same-color classes.

    A move's duration is its tap timestamp minus the previous tap's.
    The first cycle of each hand never enters either mean (it has no
    previous color); in later cycles the first move is a color change
    when the cycle color differs from the preceding cycle's, and every
    other move counts as same-color.
    """
    taps = [e for e in events if e.kind is not EventKind.FEEDBACK_ISSUED]
    for prev, cur in zip(taps, taps[1:]):
        if cur.timestamp <= prev.timestamp:
            raise MalformedLog("tap timestamps not strictly increasing")
    colors = _cycle_colors(taps)

    durations: list[int] = []
    change: list[int] = []
    same: list[int] = []
    for i, ev in enumerate(taps):
        if ev.kind is not EventKind.MOVE_TAP:
            continue
        if i == 0:
            raise MalformedLog("move tap with no preceding tap")
        if ev.color_instructed is None:
            raise MalformedLog("move tap missing colorInstructed")
        dur = ev.timestamp - taps[i - 1].timestamp
        durations.append(dur)
        if ev.cycle_index == 0:
            continue
        prev_color = colors.get((ev.hand.value, ev.cycle_index - 1))
        if prev_color is None:
            raise MalformedLog(
                f"no color recorded for cycle {ev.cycle_index - 1} of {ev.hand.value} hand"
            )
        if ev.move_index == 0 and ev.color_instructed is not prev_color:
            change.append(dur)
        else:
            same.append(dur)

    def mean(xs):
        return sum(xs) / len(xs) if xs else None

    return TimingReport(mean(change), mean(same), tuple(durations))


def expected_multisets(events: list[ProgressEvent]) -> list[dict[str, int]]:
    """Per completed move, the colors that should sit in the target area.

    Counts accumulate over a hand and reset at the hand switch (the box
    is repositioned and the blocks return to the source side).
    """
    out: list[dict[str, int]] = []
    counts: dict[str, int] = {}
    for ev in events:
        if ev.kind is EventKind.HAND_SWITCH:
            counts = {}
        elif ev.kind is EventKind.MOVE_TAP:
            if ev.color_instructed is None:
                raise MalformedLog("move tap missing colorInstructed")
            counts[ev.color_instructed.value] = counts.get(ev.color_instructed.value, 0) + 1
            out.append(dict(counts))
    return out


def build_report(
    log,
    frames,
    actual_errors: int = 0,
    mode: ErrorMode = ErrorMode.CUMULATIVE_LEGACY,
) -> AssessmentReport:
    """Compose counting, accuracy, and timing into one report.

    ``log`` may be JSONL text, a (config, events) pair, or an event
    list. ``frames`` must hold one detection result per completed move.
    """
    events = _coerce_events(log)
    expected = expected_multisets(events)
    if len(frames) != len(expected):
        raise MismatchedLengths(
            f"{len(frames)} frames for {len(expected)} completed moves"
        )
    perceived = count_perceived_errors(frames, expected, mode)
    timing = timing_report(events)
    return AssessmentReport(
        blocks_moved=len(expected),
        actual_errors=actual_errors,
        perceived_errors=perceived,
        accuracy_percent=accuracy(len(expected), actual_errors, perceived),
        mean_color_change_ms=timing.mean_color_change_ms,
        mean_same_color_ms=timing.mean_same_color_ms,
        per_move_durations=timing.per_move_durations,
    )


def _coerce_events(log) -> list[ProgressEvent]:
    if isinstance(log, str):
        _, events = parse_log(log)
        return events
    if isinstance(log, tuple) and len(log) == 2 and isinstance(log[0], SessionConfig):
        return list(log[1])
    return list(log)


def reports_to_csv(rows: list[tuple[str, AssessmentReport]]) -> str:
    """Result-table style CSV: one labelled row per session."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        [
            "label",
            "blocksMoved",
            "actualErrors",
            "perceivedErrors",
            "accuracyPercent",
            "meanColorChangeMs",
            "meanSameColorMs",
        ]
    )
    for label, r in rows:
        writer.writerow(
            [
                label,
                r.blocks_moved,
                r.actual_errors,
                r.perceived_errors,
                f"{r.accuracy_percent:.2f}",
                "" if r.mean_color_change_ms is None else f"{r.mean_color_change_ms:.1f}",
                "" if r.mean_same_color_ms is None else f"{r.mean_same_color_ms:.1f}",
            ]
        )
    return buf.getvalue()
