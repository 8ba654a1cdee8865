"""Core domain types: timestamps, sensor events, and labeled activity timelines.

Time is kept as integer microseconds since 1970-01-01 00:00:00, interpreted as
naive local time (no timezone), so every duration computation is exact integer
arithmetic. Activity timelines are total: each instant of a track's domain
carries exactly one label, with the reserved label ``OTHER`` covering time that
no annotation claims. Intervals are half-open ``[start, end)`` everywhere.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from functools import cached_property

import numpy as np

MICROS_PER_SECOND = 1_000_000
MICROS_PER_DAY = 86_400 * MICROS_PER_SECOND

#: Reserved activity label for time not covered by any annotation.
OTHER = "OTHER"

_EPOCH = datetime(1970, 1, 1)


class DataError(ValueError):
    """Input data violates a documented contract (bad file, bad annotation)."""


class ConfigError(ValueError):
    """A configuration value or file violates the documented schema."""


# ---------------------------------------------------------------------------
# time helpers


def ts_from_datetime(dt: datetime) -> int:
    """Naive datetime -> integer microseconds since the epoch."""
    delta = dt - _EPOCH
    return delta.days * MICROS_PER_DAY + delta.seconds * MICROS_PER_SECOND + delta.microseconds


def ts_to_datetime(ts: int) -> datetime:
    return _EPOCH + timedelta(microseconds=ts)


def ts_to_date(ts: int) -> date:
    return ts_to_datetime(ts).date()


def day_start_ts(d: date) -> int:
    return ts_from_datetime(datetime(d.year, d.month, d.day))


def seconds_to_micros(seconds: float) -> int:
    return int(round(seconds * MICROS_PER_SECOND))


def micros_to_seconds(us: int) -> float:
    return us / MICROS_PER_SECOND


# ---------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class SensorEvent:
    """One timestamped sensor reading; ``value`` is the raw reading text."""

    at: int
    sensor_id: str
    value: str


@dataclass(frozen=True)
class EventStream:
    """Ordered sequence of sensor events; timestamps non-decreasing, ties stable.

    The constructor does not enforce ordering so that ``validate_stream`` can
    report violations on raw input; everything produced inside this package is
    sorted with a stable key before construction.
    """

    events: tuple[SensorEvent, ...]

    def __len__(self) -> int:
        return len(self.events)

    @cached_property
    def times(self) -> np.ndarray:
        """Event timestamps as an int64 array (cached, treat as read-only)."""
        return np.fromiter((e.at for e in self.events), dtype=np.int64, count=len(self.events))

    @classmethod
    def from_events(cls, events) -> "EventStream":
        """Build a stream, stably sorting by timestamp."""
        return cls(tuple(sorted(events, key=lambda e: e.at)))

    def slice_time(self, lo: int, hi: int) -> "EventStream":
        """Events with ``lo <= at < hi``, order preserved."""
        i0 = int(np.searchsorted(self.times, lo, side="left"))
        i1 = int(np.searchsorted(self.times, hi, side="left"))
        return EventStream(self.events[i0:i1])


def validate_stream(stream: EventStream) -> list[str]:
    """Report contract violations in a stream; an empty list means valid.

    Checks timestamp ordering and non-empty sensor ids / values. Purely a
    reporting operation: nothing raises.
    """
    violations: list[str] = []
    prev = None
    for i, ev in enumerate(stream.events):
        if prev is not None and ev.at < prev:
            violations.append(f"event {i}: timestamp {ev.at} before predecessor {prev}")
        prev = ev.at
        if not ev.sensor_id:
            violations.append(f"event {i}: empty sensor_id")
        if not ev.value:
            violations.append(f"event {i}: empty value")
    return violations


# ---------------------------------------------------------------------------
# activity tracks


@dataclass(frozen=True)
class ActivityInterval:
    """A labeled half-open time interval ``[start, end)``."""

    label: str
    start: int
    end: int

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"interval must satisfy start < end, got [{self.start}, {self.end})")

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class ActivityTrack:
    """A gap-free labeled timeline: intervals sorted, non-overlapping, contiguous.

    The domain is ``[intervals[0].start, intervals[-1].end)``. An empty track
    (no intervals) is permitted as the degenerate result of composing nothing.
    """

    intervals: tuple[ActivityInterval, ...]

    def __post_init__(self):
        prev_end = None
        for iv in self.intervals:
            if prev_end is not None and iv.start != prev_end:
                raise ValueError(
                    f"intervals must tile contiguously; got end {prev_end} then start {iv.start}"
                )
            prev_end = iv.end

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def domain_start(self) -> int:
        return self.intervals[0].start if self.intervals else 0

    @property
    def domain_end(self) -> int:
        return self.intervals[-1].end if self.intervals else 0

    @property
    def domain(self) -> tuple[int, int]:
        return (self.domain_start, self.domain_end)

    @property
    def duration(self) -> int:
        return self.domain_end - self.domain_start

    @cached_property
    def starts(self) -> np.ndarray:
        return np.fromiter((iv.start for iv in self.intervals), dtype=np.int64, count=len(self.intervals))

    def label_at(self, t: int) -> str:
        """Label of the unique interval covering ``t`` (half-open intervals)."""
        if self.is_empty or not (self.domain_start <= t < self.domain_end):
            raise ValueError(f"t={t} outside track domain {self.domain}")
        idx = bisect.bisect_right(self.starts, t) - 1
        return self.intervals[idx].label

    def labels_at(self, ts: np.ndarray) -> list[str]:
        """Vectorized ``label_at`` for an array of in-domain timestamps."""
        idx = np.searchsorted(self.starts, ts, side="right") - 1
        return [self.intervals[i].label for i in idx]

    def restrict(self, lo: int, hi: int) -> "ActivityTrack":
        """The track clipped to ``[lo, hi)``; requires the range inside the domain."""
        if not (self.domain_start <= lo < hi <= self.domain_end):
            raise ValueError(f"[{lo}, {hi}) not inside domain {self.domain}")
        out = []
        i0 = bisect.bisect_right(self.starts, lo) - 1
        for iv in self.intervals[i0:]:
            if iv.start >= hi:
                break
            s, e = max(iv.start, lo), min(iv.end, hi)
            if s < e:
                out.append(ActivityInterval(iv.label, s, e))
        return ActivityTrack(tuple(out))

    def durations_by_label(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for iv in self.intervals:
            out[iv.label] = out.get(iv.label, 0) + iv.duration
        return out

    def labels_present(self) -> list[str]:
        return sorted({iv.label for iv in self.intervals})

    @classmethod
    def from_spans(
        cls,
        spans: list[tuple[str, int, int]],
        domain: tuple[int, int],
        fill: str = OTHER,
    ) -> "ActivityTrack":
        """Tile ``domain`` from non-overlapping labeled spans, filling gaps with ``fill``.

        Spans must be sorted by start and pairwise disjoint; parts outside the
        domain are clipped away.
        """
        lo, hi = domain
        if lo >= hi:
            raise ValueError(f"empty domain [{lo}, {hi})")
        out: list[ActivityInterval] = []
        cursor = lo
        for label, s, e in spans:
            s, e = max(s, lo), min(e, hi)
            if s >= e:
                continue
            if s < cursor:
                raise ValueError(f"overlapping spans at {s} (cursor {cursor})")
            if s > cursor:
                out.append(ActivityInterval(fill, cursor, s))
            out.append(ActivityInterval(label, s, e))
            cursor = e
        if cursor < hi:
            out.append(ActivityInterval(fill, cursor, hi))
        return cls(tuple(out))


def track_label_at(track: ActivityTrack, t: int) -> str:
    """Label covering instant ``t``; raises ``ValueError`` outside the domain."""
    return track.label_at(t)


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class LabeledDataset:
    """An event stream with its ground-truth timeline and the known label set."""

    stream: EventStream
    truth: ActivityTrack
    label_set: tuple[str, ...]

    def __post_init__(self):
        if OTHER not in self.label_set:
            object.__setattr__(self, "label_set", (OTHER,) + tuple(self.label_set))
        if len(self.stream):
            first, last = self.stream.events[0].at, self.stream.events[-1].at
            if not (self.truth.domain_start <= first and last < self.truth.domain_end):
                raise ValueError(
                    f"truth domain {self.truth.domain} does not cover events [{first}, {last}]"
                )
        missing = set(self.truth.labels_present()) - set(self.label_set)
        if missing:
            raise ValueError(f"truth labels absent from label_set: {sorted(missing)}")

    @property
    def n_events(self) -> int:
        return len(self.stream)

    def first_date(self) -> date:
        return ts_to_date(self.stream.events[0].at)


def restrict_dataset(dataset: LabeledDataset, lo: int, hi: int) -> LabeledDataset:
    """Dataset clipped to ``[lo, hi)``: events inside and truth restricted."""
    return LabeledDataset(
        stream=dataset.stream.slice_time(lo, hi),
        truth=dataset.truth.restrict(lo, hi),
        label_set=dataset.label_set,
    )


def partition_by_day(dataset: LabeledDataset) -> list[LabeledDataset]:
    """Split a dataset into per-calendar-day datasets; days with no events are omitted.

    Each piece spans the intersection of the civil day with the truth domain, so
    concatenating the pieces reproduces the events exactly and the truth track
    restricted to the covered days.
    """
    if not len(dataset.stream):
        return []
    dates = sorted({ts_to_date(ev.at) for ev in dataset.stream.events})
    out = []
    for d in dates:
        lo = max(day_start_ts(d), dataset.truth.domain_start)
        hi = min(day_start_ts(d) + MICROS_PER_DAY, dataset.truth.domain_end)
        out.append(restrict_dataset(dataset, lo, hi))
    return out
