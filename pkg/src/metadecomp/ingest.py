"""Dataset ingestion: CASAS-style text parsing, token vocabulary, synthetic data.

The CASAS line grammar is ``DATE TIME SENSOR VALUE [ACTIVITY begin|end]`` with
whitespace-separated fields; the activity label may itself contain spaces
before the trailing ``begin``/``end`` keyword. Annotated begin/end pairs become
ground-truth intervals and every unannotated gap is labeled ``OTHER``.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    MICROS_PER_DAY,
    OTHER,
    ActivityInterval,
    ActivityTrack,
    ConfigError,
    DataError,
    EventStream,
    LabeledDataset,
    SensorEvent,
    day_start_ts,
    seconds_to_micros,
    ts_from_datetime,
    ts_to_date,
)

# ---------------------------------------------------------------------------
# tokens and vocabulary


def encode_token(event: SensorEvent) -> str:
    """Sensor id and value concatenated, lowercased, internal whitespace removed.

    E.g. ``(door1, OPEN)`` becomes ``"door1open"``.
    """
    return "".join((event.sensor_id + event.value).split()).lower()


@dataclass(frozen=True)
class Vocabulary:
    """Token text -> index, indices 1..N by descending corpus frequency.

    Index 0 is reserved and never assigned; ties in frequency break
    lexicographically. Lookup of an unknown token returns 0.
    """

    index: dict[str, int]

    def __len__(self) -> int:
        return len(self.index)

    def lookup(self, text: str) -> int:
        return self.index.get(text, 0)

    def to_dict(self) -> dict:
        return {"format_version": 1, "tokens": dict(self.index)}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(index={str(k): int(v) for k, v in data["tokens"].items()})


def build_vocabulary(streams: Sequence[EventStream]) -> Vocabulary:
    """Frequency-ordered vocabulary over all events of the given streams.

    Deterministic: sorted by (descending count, token text). Token collisions
    (distinct sensor/value pairs mapping to one text) are reported as a
    warning, never silently merged into silence.
    """
    counts: Counter[str] = Counter()
    sources: dict[str, set[tuple[str, str]]] = {}
    for stream in streams:
        for ev in stream.events:
            text = encode_token(ev)
            counts[text] += 1
            sources.setdefault(text, set()).add((ev.sensor_id, ev.value))
    if not counts:
        raise DataError("cannot build a vocabulary from an empty corpus")
    collisions = {t: sorted(pairs) for t, pairs in sources.items() if len(pairs) > 1}
    if collisions:
        warnings.warn(f"token collisions detected: {collisions}", stacklevel=2)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(index={text: i + 1 for i, (text, _) in enumerate(ordered)})


def find_token_collisions(streams: Sequence[EventStream]) -> dict[str, list[tuple[str, str]]]:
    """Token texts produced by more than one distinct (sensor_id, value) pair."""
    sources: dict[str, set[tuple[str, str]]] = {}
    for stream in streams:
        for ev in stream.events:
            sources.setdefault(encode_token(ev), set()).add((ev.sensor_id, ev.value))
    return {t: sorted(p) for t, p in sources.items() if len(p) > 1}


# ---------------------------------------------------------------------------
# CASAS-style parsing

_BEGIN = "begin"
_END = "end"


def _parse_line(line: str, lineno: int):
    parts = line.split()
    if len(parts) < 4:
        raise DataError(f"line {lineno}: expected 'DATE TIME SENSOR VALUE [ACTIVITY begin|end]', got {line!r}")
    try:
        ts = ts_from_datetime(datetime.fromisoformat(parts[0] + " " + parts[1]))
    except ValueError as exc:
        raise DataError(f"line {lineno}: bad timestamp {parts[0]!r} {parts[1]!r}: {exc}") from None
    event = SensorEvent(at=ts, sensor_id=parts[2], value=parts[3])
    annotation = None
    if len(parts) > 4:
        keyword = parts[-1]
        label = " ".join(parts[4:-1])
        if keyword not in (_BEGIN, _END) or not label:
            raise DataError(
                f"line {lineno}: annotation must be 'ACTIVITY begin|end', got {' '.join(parts[4:])!r}"
            )
        annotation = (label, keyword)
    return event, annotation


def _spans_to_track(spans: list[tuple[str, int, int, int]], domain: tuple[int, int]) -> ActivityTrack:
    """Resolve possibly-overlapping annotation spans into a total tiling.

    Where spans overlap the most recently begun one wins (ties by file order).
    """
    lo, hi = domain
    if not spans:
        return ActivityTrack((ActivityInterval(OTHER, lo, hi),))
    bounds = sorted({lo, hi} | {s for _, s, _, _ in spans} | {e for _, _, e, _ in spans})
    bounds = [b for b in bounds if lo <= b <= hi]
    pieces: list[tuple[str, int, int]] = []
    for a, b in zip(bounds, bounds[1:]):
        active = [(s, seq, label) for label, s, e, seq in spans if s <= a < e]
        if not active:
            continue
        label = max(active)[2]
        if pieces and pieces[-1][0] == label and pieces[-1][2] == a:
            pieces[-1] = (label, pieces[-1][1], b)
        else:
            pieces.append((label, a, b))
    return ActivityTrack.from_spans([(l, s, e) for l, s, e in pieces], domain)


def parse_casas(source: str | Path | Iterable[str]) -> LabeledDataset:
    """Parse CASAS-style annotated text into a labeled dataset.

    ``source`` may be a filesystem path, the raw text, or an iterable of lines.
    Raises ``DataError`` for malformed lines, an ``end`` with no open ``begin``,
    or a ``begin`` still open at end of input. Overlapping annotations resolve
    most-recently-begun-wins with a warning.
    """
    if isinstance(source, Path):
        lines = source.read_text().splitlines()
    elif isinstance(source, str):
        p = Path(source)
        text = p.read_text() if ("\n" not in source and p.is_file()) else source
        lines = text.splitlines()
    else:
        lines = [str(l) for l in source]

    events: list[SensorEvent] = []
    open_spans: dict[str, list[tuple[int, int]]] = {}  # label -> stack of (t, lineno)
    spans: list[tuple[str, int, int, int]] = []  # (label, begin, end, begin_seq)
    seq = 0
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        event, annotation = _parse_line(raw, lineno)
        events.append(event)
        if annotation is None:
            continue
        label, keyword = annotation
        if keyword == _BEGIN:
            open_spans.setdefault(label, []).append((event.at, seq))
            seq += 1
        else:
            stack = open_spans.get(label)
            if not stack:
                raise DataError(f"line {lineno}: 'end' without matching 'begin' for activity {label!r}")
            begin_at, begin_seq = stack.pop()
            if event.at > begin_at:
                spans.append((label, begin_at, event.at, begin_seq))
            else:
                warnings.warn(
                    f"line {lineno}: zero-length annotation for {label!r} dropped", stacklevel=2
                )
    dangling = [label for label, stack in open_spans.items() if stack]
    if dangling:
        raise DataError(f"unterminated 'begin' at end of input for: {sorted(dangling)}")
    if not events:
        raise DataError("no events in input")

    stream = EventStream.from_events(events)
    domain = (stream.events[0].at, stream.events[-1].at + 1)
    spans.sort(key=lambda s: (s[1], s[3]))
    overlaps = sum(
        1 for (_, s1, e1, _), (_, s2, _, _) in zip(spans, spans[1:]) if s2 < e1
    )
    if overlaps:
        warnings.warn(f"{overlaps} overlapping annotation pair(s); most recent begin wins", stacklevel=2)
    truth = _spans_to_track(spans, domain)
    labels = (OTHER,) + tuple(sorted({label for label, _, _, _ in spans}))
    return LabeledDataset(stream=stream, truth=truth, label_set=labels)


# ---------------------------------------------------------------------------
# synthetic generation


@dataclass(frozen=True)
class ActivityProfile:
    """Recipe for one activity type in the synthetic generator.

    Events are emitted as a Poisson process (exponential inter-event gaps) at
    ``events_per_minute``, each drawing its sensor uniformly from ``sensors``
    (repeat a sensor to weight it). Durations are uniform in
    ``[0.5, 1.5] * mean_duration_s``.
    """

    label: str
    mean_duration_s: float
    events_per_minute: float
    sensors: tuple[str, ...]

    def __post_init__(self):
        if self.mean_duration_s <= 0 or self.events_per_minute <= 0:
            raise ConfigError(f"profile {self.label!r}: duration and rate must be positive")
        if not self.sensors:
            raise ConfigError(f"profile {self.label!r}: needs at least one sensor")


@dataclass(frozen=True)
class SynthConfig:
    """Declarative synthetic dataset: day count, profiles, per-day profile mix.

    ``schedule`` maps day index to a {label: weight} mix; days not listed fall
    back to ``default_mix``. An empty mix makes a silent day (no events, OTHER
    all day). Generation is fully deterministic for a fixed ``rng_seed``.
    """

    n_days: int
    profiles: tuple[ActivityProfile, ...]
    schedule: Mapping[int, Mapping[str, float]] = field(default_factory=dict)
    default_mix: Mapping[str, float] | None = None
    rng_seed: int = 0
    start_date: date = date(2021, 3, 1)

    def __post_init__(self):
        if self.n_days <= 0:
            raise ConfigError("n_days must be positive")
        known = {p.label for p in self.profiles}
        for day, mix in self.schedule.items():
            unknown = set(mix) - known
            if unknown:
                raise ConfigError(f"day {day}: mix references unknown profiles {sorted(unknown)}")
        if self.default_mix is not None and set(self.default_mix) - known:
            raise ConfigError("default_mix references unknown profiles")

    def mix_for_day(self, day: int) -> Mapping[str, float]:
        if day in self.schedule:
            return self.schedule[day]
        if self.default_mix is not None:
            return self.default_mix
        raise ConfigError(f"day {day} has no mix and no default_mix is set")


def synth_generate(config: SynthConfig) -> LabeledDataset:
    """Generate a labeled dataset from a synthetic config (seed-deterministic)."""
    rng = np.random.default_rng(config.rng_seed)
    by_label = {p.label: p for p in config.profiles}
    events: list[SensorEvent] = []
    intervals: list[ActivityInterval] = []
    t_begin = day_start_ts(config.start_date)

    for day in range(config.n_days):
        day_lo = t_begin + day * MICROS_PER_DAY
        day_hi = day_lo + MICROS_PER_DAY
        mix = config.mix_for_day(day)
        if not mix:
            intervals.append(ActivityInterval(OTHER, day_lo, day_hi))
            continue
        labels = sorted(mix)
        weights = np.array([mix[l] for l in labels], dtype=float)
        weights = weights / weights.sum()
        t = day_lo
        while t < day_hi:
            label = labels[int(rng.choice(len(labels), p=weights))]
            profile = by_label[label]
            dur = seconds_to_micros(float(rng.uniform(0.5, 1.5)) * profile.mean_duration_s)
            end = min(t + max(dur, 1), day_hi)
            intervals.append(ActivityInterval(label, t, end))
            gap_mean_s = 60.0 / profile.events_per_minute
            et = t + seconds_to_micros(float(rng.exponential(gap_mean_s)))
            while et < end:
                sensor = profile.sensors[int(rng.integers(len(profile.sensors)))]
                value = "on" if rng.integers(2) else "off"
                events.append(SensorEvent(at=et, sensor_id=sensor, value=value))
                et += seconds_to_micros(float(rng.exponential(gap_mean_s)))
            t = end

    stream = EventStream.from_events(events)
    truth = ActivityTrack(tuple(intervals))
    label_set = (OTHER,) + tuple(sorted(by_label))
    return LabeledDataset(stream=stream, truth=truth, label_set=label_set)


# ---------------------------------------------------------------------------
# dataset statistics


@dataclass(frozen=True)
class LabelStats:
    intervals: int
    total_duration_us: int
    min_duration_us: int
    max_duration_us: int
    events: int


@dataclass(frozen=True)
class DatasetStats:
    """Summary of a labeled dataset; label durations always sum to the domain."""

    n_events: int
    n_sensors: int
    n_days: int
    domain_us: int
    per_label: dict[str, LabelStats]

    def to_dict(self) -> dict:
        return {
            "n_events": self.n_events,
            "n_sensors": self.n_sensors,
            "n_days": self.n_days,
            "domain_us": self.domain_us,
            "per_label": {
                label: {
                    "intervals": s.intervals,
                    "total_duration_us": s.total_duration_us,
                    "min_duration_us": s.min_duration_us,
                    "max_duration_us": s.max_duration_us,
                    "events": s.events,
                }
                for label, s in sorted(self.per_label.items())
            },
        }


def dataset_stats(dataset: LabeledDataset) -> DatasetStats:
    """Event, sensor, and per-label duration summary of a dataset."""
    track = dataset.truth
    per_label: dict[str, list[int]] = {}
    for iv in track.intervals:
        per_label.setdefault(iv.label, []).append(iv.duration)
    event_counts: Counter[str] = Counter()
    if len(dataset.stream):
        for ev, label in zip(
            dataset.stream.events, track.labels_at(dataset.stream.times)
        ):
            event_counts[label] += 1
    stats = {
        label: LabelStats(
            intervals=len(durs),
            total_duration_us=sum(durs),
            min_duration_us=min(durs),
            max_duration_us=max(durs),
            events=event_counts.get(label, 0),
        )
        for label, durs in per_label.items()
    }
    return DatasetStats(
        n_events=len(dataset.stream),
        n_sensors=len({e.sensor_id for e in dataset.stream.events}),
        n_days=len({ts_to_date(e.at) for e in dataset.stream.events}),
        domain_us=track.duration,
        per_label=stats,
    )
