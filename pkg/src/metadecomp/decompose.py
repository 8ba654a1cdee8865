"""Stream decomposers: time windows (tw), event windows (ew), dynamic windows (dw).

A decomposer splits an event stream into segments, each a half-open index range
into the stream plus a half-open time window. Time windows may be empty of
events (silent periods); event/dynamic windows always hold at least one event
and their time window is ``[first event, last event + 1us)``.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, DataError, EventStream, seconds_to_micros

TW = "tw"
EW = "ew"
DW = "dw"


@dataclass(frozen=True)
class Segment:
    """A sub-task's slice of a stream: event indices ``[i0, i1)``, window ``[start, end)``."""

    event_range: tuple[int, int]
    window: tuple[int, int]

    @property
    def n_events(self) -> int:
        return self.event_range[1] - self.event_range[0]

    @property
    def is_empty(self) -> bool:
        return self.n_events == 0


@dataclass(frozen=True)
class DecomposerConfig:
    """One decomposer family plus its parameters.

    ``kind`` is one of ``tw`` (window/shift in seconds), ``ew`` (window/shift in
    events), ``dw`` (gap-quantile rule with min/max event bounds). Shifts may
    not exceed windows, so coverage has no gaps.
    """

    kind: str
    window_s: float | None = None
    shift_s: float | None = None
    window_events: int | None = None
    shift_events: int | None = None
    gap_quantile: float | None = None
    min_events: int | None = None
    max_events: int | None = None

    def __post_init__(self):
        if self.kind == TW:
            if not (self.window_s and self.shift_s) or self.window_s <= 0 or self.shift_s <= 0:
                raise ConfigError("tw needs positive window_s and shift_s")
            if self.shift_s > self.window_s:
                raise ConfigError("tw shift must not exceed window")
        elif self.kind == EW:
            if not (self.window_events and self.shift_events) or min(self.window_events, self.shift_events) < 1:
                raise ConfigError("ew needs positive window_events and shift_events")
            if self.shift_events > self.window_events:
                raise ConfigError("ew shift must not exceed window")
        elif self.kind == DW:
            if self.gap_quantile is None or not (0 < self.gap_quantile <= 1):
                raise ConfigError("dw needs gap_quantile in (0, 1]")
            if not (self.min_events and self.max_events) or self.min_events < 1:
                raise ConfigError("dw needs positive min_events and max_events")
            if self.min_events > self.max_events:
                raise ConfigError("dw needs min_events <= max_events")
        else:
            raise ConfigError(f"unknown decomposer kind {self.kind!r}")

    # -- constructors ----------------------------------------------------

    @classmethod
    def tw(cls, window_s: float, shift_s: float) -> "DecomposerConfig":
        return cls(kind=TW, window_s=window_s, shift_s=shift_s)

    @classmethod
    def ew(cls, window_events: int, shift_events: int) -> "DecomposerConfig":
        return cls(kind=EW, window_events=window_events, shift_events=shift_events)

    @classmethod
    def dw(cls, gap_quantile: float, min_events: int = 2, max_events: int = 50) -> "DecomposerConfig":
        return cls(kind=DW, gap_quantile=gap_quantile, min_events=min_events, max_events=max_events)

    # -- canonical string form (used in configs and reports) --------------

    def to_string(self) -> str:
        if self.kind == TW:
            return f"tw:w={_fmt(self.window_s)},s={_fmt(self.shift_s)}"
        if self.kind == EW:
            return f"ew:w={self.window_events},s={self.shift_events}"
        return f"dw:q={_fmt(self.gap_quantile)},min={self.min_events},max={self.max_events}"

    @classmethod
    def from_string(cls, text: str) -> "DecomposerConfig":
        m = re.fullmatch(r"(\w+):(.*)", text.strip())
        if not m:
            raise ConfigError(f"bad decomposer string {text!r}")
        kind, body = m.group(1), m.group(2)
        try:
            params = dict(p.split("=", 1) for p in body.split(",") if p)
        except ValueError:
            raise ConfigError(f"bad decomposer string {text!r}") from None
        try:
            if kind == TW:
                return cls.tw(float(params["w"]), float(params["s"]))
            if kind == EW:
                return cls.ew(int(params["w"]), int(params["s"]))
            if kind == DW:
                return cls.dw(
                    float(params["q"]), int(params.get("min", 2)), int(params.get("max", 50))
                )
        except KeyError as exc:
            raise ConfigError(f"decomposer string {text!r} missing parameter {exc}") from None
        raise ConfigError(f"unknown decomposer kind {kind!r}")


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def default_decomposer_grid() -> list[DecomposerConfig]:
    """Grid bracketing the window sizes that work well on smart-home streams."""
    grid: list[DecomposerConfig] = []
    for w in (30, 60, 120):
        for s in (w, w // 2):
            grid.append(DecomposerConfig.tw(w, s))
    for w in (3, 5, 10, 20, 30):
        for s in (w, (w + 1) // 2):
            grid.append(DecomposerConfig.ew(w, s))
    for q in (0.90, 0.95):
        grid.append(DecomposerConfig.dw(q))
    return grid


# ---------------------------------------------------------------------------
# decomposers


def tw_decompose(stream: EventStream, window_seconds: float, shift_seconds: float) -> list[Segment]:
    """Fixed time windows anchored at the first event time.

    Window k spans ``[t0 + k*shift, t0 + k*shift + window)``; windows are
    generated while their start does not pass the last event time, so every
    event is covered. Windows with no events are kept (silent periods).
    """
    if not len(stream):
        raise DataError("cannot decompose an empty stream")
    if shift_seconds > window_seconds or min(window_seconds, shift_seconds) <= 0:
        raise ConfigError("need 0 < shift <= window")
    w_us = seconds_to_micros(window_seconds)
    s_us = seconds_to_micros(shift_seconds)
    times = stream.times
    t0, t_last = int(times[0]), int(times[-1])
    segments = []
    start = t0
    while start <= t_last:
        i0 = int(np.searchsorted(times, start, side="left"))
        i1 = int(np.searchsorted(times, start + w_us, side="left"))
        segments.append(Segment((i0, i1), (start, start + w_us)))
        start += s_us
    return segments


def ew_decompose(stream: EventStream, window_events: int, shift_events: int) -> list[Segment]:
    """Fixed-count event windows: segment k covers indices ``[k*shift, k*shift+window)``.

    The trailing partial segment is emitted only when it contributes an event
    no earlier segment covered.
    """
    if not len(stream):
        raise DataError("cannot decompose an empty stream")
    if shift_events > window_events or min(window_events, shift_events) < 1:
        raise ConfigError("need 1 <= shift <= window")
    n = len(stream)
    times = stream.times
    segments = []
    k = 0
    while True:
        if k > 0 and (k - 1) * shift_events + window_events >= n:
            break
        i0 = k * shift_events
        i1 = min(i0 + window_events, n)
        segments.append(Segment((i0, i1), (int(times[i0]), int(times[i1 - 1]) + 1)))
        k += 1
    return segments


def dw_decompose(
    stream: EventStream,
    gap_quantile: float,
    min_events: int,
    max_events: int,
) -> list[Segment]:
    """Greedy dynamic windows cut at large inter-event gaps.

    The gap threshold is the ``gap_quantile`` quantile of all inter-event gaps
    in the stream. A segment closes before an event whose preceding gap exceeds
    the threshold (once ``min_events`` are in), or when it reaches
    ``max_events``. Segments partition the events exactly. This is a documented
    stand-in for probabilistic dynamic windowing and is pluggable.
    """
    if not len(stream):
        raise DataError("cannot decompose an empty stream")
    if not (0 < gap_quantile <= 1) or min_events < 1 or min_events > max_events:
        raise ConfigError("need 0 < gap_quantile <= 1 and 1 <= min_events <= max_events")
    n = len(stream)
    times = stream.times
    if n < min_events or n == 1:
        return [Segment((0, n), (int(times[0]), int(times[-1]) + 1))]
    gaps = np.diff(times)
    threshold = float(np.quantile(gaps, gap_quantile))
    segments = []
    i = 0
    while i < n:
        j = i + 1
        while j < n:
            if j - i >= max_events:
                break
            if j - i >= min_events and float(times[j] - times[j - 1]) > threshold:
                break
            j += 1
        segments.append(Segment((i, j), (int(times[i]), int(times[j - 1]) + 1)))
        i = j
    return segments


def decompose_stream(stream: EventStream, config: DecomposerConfig) -> list[Segment]:
    """Dispatch to the configured decomposer family."""
    if config.kind == TW:
        return tw_decompose(stream, config.window_s, config.shift_s)
    if config.kind == EW:
        return ew_decompose(stream, config.window_events, config.shift_events)
    return dw_decompose(stream, config.gap_quantile, config.min_events, config.max_events)


# ---------------------------------------------------------------------------
# decomposability


@dataclass(frozen=True)
class DecomposabilityReport:
    """Whether composing sub-task results loses at most ``epsilon`` vs. the original.

    ``decomposable`` iff ``composed_loss - original_loss <= epsilon``; ``strong``
    iff the difference is <= 0 within 1e-9 (no information lost at all).
    """

    composed_loss: float
    original_loss: float
    epsilon: float
    decomposable: bool
    strong: bool


def check_decomposability(
    composed_loss: float, original_loss: float, epsilon: float
) -> DecomposabilityReport:
    if not (np.isfinite(composed_loss) and np.isfinite(original_loss)):
        raise ValueError("losses must be finite")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    diff = composed_loss - original_loss
    return DecomposabilityReport(
        composed_loss=float(composed_loss),
        original_loss=float(original_loss),
        epsilon=float(epsilon),
        decomposable=bool(diff <= epsilon),
        strong=bool(diff <= 1e-9),
    )
