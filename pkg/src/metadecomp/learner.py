"""Per-segment activity classification: labeling, featurization, and the model.

Segments are bags of tokens (sensor id + value). The inner learner is a
multinomial naive Bayes with additive smoothing, or a constant majority-label
model; both are deterministic and expose a normalized label distribution so
composition can vote with confidences. The classifier interface is pluggable —
anything that maps a feature vector to a distribution slots in.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .core import OTHER, ActivityTrack, EventStream
from .decompose import Segment
from .ingest import Vocabulary, encode_token

MAJORITY = "majority"
NAIVE_BAYES = "naive_bayes"

#: A prediction is a plain {label: probability} dict summing to 1.
PredictionDistribution = dict[str, float]


@dataclass(frozen=True)
class FeatureVector:
    """Sparse token counts for one segment; OOV events are counted, not kept."""

    counts: dict[int, int] = field(default_factory=dict)
    oov_count: int = 0

    def total(self) -> int:
        return sum(self.counts.values())


def assign_segment_label(segment: Segment, truth: ActivityTrack) -> str:
    """Ground-truth label for a segment: the label with maximal overlap with its window.

    Ties break toward the label whose overlapping interval starts earlier;
    a window with zero overlap of the truth domain gets ``OTHER``.
    """
    ws, we = segment.window
    lo = max(ws, truth.domain_start)
    hi = min(we, truth.domain_end)
    if truth.is_empty or lo >= hi:
        return OTHER
    overlap: dict[str, int] = {}
    earliest: dict[str, int] = {}
    i = bisect.bisect_right(truth.starts, lo) - 1
    for iv in truth.intervals[i:]:
        if iv.start >= hi:
            break
        ov = min(iv.end, hi) - max(iv.start, lo)
        if ov <= 0:
            continue
        overlap[iv.label] = overlap.get(iv.label, 0) + ov
        earliest.setdefault(iv.label, iv.start)
    return min(overlap, key=lambda l: (-overlap[l], earliest[l]))


def featurize(segment: Segment, stream: EventStream, vocab: Vocabulary) -> FeatureVector:
    """Token-index counts for the segment's events; unknown tokens are dropped
    and tallied in ``oov_count``."""
    counts: dict[int, int] = {}
    oov = 0
    i0, i1 = segment.event_range
    for ev in stream.events[i0:i1]:
        idx = vocab.lookup(encode_token(ev))
        if idx == 0:
            oov += 1
        else:
            counts[idx] = counts.get(idx, 0) + 1
    return FeatureVector(counts=counts, oov_count=oov)


def stream_token_indices(stream: EventStream, vocab: Vocabulary) -> np.ndarray:
    """Vocabulary index of every event (0 for OOV); lets callers featurize many
    segments of one stream without re-encoding."""
    return np.fromiter(
        (vocab.lookup(encode_token(ev)) for ev in stream.events),
        dtype=np.int64,
        count=len(stream),
    )


def featurize_from_indices(segment: Segment, token_indices: np.ndarray) -> FeatureVector:
    """Same result as ``featurize`` given precomputed per-event token indices."""
    i0, i1 = segment.event_range
    window = token_indices[i0:i1]
    oov = int(np.count_nonzero(window == 0))
    known = window[window != 0]
    idx, cnt = np.unique(known, return_counts=True)
    return FeatureVector(counts={int(i): int(c) for i, c in zip(idx, cnt)}, oov_count=oov)


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ClassifierModel:
    """A trained per-segment classifier.

    For naive Bayes, ``token_log_prob[c, t-1]`` is the smoothed log-probability
    of vocabulary index ``t`` under class ``c`` (index 0 is reserved and has no
    column). ``log_priors`` always reflects the training label frequencies.
    """

    kind: str
    classes: tuple[str, ...]
    log_priors: np.ndarray
    token_log_prob: np.ndarray | None
    alpha: float
    vocab_size: int

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": self.kind,
            "classes": list(self.classes),
            "log_priors": [float(x) for x in self.log_priors],
            "token_log_prob": None
            if self.token_log_prob is None
            else [[float(x) for x in row] for row in self.token_log_prob],
            "alpha": self.alpha,
            "vocab_size": self.vocab_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierModel":
        if data.get("format_version") != 1:
            raise ValueError(f"unsupported model format {data.get('format_version')!r}")
        return cls(
            kind=data["kind"],
            classes=tuple(data["classes"]),
            log_priors=np.asarray(data["log_priors"], dtype=float),
            token_log_prob=None
            if data["token_log_prob"] is None
            else np.asarray(data["token_log_prob"], dtype=float),
            alpha=float(data["alpha"]),
            vocab_size=int(data["vocab_size"]),
        )


def train(
    features: list[FeatureVector],
    labels: list[str],
    kind: str = NAIVE_BAYES,
    alpha: float = 1.0,
    vocab_size: int | None = None,
) -> ClassifierModel:
    """Train the inner classifier.

    Naive Bayes smooths token counts with ``alpha`` over the whole vocabulary,
    so ``vocab_size`` is required for that kind. Majority ignores features and
    memorizes the modal label (ties break to the lexicographically smallest).
    """
    if len(features) != len(labels):
        raise ValueError("features and labels must have equal length")
    if not features:
        raise ValueError("cannot train on an empty training set")
    classes = tuple(sorted(set(labels)))
    class_index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros(len(classes), dtype=np.int64)
    for l in labels:
        counts[class_index[l]] += 1
    log_priors = np.log(counts / counts.sum())

    if kind == MAJORITY:
        return ClassifierModel(
            kind=MAJORITY,
            classes=classes,
            log_priors=log_priors,
            token_log_prob=None,
            alpha=alpha,
            vocab_size=int(vocab_size or 0),
        )
    if kind != NAIVE_BAYES:
        raise ValueError(f"unknown classifier kind {kind!r}")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not vocab_size or vocab_size < 1:
        raise ValueError("naive Bayes needs the vocabulary size for smoothing")

    token_counts = np.zeros((len(classes), vocab_size), dtype=np.float64)
    for fv, l in zip(features, labels):
        row = class_index[l]
        for t, c in fv.counts.items():
            if not (1 <= t <= vocab_size):
                raise ValueError(f"token index {t} outside vocabulary 1..{vocab_size}")
            token_counts[row, t - 1] += c
    totals = token_counts.sum(axis=1, keepdims=True)
    token_log_prob = np.log((token_counts + alpha) / (totals + alpha * vocab_size))
    return ClassifierModel(
        kind=NAIVE_BAYES,
        classes=classes,
        log_priors=log_priors,
        token_log_prob=token_log_prob,
        alpha=alpha,
        vocab_size=vocab_size,
    )


def predict(model: ClassifierModel, feature: FeatureVector) -> PredictionDistribution:
    """Normalized posterior over the model's classes.

    An empty feature vector yields exactly the prior distribution; the majority
    model puts probability 1 on its modal label.
    """
    if model.kind == MAJORITY:
        modal = model.classes[int(np.argmax(model.log_priors))]
        return {c: (1.0 if c == modal else 0.0) for c in model.classes}
    scores = model.log_priors.copy()
    for t, c in feature.counts.items():
        scores += c * model.token_log_prob[:, t - 1]
    scores -= scores.max()
    p = np.exp(scores)
    p /= p.sum()
    return {cls: float(v) for cls, v in zip(model.classes, p)}
