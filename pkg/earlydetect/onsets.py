"""Weak onset detectors: mean bag-of-words templates and their response series.

G^k(t) is the best template match over the candidate durations r of onset
class k, evaluated on the window [t - r + 1, t] (clipped at frame 0)::

    G^k(t) = clamp(max_r (1 - sum_i (m_i^k - v_i)^2), 0, 1)

with v the L1-normalized word histogram of the window. Frames before the
first complete window of the shortest duration get G = 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, IntegralHistogram, interval_histogram, quantize
from .errors import MissingClassError
from .timeline import ActivityKind, Dataset, FeatureStream, round_half_up

logger = logging.getLogger(__name__)

# Candidate durations per template
DEFAULT_N_DURATIONS = 3

# Percentile band the candidate durations are spread over
DURATION_PERCENTILES = (10.0, 90.0)


@dataclass(frozen=True)
class OnsetTemplate:
    """Mean normalized histogram of one onset class plus its candidate durations."""
    class_id: str
    mean_vector: np.ndarray  # length W, sums to 1
    durations: tuple[int, ...]

    def __post_init__(self):
        if not self.durations or min(self.durations) < 1:
            raise ValueError(f"template {self.class_id}: durations must be nonempty and >= 1")

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "mean_vector": self.mean_vector.tolist(),
            "durations": list(self.durations),
        }

    @classmethod
    def from_dict(cls, data: dict) -> OnsetTemplate:
        return cls(
            class_id=data["class_id"],
            mean_vector=np.asarray(data["mean_vector"], dtype=np.float64),
            durations=tuple(int(r) for r in data["durations"]),
        )


@dataclass(frozen=True)
class OnsetSignatureSet:
    """Response series G^k(t) of every onset class over one stream."""
    class_ids: tuple[str, ...]
    values: np.ndarray  # shape (K, T), values in [0, 1]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def series(self, class_id: str) -> np.ndarray:
        return self.values[self.class_ids.index(class_id)]


def candidate_durations(durations: list[int], n_durations: int) -> tuple[int, ...]:
    """n_durations values spread evenly between the 10th and 90th percentile."""
    lo, hi = np.percentile(np.asarray(durations, dtype=np.float64), DURATION_PERCENTILES)
    values = {max(1, round_half_up(r)) for r in np.linspace(lo, hi, n_durations)}
    return tuple(sorted(values))


def fit_onset_templates(
    ds: Dataset, cb: Codebook, n_durations: int = DEFAULT_N_DURATIONS,
) -> list[OnsetTemplate]:
    """One template per onset class, from its labeled training instances."""
    hists: dict[str, list[np.ndarray]] = {c: [] for c in ds.onset_classes}
    durations: dict[str, list[int]] = {c: [] for c in ds.onset_classes}

    for stream in ds.streams:
        instances = ds.instances(stream.id, kind=ActivityKind.ONSET)
        if not instances:
            continue
        ih = IntegralHistogram.from_words(quantize(stream, cb), cb.size)
        for inst in instances:
            if inst.class_id not in hists:
                continue
            hists[inst.class_id].append(interval_histogram(ih, inst.interval))
            durations[inst.class_id].append(inst.interval.duration)

    missing = [c for c, h in hists.items() if not h]
    if missing:
        raise MissingClassError("onset", missing)

    templates = []
    for class_id in ds.onset_classes:
        mean = np.mean(np.stack(hists[class_id]), axis=0)
        r_set = candidate_durations(durations[class_id], n_durations)
        templates.append(OnsetTemplate(class_id, mean, r_set))
        logger.info(
            "Onset template %s: %d instances, durations %s",
            class_id, len(hists[class_id]), r_set,
        )
    return templates


def template_distance(hist: np.ndarray, tmpl: OnsetTemplate) -> float:
    """Squared Euclidean distance between a normalized histogram and a template."""
    hist = np.asarray(hist, dtype=np.float64)
    if hist.shape != tmpl.mean_vector.shape:
        raise ValueError(
            f"histogram length {hist.shape[-1]} does not match template length "
            f"{tmpl.mean_vector.shape[-1]}"
        )
    return float(np.sum((tmpl.mean_vector - hist) ** 2))


def signature_columns(
    cumulative: np.ndarray, ts: np.ndarray, templates: list[OnsetTemplate],
) -> np.ndarray:
    """G^k(t) for every template and every t in ts; returns shape (K, len(ts)).

    Both the batch and the streaming paths go through here, which keeps
    them bit-identical.
    """
    ts = np.asarray(ts, dtype=np.int64)
    out = np.zeros((len(templates), len(ts)), dtype=np.float64)
    for k, tmpl in enumerate(templates):
        best = np.full(len(ts), -np.inf)
        for r in tmpl.durations:
            starts = np.maximum(0, ts - r + 1)
            counts = cumulative[ts + 1] - cumulative[starts]
            v = counts / (ts - starts + 1)[:, None].astype(np.float64)
            score = 1.0 - np.sum((tmpl.mean_vector - v) ** 2, axis=1)
            np.maximum(best, score, out=best)
        ready = ts >= min(tmpl.durations) - 1
        out[k] = np.where(ready, np.clip(best, 0.0, 1.0), 0.0)
    return out


def compute_signatures(
    stream: FeatureStream,
    cb: Codebook,
    templates: list[OnsetTemplate],
    ih: IntegralHistogram | None = None,
) -> OnsetSignatureSet:
    """Onset response series over a whole stream."""
    if ih is None:
        ih = IntegralHistogram.from_words(quantize(stream, cb), cb.size)
    values = signature_columns(ih.cumulative, np.arange(ih.length), templates)
    return OnsetSignatureSet(tuple(t.class_id for t in templates), values)
