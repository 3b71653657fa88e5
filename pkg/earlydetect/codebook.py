"""Bag-of-words codebook and integral histograms.

Each frame is quantized to its nearest codeword, and the cumulative count
table turns any interval histogram into one subtraction of two rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

from .errors import CodebookError
from .timeline import FeatureStream, Interval

logger = logging.getLogger(__name__)

# Vocabulary size when the run config does not say otherwise
DEFAULT_VOCABULARY = 64

# Lloyd iteration cap
MAX_ITER = 100


@dataclass(frozen=True)
class Codebook:
    """W codeword centers in feature space."""
    centers: np.ndarray  # shape (W, n_feat)

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @property
    def n_feat(self) -> int:
        return self.centers.shape[1]

    def to_dict(self) -> dict:
        return {"centers": self.centers.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> Codebook:
        return cls(centers=np.asarray(data["centers"], dtype=np.float64))


def fit_codebook(frames: np.ndarray, W: int = DEFAULT_VOCABULARY, seed: int = 0) -> Codebook:
    """k-means (k-means++ seeding) over the distinct frames.

    Duplicate frames are collapsed into weighted points, which makes the
    result independent of frame order.
    """
    if W < 2:
        raise ValueError(f"vocabulary size must be >= 2, got {W}")
    frames = np.asarray(frames, dtype=np.float64)
    distinct, counts = np.unique(frames, axis=0, return_counts=True)
    if len(distinct) < W:
        raise CodebookError(
            f"need at least {W} distinct frames, got {len(distinct)} "
            f"(short by {W - len(distinct)})"
        )

    km = KMeans(
        n_clusters=W, init="k-means++", n_init=1,
        max_iter=MAX_ITER, random_state=seed,
    )
    km.fit(distinct, sample_weight=counts.astype(np.float64))
    logger.info(
        "Fitted codebook: W=%d on %d frames (%d distinct), inertia=%.4f, %d iterations",
        W, len(frames), len(distinct), km.inertia_, km.n_iter_,
    )
    return Codebook(centers=np.asarray(km.cluster_centers_, dtype=np.float64))


def quantize(stream: FeatureStream | np.ndarray, cb: Codebook) -> np.ndarray:
    """Nearest-center word id per frame; ties go to the lowest center index."""
    frames = stream.frames if isinstance(stream, FeatureStream) else np.atleast_2d(stream)
    if frames.shape[1] != cb.n_feat:
        raise ValueError(
            f"frame dimension {frames.shape[1]} does not match codebook dimension {cb.n_feat}"
        )
    dist = cdist(frames, cb.centers, metric="sqeuclidean")
    return np.argmin(dist, axis=1).astype(np.int64)


@dataclass(frozen=True)
class IntegralHistogram:
    """Cumulative word counts; row t holds the counts of frames [0, t)."""
    cumulative: np.ndarray  # shape (T + 1, W), int64

    @classmethod
    def from_words(cls, words: np.ndarray, W: int) -> IntegralHistogram:
        words = np.asarray(words, dtype=np.int64)
        cum = np.zeros((len(words) + 1, W), dtype=np.int64)
        if len(words):
            np.cumsum(np.eye(W, dtype=np.int64)[words], axis=0, out=cum[1:])
        return cls(cumulative=cum)

    @property
    def length(self) -> int:
        return self.cumulative.shape[0] - 1

    @property
    def vocabulary(self) -> int:
        return self.cumulative.shape[1]


def interval_histogram(
    ih: IntegralHistogram, iv: Interval, normalize: bool = True,
) -> np.ndarray:
    """Word histogram of the frames in iv."""
    if iv.t2 >= ih.length:
        raise ValueError(f"interval {iv} outside stream of length {ih.length}")
    counts = ih.cumulative[iv.t2 + 1] - ih.cumulative[iv.t1]
    if not normalize:
        return counts
    return counts / float(iv.duration)


class OnlineIntegralHistogram:
    """Integral histogram that grows one word at a time.

    The buffer doubles when full; rows past ``length`` are never read.
    """

    def __init__(self, W: int, capacity: int = 1024):
        self.cumulative = np.zeros((capacity + 1, W), dtype=np.int64)
        self.length = 0

    @property
    def vocabulary(self) -> int:
        return self.cumulative.shape[1]

    def push(self, word: int) -> None:
        if self.length + 1 >= self.cumulative.shape[0]:
            grown = np.zeros((2 * self.cumulative.shape[0], self.vocabulary), dtype=np.int64)
            grown[: self.length + 1] = self.cumulative[: self.length + 1]
            self.cumulative = grown
        row = self.cumulative[self.length].copy()
        row[word] += 1
        self.cumulative[self.length + 1] = row
        self.length += 1
