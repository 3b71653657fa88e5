"""Per-stream feature state shared by training, detection and evaluation.

A stream is quantized once; its integral histogram and onset responses are
then read by every (class, progress level, duration) hypothesis. The
streaming variant grows the same state one frame at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import (
    Codebook, IntegralHistogram, OnlineIntegralHistogram, quantize,
)
from .onsets import OnsetSignatureSet, OnsetTemplate, compute_signatures, signature_columns
from .signature import CascadeConfig, signature_matrix, signature_values
from .timeline import FeatureStream


@dataclass(frozen=True)
class FeatureSpec:
    """Everything a representation needs to build classifier inputs."""
    cascade: CascadeConfig
    vocabulary: int
    n_onsets: int
    raw_prior_frames: int = 50


class StreamFeatures:
    """Words, integral histogram and onset responses of one stream."""

    def __init__(self, stream_id: str, cumulative: np.ndarray, signatures: np.ndarray, length: int):
        self.stream_id = stream_id
        self.cumulative = cumulative
        self.signatures = signatures  # (K, >= length)
        self.length = length
        self._x_key: tuple[int, CascadeConfig] | None = None
        self._x = None
        self._x_matrix: dict[CascadeConfig, np.ndarray] = {}

    @classmethod
    def build(
        cls, stream: FeatureStream, cb: Codebook, templates: list[OnsetTemplate],
    ) -> StreamFeatures:
        ih = IntegralHistogram.from_words(quantize(stream, cb), cb.size)
        sigs = compute_signatures(stream, cb, templates, ih=ih)
        return cls(stream.id, ih.cumulative, sigs.values, ih.length)

    @property
    def vocabulary(self) -> int:
        return self.cumulative.shape[1]

    def signature_set(self, class_ids: tuple[str, ...]) -> OnsetSignatureSet:
        return OnsetSignatureSet(class_ids, self.signatures[:, : self.length])

    def bow(self, t1: int, t2: int, normalize: bool = True) -> np.ndarray:
        """Word histogram of [t1, t2], L1-normalized unless ``normalize`` is off."""
        return self.bow_rows(np.array([t1]), np.array([t2]), normalize)[0]

    def bow_rows(self, t1s: np.ndarray, t2s: np.ndarray, normalize: bool = True) -> np.ndarray:
        """One histogram row per interval [t1s[i], t2s[i]]."""
        t1s = np.asarray(t1s, dtype=np.int64)
        t2s = np.asarray(t2s, dtype=np.int64)
        counts = self.cumulative[t2s + 1] - self.cumulative[t1s]
        if not normalize:
            return counts.astype(np.float64)
        return counts / (t2s - t1s + 1)[:, None].astype(np.float64)

    def x(self, t: int, cascade: CascadeConfig) -> np.ndarray:
        """Onset-signature vector at t, cached for the most recent frame."""
        if self._x_key != (t, cascade):
            self._x = signature_values(self.signatures, t, cascade)
            self._x_key = (t, cascade)
        return self._x

    def x_rows(self, ts: np.ndarray, cascade: CascadeConfig) -> np.ndarray:
        """x(t) for every t in ts, read from the whole-stream signature matrix."""
        if cascade not in self._x_matrix:
            self._x_matrix[cascade] = signature_matrix(self.signatures[:, : self.length], cascade)
        return self._x_matrix[cascade][np.asarray(ts, dtype=np.int64)]


class OnlineStreamFeatures(StreamFeatures):
    """Feature state fed frame by frame."""

    def __init__(
        self, stream_id: str, cb: Codebook, templates: list[OnsetTemplate], capacity: int = 1024,
    ):
        self._cb = cb
        self._templates = templates
        self._ih = OnlineIntegralHistogram(cb.size, capacity)
        super().__init__(
            stream_id,
            self._ih.cumulative,
            np.zeros((len(templates), capacity), dtype=np.float64),
            0,
        )

    def push(self, frame: np.ndarray) -> int:
        """Append one frame; returns its frame index."""
        word = int(quantize(np.asarray(frame, dtype=np.float64)[None, :], self._cb)[0])
        self._ih.push(word)
        self.cumulative = self._ih.cumulative
        t = self._ih.length - 1
        if t >= self.signatures.shape[1]:
            grown = np.zeros((self.signatures.shape[0], 2 * self.signatures.shape[1]))
            grown[:, :t] = self.signatures[:, :t]
            self.signatures = grown
        self.signatures[:, t] = signature_columns(
            self.cumulative, np.array([t]), self._templates,
        )[:, 0]
        self.length = t + 1
        return t

    def x_rows(self, ts: np.ndarray, cascade: CascadeConfig) -> np.ndarray:
        # frames arrive one at a time, so rows come from the causal per-frame path
        if len(ts) == 0:
            return np.zeros((0, cascade.vector_length(self.signatures.shape[0])))
        return np.stack([self.x(int(t), cascade) for t in ts])
