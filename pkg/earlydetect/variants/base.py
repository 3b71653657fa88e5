"""Base class for classifier-input representations."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..features import FeatureSpec, StreamFeatures


class Representation(ABC):
    """How one detection method turns a hypothesis into a classifier input.

    The input is always ``bow(t1, t) || context(t, t1)``; variants differ in
    the context block and in whether the BoW block is kept. Every input is
    built row-wise through :meth:`input_rows`, so a single vector and a batch
    of them carry the same values.
    """

    variant_id: str = ""
    uses_bow: bool = True
    integral: bool = False  # raw word counts instead of the normalized histogram
    fixed_progress: float | None = None  # only this progress level is trained
    scorer: str = "classifier"  # or "bayes"

    @abstractmethod
    def context_dim(self, spec: FeatureSpec) -> int:
        """Length of the context block."""

    @abstractmethod
    def context_rows(
        self, feats: StreamFeatures, ts: np.ndarray, t1s: np.ndarray, spec: FeatureSpec,
    ) -> np.ndarray:
        """Context blocks, shape (len(ts), context_dim), for hypotheses starting at t1s decided at ts."""

    def context(self, feats: StreamFeatures, t: int, t1: int, spec: FeatureSpec) -> np.ndarray:
        return self.context_rows(feats, np.array([t]), np.array([t1]), spec)[0]

    def input_dim(self, spec: FeatureSpec) -> int:
        return spec.vocabulary + self.context_dim(spec)

    def input_rows(
        self, feats: StreamFeatures, t1s: np.ndarray, ts: np.ndarray, spec: FeatureSpec,
    ) -> np.ndarray:
        t1s = np.asarray(t1s, dtype=np.int64)
        ts = np.asarray(ts, dtype=np.int64)
        if self.uses_bow:
            bow = feats.bow_rows(t1s, ts, normalize=not self.integral)
        else:
            bow = np.zeros((len(ts), spec.vocabulary))
        return np.concatenate([bow, self.context_rows(feats, ts, t1s, spec)], axis=1)

    def input_vector(self, feats: StreamFeatures, t1: int, t: int, spec: FeatureSpec) -> np.ndarray:
        return self.input_rows(feats, np.array([t1]), np.array([t]), spec)[0]

    def progress_levels(self, levels: tuple[float, ...]) -> tuple[float, ...]:
        if self.fixed_progress is not None:
            return (self.fixed_progress,)
        return levels


def mask_bow(vector: np.ndarray, vocabulary: int) -> np.ndarray:
    """Copy of a classifier input with its BoW block zero-filled."""
    out = np.array(vector, dtype=np.float64, copy=True)
    out[..., :vocabulary] = 0.0
    return out
