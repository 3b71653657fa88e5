"""Baselines without onset information.

``no_onset`` and ``after_the_fact`` keep the full signature layout but
zero-fill it, so they differ from the onset method only in that block.
"""

from __future__ import annotations

import numpy as np

from ..features import FeatureSpec, StreamFeatures
from .base import Representation


class NoOnset(Representation):
    """Linear machine on the ongoing-segment BoW alone."""
    variant_id = "no_onset"

    def context_dim(self, spec: FeatureSpec) -> int:
        return spec.cascade.vector_length(spec.n_onsets)

    def context_rows(self, feats: StreamFeatures, ts, t1s, spec: FeatureSpec) -> np.ndarray:
        return np.zeros((len(ts), self.context_dim(spec)))


class AfterTheFact(NoOnset):
    """Decides only once the whole hypothesized interval has been observed."""
    variant_id = "after_the_fact"
    fixed_progress = 1.0


class IntegralBow(Representation):
    """Integral bag-of-words: accumulated word counts of the observed segment."""
    variant_id = "integral_bow"
    integral = True

    def context_dim(self, spec: FeatureSpec) -> int:
        return 0

    def context_rows(self, feats: StreamFeatures, ts, t1s, spec: FeatureSpec) -> np.ndarray:
        return np.zeros((len(ts), 0))


class GaussianBayes(Representation):
    """Sliding-window Bayes classifier over diagonal Gaussians of the BoW."""
    variant_id = "gaussian_bayes"
    fixed_progress = 1.0
    scorer = "bayes"

    def context_dim(self, spec: FeatureSpec) -> int:
        return 0

    def context_rows(self, feats: StreamFeatures, ts, t1s, spec: FeatureSpec) -> np.ndarray:
        return np.zeros((len(ts), 0))
