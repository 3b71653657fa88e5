"""Representations built from the onset-signature vector x(t).

Each variant keeps a subset of the x(t) blocks: the cascade histogram, the
window means, the window maxes.
"""

from __future__ import annotations

import numpy as np

from ..features import FeatureSpec, StreamFeatures
from .base import Representation


class SignatureRepresentation(Representation):
    use_histogram: bool = True
    use_means: bool = True
    use_maxes: bool = True

    def _slices(self, spec: FeatureSpec) -> list[slice]:
        n_hist = spec.cascade.histogram_length(spec.n_onsets)
        K = spec.n_onsets
        parts = []
        if self.use_histogram:
            parts.append(slice(0, n_hist))
        if self.use_means:
            parts.append(slice(n_hist, n_hist + K))
        if self.use_maxes:
            parts.append(slice(n_hist + K, n_hist + 2 * K))
        return parts

    def context_dim(self, spec: FeatureSpec) -> int:
        return sum(s.stop - s.start for s in self._slices(spec))

    def context_rows(self, feats: StreamFeatures, ts, t1s, spec: FeatureSpec) -> np.ndarray:
        x = feats.x_rows(ts, spec.cascade)
        parts = self._slices(spec)
        if len(parts) == 1:
            return x[:, parts[0]]
        return np.concatenate([x[:, s] for s in parts], axis=1)


class HistogramPlusMeanMax(SignatureRepresentation):
    variant_id = "histogram_plus_mean_max"

    def context_rows(self, feats: StreamFeatures, ts, t1s, spec: FeatureSpec) -> np.ndarray:
        return feats.x_rows(ts, spec.cascade)


class HistogramOnly(SignatureRepresentation):
    variant_id = "histogram_only"
    use_means = False
    use_maxes = False


class MeanMaxOnly(SignatureRepresentation):
    variant_id = "mean_max_only"
    use_histogram = False


class PeakOnly(SignatureRepresentation):
    """Peak onset responses only."""
    variant_id = "peak_only"
    use_histogram = False
    use_means = False


class ContextOnly(HistogramPlusMeanMax):
    """Onset signature alone; the ongoing-segment BoW is zero-filled."""
    variant_id = "context_only"
    uses_bow = False


class IntegralBowOnsets(HistogramPlusMeanMax):
    """Integral bag-of-words of the observed segment plus the onset signature."""
    variant_id = "integral_bow_onset"
    integral = True
