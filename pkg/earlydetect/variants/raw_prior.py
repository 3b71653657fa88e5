"""Raw pre-activity frames: BoW of the frames just before the hypothesis start."""

from __future__ import annotations

import numpy as np

from ..features import FeatureSpec, StreamFeatures
from .base import Representation


class RawPriorFrames(Representation):
    variant_id = "raw_prior_frames"

    def context_dim(self, spec: FeatureSpec) -> int:
        return spec.vocabulary

    def context_rows(self, feats: StreamFeatures, ts, t1s, spec: FeatureSpec) -> np.ndarray:
        t1s = np.asarray(t1s, dtype=np.int64)
        lo = np.maximum(0, t1s - spec.raw_prior_frames)
        rows = feats.bow_rows(lo, np.maximum(0, t1s - 1))
        rows[t1s == 0] = 0.0  # nothing precedes frame 0
        return rows
