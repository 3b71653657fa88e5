from .base import Representation, mask_bow
from .baseline import AfterTheFact, GaussianBayes, IntegralBow, NoOnset
from .onset import (
    ContextOnly, HistogramOnly, HistogramPlusMeanMax, IntegralBowOnsets, MeanMaxOnly, PeakOnly,
)
from .raw_prior import RawPriorFrames

from ..matcher import resolve_name

ALL_VARIANTS = [
    HistogramPlusMeanMax,
    HistogramOnly,
    MeanMaxOnly,
    PeakOnly,
    RawPriorFrames,
    NoOnset,
    IntegralBow,
    IntegralBowOnsets,
    ContextOnly,
    AfterTheFact,
    GaussianBayes,
]

# Variants compared in the representation ablation
ABLATION_VARIANTS = [
    "raw_prior_frames",
    "mean_max_only",
    "histogram_only",
    "histogram_plus_mean_max",
    "no_onset",
]

# Methods compared in the observation-ratio table
COMPARISON_METHODS = [
    "histogram_plus_mean_max",
    "peak_only",
    "no_onset",
    "integral_bow_onset",
    "integral_bow",
    "context_only",
    "after_the_fact",
    "gaussian_bayes",
]

_BY_ID = {cls.variant_id: cls for cls in ALL_VARIANTS}


def get_variant(name: str) -> Representation:
    """Instantiate a variant by id; accepts upper-case and hyphenated spellings."""
    return _BY_ID[resolve_name(name, list(_BY_ID), what="variant")]()
