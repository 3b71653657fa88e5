"""Precision-recall evaluation under the observation-ratio protocol.

A detection of class C at frame t counts as a true positive when an
unmatched ground-truth instance [g1, g2] of C in the same stream satisfies
g1 <= t <= the end of its observed prefix at the evaluated ratio.
Detections are matched greedily in score order, and each instance is
matched at most once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .codebook import Codebook, IntegralHistogram, quantize
from .config import RunConfig
from .detector import (
    Detection, DetectorModel, detect_stream, pick_peaks, prepare_training, train_detector,
)
from .errors import ConfigError
from .features import StreamFeatures
from .matcher import resolve_name
from .onsets import OnsetTemplate, compute_signatures
from .timeline import ActivityInstance, ActivityKind, Dataset, Interval, observed_prefix, scaled_round
from .variants import ABLATION_VARIANTS, ALL_VARIANTS

logger = logging.getLogger(__name__)

GroundTruth = dict[str, list[ActivityInstance]]  # stream id -> instances


@dataclass(frozen=True)
class PRCurve:
    """(threshold, precision, recall) at every distinct score, highest first."""
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.precision.tolist(), self.recall.tolist()))


@dataclass
class MethodResult:
    """Mean AP per ratio plus the pooled detections it was computed from."""
    method: str
    mean_ap: dict[float, float]
    class_ap: dict[float, dict[str, float]]
    detections: list[Detection]


def ground_truth(ds: Dataset, kind: ActivityKind = ActivityKind.MAIN) -> GroundTruth:
    return {s.id: ds.instances(s.id, kind=kind) for s in ds.streams}


# ----------------------------------------------------------------------
# Matching and AP
# ----------------------------------------------------------------------

def match_detections(dets: list[Detection], gt: GroundTruth, ratio: float) -> list[bool]:
    """TP/FP label per detection; detections must be sorted by score, descending."""
    if any(a.score < b.score for a, b in zip(dets, dets[1:])):
        raise ValueError("detections must be sorted by score, descending")
    matched: set[tuple[str, int]] = set()
    labels = []
    for det in dets:
        best = None
        for i, inst in enumerate(gt.get(det.stream, [])):
            if inst.class_id != det.class_id or (det.stream, i) in matched:
                continue
            if not inst.interval.t1 <= det.t <= observed_prefix(inst, ratio).t2:
                continue
            if best is None or inst.interval.t1 < gt[det.stream][best].interval.t1:
                best = i
        if best is None:
            labels.append(False)
        else:
            matched.add((det.stream, best))
            labels.append(True)
    return labels


def pr_curve(scored: list[tuple[float, bool]], n_gt: int) -> PRCurve:
    """PR curve over (score, is_tp) pairs, one point per distinct score."""
    if n_gt < 1:
        raise ValueError("precision-recall needs at least one ground-truth instance")
    if not scored:
        empty = np.zeros(0)
        return PRCurve(empty, empty, empty)
    scores = np.array([s for s, _ in scored], dtype=np.float64)
    hits = np.array([tp for _, tp in scored], dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    scores, hits = scores[order], hits[order]

    last = np.ones(len(scores), dtype=bool)
    last[:-1] = scores[:-1] != scores[1:]  # last index of every score block
    tp = np.cumsum(hits)[last]
    predicted = (np.nonzero(last)[0] + 1).astype(np.float64)
    return PRCurve(thresholds=scores[last], precision=tp / predicted, recall=tp / n_gt)


def average_precision(curve: PRCurve) -> float:
    """Step-wise area: precision times each recall increment."""
    if len(curve.recall) == 0:
        return 0.0
    increments = np.diff(np.concatenate([[0.0], curve.recall]))
    return float(np.sum(curve.precision * increments))


def class_average_precision(
    dets: list[Detection], labels: list[bool], gt: GroundTruth, class_id: str,
) -> float | None:
    n_gt = sum(1 for insts in gt.values() for inst in insts if inst.class_id == class_id)
    if n_gt == 0:
        return None
    scored = [(d.score, tp) for d, tp in zip(dets, labels) if d.class_id == class_id]
    return average_precision(pr_curve(scored, n_gt))


def evaluate_detections(
    dets: list[Detection], gt: GroundTruth, classes: list[str], ratios: list[float],
) -> tuple[dict[float, float], dict[float, dict[str, float]]]:
    """Mean AP (unweighted over classes with ground truth) per ratio."""
    dets = sorted(dets, key=lambda d: (-d.score, d.stream, d.class_id, d.t))
    mean_ap, class_ap = {}, {}
    for ratio in ratios:
        labels = match_detections(dets, gt, ratio)
        aps = {}
        for class_id in classes:
            ap = class_average_precision(dets, labels, gt, class_id)
            if ap is not None:
                aps[class_id] = ap
        class_ap[ratio] = aps
        mean_ap[ratio] = float(np.mean(list(aps.values()))) if aps else 0.0
    return mean_ap, class_ap


def per_class_pr_curves(
    dets: list[Detection], gt: GroundTruth, classes: list[str], ratios: list[float],
) -> dict[tuple[str, float], PRCurve]:
    dets = sorted(dets, key=lambda d: (-d.score, d.stream, d.class_id, d.t))
    curves = {}
    for ratio in ratios:
        labels = match_detections(dets, gt, ratio)
        for class_id in classes:
            n_gt = sum(1 for insts in gt.values() for inst in insts if inst.class_id == class_id)
            if n_gt == 0:
                continue
            scored = [(d.score, tp) for d, tp in zip(dets, labels) if d.class_id == class_id]
            curves[(class_id, ratio)] = pr_curve(scored, n_gt)
    return curves


def mean_ap_vs_ratio(
    model: DetectorModel, test: Dataset, ratios: list[float],
) -> dict[float, float]:
    """Detect on every test stream and report mean AP per observation ratio."""
    dets = []
    for stream in test.streams:
        dets.extend(detect_stream(model, stream))
    mean_ap, _ = evaluate_detections(dets, ground_truth(test), model.main_classes, ratios)
    return mean_ap


# ----------------------------------------------------------------------
# Cross-validation
# ----------------------------------------------------------------------

def leave_one_set_out(ds: Dataset) -> Iterator[tuple[str, Dataset, Dataset]]:
    """(held-out set, train, test) per named set.

    Raises ConfigError before the first fold when the dataset names no sets
    or a fold would train on no streams.
    """
    if not ds.sets:
        raise ConfigError("dataset has no named sets; leave-one-set-out needs at least two")
    for name, ids in sorted(ds.sets.items()):
        if not any(s.id not in set(ids) for s in ds.streams):
            raise ConfigError(f"holding out set {name!r} leaves no training streams")
    for name in sorted(ds.sets):
        test_ids = set(ds.sets[name])
        train_ids = [s.id for s in ds.streams if s.id not in test_ids]
        yield name, ds.subset(train_ids), ds.subset(test_ids)


def run_methods(ds: Dataset, methods: list[str], cfg: RunConfig) -> dict[str, MethodResult]:
    """Leave-one-set-out mean AP per method and observation ratio.

    Detections of every fold are pooled before computing AP.
    """
    ids = [resolve_name(m, [v.variant_id for v in ALL_VARIANTS], what="method") for m in methods]
    pooled: dict[str, list[Detection]] = {m: [] for m in ids}

    for fold, (name, train, test) in enumerate(leave_one_set_out(ds)):
        logger.info(
            "--- Fold %d (%s): %d train / %d test streams ---",
            fold, name, len(train.streams), len(test.streams),
        )
        context = prepare_training(train, cfg)
        test_feats = {
            s.id: StreamFeatures.build(s, context.codebook, context.templates)
            for s in test.streams
        }
        for method in dict.fromkeys(ids):
            model = train_detector(train, cfg, method, context=context)
            for stream in test.streams:
                pooled[method].extend(detect_stream(model, stream, test_feats[stream.id]))

    gt = ground_truth(ds)
    ratios = list(cfg.evaluation.ratios)
    results = {}
    for method in ids:
        mean_ap, class_ap = evaluate_detections(pooled[method], gt, ds.main_classes, ratios)
        results[method] = MethodResult(method, mean_ap, class_ap, pooled[method])
        logger.info(
            "%s: mean AP %s", method,
            ", ".join(f"{r:.1f}={ap:.3f}" for r, ap in mean_ap.items()),
        )
    return results


def run_ablation(ds: Dataset, variants: list[str], cfg: RunConfig) -> dict[str, MethodResult]:
    """Representation ablation under identical splits and seeds."""
    ids = [resolve_name(v, ABLATION_VARIANTS, what="ablation variant") for v in variants]
    results = run_methods(ds, ids, cfg)
    return {v: results[v] for v in ids}


def first_ratio_reaching(mean_ap: dict[float, float], level: float) -> float | None:
    """Smallest observation ratio whose mean AP reaches ``level``."""
    for ratio in sorted(mean_ap):
        if mean_ap[ratio] >= level:
            return ratio
    return None


# ----------------------------------------------------------------------
# Onset detectors on their own
# ----------------------------------------------------------------------

def onset_detection_ap(
    ds: Dataset, cb: Codebook, templates: list[OnsetTemplate], nms_fraction: float = 0.5,
) -> dict[str, float]:
    """AP of each weak onset detector, taking the peaks of G^k as detections."""
    dets: list[Detection] = []
    for stream in ds.streams:
        ih = IntegralHistogram.from_words(quantize(stream, cb), cb.size)
        sigs = compute_signatures(stream, cb, templates, ih=ih)
        for tmpl, series in zip(templates, sigs.values):
            r = int(np.median(tmpl.durations))
            for t in pick_peaks(series, scaled_round(nms_fraction, r)):
                dets.append(Detection(
                    stream=stream.id,
                    class_id=tmpl.class_id,
                    t=t,
                    interval=Interval(max(0, t - r + 1), t),
                    d=1.0,
                    score=float(series[t]),
                ))
    mean_ap, class_ap = evaluate_detections(
        dets, ground_truth(ds, ActivityKind.ONSET), [t.class_id for t in templates], [1.0],
    )
    return class_ap[1.0]
