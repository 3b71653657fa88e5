"""Streaming early detector plus the after-the-fact and context-only baselines.

At every frame t and for every main class C the detector scores::

    max_d max_L  sum_I  F_(C,d)(bow[t1, t] || x(t)) * exp(w * (log N(L; mu_C, sigma_C)
                                                        + log P(C|I))) * P(I)

with t1 = t - round(d * L) and t2 = t1 + L, so L is the hypothesized span
t2 - t1. Peaks of the per-class score series are the detections. Every
(d, L) pair of a class is laid out in one hypothesis table, so a block of
frames is scored with a few array operations.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp
from scipy.stats import norm

from .classifier import (
    BACKGROUND, ClassifierBank, GaussianBayesModel, build_training_set,
    fit_gaussian_bayes, gaussian_bayes_score, predict_prob, train_binary,
)
from .codebook import Codebook, fit_codebook
from .config import RunConfig
from .errors import MissingClassError
from .features import FeatureSpec, OnlineStreamFeatures, StreamFeatures
from .onsets import OnsetTemplate, fit_onset_templates
from .signature import CascadeConfig
from .timeline import (
    ActivityKind, Dataset, FeatureStream, Interval, interval_overlap, round_half_up, scaled_round,
)
from .variants import Representation, get_variant, mask_bow

logger = logging.getLogger(__name__)

# Intention used when the training data carries no intention labels
UNKNOWN_INTENTION = "unknown"

# Frames scored together by score_traces
SCORE_CHUNK = 128

# Hypothesis-table scaling configurations (progress levels, R) of the benchmark
BENCHMARK_CONFIGS = ((5, 3), (10, 3), (10, 6))


@dataclass
class DurationPrior:
    """Duration Gaussians per class, intention table P(C|I) and prior P(I)."""
    means: dict[str, float]
    stds: dict[str, float]
    p_intention: dict[str, float]
    p_class_given_intention: dict[str, dict[str, float]]  # I -> C -> P(C|I)
    weight: float = 1.0

    def log_duration(self, class_id: str, L: float) -> float:
        return float(norm.logpdf(L, loc=self.means[class_id], scale=self.stds[class_id]))

    def factor(self, class_id: str, L: float) -> float:
        """sum_I P(I) exp(w (log N(L) + log P(C|I)))."""
        log_n = self.log_duration(class_id, L)
        total = 0.0
        for intention, p_i in sorted(self.p_intention.items()):
            log_c = np.log(self.p_class_given_intention[intention][class_id])
            total += p_i * float(np.exp(self.weight * (log_n + log_c)))
        return total

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> DurationPrior:
        return cls(**data)


@dataclass(frozen=True)
class Detection:
    stream: str
    class_id: str
    t: int
    interval: Interval
    d: float
    score: float

    def to_dict(self) -> dict:
        return {
            "stream": self.stream,
            "class": self.class_id,
            "t": self.t,
            "t1": self.interval.t1,
            "t2": self.interval.t2,
            "d": self.d,
            "score": self.score,
        }


@dataclass
class DetectorModel:
    """Everything the per-frame score needs."""
    codebook: Codebook
    templates: list[OnsetTemplate]
    cascade: CascadeConfig
    variant_id: str
    prior: DurationPrior
    durations: dict[str, tuple[int, ...]]  # class -> hypothesized spans L
    main_classes: list[str]
    bank: ClassifierBank | None = None
    bayes: GaussianBayesModel | None = None
    raw_prior_frames: int = 50
    nms_fraction: float = 0.5
    progress_override: tuple[float, ...] | None = None
    _variant: Representation | None = field(default=None, init=False, repr=False, compare=False)
    _factors: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _tables: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def variant(self) -> Representation:
        if self._variant is None:
            self._variant = get_variant(self.variant_id)
        return self._variant

    @property
    def spec(self) -> FeatureSpec:
        return FeatureSpec(
            cascade=self.cascade,
            vocabulary=self.codebook.size,
            n_onsets=len(self.templates),
            raw_prior_frames=self.raw_prior_frames,
        )

    @property
    def levels(self) -> tuple[float, ...]:
        if self.progress_override is not None:
            return self.progress_override
        if self.bank is None:
            return (1.0,)
        return self.variant.progress_levels(self.bank.progress_levels)

    def prior_factors(self, class_id: str) -> np.ndarray:
        key = (class_id, self.durations[class_id])
        if key not in self._factors:
            self._factors[key] = np.array(
                [self.prior.factor(class_id, L) for L in self.durations[class_id]]
            )
        return self._factors[key]

    def hypotheses(self, class_id: str) -> HypothesisTable:
        key = (class_id, self.levels, self.durations[class_id])
        if key not in self._tables:
            self._tables[key] = HypothesisTable.build(self, class_id)
        return self._tables[key]

    def nms_window(self, class_id: str) -> int:
        return scaled_round(self.nms_fraction, self.prior.means[class_id])

    def features(self, stream: FeatureStream) -> StreamFeatures:
        return StreamFeatures.build(stream, self.codebook, self.templates)

    def to_dict(self) -> dict:
        return {
            "codebook": self.codebook.to_dict(),
            "templates": [t.to_dict() for t in self.templates],
            "cascade": {
                "window": self.cascade.window,
                "depth": self.cascade.depth,
                "scales": list(self.cascade.scales),
            },
            "variant": self.variant_id,
            "prior": self.prior.to_dict(),
            "durations": {c: list(v) for c, v in sorted(self.durations.items())},
            "main_classes": list(self.main_classes),
            "bank": self.bank.to_dict() if self.bank else None,
            "bayes": self.bayes.to_dict() if self.bayes else None,
            "raw_prior_frames": self.raw_prior_frames,
            "nms_fraction": self.nms_fraction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> DetectorModel:
        return cls(
            codebook=Codebook.from_dict(data["codebook"]),
            templates=[OnsetTemplate.from_dict(t) for t in data["templates"]],
            cascade=CascadeConfig(
                window=data["cascade"]["window"],
                depth=data["cascade"]["depth"],
                scales=tuple(data["cascade"]["scales"]),
            ),
            variant_id=data["variant"],
            prior=DurationPrior.from_dict(data["prior"]),
            durations={c: tuple(v) for c, v in data["durations"].items()},
            main_classes=list(data["main_classes"]),
            bank=ClassifierBank.from_dict(data["bank"]) if data["bank"] else None,
            bayes=GaussianBayesModel.from_dict(data["bayes"]) if data["bayes"] else None,
            raw_prior_frames=data["raw_prior_frames"],
            nms_fraction=data["nms_fraction"],
        )


# ----------------------------------------------------------------------
# Priors
# ----------------------------------------------------------------------

def fit_duration_prior(ds: Dataset, weight: float = 1.0, sigma_floor: float = 2.0) -> DurationPrior:
    """Span Gaussians per main class and P(C|I) with add-one smoothing."""
    spans: dict[str, list[int]] = {c: [] for c in ds.main_classes}
    counts: dict[str, dict[str, int]] = {}
    for stream in ds.streams:
        for inst in ds.instances(stream.id, kind=ActivityKind.MAIN):
            if inst.class_id not in spans:
                continue
            spans[inst.class_id].append(inst.interval.t2 - inst.interval.t1)
            intention = ds.intention_of(stream.id, inst) or UNKNOWN_INTENTION
            row = counts.setdefault(intention, {})
            row[inst.class_id] = row.get(inst.class_id, 0) + 1

    missing = [c for c, v in spans.items() if not v]
    if missing:
        raise MissingClassError("main", missing)
    if not counts:
        counts[UNKNOWN_INTENTION] = {}

    n_classes = len(ds.main_classes)
    table = {}
    for intention, row in sorted(counts.items()):
        total = sum(row.values()) + n_classes
        table[intention] = {c: (row.get(c, 0) + 1) / total for c in ds.main_classes}

    return DurationPrior(
        means={c: float(np.mean(v)) for c, v in spans.items()},
        stds={c: max(float(np.std(v)), sigma_floor) for c, v in spans.items()},
        p_intention={i: 1.0 / len(table) for i in table},
        p_class_given_intention=table,
        weight=weight,
    )


def duration_hypotheses(prior: DurationPrior, class_id: str, R: int = 3, floor: int = 2) -> tuple[int, ...]:
    """R spans spread evenly over [mu - sigma, mu + sigma], floored."""
    mu, sigma = prior.means[class_id], prior.stds[class_id]
    if R == 1:
        values = [mu]
    else:
        values = np.linspace(mu - sigma, mu + sigma, R)
    return tuple(max(floor, round_half_up(v)) for v in values)


# ----------------------------------------------------------------------
# Training
# ----------------------------------------------------------------------

def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _bayes_samples(
    ds: Dataset,
    features: dict[str, StreamFeatures],
    neg_ratio: int,
    iou_exclusion: float,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    samples: dict[str, list[np.ndarray]] = {c: [] for c in ds.main_classes}
    spans = []
    for stream in ds.streams:
        feats = features[stream.id]
        for inst in ds.instances(stream.id, kind=ActivityKind.MAIN):
            if inst.class_id in samples:
                samples[inst.class_id].append(feats.bow(inst.interval.t1, inst.interval.t2))
                spans.append(inst.interval.t2 - inst.interval.t1)

    n_background = neg_ratio * max(1, len(spans) // max(1, len(samples)))
    background = []
    for _ in range(50 * n_background):
        if len(background) >= n_background:
            break
        stream = ds.streams[int(rng.integers(len(ds.streams)))]
        L = int(spans[int(rng.integers(len(spans)))])
        t1 = int(rng.integers(max(1, stream.length - L)))
        hyp = Interval(t1, min(t1 + L, stream.length - 1))
        if any(
            interval_overlap(hyp, inst.interval) > iou_exclusion
            for inst in ds.instances(stream.id, kind=ActivityKind.MAIN)
        ):
            continue
        background.append(features[stream.id].bow(hyp.t1, hyp.t2))

    out = {c: np.vstack(v) for c, v in samples.items()}
    if background:
        out[BACKGROUND] = np.vstack(background)
    return out


@dataclass
class TrainingContext:
    """Variant-independent training state of one dataset (or fold)."""
    codebook: Codebook
    templates: list[OnsetTemplate]
    features: dict[str, StreamFeatures]
    prior: DurationPrior
    durations: dict[str, tuple[int, ...]]


def prepare_training(ds: Dataset, cfg: RunConfig) -> TrainingContext:
    """Codebook, onset templates, stream features and priors."""
    frames = np.vstack([s.frames for s in ds.streams])
    cb = fit_codebook(frames, cfg.codebook.size, cfg.codebook.seed)
    templates = fit_onset_templates(ds, cb, cfg.onsets.n_durations)
    features = {s.id: StreamFeatures.build(s, cb, templates) for s in ds.streams}
    prior = fit_duration_prior(ds, cfg.detector.weight, cfg.detector.sigma_floor)
    durations = {
        c: duration_hypotheses(prior, c, cfg.detector.n_durations, cfg.detector.duration_floor)
        for c in ds.main_classes
    }
    return TrainingContext(cb, templates, features, prior, durations)


def train_detector(
    ds: Dataset,
    cfg: RunConfig,
    variant_id: str | None = None,
    context: TrainingContext | None = None,
) -> DetectorModel:
    """Fit codebook, onset templates, priors and the classifier bank."""
    variant = get_variant(variant_id or cfg.detector.variant)
    if context is None:
        context = prepare_training(ds, cfg)
    features = context.features
    durations = context.durations

    model = DetectorModel(
        codebook=context.codebook,
        templates=context.templates,
        cascade=cfg.cascade.to_cascade(),
        variant_id=variant.variant_id,
        prior=context.prior,
        durations=durations,
        main_classes=list(ds.main_classes),
        raw_prior_frames=cfg.detector.raw_prior_frames,
        nms_fraction=cfg.detector.nms_fraction,
    )
    spec = model.spec

    if variant.scorer == "bayes":
        rng = np.random.default_rng(_derived_seed(cfg.training.seed, 0))
        samples = _bayes_samples(
            ds, features, cfg.training.neg_ratio, cfg.training.iou_exclusion, rng,
        )
        model.bayes = fit_gaussian_bayes(samples, cfg.training.variance_floor)
        logger.info("Trained Gaussian-Bayes model over %d classes", len(samples))
        return model

    levels = tuple(cfg.training.progress_levels)
    bank = ClassifierBank(progress_levels=levels)
    for ci, class_id in enumerate(ds.main_classes):
        for di, d in enumerate(variant.progress_levels(levels)):
            rng = np.random.default_rng(_derived_seed(cfg.training.seed, ci, di))
            X, y = build_training_set(
                ds, features, variant, spec, class_id, d, list(durations[class_id]),
                neg_ratio=cfg.training.neg_ratio,
                rng=rng,
                iou_exclusion=cfg.training.iou_exclusion,
            )
            bank.classifiers[(class_id, d)] = train_binary(
                X, y,
                seed=_derived_seed(cfg.training.seed, ci, di, 1) % (2 ** 31),
                alpha=cfg.training.alpha,
                epochs=cfg.training.epochs,
                holdout=cfg.training.platt_holdout,
            )
        logger.info("%s: trained %d classifiers (%s)", class_id, len(variant.progress_levels(levels)), variant.variant_id)
    model.bank = bank
    return model


# ----------------------------------------------------------------------
# Scoring
# ----------------------------------------------------------------------

def _bayes_frame(
    model: DetectorModel, feats: StreamFeatures, t: int, class_id: str,
) -> tuple[float, float | None, Interval | None]:
    best: tuple[float, float | None, Interval | None] = (0.0, None, None)
    classes = sorted(model.bayes.means)
    for L, factor in zip(model.durations[class_id], model.prior_factors(class_id)):
        t1 = t - L
        if t1 < 0:
            continue
        bow = feats.bow(t1, t)
        ll = np.array([gaussian_bayes_score(model.bayes, bow, c) for c in classes])
        posterior = float(np.exp(ll[classes.index(class_id)] - logsumexp(ll)))
        score = posterior * factor
        if score > best[0]:
            best = (score, 1.0, Interval(t1, t1 + L))
    return best


@dataclass(frozen=True)
class HypothesisTable:
    """Every (progress level, span) hypothesis of one class, in scoring order."""
    progress: np.ndarray
    offsets: np.ndarray  # t - t1
    spans: np.ndarray  # L = t2 - t1
    factors: np.ndarray
    weights: np.ndarray  # (H, input length)
    bias: np.ndarray
    platt_a: np.ndarray
    platt_b: np.ndarray

    @classmethod
    def build(cls, model: DetectorModel, class_id: str) -> HypothesisTable:
        rows = []
        for d in model.levels:
            clf = model.bank.get(class_id, d)
            for L, factor in zip(model.durations[class_id], model.prior_factors(class_id)):
                rows.append((d, scaled_round(d, L), L, factor, clf))
        return cls(
            progress=np.array([r[0] for r in rows], dtype=np.float64),
            offsets=np.array([r[1] for r in rows], dtype=np.int64),
            spans=np.array([r[2] for r in rows], dtype=np.int64),
            factors=np.array([r[3] for r in rows], dtype=np.float64),
            weights=np.stack([r[4].weights for r in rows]),
            bias=np.array([r[4].bias for r in rows]),
            platt_a=np.array([r[4].platt_a for r in rows]),
            platt_b=np.array([r[4].platt_b for r in rows]),
        )


@dataclass
class ScoreTrace:
    """Per-frame best score of one class, with the winning hypothesis."""
    scores: np.ndarray
    progress: np.ndarray  # NaN where no hypothesis was feasible
    t1: np.ndarray
    t2: np.ndarray

    @classmethod
    def empty(cls, n: int) -> ScoreTrace:
        return cls(
            scores=np.zeros(n),
            progress=np.full(n, np.nan),
            t1=np.full(n, -1, dtype=np.int64),
            t2=np.full(n, -1, dtype=np.int64),
        )

    def record(self, t: int, result: tuple[float, float | None, Interval | None]) -> None:
        score, d, iv = result
        self.scores[t] = score
        if iv is not None:
            self.progress[t] = d
            self.t1[t] = iv.t1
            self.t2[t] = iv.t2

    def result(self, i: int) -> tuple[float, float | None, Interval | None]:
        if self.t1[i] < 0:
            return float(self.scores[i]), None, None
        return float(self.scores[i]), float(self.progress[i]), Interval(int(self.t1[i]), int(self.t2[i]))

    def put(self, ts: np.ndarray, part: ScoreTrace) -> None:
        self.scores[ts] = part.scores
        self.progress[ts] = part.progress
        self.t1[ts] = part.t1
        self.t2[ts] = part.t2


def score_frames(
    model: DetectorModel, feats: StreamFeatures, ts: np.ndarray, class_id: str,
) -> ScoreTrace:
    """Best hypothesis of class_id at every frame in ts.

    Ties go to the first hypothesis in table order (progress level, then
    span); a frame whose best score is 0 keeps no hypothesis.
    """
    ts = np.asarray(ts, dtype=np.int64)
    out = ScoreTrace.empty(len(ts))
    if model.variant.scorer == "bayes":
        for i, t in enumerate(ts):
            out.record(i, _bayes_frame(model, feats, int(t), class_id))
        return out

    table = model.hypotheses(class_id)
    t1 = ts[:, None] - table.offsets[None, :]
    rows, hyps = np.nonzero(t1 >= 0)
    if len(rows) == 0:
        return out
    X = model.variant.input_rows(feats, t1[rows, hyps], ts[rows], model.spec)
    margins = np.sum(X * table.weights[hyps], axis=1) + table.bias[hyps]
    probs = expit(table.platt_a[hyps] * margins + table.platt_b[hyps])
    scores = np.zeros(t1.shape)
    scores[rows, hyps] = probs * table.factors[hyps]

    best = np.argmax(scores, axis=1)
    out.scores[:] = scores[np.arange(len(ts)), best]
    hit = out.scores > 0
    out.progress[hit] = table.progress[best[hit]]
    out.t1[hit] = t1[hit, best[hit]]
    out.t2[hit] = out.t1[hit] + table.spans[best[hit]]
    return out


def score_frame(
    model: DetectorModel, feats: StreamFeatures, t: int, class_id: str,
) -> tuple[float, float | None, Interval | None]:
    """Best hypothesis score for class_id at frame t, its progress level and interval."""
    return score_frames(model, feats, np.array([t]), class_id).result(0)


def score_traces(model: DetectorModel, feats: StreamFeatures) -> dict[str, ScoreTrace]:
    traces = {c: ScoreTrace.empty(feats.length) for c in model.main_classes}
    for start in range(0, feats.length, SCORE_CHUNK):
        ts = np.arange(start, min(start + SCORE_CHUNK, feats.length))
        for class_id in model.main_classes:
            traces[class_id].put(ts, score_frames(model, feats, ts, class_id))
    return traces


def pick_peaks(scores: np.ndarray, window: int) -> list[int]:
    """Positive local maxima, greedily suppressed within ``window`` frames."""
    scores = np.asarray(scores, dtype=np.float64)
    n = len(scores)
    candidates = []
    for t in range(n):
        s = scores[t]
        if s <= 0:
            continue
        if t > 0 and s <= scores[t - 1]:
            continue
        if t < n - 1 and s < scores[t + 1]:
            continue
        candidates.append(t)
    candidates.sort(key=lambda t: (-scores[t], t))

    kept: list[int] = []
    for t in candidates:
        if all(abs(t - k) >= window for k in kept):
            kept.append(t)
    return kept


def detections_from_traces(
    model: DetectorModel, stream_id: str, traces: dict[str, ScoreTrace],
) -> list[Detection]:
    out = []
    for class_id in model.main_classes:
        tr = traces[class_id]
        peaks = pick_peaks(tr.scores, model.nms_window(class_id))
        for t in peaks:
            out.append(Detection(
                stream=stream_id,
                class_id=class_id,
                t=t,
                interval=Interval(int(tr.t1[t]), int(tr.t2[t])),
                d=float(tr.progress[t]),
                score=float(tr.scores[t]),
            ))
        logger.debug("%s/%s: %d peaks", stream_id, class_id, len(peaks))
    out.sort(key=lambda det: (-det.score, det.class_id, det.t))
    return out


def detect_stream(
    model: DetectorModel, stream: FeatureStream, feats: StreamFeatures | None = None,
) -> list[Detection]:
    """Peak detections over a whole stream, highest score first."""
    if feats is None:
        feats = model.features(stream)
    return detections_from_traces(model, stream.id, score_traces(model, feats))


class StreamingDetector:
    """Frame-by-frame detector; scores match :func:`score_traces` exactly."""

    def __init__(self, model: DetectorModel, stream_id: str = "live"):
        self.model = model
        self.stream_id = stream_id
        self.feats = OnlineStreamFeatures(stream_id, model.codebook, model.templates)
        self._results: dict[str, list[tuple[float, float | None, Interval | None]]] = {
            c: [] for c in model.main_classes
        }

    def push(self, frame: np.ndarray) -> dict[str, tuple[float, float | None, Interval | None]]:
        t = self.feats.push(frame)
        out = {}
        for class_id in self.model.main_classes:
            result = score_frame(self.model, self.feats, t, class_id)
            self._results[class_id].append(result)
            out[class_id] = result
        return out

    def traces(self) -> dict[str, ScoreTrace]:
        n = self.feats.length
        traces = {c: ScoreTrace.empty(n) for c in self.model.main_classes}
        for class_id, results in self._results.items():
            for t, result in enumerate(results):
                traces[class_id].record(t, result)
        return traces

    def detections(self) -> list[Detection]:
        return detections_from_traces(self.model, self.stream_id, self.traces())


# ----------------------------------------------------------------------
# Baselines
# ----------------------------------------------------------------------

def after_the_fact_score(
    model: DetectorModel, feats: StreamFeatures, iv: Interval, class_id: str,
) -> float:
    """Score of a fully observed interval, without onset information."""
    if iv.t2 >= feats.length:
        raise ValueError(f"interval {iv} outside stream of length {feats.length}")
    L = iv.t2 - iv.t1
    factor = model.prior.factor(class_id, L)
    bow = feats.bow(iv.t1, iv.t2)
    if model.bayes is not None:
        classes = sorted(model.bayes.means)
        ll = np.array([gaussian_bayes_score(model.bayes, bow, c) for c in classes])
        return float(np.exp(ll[classes.index(class_id)] - logsumexp(ll))) * factor
    clf = model.bank.get(class_id, 1.0)
    x = np.concatenate([bow, np.zeros(model.variant.context_dim(model.spec))])
    return predict_prob(clf, x) * factor


def context_only_score(model: DetectorModel, feats: StreamFeatures, t: int, class_id: str) -> float:
    """Best classifier probability from the onset signature alone."""
    if model.variant.uses_bow or model.bank is None:
        raise ValueError(
            f"context-only scoring needs a model trained with masked BoW, got {model.variant_id!r}"
        )
    spec = model.spec
    x = mask_bow(model.variant.input_vector(feats, t, t, spec), spec.vocabulary)
    return max(predict_prob(model.bank.get(class_id, d), x) for d in model.levels)


# ----------------------------------------------------------------------
# Benchmark
# ----------------------------------------------------------------------

def with_hypotheses(model: DetectorModel, n_levels: int | None = None, R: int | None = None) -> DetectorModel:
    """Copy of a model restricted to n_levels progress levels and R spans per class."""
    levels = model.levels
    if n_levels is not None and n_levels < len(levels):
        step = len(levels) / n_levels
        levels = tuple(levels[int(round((i + 1) * step)) - 1] for i in range(n_levels))
    durations = model.durations
    if R is not None:
        durations = {c: duration_hypotheses(model.prior, c, R) for c in model.main_classes}
    return dataclasses.replace(model, progress_override=levels, durations=durations)


def time_frames(model: DetectorModel, feats: StreamFeatures, chunk: int = SCORE_CHUNK) -> np.ndarray:
    """Wall-clock seconds per frame of the detection loop, one value per block of frames."""
    times = []
    for start in range(0, feats.length, chunk):
        ts = np.arange(start, min(start + chunk, feats.length))
        begin = time.perf_counter()
        for class_id in model.main_classes:
            score_frames(model, feats, ts, class_id)
        times.append((time.perf_counter() - begin) / len(ts))
    return np.asarray(times)


def benchmark(
    model: DetectorModel, stream: FeatureStream, repeat: int = 3, max_frames: int = 1000,
) -> dict:
    """Per-frame latency percentiles and the |d| / R scaling table.

    Configurations are timed in turn within every repeat so drift in machine
    load hits all of them alike; each scaling entry is the smallest
    per-repeat median.
    """
    feats = model.features(FeatureStream(
        id=stream.id, frames=stream.frames[:max_frames], fps=stream.fps,
    ))
    configs = [model]
    if model.bank is not None:
        configs += [with_hypotheses(model, n_levels=n, R=R) for n, R in BENCHMARK_CONFIGS]
    for m in configs:
        time_frames(m, feats)  # warm the hypothesis tables and the signature matrix

    runs: list[list[np.ndarray]] = [[] for _ in configs]
    for _ in range(repeat):
        for i, m in enumerate(configs):
            runs[i].append(time_frames(m, feats))

    base = np.concatenate(runs[0])
    result = {
        "frames": int(feats.length),
        "repeat": repeat,
        "p50_sec": float(np.percentile(base, 50)),
        "p90_sec": float(np.percentile(base, 90)),
        "p99_sec": float(np.percentile(base, 99)),
        "scaling": [],
    }
    for (_, R), m, times in zip(BENCHMARK_CONFIGS, configs[1:], runs[1:]):
        result["scaling"].append({
            "levels": len(m.levels), "R": R, "p50_sec": min(float(np.median(t)) for t in times),
        })
    logger.info(
        "Benchmark: %d frames, median %.3f ms per frame",
        feats.length, 1000 * result["p50_sec"],
    )
    return result
