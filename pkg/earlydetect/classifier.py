"""Binary classifier bank F_(C,d) and the Gaussian-Bayes baseline.

Each (class, progress level) pair gets a linear hinge-loss SVM trained with
SGD on standardized inputs. Its raw margin is calibrated to a probability
with a Platt sigmoid fitted on a held-out slice of the training samples.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import norm
from sklearn.linear_model import SGDClassifier
from sklearn.preprocessing import StandardScaler

from .features import FeatureSpec, StreamFeatures
from .timeline import (
    ActivityKind, Dataset, Interval, interval_overlap, observed_prefix, scaled_round,
)
from .variants import Representation

logger = logging.getLogger(__name__)

# Progress levels d of the classifier bank
DEFAULT_PROGRESS_LEVELS = tuple(round(0.1 * i, 1) for i in range(1, 11))

# Negatives drawn per positive sample
DEFAULT_NEG_RATIO = 5

# A negative hypothesis may overlap an instance of its class up to this IoU
IOU_EXCLUSION = 0.25

# Fraction of samples held out for the Platt fit
PLATT_HOLDOUT = 0.2

# Share of the negatives taken from other classes' observed prefixes
HARD_NEGATIVE_SHARE = 0.5

# L2 strength of the SVM on standardized inputs
DEFAULT_ALPHA = 1e-2

# Floor on Gaussian-Bayes per-dimension variances
VARIANCE_FLOOR = 1e-4

BACKGROUND = "__background__"


@dataclass(frozen=True)
class LinearProbClassifier:
    """Linear margin w.x + bias calibrated by sigmoid(a * margin + b)."""
    weights: np.ndarray
    bias: float
    platt_a: float
    platt_b: float

    def margins(self, X: np.ndarray) -> np.ndarray:
        """w.x + bias for every row of X."""
        return np.sum(X * self.weights, axis=1) + self.bias

    def probs(self, X: np.ndarray) -> np.ndarray:
        return expit(self.platt_a * self.margins(X) + self.platt_b)

    def margin(self, x: np.ndarray) -> float:
        return float(self.margins(np.asarray(x, dtype=np.float64)[None, :])[0])

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
        }

    @classmethod
    def from_dict(cls, data: dict) -> LinearProbClassifier:
        return cls(
            weights=np.asarray(data["weights"], dtype=np.float64),
            bias=float(data["bias"]),
            platt_a=float(data["platt_a"]),
            platt_b=float(data["platt_b"]),
        )


@dataclass
class ClassifierBank:
    """One calibrated linear classifier per (class, progress level)."""
    progress_levels: tuple[float, ...] = DEFAULT_PROGRESS_LEVELS
    classifiers: dict[tuple[str, float], LinearProbClassifier] = field(default_factory=dict)

    def get(self, class_id: str, d: float) -> LinearProbClassifier:
        return self.classifiers[(class_id, d)]

    @property
    def input_dim(self) -> int:
        return next(iter(self.classifiers.values())).weights.shape[0]

    def to_dict(self) -> dict:
        return {
            "progress_levels": list(self.progress_levels),
            "classifiers": [
                {"class": c, "d": d, **clf.to_dict()}
                for (c, d), clf in sorted(self.classifiers.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> ClassifierBank:
        return cls(
            progress_levels=tuple(float(d) for d in data["progress_levels"]),
            classifiers={
                (e["class"], float(e["d"])): LinearProbClassifier.from_dict(e)
                for e in data["classifiers"]
            },
        )


@dataclass(frozen=True)
class GaussianBayesModel:
    """Diagonal Gaussian per class (and background) over normalized BoW vectors."""
    means: dict[str, np.ndarray]
    variances: dict[str, np.ndarray]

    def to_dict(self) -> dict:
        return {
            "means": {c: m.tolist() for c, m in sorted(self.means.items())},
            "variances": {c: v.tolist() for c, v in sorted(self.variances.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> GaussianBayesModel:
        return cls(
            means={c: np.asarray(m, dtype=np.float64) for c, m in data["means"].items()},
            variances={c: np.asarray(v, dtype=np.float64) for c, v in data["variances"].items()},
        )


# ----------------------------------------------------------------------
# Training samples
# ----------------------------------------------------------------------

def _rows(
    features: dict[str, StreamFeatures],
    variant: Representation,
    spec: FeatureSpec,
    hyps: list[tuple[str, int, int]],
) -> np.ndarray:
    """Classifier inputs for (stream, t1, t) hypotheses, built one stream at a time."""
    out = np.zeros((len(hyps), variant.input_dim(spec)))
    by_stream: dict[str, list[int]] = {}
    for i, (stream_id, _, _) in enumerate(hyps):
        by_stream.setdefault(stream_id, []).append(i)
    for stream_id, idx in by_stream.items():
        t1s = np.array([hyps[i][1] for i in idx])
        ts = np.array([hyps[i][2] for i in idx])
        out[idx] = variant.input_rows(features[stream_id], t1s, ts, spec)
    return out


def build_training_set(
    ds: Dataset,
    features: dict[str, StreamFeatures],
    variant: Representation,
    spec: FeatureSpec,
    class_id: str,
    d: float,
    durations: list[int],
    neg_ratio: int = DEFAULT_NEG_RATIO,
    rng: np.random.Generator | None = None,
    iou_exclusion: float = IOU_EXCLUSION,
    hard_share: float = HARD_NEGATIVE_SHARE,
) -> tuple[np.ndarray, np.ndarray]:
    """Positive and negative classifier inputs for F_(class_id, d).

    Positives are the observed prefixes of every instance of the class at
    progress d. Up to ``hard_share`` of the negatives are observed prefixes
    of other main classes at the same progress; the rest are random
    (stream, t, duration) hypotheses. No negative overlaps an instance of
    the class by more than ``iou_exclusion``.
    """
    if rng is None:
        rng = np.random.default_rng(0)

    def clashes(stream_id: str, hyp: Interval) -> bool:
        return any(
            interval_overlap(hyp, inst.interval) > iou_exclusion
            for inst in ds.instances(stream_id, kind=ActivityKind.MAIN, class_id=class_id)
        )

    positives: list[tuple[str, int, int]] = []
    others: list[tuple[str, int, int]] = []
    for stream in ds.streams:
        for inst in ds.instances(stream.id, kind=ActivityKind.MAIN):
            hyp = (stream.id, inst.interval.t1, observed_prefix(inst, d).t2)
            if inst.class_id == class_id:
                positives.append(hyp)
            elif not clashes(stream.id, inst.interval):
                others.append(hyp)
    if not positives:
        raise ValueError(f"class {class_id!r} has no training instances")

    n_neg = neg_ratio * len(positives)
    n_hard = min(len(others), int(hard_share * n_neg))
    picked = sorted(rng.choice(len(others), size=n_hard, replace=False)) if n_hard else []
    negatives = [others[i] for i in picked]

    attempts = 0
    max_attempts = 50 * max(n_neg, 1)
    while len(negatives) < n_neg and attempts < max_attempts:
        attempts += 1
        stream = ds.streams[int(rng.integers(len(ds.streams)))]
        t = int(rng.integers(stream.length))
        L = int(durations[int(rng.integers(len(durations)))])
        t1 = t - scaled_round(d, L)
        if t1 < 0:
            continue
        if clashes(stream.id, Interval(t1, t1 + L)):
            continue
        negatives.append((stream.id, t1, t))

    if len(negatives) < n_neg:
        logger.warning(
            "%s d=%.1f: drew %d/%d negatives after %d attempts",
            class_id, d, len(negatives), n_neg, attempts,
        )
    if not negatives:
        raise ValueError(f"class {class_id!r}: no negative samples could be drawn")
    logger.debug(
        "%s d=%.1f: %d positives, %d negatives (%d from other classes)",
        class_id, d, len(positives), len(negatives), n_hard,
    )

    X = _rows(features, variant, spec, positives + negatives)
    y = np.concatenate([np.ones(len(positives)), np.zeros(len(negatives))]).astype(np.int64)
    return X, y


# ----------------------------------------------------------------------
# Linear SVM + Platt scaling
# ----------------------------------------------------------------------

def platt_train(
    decision_vals: np.ndarray,
    labels: np.ndarray,
    max_iteration: int = 100,
    min_step: float = 1e-10,
    sigma: float = 1e-12,
    eps: float = 1e-5,
) -> tuple[float, float]:
    """Fit (A, B) of P(y=1|f) = 1 / (1 + exp(A f + B)) by Newton's method."""
    prior1 = float(np.sum(labels > 0))
    prior0 = float(len(labels)) - prior1
    hi_target = (prior1 + 1.0) / (prior1 + 2.0)
    lo_target = 1.0 / (prior0 + 2.0)
    t = np.where(labels > 0, hi_target, lo_target)

    def objective(a: float, b: float) -> float:
        fapb = decision_vals * a + b
        return float(np.sum(np.where(fapb >= 0, t, t - 1) * fapb + np.log1p(np.exp(-np.abs(fapb)))))

    a, b = 0.0, float(np.log((prior0 + 1.0) / (prior1 + 1.0)))
    fval = objective(a, b)

    for _ in range(max_iteration):
        fapb = decision_vals * a + b
        p = expit(-fapb)
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + np.sum(decision_vals * decision_vals * d2)
        h22 = sigma + np.sum(d2)
        h21 = np.sum(decision_vals * d2)
        d1 = t - p
        g1 = np.sum(decision_vals * d1)
        g2 = np.sum(d1)
        if abs(g1) < eps and abs(g2) < eps:
            break

        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db

        step = 1.0
        while step >= min_step:
            new_a, new_b = a + step * da, b + step * db
            new_f = objective(new_a, new_b)
            if new_f < fval + 0.0001 * step * gd:
                a, b, fval = new_a, new_b, new_f
                break
            step /= 2.0
        if step < min_step:
            logger.debug("Platt line search stopped at A=%.4f B=%.4f", a, b)
            break
    return float(a), float(b)


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    keys = np.column_stack([X, y]).T
    return np.lexsort(keys[::-1])


def train_binary(
    X: np.ndarray,
    y: np.ndarray,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    epochs: int = 30,
    holdout: float = PLATT_HOLDOUT,
) -> LinearProbClassifier:
    """Hinge-loss L2 linear SVM by seeded SGD, then a Platt fit on a held-out slice.

    Inputs are scaled to unit variance and centered on the midpoint of the
    two class means; the machine has no intercept of its own, and the
    returned weights and bias act on raw inputs.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ValueError("training samples contain a single class")

    order = _canonical_order(X, y)
    X, y = X[order], y[order]

    perm = np.random.default_rng(seed).permutation(len(y))
    n_hold = int(round(holdout * len(y)))
    hold, fit = perm[:n_hold], perm[n_hold:]
    if len(np.unique(y[fit])) < 2:
        hold, fit = perm[:0], perm

    Xf, yf = X[fit], y[fit]
    scale = StandardScaler().fit(Xf).scale_
    center = 0.5 * (Xf[yf == 1].mean(axis=0) + Xf[yf == 0].mean(axis=0))

    svm = SGDClassifier(
        loss="hinge",
        penalty="l2",
        alpha=alpha,
        max_iter=epochs,
        tol=None,
        shuffle=True,
        fit_intercept=False,
        random_state=seed,
        class_weight="balanced",
    )
    svm.fit((Xf - center) / scale, yf)
    weights = svm.coef_[0].astype(np.float64) / scale
    bias = -float(np.dot(weights, center))

    calib = hold if len(np.unique(y[hold])) == 2 else fit
    if calib is fit:
        logger.warning(
            "Platt held-out slice has one class (%d samples); calibrating on the fit set",
            len(hold),
        )
    clf = LinearProbClassifier(weights=weights, bias=bias, platt_a=0.0, platt_b=0.0)
    A, B = platt_train(clf.margins(X[calib]), y[calib])
    return dataclasses.replace(clf, platt_a=-A, platt_b=-B)


def predict_prob(clf: LinearProbClassifier, x: np.ndarray) -> float:
    """Calibrated probability sigmoid(a * (w.x + bias) + b)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != clf.weights.shape:
        raise ValueError(
            f"input length {x.shape[-1]} does not match classifier length {clf.weights.shape[0]}"
        )
    return float(clf.probs(x[None, :])[0])


# ----------------------------------------------------------------------
# Gaussian-Bayes baseline
# ----------------------------------------------------------------------

def fit_gaussian_bayes(
    samples: dict[str, np.ndarray], variance_floor: float = VARIANCE_FLOOR,
) -> GaussianBayesModel:
    """Per-class mean and floored diagonal variance."""
    means, variances = {}, {}
    for class_id, X in samples.items():
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        means[class_id] = X.mean(axis=0)
        variances[class_id] = np.maximum(X.var(axis=0), variance_floor)
    return GaussianBayesModel(means=means, variances=variances)


def gaussian_bayes_score(model: GaussianBayesModel, bow: np.ndarray, class_id: str) -> float:
    """Diagonal Gaussian log-density of a BoW vector under one class."""
    if class_id not in model.means:
        raise ValueError(f"class {class_id!r} not fitted in the Gaussian-Bayes model")
    return float(np.sum(norm.logpdf(
        bow, loc=model.means[class_id], scale=np.sqrt(model.variances[class_id]),
    )))
