"""Seeded generator of intention-driven activity streams with planted onsets.

Each stream draws one intention, then a sequence of main activities from
the intention's transition table. Before each main activity its designated
onset activity is inserted with the configured correlation probability,
separated from the main activity by a short background gap. Frames are
emitted from latent words: every class has a multinomial over a shared pool
of Gaussian clusters in feature space, plus isotropic noise.

The first ``shared_prefix`` fraction of every main activity emits from one
"approach" distribution common to all main classes, so that a short
observed prefix alone is ambiguous.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .matcher import resolve_name
from .timeline import (
    ActivityInstance, ActivityKind, Dataset, FeatureStream, Interval, round_half_up, save_dataset,
    scaled_round,
)

logger = logging.getLogger(__name__)

# Row key of the transition table for the first activity of a stream
START = "__start__"

# Emission class shared by the opening frames of every main activity
APPROACH = "__approach__"
BACKGROUND = "__background__"

# Tolerance on probability rows summing to 1
ROW_TOLERANCE = 1e-6

# Decimals kept in emitted frame values
FRAME_DECIMALS = 6

DEFAULT_INTENTIONS = ["friendly", "hostile", "avoiding"]
DEFAULT_ONSETS = ["pointing", "reaching", "standing_up", "waving"]
DEFAULT_MAINS = ["handshake", "hug", "punch", "throw", "run_away"]

DEFAULT_ONSET_OF = {
    "handshake": "waving",
    "hug": "waving",
    "punch": "pointing",
    "throw": "reaching",
    "run_away": "standing_up",
}

# Relative preference of each intention for each main class
_PREFERENCES = {
    "friendly": {"handshake": 4.0, "hug": 4.0, "punch": 0.5, "throw": 1.0, "run_away": 0.5},
    "hostile": {"handshake": 0.5, "hug": 0.5, "punch": 4.0, "throw": 4.0, "run_away": 1.0},
    "avoiding": {"handshake": 1.0, "hug": 0.5, "punch": 0.5, "throw": 1.0, "run_away": 4.0},
}

DEFAULT_DURATIONS = {
    "handshake": (60.0, 10.0),
    "hug": (80.0, 12.0),
    "punch": (40.0, 8.0),
    "throw": (50.0, 10.0),
    "run_away": (70.0, 12.0),
    "pointing": (15.0, 4.0),
    "reaching": (18.0, 4.0),
    "standing_up": (20.0, 5.0),
    "waving": (16.0, 4.0),
}


def _row(weights: dict[str, float]) -> dict[str, float]:
    total = sum(weights.values())
    return {k: v / total for k, v in weights.items()}


def default_transitions() -> dict[str, dict[str, dict[str, float]]]:
    """Intention-preferred classes, with repeating the previous class halved."""
    table = {}
    for intention, prefs in _PREFERENCES.items():
        rows = {START: _row(prefs)}
        for prev in DEFAULT_MAINS:
            rows[prev] = _row({c: w * (0.5 if c == prev else 1.0) for c, w in prefs.items()})
        table[intention] = rows
    return table


class ScenarioConfig(BaseModel):
    """Everything the generator draws from, apart from the seed."""

    model_config = ConfigDict(extra="forbid")

    intentions: list[str] = Field(default_factory=lambda: list(DEFAULT_INTENTIONS))
    intention_prior: dict[str, float] = Field(
        default_factory=lambda: {i: 1.0 / len(DEFAULT_INTENTIONS) for i in DEFAULT_INTENTIONS}
    )
    onset_classes: list[str] = Field(default_factory=lambda: list(DEFAULT_ONSETS))
    main_classes: list[str] = Field(default_factory=lambda: list(DEFAULT_MAINS))
    transitions: dict[str, dict[str, dict[str, float]]] = Field(default_factory=default_transitions)
    onset_of: dict[str, str] = Field(default_factory=lambda: dict(DEFAULT_ONSET_OF))
    onset_correlation: dict[str, float] = Field(
        default_factory=lambda: {c: 0.9 for c in DEFAULT_MAINS}
    )

    # emission
    n_features: int = Field(8, ge=1)
    n_latent_words: int = Field(24, ge=2)
    words_per_class: int = Field(3, ge=1)
    center_scale: float = Field(3.0, gt=0.0)
    noise: float = Field(0.3, ge=0.0)
    shared_prefix: float = Field(0.3, ge=0.0, lt=1.0)
    # share of an onset's words drawn from its own distribution; the rest are background words
    onset_clarity: float = Field(1.0, gt=0.0, le=1.0)
    emission_seed: int = 7

    # timing: mean and std of each class duration, in frames
    durations: dict[str, tuple[float, float]] = Field(default_factory=lambda: dict(DEFAULT_DURATIONS))
    min_duration: int = Field(4, ge=1)
    activities_per_stream: tuple[int, int] = (2, 6)
    onset_gap: tuple[int, int] = (5, 30)
    background_gap: tuple[int, int] = (20, 60)
    spurious_onset_rate: float = Field(0.0, ge=0.0, le=1.0)

    # layout
    n_sets: int = Field(8, ge=1)
    streams_per_set: int = Field(8, ge=1)
    fps: float = Field(30.0, gt=0.0)

    @model_validator(mode="after")
    def _consistent(self) -> ScenarioConfig:
        if abs(sum(self.intention_prior.values()) - 1.0) > ROW_TOLERANCE:
            raise ValueError("intention_prior does not sum to 1")
        if set(self.intention_prior) != set(self.intentions):
            raise ValueError("intention_prior keys must match intentions")
        if set(self.onset_classes) & set(self.main_classes):
            raise ValueError("onset and main classes overlap")

        for intention in self.intentions:
            rows = self.transitions.get(intention)
            if rows is None:
                raise ValueError(f"no transition table for intention {intention!r}")
            for prev in [START, *self.main_classes]:
                row = rows.get(prev)
                if row is None:
                    raise ValueError(f"transitions[{intention!r}] lacks row {prev!r}")
                if set(row) - set(self.main_classes):
                    raise ValueError(f"transitions[{intention!r}][{prev!r}] names unknown classes")
                if any(p < 0 for p in row.values()) or abs(sum(row.values()) - 1.0) > ROW_TOLERANCE:
                    raise ValueError(f"transitions[{intention!r}][{prev!r}] does not sum to 1")

        for c in self.main_classes:
            if self.onset_of.get(c) not in self.onset_classes:
                raise ValueError(f"main class {c!r} has no onset class among {self.onset_classes}")
            corr = self.onset_correlation.get(c)
            if corr is None or not 0.0 <= corr <= 1.0:
                raise ValueError(f"onset_correlation[{c!r}] must lie in [0, 1]")
        for c in [*self.onset_classes, *self.main_classes]:
            if c not in self.durations:
                raise ValueError(f"no duration distribution for class {c!r}")
        if self.words_per_class > self.n_latent_words:
            raise ValueError("words_per_class exceeds n_latent_words")
        for name in ("activities_per_stream", "onset_gap", "background_gap"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise ValueError(f"{name} must be an ordered range, got ({lo}, {hi})")
        if self.onset_gap[0] < 1 or self.activities_per_stream[0] < 1:
            raise ValueError("onset_gap and activities_per_stream need a minimum of at least 1")
        return self

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class GeneratedDataset:
    dataset: Dataset
    seed: int
    config_hash: str

    @property
    def provenance(self) -> dict:
        return {"generator": "synthgen", "seed": self.seed, "config_hash": self.config_hash}

    def save(self, root: Path | str, fmt: str = "jsonl") -> Path:
        return save_dataset(self.dataset, root, provenance=self.provenance, fmt=fmt)


# ----------------------------------------------------------------------
# Emission model
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EmissionModel:
    centers: np.ndarray  # (n_latent_words, n_features)
    word_probs: dict[str, np.ndarray]

    @classmethod
    def build(cls, cfg: ScenarioConfig) -> EmissionModel:
        rng = np.random.default_rng(cfg.emission_seed)
        centers = cfg.center_scale * rng.standard_normal((cfg.n_latent_words, cfg.n_features))
        probs = {}
        for name in [BACKGROUND, APPROACH, *cfg.onset_classes, *cfg.main_classes]:
            words = rng.choice(cfg.n_latent_words, size=cfg.words_per_class, replace=False)
            p = np.zeros(cfg.n_latent_words)
            p[words] = rng.dirichlet(np.full(cfg.words_per_class, 2.0))
            probs[name] = p
        return cls(centers=centers, word_probs=probs)

    def emit(
        self, name: str, n: int, noise: float, rng: np.random.Generator, clarity: float = 1.0,
    ) -> np.ndarray:
        p = self.word_probs[name]
        if clarity < 1.0:
            p = clarity * p + (1.0 - clarity) * self.word_probs[BACKGROUND]
        words = rng.choice(len(self.centers), size=n, p=p)
        return self.centers[words] + noise * rng.standard_normal((n, self.centers.shape[1]))


# ----------------------------------------------------------------------
# Sampling
# ----------------------------------------------------------------------

def sample_activity_sequence(
    cfg: ScenarioConfig, intention: str, rng: np.random.Generator,
) -> list[str]:
    """Main activities of one stream, drawn from the intention's transition rows."""
    lo, hi = cfg.activities_per_stream
    n = int(rng.integers(lo, hi + 1))
    rows = cfg.transitions[intention]
    sequence: list[str] = []
    prev = START
    for _ in range(n):
        row = rows[prev]
        classes = sorted(row)
        nxt = classes[int(rng.choice(len(classes), p=[row[c] for c in classes]))]
        sequence.append(nxt)
        prev = nxt
    return sequence


def _duration(cfg: ScenarioConfig, class_id: str, rng: np.random.Generator) -> int:
    mean, std = cfg.durations[class_id]
    return max(cfg.min_duration, round_half_up(rng.normal(mean, std)))


def _gap(bounds: tuple[int, int], rng: np.random.Generator) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


class _StreamBuilder:
    """Appends emitted segments and records labels at their frame offsets."""

    def __init__(self, cfg: ScenarioConfig, model: EmissionModel, rng: np.random.Generator):
        self.cfg = cfg
        self.model = model
        self.rng = rng
        self.chunks: list[np.ndarray] = []
        self.labels: list[ActivityInstance] = []
        self.t = 0

    def emit(self, name: str, n: int, clarity: float = 1.0) -> int:
        start = self.t
        if n > 0:
            self.chunks.append(self.model.emit(name, n, self.cfg.noise, self.rng, clarity))
            self.t += n
        return start

    def activity(self, class_id: str, kind: ActivityKind, intention: str | None) -> None:
        n = _duration(self.cfg, class_id, self.rng)
        if kind == ActivityKind.MAIN:
            n_prefix = scaled_round(self.cfg.shared_prefix, n)
            start = self.emit(APPROACH, n_prefix)
            self.emit(class_id, n - n_prefix)
        else:
            start = self.emit(class_id, n, self.cfg.onset_clarity)
        self.labels.append(ActivityInstance(class_id, Interval(start, start + n - 1), kind, intention))

    def frames(self) -> np.ndarray:
        return np.round(np.vstack(self.chunks), FRAME_DECIMALS)


def _sample_stream(
    cfg: ScenarioConfig, model: EmissionModel, stream_id: str, rng: np.random.Generator,
) -> tuple[FeatureStream, list[ActivityInstance]]:
    intentions = sorted(cfg.intentions)
    intention = intentions[int(rng.choice(len(intentions), p=[cfg.intention_prior[i] for i in intentions]))]
    builder = _StreamBuilder(cfg, model, rng)

    for class_id in sample_activity_sequence(cfg, intention, rng):
        builder.emit(BACKGROUND, _gap(cfg.background_gap, rng))
        if rng.random() < cfg.spurious_onset_rate:
            spurious = cfg.onset_classes[int(rng.integers(len(cfg.onset_classes)))]
            builder.activity(spurious, ActivityKind.ONSET, intention)
            builder.emit(BACKGROUND, _gap(cfg.background_gap, rng))
        if rng.random() < cfg.onset_correlation[class_id]:
            builder.activity(cfg.onset_of[class_id], ActivityKind.ONSET, intention)
            builder.emit(BACKGROUND, _gap(cfg.onset_gap, rng))
        builder.activity(class_id, ActivityKind.MAIN, intention)
    builder.emit(BACKGROUND, max(1, _gap(cfg.background_gap, rng)))

    stream = FeatureStream(id=stream_id, frames=builder.frames(), fps=cfg.fps, intention=intention)
    return stream, builder.labels


def sample_scenario(cfg: ScenarioConfig, seed: int) -> GeneratedDataset:
    """Generate every stream of the scenario; a pure function of (cfg, seed)."""
    model = EmissionModel.build(cfg)
    n_streams = cfg.n_sets * cfg.streams_per_set
    children = np.random.SeedSequence(seed).spawn(n_streams)

    streams, labels, sets = [], {}, {}
    for s in range(cfg.n_sets):
        set_name = f"set{s + 1:02d}"
        sets[set_name] = []
        for i in range(cfg.streams_per_set):
            stream_id = f"{set_name}_s{i + 1:02d}"
            rng = np.random.default_rng(children[s * cfg.streams_per_set + i])
            stream, instances = _sample_stream(cfg, model, stream_id, rng)
            streams.append(stream)
            labels[stream_id] = instances
            sets[set_name].append(stream_id)

    ds = Dataset(
        streams=streams,
        labels=labels,
        sets=sets,
        onset_classes=list(cfg.onset_classes),
        main_classes=list(cfg.main_classes),
    )
    n_main = sum(1 for v in labels.values() for inst in v if inst.kind == ActivityKind.MAIN)
    n_onset = sum(len(v) for v in labels.values()) - n_main
    logger.info(
        "Generated %d streams (%d frames): %d main, %d onset instances",
        len(streams), sum(s.length for s in streams), n_main, n_onset,
    )
    return GeneratedDataset(dataset=ds, seed=seed, config_hash=cfg.config_hash())


# ----------------------------------------------------------------------
# Presets
# ----------------------------------------------------------------------

def preset_configs() -> dict[str, ScenarioConfig]:
    def corr(value: float) -> dict[str, float]:
        return {c: value for c in DEFAULT_MAINS}

    return {
        "STRONG_ONSET": ScenarioConfig(onset_correlation=corr(0.95), noise=0.3),
        "WEAK_ONSET": ScenarioConfig(
            onset_correlation=corr(0.5), noise=0.8, spurious_onset_rate=0.3, onset_clarity=0.4,
        ),
        # spurious onsets keep every onset class present for template fitting
        "NO_ONSET_CONTROL": ScenarioConfig(
            onset_correlation=corr(0.0), noise=0.3, spurious_onset_rate=0.5,
        ),
    }


def load_preset(name: str) -> ScenarioConfig:
    presets = preset_configs()
    return presets[resolve_name(name, list(presets), what="preset")]


def load_scenario_config(path: Path | str) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from e
    except ValidationError as e:
        err = e.errors()[0]
        raise ConfigError(f"invalid scenario config: {err['loc']}: {err['msg']}") from e
