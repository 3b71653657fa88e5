"""Shared fixtures: a tiny two-class scenario, its run config and a trained model."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path for imports
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from earlydetect.codebook import Codebook
from earlydetect.config import RunConfig
from earlydetect.detector import prepare_training, train_detector
from earlydetect.synthgen import START, ScenarioConfig, sample_scenario
from earlydetect.timeline import Dataset, FeatureStream

TINY_MAINS = ["handshake", "punch"]
TINY_ONSETS = ["waving", "pointing"]


def _tiny_scenario(**overrides) -> dict:
    intentions = ["friendly", "hostile"]
    row = {c: 0.5 for c in TINY_MAINS}
    data = {
        "intentions": intentions,
        "intention_prior": {"friendly": 0.5, "hostile": 0.5},
        "onset_classes": list(TINY_ONSETS),
        "main_classes": list(TINY_MAINS),
        "transitions": {i: {r: dict(row) for r in [START, *TINY_MAINS]} for i in intentions},
        "onset_of": {"handshake": "waving", "punch": "pointing"},
        "onset_correlation": {"handshake": 1.0, "punch": 1.0},
        "durations": {
            "handshake": [40.0, 6.0],
            "punch": [30.0, 5.0],
            "waving": [12.0, 3.0],
            "pointing": [12.0, 3.0],
        },
        "activities_per_stream": [3, 4],
        "background_gap": [15, 30],
        "n_sets": 2,
        "streams_per_set": 3,
    }
    data.update(overrides)
    return data


def covers_every_class(ds: Dataset) -> bool:
    """Every set holds at least one instance of every onset and main class."""
    for ids in ds.sets.values():
        seen = {inst.class_id for sid in ids for inst in ds.labels.get(sid, [])}
        if not set(ds.onset_classes) | set(ds.main_classes) <= seen:
            return False
    return True


@pytest.fixture(scope="session")
def tiny_scenario():
    """Factory for tiny scenario dicts; keyword arguments override fields."""
    return _tiny_scenario


@pytest.fixture(scope="session")
def tiny_seed():
    """First generator seed whose tiny dataset has every class in every set."""
    cfg = ScenarioConfig.model_validate(_tiny_scenario())
    for seed in range(100):
        if covers_every_class(sample_scenario(cfg, seed).dataset):
            return seed
    raise RuntimeError("no seed covers every class")


@pytest.fixture(scope="session")
def tiny_dataset(tiny_seed) -> Dataset:
    cfg = ScenarioConfig.model_validate(_tiny_scenario())
    return sample_scenario(cfg, tiny_seed).dataset


@pytest.fixture(scope="session")
def run_config() -> RunConfig:
    return RunConfig.model_validate({
        "codebook": {"size": 16, "seed": 0},
        "cascade": {"window": 40, "depth": 3, "scales": [1, 5]},
        "training": {"progress_levels": [0.3, 0.6, 1.0], "epochs": 20},
        "evaluation": {
            "ratios": [0.3, 0.6, 1.0],
            "methods": ["histogram_plus_mean_max", "no_onset"],
        },
    })


@pytest.fixture(scope="session")
def training_context(tiny_dataset, run_config):
    return prepare_training(tiny_dataset, run_config)


@pytest.fixture(scope="session")
def tiny_model(tiny_dataset, run_config, training_context):
    return train_detector(tiny_dataset, run_config, context=training_context)


@pytest.fixture
def word_codebook():
    """Factory: 1-D codebook whose center w sits at value w, and a stream of given words."""
    def make(words, W: int, stream_id: str = "w"):
        cb = Codebook(centers=np.arange(W, dtype=np.float64)[:, None])
        stream = FeatureStream(stream_id, np.asarray(words, dtype=np.float64)[:, None])
        return cb, stream
    return make

