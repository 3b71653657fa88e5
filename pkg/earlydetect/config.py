"""Run configuration: every tunable of training, detection and evaluation.

A run is reproducible from one JSON file plus a seed. Unknown keys are
rejected, and ``--set section.key=value`` overrides are applied on top.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .signature import CascadeConfig
from .variants import COMPARISON_METHODS

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CodebookSection(_Section):
    size: int = Field(64, ge=2)
    seed: int = 0


class OnsetSection(_Section):
    n_durations: int = Field(3, ge=1)


class CascadeSection(_Section):
    window: int = Field(100, ge=1)
    depth: int = Field(3, ge=1)
    scales: list[int] = Field(default_factory=lambda: [1, 5, 10])

    @model_validator(mode="after")
    def _consistent(self) -> CascadeSection:
        self.to_cascade()
        return self

    def to_cascade(self) -> CascadeConfig:
        return CascadeConfig(window=self.window, depth=self.depth, scales=tuple(self.scales))


class TrainingSection(_Section):
    progress_levels: list[float] = Field(
        default_factory=lambda: [round(0.1 * i, 1) for i in range(1, 11)]
    )
    neg_ratio: int = Field(5, ge=1)
    iou_exclusion: float = Field(0.25, ge=0.0, le=1.0)
    alpha: float = Field(1e-2, gt=0.0)
    epochs: int = Field(30, ge=1)
    platt_holdout: float = Field(0.2, ge=0.0, lt=1.0)
    variance_floor: float = Field(1e-4, gt=0.0)
    seed: int = 0

    @field_validator("progress_levels")
    @classmethod
    def _levels(cls, v: list[float]) -> list[float]:
        if not v or any(not 0.0 < d <= 1.0 for d in v):
            raise ValueError("progress levels must be nonempty and within (0, 1]")
        return sorted(v)


class DetectorSection(_Section):
    variant: str = "histogram_plus_mean_max"
    weight: float = 1.0
    n_durations: int = Field(3, ge=1)  # R
    duration_floor: int = Field(2, ge=1)
    sigma_floor: float = Field(2.0, gt=0.0)
    nms_fraction: float = Field(0.5, ge=0.0)
    raw_prior_frames: int = Field(50, ge=1)


class EvaluationSection(_Section):
    ratios: list[float] = Field(
        default_factory=lambda: [round(0.1 * i, 1) for i in range(1, 11)]
    )
    methods: list[str] = Field(default_factory=lambda: list(COMPARISON_METHODS))

    @field_validator("ratios")
    @classmethod
    def _ratios(cls, v: list[float]) -> list[float]:
        if not v or any(not 0.0 < r <= 1.0 for r in v):
            raise ValueError("observation ratios must be nonempty and within (0, 1]")
        return sorted(v)


class RunConfig(_Section):
    codebook: CodebookSection = Field(default_factory=CodebookSection)
    onsets: OnsetSection = Field(default_factory=OnsetSection)
    cascade: CascadeSection = Field(default_factory=CascadeSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    detector: DetectorSection = Field(default_factory=DetectorSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def with_seed(self, seed: int) -> RunConfig:
        """Same config with every seed derived from one run seed."""
        data = self.model_dump()
        data["codebook"]["seed"] = seed
        data["training"]["seed"] = seed
        return RunConfig.model_validate(data)


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` overrides to a raw config dict."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r}: {part!r} is not a section")
        node[parts[-1]] = _parse_value(raw)
    return data


def _validate(data: dict) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run config: {e.errors()[0]['loc']}: {e.errors()[0]['msg']}") from e
    logger.debug("Run config %s", cfg.config_hash()[:12])
    return cfg


def load_run_config(path: Path | str | None = None, overrides: list[str] | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"{path}: {e}") from e
    return _validate(apply_overrides(data, overrides or []))


def override_run_config(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    if not overrides:
        return cfg
    return _validate(apply_overrides(cfg.model_dump(mode="json"), overrides))


def save_run_config(cfg: RunConfig, path: Path | str) -> None:
    Path(path).write_text(cfg.model_dump_json(indent=2), encoding="utf-8")
