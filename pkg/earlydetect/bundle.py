"""Versioned model files: detector model, run config and provenance."""

from __future__ import annotations

import gzip
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig
from .detector import DetectorModel
from .errors import BundleVersionError, DatasetLoadError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

GZIP_MAGIC = b"\x1f\x8b"


@dataclass
class ModelBundle:
    model: DetectorModel
    config: RunConfig
    provenance: dict = field(default_factory=dict)  # seed, dataset_hash, config_hash

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "model": self.model.to_dict(),
            "config": self.config.model_dump(mode="json"),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ModelBundle:
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise BundleVersionError(
                f"model file has format version {version!r}, expected {FORMAT_VERSION}"
            )
        return cls(
            model=DetectorModel.from_dict(data["model"]),
            config=RunConfig.model_validate(data["config"]),
            provenance=dict(data.get("provenance", {})),
        )


def save_bundle(bundle: ModelBundle, path: Path | str, compact: bool = False) -> Path:
    """Write JSON (indent 2, sorted keys), or deterministic gzip with ``compact``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(bundle.to_dict(), indent=2, sort_keys=True)
    if compact:
        path.write_bytes(gzip.compress(text.encode("utf-8"), mtime=0))
    else:
        path.write_text(text, encoding="utf-8")
    logger.info("Model saved to %s (%s)", path, "gzip" if compact else "json")
    return path


def load_bundle(path: Path | str) -> ModelBundle:
    path = Path(path)
    try:
        raw = path.read_bytes()
        if raw[:2] == GZIP_MAGIC:
            raw = gzip.decompress(raw)
        data = json.loads(raw.decode("utf-8"))
    except (OSError, ValueError) as e:
        raise DatasetLoadError(f"{path}: {e}") from e
    if not isinstance(data, dict):
        raise BundleVersionError(f"{path}: not a model file")
    return ModelBundle.from_dict(data)
