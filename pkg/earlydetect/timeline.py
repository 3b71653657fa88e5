"""Streams, intervals, labeled activity instances and datasets.

Frame indices are 0-based and interval endpoints are inclusive, so an
interval [t1, t2] covers t2 - t1 + 1 frames.

On disk a dataset is a directory::

    dataset.json            manifest: classes, sets, stream paths, provenance
    labels.json             [{"stream", "class", "kind", "t1", "t2", "intention"}]
    streams/<id>.jsonl      one {"t": int, "x": [...]} record per frame
    streams/<id>.header.json  {"id", "fps", "n_feat", "intention"}

Streams may also be stored as CSV (one row per frame, one column per feature).
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import DatasetLoadError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "dataset.json"
LABELS_NAME = "labels.json"
STREAMS_DIR = "streams"


class ActivityKind(str, enum.Enum):
    ONSET = "onset"
    MAIN = "main"


@dataclass(frozen=True, order=True)
class Interval:
    """Inclusive frame interval [t1, t2]."""
    t1: int
    t2: int

    def __post_init__(self):
        if not 0 <= self.t1 <= self.t2:
            raise ValueError(f"invalid interval [{self.t1}, {self.t2}]")

    @property
    def duration(self) -> int:
        return self.t2 - self.t1 + 1

    def contains(self, other: Interval) -> bool:
        return self.t1 <= other.t1 and other.t2 <= self.t2

    def __str__(self) -> str:
        return f"[{self.t1}, {self.t2}]"


@dataclass(frozen=True)
class ActivityInstance:
    """One labeled occurrence of an onset or main activity."""
    class_id: str
    interval: Interval
    kind: ActivityKind
    intention: str | None = None


@dataclass
class FeatureStream:
    """Per-frame feature vectors of one continuous observation."""
    id: str
    frames: np.ndarray  # shape (T, n_feat)
    fps: float = 30.0
    intention: str | None = None  # stream-level intention label

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[1] < 1:
            raise ValueError(
                f"stream {self.id}: frames must be a (T, n_feat) matrix, "
                f"got shape {self.frames.shape}"
            )
        if self.fps <= 0:
            raise ValueError(f"stream {self.id}: fps must be positive, got {self.fps}")

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    @property
    def n_feat(self) -> int:
        return self.frames.shape[1]


@dataclass
class Dataset:
    """Streams with their labels, class tables and cross-validation sets."""
    streams: list[FeatureStream]
    labels: dict[str, list[ActivityInstance]]  # stream id -> instances
    sets: dict[str, list[str]] = field(default_factory=dict)  # set name -> stream ids
    onset_classes: list[str] = field(default_factory=list)
    main_classes: list[str] = field(default_factory=list)

    def stream(self, stream_id: str) -> FeatureStream:
        for s in self.streams:
            if s.id == stream_id:
                return s
        raise KeyError(stream_id)

    def instances(
        self,
        stream_id: str,
        kind: ActivityKind | None = None,
        class_id: str | None = None,
    ) -> list[ActivityInstance]:
        out = []
        for inst in self.labels.get(stream_id, []):
            if kind is not None and inst.kind != kind:
                continue
            if class_id is not None and inst.class_id != class_id:
                continue
            out.append(inst)
        return out

    def intention_of(self, stream_id: str, inst: ActivityInstance) -> str | None:
        """Instance intention, falling back to the stream-level label."""
        if inst.intention is not None:
            return inst.intention
        return self.stream(stream_id).intention

    def subset(self, stream_ids: Iterable[str]) -> Dataset:
        keep = set(stream_ids)
        return Dataset(
            streams=[s for s in self.streams if s.id in keep],
            labels={k: v for k, v in self.labels.items() if k in keep},
            sets={
                name: [sid for sid in ids if sid in keep]
                for name, ids in self.sets.items()
                if any(sid in keep for sid in ids)
            },
            onset_classes=list(self.onset_classes),
            main_classes=list(self.main_classes),
        )


@dataclass(frozen=True)
class Violation:
    """One broken dataset invariant."""
    stream: str | None
    label_index: int | None
    rule: str
    detail: str

    def __str__(self) -> str:
        where = self.stream or "-"
        if self.label_index is not None:
            where += f"#{self.label_index}"
        return f"{where}: {self.rule}: {self.detail}"


# ----------------------------------------------------------------------
# Interval arithmetic
# ----------------------------------------------------------------------

def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _exact(x: float | int) -> Fraction:
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(repr(float(x)))


def scaled_round(factor: float, n: float) -> int:
    """round_half_up(factor * n) on the decimal values, so 0.7 * 45 gives 32, not 31."""
    return math.floor(_exact(factor) * _exact(n) + Fraction(1, 2))


def observed_prefix(inst: ActivityInstance | Interval, ratio: float) -> Interval:
    """Part of an instance observed at the given observation ratio."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"observation ratio must be in (0, 1], got {ratio}")
    iv = inst.interval if isinstance(inst, ActivityInstance) else inst
    if ratio == 1.0:
        return iv
    return Interval(iv.t1, iv.t1 + scaled_round(ratio, iv.t2 - iv.t1))


def interval_overlap(a: Interval, b: Interval) -> float:
    """Intersection-over-union on inclusive frame counts."""
    inter = min(a.t2, b.t2) - max(a.t1, b.t1) + 1
    if inter <= 0:
        return 0.0
    union = a.duration + b.duration - inter
    return inter / union


# ----------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------

def validate_dataset(ds: Dataset) -> list[Violation]:
    """Check every dataset invariant; an empty list means the dataset is valid."""
    violations: list[Violation] = []
    lengths: dict[str, int] = {}

    n_feat = None
    for s in ds.streams:
        if s.id in lengths:
            violations.append(Violation(s.id, None, "duplicate-stream", "stream id repeated"))
        lengths[s.id] = s.length
        if n_feat is None:
            n_feat = s.n_feat
        elif s.n_feat != n_feat:
            violations.append(Violation(
                s.id, None, "feature-dimension",
                f"n_feat {s.n_feat} differs from {n_feat}",
            ))

    table = {c: ActivityKind.ONSET for c in ds.onset_classes}
    for c in ds.main_classes:
        if c in table:
            violations.append(Violation(None, None, "class-table", f"{c} is both onset and main"))
        table[c] = ActivityKind.MAIN

    for stream_id, instances in sorted(ds.labels.items()):
        for i, inst in enumerate(instances):
            if stream_id not in lengths:
                violations.append(Violation(
                    stream_id, i, "dangling-reference", "label references unknown stream",
                ))
                continue
            if inst.interval.t2 >= lengths[stream_id]:
                violations.append(Violation(
                    stream_id, i, "out-of-range",
                    f"interval {inst.interval} exceeds stream length {lengths[stream_id]}",
                ))
            expected = table.get(inst.class_id)
            if expected is None:
                violations.append(Violation(
                    stream_id, i, "unknown-class", f"class {inst.class_id!r} not registered",
                ))
            elif expected != inst.kind:
                violations.append(Violation(
                    stream_id, i, "kind-mismatch",
                    f"class {inst.class_id!r} is {expected.value}, labeled {inst.kind.value}",
                ))

    seen: dict[str, str] = {}
    for name, ids in sorted(ds.sets.items()):
        for sid in ids:
            if sid not in lengths:
                violations.append(Violation(sid, None, "dangling-reference", f"set {name!r} lists unknown stream"))
            elif sid in seen:
                violations.append(Violation(sid, None, "set-partition", f"in sets {seen[sid]!r} and {name!r}"))
            else:
                seen[sid] = name
    if ds.sets:
        for sid in lengths:
            if sid not in seen:
                violations.append(Violation(sid, None, "set-partition", "stream belongs to no set"))

    return violations


# ----------------------------------------------------------------------
# File records
# ----------------------------------------------------------------------

class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class StreamHeader(_Record):
    id: str
    fps: float = Field(30.0, gt=0)
    n_feat: int = Field(..., ge=1)
    intention: str | None = None


class FrameRecord(_Record):
    t: int = Field(..., ge=0)
    x: list[float]


class LabelRecord(_Record):
    stream: str
    class_: str = Field(..., alias="class")
    kind: ActivityKind
    t1: int = Field(..., ge=0)
    t2: int = Field(..., ge=0)
    intention: str | None = None

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def _ordered(self) -> LabelRecord:
        if self.t1 > self.t2:
            raise ValueError("t1 must be <= t2")
        return self


class StreamEntry(_Record):
    id: str
    path: str


class Manifest(_Record):
    onset_classes: list[str]
    main_classes: list[str]
    sets: dict[str, list[str]] = Field(default_factory=dict)
    streams: list[StreamEntry]
    labels: str = LABELS_NAME
    provenance: dict = Field(default_factory=dict)


# ----------------------------------------------------------------------
# Loading and saving
# ----------------------------------------------------------------------

def _header_path(path: Path) -> Path:
    return path.with_name(path.stem + ".header.json")


def _read_csv_frames(path: Path) -> np.ndarray:
    """Frame rows of a CSV stream; the first row is a header only if it is not numeric."""
    raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    first = pd.to_numeric(raw.iloc[0], errors="coerce")
    body = raw if first.notna().all() else raw.iloc[1:]
    return body.astype(np.float64).to_numpy()


def load_stream(path: Path | str) -> FeatureStream:
    """Load a JSON-lines or CSV stream (with optional sidecar header)."""
    path = Path(path)
    try:
        header = None
        hpath = _header_path(path)
        if hpath.exists():
            header = StreamHeader.model_validate_json(hpath.read_text(encoding="utf-8"))

        if path.suffix == ".csv":
            frames = _read_csv_frames(path)
        else:
            rows = []
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = FrameRecord.model_validate_json(line)
                    if rec.t != len(rows):
                        raise DatasetLoadError(
                            f"{path}: frame index {rec.t} out of sequence (expected {len(rows)})"
                        )
                    rows.append(rec.x)
            frames = np.asarray(rows, dtype=np.float64)
    except DatasetLoadError:
        raise
    except (OSError, ValueError, ValidationError) as e:
        raise DatasetLoadError(f"{path}: {e}") from e

    if frames.ndim != 2 or frames.shape[0] == 0:
        raise DatasetLoadError(f"{path}: no frames or ragged frame vectors")
    if header is None:
        return FeatureStream(id=path.stem, frames=frames)
    if header.n_feat != frames.shape[1]:
        raise DatasetLoadError(
            f"{path}: header declares n_feat={header.n_feat}, frames have {frames.shape[1]}"
        )
    return FeatureStream(id=header.id, frames=frames, fps=header.fps, intention=header.intention)


def save_stream(stream: FeatureStream, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = StreamHeader(
        id=stream.id, fps=stream.fps, n_feat=stream.n_feat, intention=stream.intention,
    )
    _header_path(path).write_text(header.model_dump_json(), encoding="utf-8")
    if path.suffix == ".csv":
        columns = [f"f{i}" for i in range(stream.n_feat)]
        pd.DataFrame(stream.frames, columns=columns).to_csv(path, index=False)
        return
    with path.open("w", encoding="utf-8") as fh:
        for t, x in enumerate(stream.frames.tolist()):
            fh.write(json.dumps({"t": t, "x": x}, separators=(",", ":")) + "\n")


def load_labels(path: Path | str) -> dict[str, list[ActivityInstance]]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(raw, list):
            raise ValueError("label file must hold a JSON array")
        records = [LabelRecord.model_validate(r) for r in raw]
    except (OSError, ValueError, ValidationError) as e:
        raise DatasetLoadError(f"{path}: {e}") from e

    labels: dict[str, list[ActivityInstance]] = {}
    for rec in records:
        labels.setdefault(rec.stream, []).append(ActivityInstance(
            class_id=rec.class_,
            interval=Interval(rec.t1, rec.t2),
            kind=rec.kind,
            intention=rec.intention,
        ))
    return labels


def label_records(labels: dict[str, list[ActivityInstance]]) -> list[dict]:
    out = []
    for stream_id in sorted(labels):
        for inst in labels[stream_id]:
            out.append({
                "stream": stream_id,
                "class": inst.class_id,
                "kind": inst.kind.value,
                "t1": inst.interval.t1,
                "t2": inst.interval.t2,
                "intention": inst.intention,
            })
    return out


def save_labels(labels: dict[str, list[ActivityInstance]], path: Path | str) -> None:
    Path(path).write_text(json.dumps(label_records(labels), indent=2), encoding="utf-8")


def load_dataset(root: Path | str) -> Dataset:
    """Load a dataset directory written by :func:`save_dataset`."""
    root = Path(root)
    try:
        manifest = Manifest.model_validate_json((root / MANIFEST_NAME).read_text(encoding="utf-8"))
    except (OSError, ValueError, ValidationError) as e:
        raise DatasetLoadError(f"{root / MANIFEST_NAME}: {e}") from e

    streams = [load_stream(root / entry.path) for entry in manifest.streams]
    labels = load_labels(root / manifest.labels)
    logger.info(
        "Loaded %d streams, %d labels from %s",
        len(streams), sum(len(v) for v in labels.values()), root,
    )
    return Dataset(
        streams=streams,
        labels=labels,
        sets={k: list(v) for k, v in manifest.sets.items()},
        onset_classes=list(manifest.onset_classes),
        main_classes=list(manifest.main_classes),
    )


def save_dataset(
    ds: Dataset, root: Path | str, provenance: dict | None = None, fmt: str = "jsonl",
) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for s in ds.streams:
        rel = f"{STREAMS_DIR}/{s.id}.{fmt}"
        save_stream(s, root / rel)
        entries.append(StreamEntry(id=s.id, path=rel))
    save_labels(ds.labels, root / LABELS_NAME)
    manifest = Manifest(
        onset_classes=ds.onset_classes,
        main_classes=ds.main_classes,
        sets=ds.sets,
        streams=entries,
        provenance=provenance or {},
    )
    (root / MANIFEST_NAME).write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    logger.info("Wrote %d streams to %s", len(ds.streams), root)
    return root


def dataset_hash(root: Path | str) -> str:
    """SHA-256 over the manifest, labels and stream files of a dataset directory."""
    root = Path(root)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(str(path.relative_to(root)).encode("utf-8"))
        h.update(path.read_bytes())
    return h.hexdigest()
