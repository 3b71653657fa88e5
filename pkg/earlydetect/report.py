"""Write result tables (CSV) and detections (JSON) under an output directory."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import pandas as pd

from .detector import Detection, ScoreTrace
from .evaluation import MethodResult, PRCurve
from .onsets import OnsetSignatureSet

logger = logging.getLogger(__name__)

# Fixed float format so reruns are byte-identical
FLOAT_FORMAT = "%.6f"


def _write_csv(df: pd.DataFrame, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %s (%d rows)", path, len(df))
    return path


def ratio_table(results: dict[str, MethodResult]) -> pd.DataFrame:
    """Rows are observation ratios, columns are methods."""
    ratios = sorted({r for res in results.values() for r in res.mean_ap})
    data = {"ratio": ratios}
    for method, res in results.items():
        data[method] = [res.mean_ap.get(r, float("nan")) for r in ratios]
    return pd.DataFrame(data)


def write_ratio_table(results: dict[str, MethodResult], path: Path | str) -> Path:
    return _write_csv(ratio_table(results), path)


def write_class_ap(result: MethodResult, path: Path | str) -> Path:
    rows = [
        {"ratio": ratio, "class": class_id, "ap": ap}
        for ratio, aps in sorted(result.class_ap.items())
        for class_id, ap in sorted(aps.items())
    ]
    return _write_csv(pd.DataFrame(rows, columns=["ratio", "class", "ap"]), path)


def write_pr_curves(curves: dict[tuple[str, float], PRCurve], path: Path | str) -> Path:
    rows = []
    for (class_id, ratio), curve in sorted(curves.items()):
        for threshold, precision, recall in curve.rows():
            rows.append({
                "class": class_id,
                "ratio": ratio,
                "threshold": threshold,
                "precision": precision,
                "recall": recall,
            })
    columns = ["class", "ratio", "threshold", "precision", "recall"]
    return _write_csv(pd.DataFrame(rows, columns=columns), path)


def write_score_traces(traces: dict[str, ScoreTrace], path: Path | str) -> Path:
    """One row per frame: score, progress level and interval of each class."""
    n = len(next(iter(traces.values())).scores) if traces else 0
    data: dict[str, object] = {"t": list(range(n))}
    for class_id, tr in traces.items():
        data[f"{class_id}_score"] = tr.scores
        data[f"{class_id}_d"] = tr.progress
        data[f"{class_id}_t1"] = tr.t1
        data[f"{class_id}_t2"] = tr.t2
    return _write_csv(pd.DataFrame(data), path)


def export_signatures_csv(sigs: OnsetSignatureSet, path: Path | str) -> Path:
    """G^k(t) per frame, one column per onset class."""
    df = pd.DataFrame(sigs.values.T, columns=list(sigs.class_ids))
    df.insert(0, "t", range(sigs.length))
    return _write_csv(df, path)


def write_detections(dets: list[Detection], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps([d.to_dict() for d in dets], indent=2, sort_keys=True), encoding="utf-8",
    )
    logger.info("Wrote %d detections to %s", len(dets), path)
    return path
