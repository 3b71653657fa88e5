"""Command-line entry point: gen, train, detect, eval, ablate, bench."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

# Add project root to path for imports
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from earlydetect.bundle import ModelBundle, load_bundle, save_bundle
from earlydetect.config import load_run_config, override_run_config
from earlydetect.detector import (
    benchmark, detect_stream, detections_from_traces, score_traces, train_detector,
)
from earlydetect.errors import EarlyDetectError
from earlydetect.evaluation import (
    MethodResult, evaluate_detections, ground_truth, per_class_pr_curves, run_ablation, run_methods,
)
from earlydetect.report import (
    export_signatures_csv, write_class_ap, write_detections, write_pr_curves,
    write_ratio_table, write_score_traces,
)
from earlydetect.synthgen import load_preset, load_scenario_config, sample_scenario
from earlydetect.timeline import dataset_hash, load_dataset, load_stream, validate_dataset
from earlydetect.variants import ABLATION_VARIANTS

logger = logging.getLogger("earlydetect")

# Exit status for bad input or configuration
EXIT_USAGE = 2


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


def _run_config(args: argparse.Namespace, extra: list[str] | None = None):
    overrides = list(getattr(args, "set", None) or []) + (extra or [])
    cfg = load_run_config(getattr(args, "config", None), overrides)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _load_valid_dataset(path: str):
    ds = load_dataset(path)
    violations = validate_dataset(ds)
    if violations:
        for v in violations[:20]:
            logger.error("  %s", v)
        raise ValueError(f"{path}: {len(violations)} dataset violations, first: {violations[0]}")
    return ds


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def cmd_gen(args: argparse.Namespace) -> None:
    if args.config:
        scenario = load_scenario_config(args.config)
    else:
        scenario = load_preset(args.preset)
    generated = sample_scenario(scenario, args.seed)
    generated.save(args.out, fmt=args.format)


def cmd_train(args: argparse.Namespace) -> None:
    cfg = _run_config(args)
    ds = _load_valid_dataset(args.data)
    model = train_detector(ds, cfg, args.variant)
    bundle = ModelBundle(
        model=model,
        config=cfg,
        provenance={
            "seed": cfg.training.seed,
            "dataset_hash": dataset_hash(args.data),
            "config_hash": cfg.config_hash(),
        },
    )
    save_bundle(bundle, args.out_model, compact=args.compact)


def cmd_detect(args: argparse.Namespace) -> None:
    model = load_bundle(args.model).model
    stream = load_stream(args.stream)
    feats = model.features(stream)
    traces = score_traces(model, feats)
    dets = detections_from_traces(model, stream.id, traces)

    out = Path(args.out)
    write_detections(dets, out)
    write_score_traces(traces, args.traces or out.with_name(out.stem + "_traces.csv"))
    if args.signatures:
        export_signatures_csv(feats.signature_set(tuple(t.class_id for t in model.templates)), args.signatures)
    logger.info("%s: %d detections", stream.id, len(dets))


def _write_results(results: dict[str, MethodResult], out_dir: Path, table_name: str, ds, ratios) -> None:
    write_ratio_table(results, out_dir / table_name)
    gt = ground_truth(ds)
    for method, res in results.items():
        write_class_ap(res, out_dir / f"class_ap_{method}.csv")
        curves = per_class_pr_curves(res.detections, gt, ds.main_classes, ratios)
        write_pr_curves(curves, out_dir / f"pr_curves_{method}.csv")


def cmd_eval(args: argparse.Namespace) -> None:
    extra = []
    if args.ratios:
        extra.append(f"evaluation.ratios={json.dumps(args.ratios)}")
    if args.methods:
        extra.append(f"evaluation.methods={json.dumps(args.methods)}")
    out_dir = Path(args.out_dir)
    ds = _load_valid_dataset(args.data)

    if args.model:
        bundle = load_bundle(args.model)
        cfg = override_run_config(bundle.config, [*args.set, *extra])
        ratios = list(cfg.evaluation.ratios)
        model = bundle.model
        dets = [d for s in ds.streams for d in detect_stream(model, s)]
        mean_ap, class_ap = evaluate_detections(dets, ground_truth(ds), ds.main_classes, ratios)
        results = {model.variant_id: MethodResult(model.variant_id, mean_ap, class_ap, dets)}
    else:
        cfg = _run_config(args, extra)
        ratios = list(cfg.evaluation.ratios)
        results = run_methods(ds, list(cfg.evaluation.methods), cfg)

    _write_results(results, out_dir, "mean_ap_vs_ratio.csv", ds, ratios)


def cmd_ablate(args: argparse.Namespace) -> None:
    extra = [f"evaluation.ratios={json.dumps(args.ratios)}"] if args.ratios else []
    cfg = _run_config(args, extra)
    ds = _load_valid_dataset(args.data)
    results = run_ablation(ds, args.variants or list(ABLATION_VARIANTS), cfg)
    _write_results(results, Path(args.out_dir), "ablation.csv", ds, list(cfg.evaluation.ratios))


def cmd_bench(args: argparse.Namespace) -> None:
    model = load_bundle(args.model).model
    stream = load_stream(args.stream)
    result = benchmark(model, stream, repeat=args.repeat, max_frames=args.max_frames)
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text)


# ----------------------------------------------------------------------
# Argument parsing
# ----------------------------------------------------------------------

def _add_run_config(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run config JSON file")
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config key, e.g. cascade.depth=2 (repeatable)",
    )
    p.add_argument("--seed", type=int, help="run seed for codebook and training")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="earlydetect", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="scenario config JSON file")
    src.add_argument("--preset", default="STRONG_ONSET")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a detector model")
    p.add_argument("--data", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--variant", help="representation variant (default from config)")
    p.add_argument("--compact", action="store_true", help="write gzip-compressed JSON")
    _add_run_config(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run a trained model over one stream")
    p.add_argument("--model", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--out", required=True, help="detections JSON")
    p.add_argument("--traces", help="score traces CSV (default: <out>_traces.csv)")
    p.add_argument("--signatures", help="also write onset signatures CSV")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="mean AP per observation ratio")
    p.add_argument("--model", help="evaluate this model; otherwise cross-validate --methods")
    p.add_argument("--data", required=True)
    p.add_argument("--ratios", type=float, nargs="+")
    p.add_argument("--methods", nargs="+")
    p.add_argument("--out-dir", required=True)
    _add_run_config(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="representation ablation")
    p.add_argument("--data", required=True)
    p.add_argument("--variants", nargs="+")
    p.add_argument("--ratios", type=float, nargs="+")
    p.add_argument("--out-dir", required=True)
    _add_run_config(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("bench", help="per-frame detection latency")
    p.add_argument("--model", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--max-frames", type=int, default=1000)
    p.add_argument("--out", help="also write the result JSON here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        args.func(args)
    except (EarlyDetectError, ValueError, OSError) as e:
        message = " ".join(str(e).splitlines())
        print(f"error: {args.command}: {type(e).__name__}: {message}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        logger.exception("%s: unexpected failure", args.command)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
