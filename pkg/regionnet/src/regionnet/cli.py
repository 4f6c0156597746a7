"""Command line entry points: train, predict, eval."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dataset import read_manifest, split_pairs
from .predict import load_checkpoint, predict_masks
from .train import PROFILES, evaluate_pairs, run_training


def _cmd_train(args) -> int:
    report = run_training(
        args.manifest,
        args.checkpoint,
        profile=args.profile,
        epochs=args.epochs,
        limit=args.limit,
        batch_size=args.batch_size,
        base_lr=args.lr,
        weight_decay=args.weight_decay,
        downscale=args.downscale,
        seed=args.seed,
        split=tuple(args.split),
        metrics_log=args.metrics_log,
        amp=not args.no_amp,
    )
    print(
        json.dumps(
            {
                "best_miou": round(report.best_miou, 6),
                "best_epoch": report.best_epoch,
                "epochs": len(report.history),
                "train": report.train_size,
                "test": report.test_size,
                "skipped": report.skipped_pairs,
                "checkpoint": str(report.checkpoint_path),
            }
        )
    )
    return 0


def _cmd_predict(args) -> int:
    inputs = [Path(p) for p in args.inputs]
    if args.in_dir is not None:
        inputs.extend(sorted(Path(args.in_dir).glob("input_*.ppm")))
    if not inputs:
        raise SystemExit("no inputs: pass files or --in-dir")
    model, meta = load_checkpoint(args.checkpoint)
    written = predict_masks(
        model,
        meta,
        inputs,
        args.out_dir,
        batch_size=args.batch_size,
        threshold=args.threshold,
        amp=not args.no_amp,
    )
    print(json.dumps({"masks": len(written), "out_dir": str(args.out_dir)}))
    return 0


def _cmd_eval(args) -> int:
    report = read_manifest(args.manifest)
    pairs = list(report.pairs)
    if args.subset == "all":
        if args.limit is not None:
            pairs = pairs[: args.limit]
    else:
        train_pairs, test_pairs = split_pairs(pairs, tuple(args.split), args.seed, limit=args.limit)
        pairs = train_pairs if args.subset == "train" else test_pairs
    if not pairs:
        raise SystemExit("no pairs to evaluate")
    model, meta = load_checkpoint(args.checkpoint)
    value = evaluate_pairs(
        model, pairs, downscale=int(meta.get("downscale", 1)), amp=not args.no_amp
    )
    print(json.dumps({"miou": round(value, 6), "pairs": len(pairs), "skipped": report.skipped}))
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="regionnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the predictor on gen-samples output")
    p.add_argument("--manifest", action="append", required=True, type=Path,
                   help="manifest.csv path, repeatable")
    p.add_argument("--checkpoint", required=True, type=Path, help="output checkpoint path")
    p.add_argument("--metrics-log", type=Path, help="per-epoch CSV log")
    p.add_argument("--profile", default="desk", choices=sorted(PROFILES))
    p.add_argument("--epochs", type=int, help="override the profile's epoch count")
    p.add_argument("--limit", type=int, help="override the profile's sample cap")
    p.add_argument("--batch-size", type=int,
                   help="override the profile's batch size (desk 25, paper 100)")
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--weight-decay", type=float, default=2e-4)
    p.add_argument("--downscale", type=int, default=2)
    p.add_argument("--split", type=float, nargs=2, metavar=("TRAIN", "TEST"), default=(0.8, 0.2))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-amp", action="store_true", help="disable bfloat16 autocast")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="write region masks for input rasters")
    p.add_argument("inputs", nargs="*", help="input_{id}_{index}.ppm files")
    p.add_argument("--in-dir", type=Path, help="directory scanned for input_*.ppm")
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--no-amp", action="store_true")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="score a checkpoint against manifest labels")
    p.add_argument("--manifest", action="append", required=True, type=Path)
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--subset", default="all", choices=("all", "train", "test"))
    p.add_argument("--split", type=float, nargs=2, metavar=("TRAIN", "TEST"), default=(0.8, 0.2))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int)
    p.add_argument("--no-amp", action="store_true")
    p.set_defaults(func=_cmd_eval)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
