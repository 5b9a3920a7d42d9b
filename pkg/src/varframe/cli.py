"""Command-line entry point: ``varframe {synth,crossval,eval,packcheck}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import metrics as M
from .checks import packcheck
from .classifier import VideoPrediction, predict_videos
from .data_io import Checkpoint, SyntheticConfig, generate_synthetic, load_checkpoint, load_dataset, save_checkpoint
from .errors import CheckpointError, NpyFormatError, ShapeError
from .training import TrainConfig, train_crossval

log = logging.getLogger("varframe")


class UsageError(Exception):
    pass


def _scores(preds: list[VideoPrediction]) -> tuple[list[float], list[int]]:
    return [p.score for p in preds], [p.true_label for p in preds]


def _write_predictions(path: Path, preds: list[VideoPrediction]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["video_id", "label", "score", "predicted_class", "num_frames"])
        for p in preds:
            w.writerow([p.video_id, p.true_label, f"{p.score:.9g}", p.predicted_class, p.frame_probs.shape[0]])


def _write_curves(out: Path, scores, labels, prefix: str = "") -> list[Path]:
    written = []
    for name, curve in (("pr_curve", M.pr_curve), ("roc_curve", M.roc_curve)):
        try:
            points = curve(scores, labels)
        except M.UndefinedMetricError as exc:
            log.warning("skipping %s: %s", name, exc)
            continue
        path = out / f"{prefix}{name}.csv"
        M.write_curve_csv(path, points)
        written.append(path)
    return written


def cmd_synth(args) -> int:
    try:
        config = SyntheticConfig(
            num_benign=args.num_benign, num_malignant=args.num_malignant, frame_range=tuple(args.frames),
            feature_dim=args.feature_dim, class_separation=args.separation, noise_scale=args.noise,
            drift=args.drift, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    manifest = generate_synthetic(config, args.out)
    print(manifest)
    return 0


def cmd_crossval(args) -> int:
    start = time.perf_counter()
    try:
        config = TrainConfig(
            learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size, eval_every=args.eval_every,
            folds=args.folds, seed=args.seed, aggregation=args.aggregation, hidden_size=args.hidden_size,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dataset = load_dataset(args.manifest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    result = train_crossval(dataset, config, jobs=args.jobs)
    checkpoints, fold_reports = [], []
    for fold in result.folds:
        path = out / f"fold_{fold.fold_index}.ckpt"
        save_checkpoint(path, Checkpoint(fold.model, config.fingerprint(), fold.fold_index, fold.best_val_accuracy, fold.best_epoch))
        checkpoints.append(path)
        report = M.metric_report(*_scores(fold.predictions), args.threshold)
        report.update(fold=fold.fold_index, best_epoch=fold.best_epoch, best_val_accuracy=fold.best_val_accuracy,
                      history=[list(h) for h in fold.history])
        fold_reports.append(report)

    pooled = result.pooled_predictions
    scores, labels = _scores(pooled)
    pooled_report = M.metric_report(scores, labels, args.threshold)
    M.write_json(out / "metrics_pooled.json", pooled_report)
    M.write_keyvalue(out / "metrics_pooled.txt", pooled_report)
    M.write_json(out / "metrics_folds.json", {"folds": fold_reports, "mean": M.mean_report(fold_reports)})
    _write_predictions(out / "predictions.csv", pooled)
    curves = _write_curves(out, scores, labels)

    outputs = [out / n for n in ("metrics_pooled.json", "metrics_pooled.txt", "metrics_folds.json", "predictions.csv")]
    run = {
        "command": "crossval",
        "config": asdict(config),
        "manifest": str(args.manifest),
        "threshold": args.threshold,
        "pooled": pooled_report,
        "fold_mean": M.mean_report(fold_reports),
        "checkpoints": [str(p) for p in checkpoints],
        "outputs": [str(p) for p in outputs + curves],
        "wall_time_s": round(time.perf_counter() - start, 3),
    }
    M.write_json(out / "run_report.json", run)
    print("\n".join(f"{k}={M.format_value(v)}" for k, v in pooled_report.items()))
    return 0


def cmd_eval(args) -> int:
    start = time.perf_counter()
    if not 0.0 <= args.threshold <= 1.0:
        raise UsageError(f"--threshold must lie in [0, 1], got {args.threshold}")
    ckpt = load_checkpoint(args.checkpoint)
    dataset = load_dataset(args.manifest)
    for s in dataset:
        if s.frames.shape[1] != ckpt.model.input_size:
            raise ShapeError(
                f"{s.video_id}: features are {s.frames.shape[1]} wide but checkpoint {args.checkpoint} "
                f"expects {ckpt.model.input_size}"
            )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    preds = predict_videos(ckpt.model, dataset, args.aggregation)
    scores, labels = _scores(preds)
    report = M.metric_report(scores, labels, args.threshold)
    cm = M.confusion_at_threshold(scores, labels, args.threshold)
    try:
        normalized = M.normalized_confusion(cm).tolist()
    except M.UndefinedMetricError:
        normalized = None
    M.write_json(out / "metrics.json", report)
    M.write_keyvalue(out / "metrics.txt", report)
    M.write_json(out / "confusion.json", {"raw": asdict(cm), "normalized": normalized, "threshold": args.threshold})
    M.write_distribution_csv(out / "distribution.csv", M.prob_distribution(scores, labels, args.threshold))
    _write_predictions(out / "predictions.csv", preds)
    curves = _write_curves(out, scores, labels)
    outputs = [out / n for n in ("metrics.json", "metrics.txt", "confusion.json", "distribution.csv", "predictions.csv")]
    M.write_json(out / "run_report.json", {
        "command": "eval",
        "checkpoint": str(args.checkpoint),
        "fold_index": ckpt.fold_index,
        "manifest": str(args.manifest),
        "aggregation": args.aggregation,
        "threshold": args.threshold,
        "metrics": report,
        "outputs": [str(p) for p in outputs + curves],
        "wall_time_s": round(time.perf_counter() - start, 3),
    })
    print("\n".join(f"{k}={M.format_value(v)}" for k, v in report.items()))
    return 0


def cmd_packcheck(args) -> int:
    r = packcheck(
        trials=args.trials, grad_trials=args.grad_trials, max_batch=args.max_batch, max_len=args.max_len,
        max_dim=args.max_dim, max_hidden=args.max_hidden, seed=args.seed, corrupt=args.corrupt_batch_sizes,
    )
    print(f"trials={r.trials} max_forward_dev={r.max_forward_dev:.3e} max_grad_dev={r.max_grad_dev:.3e}")
    print("PASS" if r.passed else "FAIL")
    return 0 if r.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="varframe", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic feature-sequence dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--num-benign", type=int, default=381)
    s.add_argument("--num-malignant", type=int, default=420)
    s.add_argument("--frames", type=int, nargs=2, default=[1, 30], metavar=("MIN", "MAX"))
    s.add_argument("--feature-dim", type=int, default=512)
    s.add_argument("--separation", type=float, default=1.0)
    s.add_argument("--noise", type=float, default=1.0)
    s.add_argument("--drift", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("crossval", help="stratified k-fold training with best-checkpoint retention")
    c.add_argument("--manifest", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--lr", type=float, default=1e-5)
    c.add_argument("--epochs", type=int, default=300)
    c.add_argument("--batch-size", type=int, default=32)
    c.add_argument("--eval-every", type=int, default=20)
    c.add_argument("--folds", type=int, default=5)
    c.add_argument("--hidden-size", type=int, default=256)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--aggregation", choices=("average", "vote"), default="average")
    c.add_argument("--threshold", type=float, default=0.5)
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_crossval)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a manifest")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--manifest", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--threshold", type=float, default=0.5)
    e.add_argument("--aggregation", choices=("average", "vote"), default="average")
    e.set_defaults(func=cmd_eval)

    k = sub.add_parser("packcheck", help="packed-vs-sequential and gradient self-checks")
    k.add_argument("--trials", type=int, default=100)
    k.add_argument("--grad-trials", type=int, default=20)
    k.add_argument("--max-batch", type=int, default=8)
    k.add_argument("--max-len", type=int, default=10)
    k.add_argument("--max-dim", type=int, default=8)
    k.add_argument("--max-hidden", type=int, default=6)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--corrupt-batch-sizes", action="store_true", help=argparse.SUPPRESS)
    k.set_defaults(func=cmd_packcheck)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (OSError, NpyFormatError, CheckpointError, ShapeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
