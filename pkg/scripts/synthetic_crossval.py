"""Variable-frame synthetic run: generate a 381/420 dataset and cross-validate under both aggregation rules.

    python scripts/synthetic_crossval.py --out runs/synthetic --feature-dim 32 --hidden-size 32 --epochs 200
"""
import argparse
import json
import time
from pathlib import Path

from varframe.cli import main as cli


def run(args):
    out = Path(args.out)
    cli(["synth", "--out", str(out / "data"), "--feature-dim", str(args.feature_dim), "--seed", str(args.seed)])
    rows = []
    for rule in ("average", "vote"):
        t0 = time.perf_counter()
        cli(["crossval", "--manifest", str(out / "data" / "manifest.csv"), "--out", str(out / rule),
             "--epochs", str(args.epochs), "--hidden-size", str(args.hidden_size), "--aggregation", rule,
             "--seed", str(args.seed), "--jobs", str(args.jobs)])
        m = json.loads((out / rule / "metrics_pooled.json").read_text())
        rows.append((rule, m, time.perf_counter() - t0))

    print(f"{'rule':8s} {'acc':>7s} {'prec':>7s} {'sens':>7s} {'spec':>7s} {'f1':>7s} {'auc':>7s} {'time':>7s}")
    for rule, m, dt in rows:
        vals = [m[k] for k in ("accuracy", "precision", "sensitivity", "specificity", "f1", "auc")]
        print(f"{rule:8s} " + " ".join(f"{100 * v:6.2f}%" if v is not None else "   n/a " for v in vals) + f" {dt:6.1f}s")


if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--out", default="runs/synthetic")
    p.add_argument("--feature-dim", type=int, default=32)
    p.add_argument("--hidden-size", type=int, default=32)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    run(p.parse_args())
