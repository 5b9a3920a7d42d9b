"""Equal-frame datasets: uniformly resample every video to k frames and cross-validate each k.

Mirrors the 10/12/.../20-frame parameter sweep on a 320/320 synthetic cohort.
Videos shorter than k are dropped, as they cannot be resampled up.

    python scripts/equal_frame_sweep.py --frames 10 12 14 16 18 20 --epochs 60
"""
import argparse

from varframe.data_io import SyntheticConfig, synthesize, uniform_sample_indices
from varframe.packed import FeatureSequence
from varframe.training import TrainConfig, train_crossval, video_accuracy


def resample(seqs, k):
    out = []
    for s in seqs:
        if s.num_frames >= k:
            out.append(FeatureSequence(s.video_id, s.label, s.frames[uniform_sample_indices(s.num_frames, k)]))
    return out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--frames", type=int, nargs="+", default=[10, 12, 14, 16, 18, 20])
    p.add_argument("--feature-dim", type=int, default=16)
    p.add_argument("--hidden-size", type=int, default=16)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    raw = synthesize(SyntheticConfig(320, 320, (20, 30), feature_dim=args.feature_dim, noise_scale=3.0, seed=args.seed))
    cfg = TrainConfig(learning_rate=args.lr, epochs=args.epochs, hidden_size=args.hidden_size, seed=args.seed)
    for k in args.frames:
        data = resample(raw, k)
        res = train_crossval(data, cfg)
        print(f"frames={k:3d} videos={len(data):4d} pooled_acc={video_accuracy(res.pooled_predictions):.4f}")


if __name__ == "__main__":
    main()
