"""Dataset manifests, frame sampling, synthetic data and model checkpoints."""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import NUM_CLASSES, Model
from .errors import CheckpointError, ShapeError
from .npy import read_feature_file, write_feature_file
from .packed import FeatureSequence

MANIFEST_FIELDS = ("video_id", "label", "feature_path", "num_frames")


@dataclass
class ManifestRecord:
    video_id: str
    label: int
    feature_path: str
    num_frames: int


def write_manifest(path: str | Path, records: list[ManifestRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_FIELDS)
        for r in records:
            w.writerow([r.video_id, r.label, r.feature_path, r.num_frames])


def read_manifest(path: str | Path) -> list[ManifestRecord]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != MANIFEST_FIELDS:
            raise ValueError(f"{path}: header must be {','.join(MANIFEST_FIELDS)}, got {reader.fieldnames}")
        records = [
            ManifestRecord(row["video_id"], int(row["label"]), row["feature_path"], int(row["num_frames"]))
            for row in reader
        ]
    seen = set()
    for r in records:
        if r.video_id in seen:
            raise ValueError(f"{path}: duplicate video_id {r.video_id!r}")
        seen.add(r.video_id)
        if r.label not in (0, 1):
            raise ValueError(f"{path}: {r.video_id} has label {r.label}, expected 0 or 1")
        if r.num_frames < 1:
            raise ValueError(f"{path}: {r.video_id} has {r.num_frames} frames")
    return records


def load_dataset(manifest_path: str | Path) -> list[FeatureSequence]:
    """Read every feature file named in a manifest (paths relative to the manifest)."""
    manifest_path = Path(manifest_path)
    out = []
    for r in read_manifest(manifest_path):
        fpath = manifest_path.parent / r.feature_path
        frames = read_feature_file(fpath)
        if frames.shape[0] != r.num_frames:
            raise ShapeError(f"{fpath}: manifest says {r.num_frames} frames, file has {frames.shape[0]}")
        out.append(FeatureSequence(r.video_id, r.label, frames))
    return out


def uniform_sample_indices(n_total: int, k: int) -> list[int]:
    """k endpoint-inclusive, evenly spaced frame indices: round(i * (n-1) / (k-1))."""
    if k < 1 or k > n_total:
        raise ValueError(f"cannot sample {k} of {n_total} frames")
    if k == 1:
        return [0]
    # integer round-half-up of i*(n-1)/(k-1)
    return [(2 * i * (n_total - 1) + (k - 1)) // (2 * (k - 1)) for i in range(k)]


# ---------------------------------------------------------------- synthetic data


@dataclass
class SyntheticConfig:
    num_benign: int = 381
    num_malignant: int = 420
    frame_range: tuple[int, int] = (1, 30)
    feature_dim: int = 512
    class_separation: float = 1.0
    noise_scale: float = 1.0
    drift: float = 0.5
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.frame_range
        if lo < 1 or hi < lo:
            raise ValueError(f"frame_range must satisfy 1 <= min <= max, got {self.frame_range}")
        if self.class_separation <= 0 or self.noise_scale < 0:
            raise ValueError("class_separation must be > 0 and noise_scale >= 0")
        if self.num_benign < 0 or self.num_malignant < 0 or self.feature_dim < 1:
            raise ValueError("counts must be non-negative and feature_dim >= 1")


def synthesize(config: SyntheticConfig) -> list[FeatureSequence]:
    """Benign videos sit around -s/2, malignant around +s/2, each drifting over time in its own direction."""
    rng = np.random.default_rng(config.seed)
    d = config.feature_dim
    lo, hi = config.frame_range
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    span = max(hi - 1, 1)
    seqs = []
    for label, count, prefix in ((0, config.num_benign, "benign"), (1, config.num_malignant, "malignant")):
        sign = 1.0 if label else -1.0
        for i in range(count):
            t = int(rng.integers(lo, hi + 1))
            ramp = np.arange(t)[:, None] / span
            frames = sign * (config.class_separation / 2 + config.drift * ramp * direction)
            frames = frames + config.noise_scale * rng.standard_normal((t, d))
            seqs.append(FeatureSequence(f"{prefix}_{i:04d}", label, frames))
    return seqs


def write_dataset(out_dir: str | Path, seqs: list[FeatureSequence], descr: str = "<f8") -> Path:
    out_dir = Path(out_dir)
    (out_dir / "features").mkdir(parents=True, exist_ok=True)
    records = []
    for s in seqs:
        rel = f"features/{s.video_id}.npy"
        write_feature_file(out_dir / rel, s.frames, descr)
        records.append(ManifestRecord(s.video_id, s.label, rel, s.num_frames))
    manifest = out_dir / "manifest.csv"
    write_manifest(manifest, records)
    return manifest


def generate_synthetic(config: SyntheticConfig, out_dir: str | Path) -> Path:
    return write_dataset(out_dir, synthesize(config))


# ---------------------------------------------------------------- checkpoints

CKPT_MAGIC = b"VFLSTMCK"
CKPT_VERSION = 1
# input, hidden, classes, fold, epoch, best val accuracy, fingerprint, payload bytes
_CKPT_HEADER = struct.Struct("<IIIiId64sQ")


@dataclass
class Checkpoint:
    model: Model
    fingerprint: str
    fold_index: int
    best_val_accuracy: float
    epoch: int


def _payload_bytes(d: int, h: int, c: int) -> int:
    return 8 * (4 * h * d + 4 * h * h + 4 * h + c * h + c)


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    m = ckpt.model
    d, h, c = m.input_size, m.hidden_size, m.head.W.shape[0]
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in m.arrays().values())
    header = _CKPT_HEADER.pack(
        d, h, c, ckpt.fold_index, ckpt.epoch, ckpt.best_val_accuracy,
        ckpt.fingerprint.encode("ascii").ljust(64, b"\0"), len(payload),
    )
    Path(path).write_bytes(CKPT_MAGIC + bytes([CKPT_VERSION]) + header + payload)


def load_checkpoint(path: str | Path) -> Checkpoint:
    buf = Path(path).read_bytes()
    head = len(CKPT_MAGIC) + 1 + _CKPT_HEADER.size
    if len(buf) < head or buf[: len(CKPT_MAGIC)] != CKPT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    if buf[len(CKPT_MAGIC)] != CKPT_VERSION:
        raise CheckpointError(f"{path}: format version {buf[len(CKPT_MAGIC)]}, expected {CKPT_VERSION}")
    d, h, c, fold, epoch, acc, fp, nbytes = _CKPT_HEADER.unpack_from(buf, len(CKPT_MAGIC) + 1)
    if c != NUM_CLASSES or min(d, h) < 1 or nbytes != _payload_bytes(d, h, c):
        raise CheckpointError(f"{path}: dimensions D={d} H={h} C={c} do not match a {nbytes}-byte payload")
    if len(buf) - head != nbytes:
        raise CheckpointError(f"{path}: payload is {len(buf) - head} bytes, header declares {nbytes}")
    shapes = {"W_ih": (4 * h, d), "W_hh": (4 * h, h), "b": (4 * h,), "W_head": (c, h), "b_head": (c,)}
    arrays, offset = {}, head
    for name in Model.PARAM_NAMES:
        count = int(np.prod(shapes[name]))
        arrays[name] = np.frombuffer(buf, "<f8", count, offset).reshape(shapes[name]).astype(np.float64)
        offset += 8 * count
    return Checkpoint(Model.from_arrays(arrays), fp.rstrip(b"\0").decode("ascii"), fold, acc, epoch)
