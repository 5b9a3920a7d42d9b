"""Length-sorted, column-wise packing of variable-length frame sequences.

A batch of videos is held either padded (``B x T_max x D`` with zeros past
each video's end) or packed: only the real frames, laid out timestep by
timestep, with ``batch_sizes[t]`` counting how many videos are still active at
step ``t``.  Because videos are sorted longest-first, the active videos at any
step are always a prefix of the batch, so each timestep is one contiguous
slice of the packed data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorruptionError, EmptyInputError, PreconditionError, ShapeError


@dataclass
class FeatureSequence:
    video_id: str
    label: int
    frames: np.ndarray  # T x D

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise ShapeError(f"{self.video_id}: frames must be T x D with T >= 1, got {self.frames.shape}")
        if self.label not in (0, 1):
            raise ValueError(f"{self.video_id}: label must be 0 or 1, got {self.label}")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


@dataclass
class PaddedBatch:
    data: np.ndarray  # B x T_max x D
    lengths: np.ndarray  # B

    @property
    def batch(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass
class PackedBatch:
    data: np.ndarray  # N_total x D
    batch_sizes: np.ndarray  # T_max, non-increasing
    sort_order: np.ndarray  # sorted position -> original index

    @property
    def offsets(self) -> np.ndarray:
        """Start row of each timestep inside ``data``."""
        return np.concatenate(([0], np.cumsum(self.batch_sizes)[:-1])).astype(np.int64)

    @property
    def lengths(self) -> np.ndarray:
        """Per-sequence lengths in sorted order."""
        b = int(self.batch_sizes[0])
        return (self.batch_sizes[None, :] > np.arange(b)[:, None]).sum(axis=1)

    def with_data(self, data: np.ndarray) -> "PackedBatch":
        """Same schedule and order, different per-row payload."""
        if data.shape[0] != self.data.shape[0]:
            raise ShapeError(f"payload has {data.shape[0]} rows, schedule needs {self.data.shape[0]}")
        return PackedBatch(data, self.batch_sizes, self.sort_order)


def pad_sequences(seqs: list[np.ndarray]) -> PaddedBatch:
    """Stack T_i x D matrices into a zero-padded batch."""
    if not seqs:
        raise EmptyInputError("no sequences to pad")
    lengths = np.array([s.shape[0] for s in seqs], dtype=np.int64)
    widths = {s.shape[1] for s in seqs}
    if len(widths) != 1:
        raise ShapeError(f"sequences have differing feature widths {sorted(widths)}")
    if lengths.min() < 1:
        raise ShapeError("every sequence needs at least one frame")
    data = np.zeros((len(seqs), lengths.max(), widths.pop()))
    for i, s in enumerate(seqs):
        data[i, : s.shape[0]] = s
    return PaddedBatch(data, lengths)


def sort_by_length(batch: PaddedBatch) -> tuple[PaddedBatch, np.ndarray]:
    if batch.batch == 0:
        raise EmptyInputError("cannot sort an empty batch")
    # stable sort on -length keeps ties in input order
    order = np.argsort(-batch.lengths, kind="stable")
    return PaddedBatch(batch.data[order], batch.lengths[order]), order


def pack(sorted_batch: PaddedBatch, sort_order: np.ndarray | None = None) -> PackedBatch:
    lengths = np.asarray(sorted_batch.lengths)
    if lengths.size == 0:
        raise EmptyInputError("cannot pack an empty batch")
    bad = np.nonzero(np.diff(lengths) > 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise PreconditionError(
            f"lengths must be non-increasing; index {i} has length {lengths[i]} > {lengths[i - 1]}"
        )
    if lengths[-1] < 1:
        raise PreconditionError("every sequence needs at least one frame")
    t_max = int(lengths[0])
    batch_sizes = (lengths[None, :] > np.arange(t_max)[:, None]).sum(axis=1).astype(np.int64)
    # column-wise tiling: timestep t contributes its active prefix
    data = np.concatenate([sorted_batch.data[: batch_sizes[t], t] for t in range(t_max)], axis=0)
    if sort_order is None:
        sort_order = np.arange(lengths.size)
    return PackedBatch(data, batch_sizes, np.asarray(sort_order, dtype=np.int64))


def check_packed(packed: PackedBatch) -> None:
    bs = np.asarray(packed.batch_sizes)
    if bs.ndim != 1 or bs.size == 0 or bs.min() < 1:
        raise CorruptionError(f"batch_sizes must be a non-empty list of positive counts, got {bs.tolist()}")
    if np.any(np.diff(bs) > 0):
        raise CorruptionError(f"batch_sizes must be non-increasing, got {bs.tolist()}")
    if int(bs.sum()) != packed.data.shape[0]:
        raise CorruptionError(
            f"batch_sizes sum to {int(bs.sum())} but packed data has {packed.data.shape[0]} rows"
        )
    if len(packed.sort_order) != bs[0]:
        raise CorruptionError(f"sort_order has {len(packed.sort_order)} entries for a batch of {bs[0]}")


def unpack(packed: PackedBatch, d_out: int | None = None) -> PaddedBatch:
    """Scatter packed rows back to a zero-filled padded batch (sorted order)."""
    check_packed(packed)
    width = packed.data.shape[1]
    if d_out is not None and d_out != width:
        raise ShapeError(f"packed rows are {width} wide, expected {d_out}")
    bs = packed.batch_sizes
    out = np.zeros((int(bs[0]), bs.size, width))
    for t, start in enumerate(packed.offsets):
        out[: bs[t], t] = packed.data[start : start + bs[t]]
    return PaddedBatch(out, packed.lengths)


def restore_order(batch: PaddedBatch, sort_order: np.ndarray) -> PaddedBatch:
    sort_order = np.asarray(sort_order, dtype=np.int64)
    n = batch.batch
    if sort_order.shape != (n,) or not np.array_equal(np.sort(sort_order), np.arange(n)):
        raise PreconditionError(f"sort_order {sort_order.tolist()} is not a permutation of {n} rows")
    inverse = np.empty_like(sort_order)
    inverse[sort_order] = np.arange(n)
    return PaddedBatch(batch.data[inverse], batch.lengths[inverse])


def pack_sequences(seqs: list[np.ndarray]) -> PackedBatch:
    """pad -> sort -> pack in one call."""
    sorted_batch, order = sort_by_length(pad_sequences(seqs))
    return pack(sorted_batch, order)


def split_packed(packed: PackedBatch) -> list[np.ndarray]:
    """Per-sequence T_i x D blocks in original (pre-sort) order."""
    check_packed(packed)
    offsets = packed.offsets
    out: list[np.ndarray] = [None] * len(packed.sort_order)  # type: ignore[list-item]
    for j, (orig, length) in enumerate(zip(packed.sort_order, packed.lengths)):
        out[orig] = packed.data[offsets[:length] + j]
    return out
