"""Randomised self-checks: packed forward vs a per-video loop, and gradients vs finite differences."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import Model
from .lstm import LstmState, cell_forward, forward_packed
from .packed import FeatureSequence, PackedBatch, pack_sequences, split_packed
from .training import loss_and_grads, make_batch


def random_instance(
    rng: np.random.Generator, max_batch: int, max_len: int, max_dim: int, max_hidden: int, scale: float = 1.0
) -> tuple[list[FeatureSequence], Model]:
    b = int(rng.integers(1, max_batch + 1))
    d = int(rng.integers(1, max_dim + 1))
    h = int(rng.integers(1, max_hidden + 1))
    seqs = [
        FeatureSequence(f"v{i}", int(rng.integers(0, 2)), scale * rng.standard_normal((int(rng.integers(1, max_len + 1)), d)))
        for i in range(b)
    ]
    model = Model.init(d, h, rng)
    # push weights past the default init so gates leave their linear regime
    for a in model.arrays().values():
        a *= 3.0
    return seqs, model


def sequential_forward(model: Model, frames: np.ndarray) -> np.ndarray:
    """Reference: one video, one frame at a time through ``cell_forward``."""
    state = LstmState.zeros(1, model.hidden_size)
    out = []
    for x in frames:
        state = cell_forward(model.lstm, x[None, :], state)
        out.append(state.h[0])
    return np.array(out)


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Entrywise |a - b| / max(|a|, |b|, floor); exact matches count as 0."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    diff = np.abs(a - b)
    den = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return np.divide(diff, den, out=np.zeros_like(diff), where=diff > 0)


def packed_forward_deviation(model: Model, seqs: list[FeatureSequence], packed: PackedBatch | None = None) -> float:
    if packed is None:
        packed = pack_sequences([s.frames for s in seqs])
    got = split_packed(forward_packed(model.lstm, packed))
    worst = 0.0
    for s, g in zip(seqs, got):
        ref = sequential_forward(model, s.frames)
        if g.shape != ref.shape:
            return np.inf
        worst = max(worst, float(relative_error(g, ref).max()))
    return worst


def numeric_gradients(model: Model, packed: PackedBatch, labels: np.ndarray, step: float = 1e-5) -> dict[str, np.ndarray]:
    """Central differences of the batch loss for every parameter entry."""
    out = {}
    for name, arr in model.arrays().items():
        g = np.empty_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            up, _ = loss_and_grads(model, packed, labels)
            flat[k] = orig - step
            down, _ = loss_and_grads(model, packed, labels)
            flat[k] = orig
            gflat[k] = (up - down) / (2 * step)
        out[name] = g
    return out


GRAD_FLOOR = 1e-4


def gradient_deviation(model: Model, seqs: list[FeatureSequence], step: float = 1e-5) -> float:
    packed, labels = make_batch(seqs)
    _, analytic = loss_and_grads(model, packed, labels)
    numeric = numeric_gradients(model, packed, labels, step)
    return max(float(relative_error(analytic[k], numeric[k], GRAD_FLOOR).max()) for k in analytic)


@dataclass
class PackcheckResult:
    trials: int
    max_forward_dev: float
    max_grad_dev: float
    passed: bool


def corrupt_batch_sizes(packed: PackedBatch) -> PackedBatch:
    """Test hook: shift one frame from the first timestep to the last."""
    bs = packed.batch_sizes.copy()
    bs[0] -= 1
    bs[-1] += 1
    return PackedBatch(packed.data, bs, packed.sort_order)


def packcheck(
    trials: int = 100, grad_trials: int = 20, max_batch: int = 8, max_len: int = 10, max_dim: int = 8,
    max_hidden: int = 6, seed: int = 0, forward_tol: float = 1e-10, grad_tol: float = 1e-6, corrupt: bool = False,
) -> PackcheckResult:
    rng = np.random.default_rng(seed)
    fwd = 0.0
    for _ in range(trials):
        seqs, model = random_instance(rng, max_batch, max_len, max_dim, max_hidden)
        packed = pack_sequences([s.frames for s in seqs])
        if corrupt:
            packed = corrupt_batch_sizes(packed)
        try:
            fwd = max(fwd, packed_forward_deviation(model, seqs, packed))
        except ValueError:
            fwd = np.inf
    grad = 0.0
    for _ in range(grad_trials):
        seqs, model = random_instance(rng, min(max_batch, 3), min(max_len, 4), min(max_dim, 4), min(max_hidden, 3))
        grad = max(grad, gradient_deviation(model, seqs))
    return PackcheckResult(trials, fwd, grad, bool(fwd < forward_tol and grad < grad_tol))
