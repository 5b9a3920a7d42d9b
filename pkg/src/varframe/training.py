"""Cross-entropy loss, Adam, the epoch loop and stratified k-fold cross-validation."""
from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifier import Model, VideoPrediction, frame_logits, predict_videos
from .errors import EmptyInputError, ShapeError
from .lstm import backward_packed, forward_packed_cached
from .numeric import log_softmax, matmul, softmax
from .packed import FeatureSequence, PackedBatch, pack, pad_sequences, sort_by_length

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-5
    epochs: int = 300
    batch_size: int = 32
    eval_every: int = 20
    folds: int = 5
    seed: int = 0
    aggregation: str = "average"
    hidden_size: int = 256

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if self.batch_size < 1 or self.eval_every < 1 or self.epochs < 1 or self.hidden_size < 1:
            raise ValueError("batch_size, eval_every, epochs and hidden_size must all be >= 1")
        if self.aggregation not in ("average", "vote"):
            raise ValueError(f"aggregation must be 'average' or 'vote', got {self.aggregation!r}")

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------- loss


def cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """loss = -x[label] + log(sum(exp(x))), with its gradient softmax(x) - onehot."""
    x = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < x.shape[-1]:
        raise ValueError(f"label {label} out of range for {x.shape[-1]} classes")
    loss = -float(log_softmax(x)[label])
    grad = softmax(x)
    grad[label] -= 1.0
    return max(loss, 0.0), grad


def cross_entropy_rows(logits: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``cross_entropy`` for an N x C logit matrix."""
    rows = np.arange(logits.shape[0])
    losses = -log_softmax(logits, axis=1)[rows, labels]
    grad = softmax(logits, axis=1)
    grad[rows, labels] -= 1.0
    return np.maximum(losses, 0.0), grad


# ---------------------------------------------------------------- optimizer


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(
    params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState, lr: float
) -> dict[str, np.ndarray]:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {k} is {g.shape}, parameter is {p.shape}")
        if k not in state.m:
            state.m[k] = np.zeros_like(p)
            state.v[k] = np.zeros_like(p)
        m, v = state.m[k], state.v[k]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params


# ---------------------------------------------------------------- batches


def make_batch(seqs: list[FeatureSequence]) -> tuple[PackedBatch, np.ndarray]:
    """Pack a list of videos; returns the packed batch and one label per packed row."""
    sorted_batch, order = sort_by_length(pad_sequences([s.frames for s in seqs]))
    packed = pack(sorted_batch, order)
    sorted_labels = np.array([seqs[i].label for i in order], dtype=np.int64)
    # row j of timestep t belongs to sorted video j
    frame_labels = np.concatenate([sorted_labels[:n] for n in packed.batch_sizes])
    return packed, frame_labels


def loss_and_grads(model: Model, packed: PackedBatch, frame_labels: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean per-frame cross-entropy over a packed batch and its exact gradient."""
    hidden, cache = forward_packed_cached(model.lstm, packed)
    logits = frame_logits(model.head, hidden).data
    losses, dlogits = cross_entropy_rows(logits, frame_labels)
    n = logits.shape[0]
    dlogits /= n
    dhidden = matmul(dlogits, model.head.W)
    g_lstm, _, _ = backward_packed(model.lstm, cache, dhidden)
    grads = {
        "W_ih": g_lstm.W_ih,
        "W_hh": g_lstm.W_hh,
        "b": g_lstm.b,
        "W_head": matmul(dlogits.T, hidden.data),
        "b_head": dlogits.sum(axis=0),
    }
    return float(losses.sum() / n), grads


def evaluate_loss(model: Model, dataset: list[FeatureSequence], batch_size: int = 256) -> float:
    total, frames = 0.0, 0
    for start in range(0, len(dataset), batch_size):
        packed, labels = make_batch(dataset[start : start + batch_size])
        hidden, _ = forward_packed_cached(model.lstm, packed)
        losses, _ = cross_entropy_rows(frame_logits(model.head, hidden).data, labels)
        total += losses.sum()
        frames += labels.size
    return total / frames


def train_epoch(
    model: Model, dataset: list[FeatureSequence], config: TrainConfig, rng: np.random.Generator,
    adam: AdamState | None = None,
) -> float:
    """Shuffle, batch, pack and take one Adam step per batch.

    Returns the frame-weighted mean loss seen during the epoch (each batch's
    loss is measured before its update).
    """
    if not dataset:
        raise EmptyInputError("cannot train on an empty dataset")
    if adam is None:
        adam = AdamState()
    perm = rng.permutation(len(dataset))
    params = model.arrays()
    total, frames = 0.0, 0
    for start in range(0, len(dataset), config.batch_size):
        packed, labels = make_batch([dataset[i] for i in perm[start : start + config.batch_size]])
        loss, grads = loss_and_grads(model, packed, labels)
        adam_step(params, grads, adam, config.learning_rate)
        total += loss * labels.size
        frames += labels.size
    return total / frames


# ---------------------------------------------------------------- cross-validation


@dataclass
class FoldSplit:
    fold_index: int
    train_ids: list[str]
    val_ids: list[str]


def kfold_split(dataset: list[FeatureSequence], folds: int, seed: int) -> list[FoldSplit]:
    """Stratified split: shuffle each class, then deal round-robin across folds.

    The dealing position carries over between classes so total fold sizes stay
    within one of each other as well.
    """
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if len(dataset) < folds:
        raise ValueError(f"dataset of {len(dataset)} videos cannot be split into {folds} folds")
    ids = [s.video_id for s in dataset]
    if len(set(ids)) != len(ids):
        raise ValueError("video ids must be unique")
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(dataset), dtype=np.int64)
    cursor = 0
    labels = np.array([s.label for s in dataset])
    for label in sorted(set(labels.tolist())):
        members = rng.permutation(np.nonzero(labels == label)[0])
        assignment[members] = (cursor + np.arange(members.size)) % folds
        cursor = (cursor + members.size) % folds
    return [
        FoldSplit(
            k,
            [ids[i] for i in range(len(ids)) if assignment[i] != k],
            [ids[i] for i in range(len(ids)) if assignment[i] == k],
        )
        for k in range(folds)
    ]


def video_accuracy(preds: list[VideoPrediction]) -> float:
    return sum(p.predicted_class == p.true_label for p in preds) / len(preds)


@dataclass
class FoldResult:
    fold_index: int
    model: Model
    best_epoch: int
    best_val_accuracy: float
    history: list[tuple[int, float]]  # (epoch, validation accuracy)
    loss_trace: list[float]
    predictions: list[VideoPrediction]


@dataclass
class CrossvalResult:
    config: TrainConfig
    folds: list[FoldResult]

    @property
    def pooled_predictions(self) -> list[VideoPrediction]:
        return [p for f in self.folds for p in f.predictions]


def fold_rng(seed: int, fold_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, fold_index])


def train_fold(dataset: list[FeatureSequence], split: FoldSplit, config: TrainConfig) -> FoldResult:
    by_id = {s.video_id: s for s in dataset}
    train = [by_id[i] for i in split.train_ids]
    val = [by_id[i] for i in split.val_ids]
    rng = fold_rng(config.seed, split.fold_index)
    model = Model.init(dataset[0].frames.shape[1], config.hidden_size, rng)
    adam = AdamState()

    best: Model | None = None
    best_epoch, best_acc = 0, -1.0
    history, trace = [], []
    for epoch in range(1, config.epochs + 1):
        trace.append(train_epoch(model, train, config, rng, adam))
        # the last epoch is always evaluated so short runs still keep a model
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            acc = video_accuracy(predict_videos(model, val, config.aggregation))
            history.append((epoch, acc))
            log.info("fold %d epoch %d loss %.5f val_acc %.4f", split.fold_index, epoch, trace[-1], acc)
            if acc > best_acc:
                best, best_epoch, best_acc = model.copy(), epoch, acc
    assert best is not None
    preds = predict_videos(best, val, config.aggregation)
    return FoldResult(split.fold_index, best, best_epoch, best_acc, history, trace, preds)


def _train_fold_args(args):
    return train_fold(*args)


def train_crossval(dataset: list[FeatureSequence], config: TrainConfig, jobs: int = 1) -> CrossvalResult:
    if not dataset:
        raise EmptyInputError("cannot cross-validate an empty dataset")
    splits = kfold_split(dataset, config.folds, config.seed)
    work = [(dataset, split, config) for split in splits]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_train_fold_args, work))
    else:
        results = [train_fold(*w) for w in work]
    return CrossvalResult(config, results)
