"""Frame-level classification head and video-level aggregation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import EmptyInputError, ShapeError
from .lstm import LstmParams, forward_packed
from .numeric import argmax, matmul, softmax
from .packed import FeatureSequence, PackedBatch, pack_sequences, split_packed

Aggregation = Literal["average", "vote"]
NUM_CLASSES = 2


@dataclass
class DenseParams:
    W: np.ndarray  # C x H
    b: np.ndarray  # C

    @classmethod
    def init(cls, hidden_size: int, rng: np.random.Generator, num_classes: int = NUM_CLASSES) -> "DenseParams":
        k = 1.0 / np.sqrt(hidden_size)
        return cls(rng.uniform(-k, k, (num_classes, hidden_size)), rng.uniform(-k, k, num_classes))

    @classmethod
    def zeros(cls, hidden_size: int, num_classes: int = NUM_CLASSES) -> "DenseParams":
        return cls(np.zeros((num_classes, hidden_size)), np.zeros(num_classes))


@dataclass
class Model:
    """LSTM plus affine head; the unit that gets trained and checkpointed."""

    lstm: LstmParams
    head: DenseParams

    # fixed order, shared by the optimizer and the checkpoint format
    PARAM_NAMES = ("W_ih", "W_hh", "b", "W_head", "b_head")

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator) -> "Model":
        return cls(LstmParams.init(input_size, hidden_size, rng), DenseParams.init(hidden_size, rng))

    @property
    def input_size(self) -> int:
        return self.lstm.input_size

    @property
    def hidden_size(self) -> int:
        return self.lstm.hidden_size

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "W_ih": self.lstm.W_ih,
            "W_hh": self.lstm.W_hh,
            "b": self.lstm.b,
            "W_head": self.head.W,
            "b_head": self.head.b,
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "Model":
        return cls(
            LstmParams(arrays["W_ih"], arrays["W_hh"], arrays["b"]),
            DenseParams(arrays["W_head"], arrays["b_head"]),
        )

    def copy(self) -> "Model":
        return Model.from_arrays({k: v.copy() for k, v in self.arrays().items()})


@dataclass
class VideoPrediction:
    video_id: str
    frame_probs: np.ndarray  # T x C
    video_prob: np.ndarray  # C
    predicted_class: int
    true_label: int
    rule: str = field(default="average")

    @property
    def score(self) -> float:
        """Probability (or vote fraction) of the malignant class."""
        return float(self.video_prob[1])


def frame_logits(params: DenseParams, hidden: PackedBatch) -> PackedBatch:
    if hidden.data.ndim != 2 or hidden.data.shape[1] != params.W.shape[1]:
        raise ShapeError(f"hidden rows are {hidden.data.shape[1:]} wide, head expects {params.W.shape[1]}")
    return hidden.with_data(matmul(hidden.data, params.W.T) + params.b)


def _check_probs(frame_probs: np.ndarray) -> np.ndarray:
    p = np.asarray(frame_probs, dtype=np.float64)
    if p.ndim != 2:
        raise ShapeError(f"frame probabilities must be T x C, got {p.shape}")
    if p.shape[0] == 0:
        raise EmptyInputError("video has no frames")
    return p


def aggregate_average(frame_probs: np.ndarray) -> np.ndarray:
    return _check_probs(frame_probs).mean(axis=0)


def aggregate_vote(frame_probs: np.ndarray) -> np.ndarray:
    p = _check_probs(frame_probs)
    votes = np.bincount(np.argmax(p, axis=1), minlength=p.shape[1])
    return votes / p.shape[0]


AGGREGATORS = {"average": aggregate_average, "vote": aggregate_vote}


def _video_prediction(seq: FeatureSequence, frame_probs: np.ndarray, rule: str) -> VideoPrediction:
    try:
        video_prob = AGGREGATORS[rule](frame_probs)
    except KeyError:
        raise ValueError(f"unknown aggregation rule {rule!r}") from None
    return VideoPrediction(seq.video_id, frame_probs, video_prob, argmax(video_prob), seq.label, rule)


def predict_video(
    lstm_params: LstmParams, dense_params: DenseParams, seq: FeatureSequence, rule: Aggregation = "average"
) -> VideoPrediction:
    packed = pack_sequences([seq.frames])
    logits = frame_logits(dense_params, forward_packed(lstm_params, packed))
    return _video_prediction(seq, softmax(logits.data, axis=1), rule)


def predict_videos(
    model: Model, seqs: list[FeatureSequence], rule: Aggregation = "average", batch_size: int = 256
) -> list[VideoPrediction]:
    """Batched equivalent of calling ``predict_video`` on every sequence."""
    preds: list[VideoPrediction] = []
    for start in range(0, len(seqs), batch_size):
        chunk = seqs[start : start + batch_size]
        packed = pack_sequences([s.frames for s in chunk])
        logits = frame_logits(model.head, forward_packed(model.lstm, packed))
        probs = logits.with_data(softmax(logits.data, axis=1))
        for seq, fp in zip(chunk, split_packed(probs)):
            preds.append(_video_prediction(seq, fp, rule))
    return preds
