"""Dense float64 kernels shared by the recurrent model, head and losses.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64; vectors are
1-D arrays.  The functions here validate shapes and keep the arithmetic
overflow-safe; they are thin on purpose.
"""
from __future__ import annotations

import numpy as np

from .errors import EmptyInputError, ShapeError


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    if (rows is not None and m.shape[0] != rows) or (cols is not None and m.shape[1] != cols):
        raise ShapeError(f"expected shape ({rows}, {cols}), got {m.shape}")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def sigmoid(x: np.ndarray) -> np.ndarray:
    # exp(-x) may overflow to inf for very negative x; 1/(1+inf) is the correct limit 0
    with np.errstate(over="ignore"):
        e = np.exp(-np.asarray(x, dtype=np.float64))
    return 1.0 / (1.0 + e)


def tanh_m(x: np.ndarray) -> np.ndarray:
    return np.tanh(np.asarray(x, dtype=np.float64))


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax along ``axis`` with max-subtraction.

    Works on a single logit vector or row-wise on a matrix of logits.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0:
        raise EmptyInputError("softmax of an empty vector")
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def argmax(v: np.ndarray) -> int:
    v = np.asarray(v)
    if v.size == 0:
        raise EmptyInputError("argmax of an empty vector")
    # np.argmax returns the first occurrence on ties
    return int(np.argmax(v))
