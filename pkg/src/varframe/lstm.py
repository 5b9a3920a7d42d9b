"""Single-layer LSTM over packed batches, with exact backpropagation through time.

Gate order in the stacked weights is (input, forget, cell candidate, output).
Only the active prefix of the batch is computed at every timestep, so padded
positions never enter the arithmetic in either direction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .numeric import matmul, sigmoid, tanh_m
from .packed import PackedBatch, check_packed


@dataclass
class LstmParams:
    W_ih: np.ndarray  # 4H x D
    W_hh: np.ndarray  # 4H x H
    b: np.ndarray  # 4H

    @property
    def hidden_size(self) -> int:
        return self.W_hh.shape[1]

    @property
    def input_size(self) -> int:
        return self.W_ih.shape[1]

    def validate(self) -> None:
        h = self.hidden_size
        if self.W_hh.shape != (4 * h, h):
            raise ShapeError(f"W_hh must be {(4 * h, h)}, got {self.W_hh.shape}")
        if self.W_ih.ndim != 2 or self.W_ih.shape[0] != 4 * h:
            raise ShapeError(f"W_ih must have {4 * h} rows, got {self.W_ih.shape}")
        if self.b.shape != (4 * h,):
            raise ShapeError(f"b must be ({4 * h},), got {self.b.shape}")

    @classmethod
    def init(cls, input_size: int, hidden_size: int, rng: np.random.Generator) -> "LstmParams":
        k = 1.0 / np.sqrt(hidden_size)
        return cls(
            W_ih=rng.uniform(-k, k, (4 * hidden_size, input_size)),
            W_hh=rng.uniform(-k, k, (4 * hidden_size, hidden_size)),
            b=rng.uniform(-k, k, 4 * hidden_size),
        )

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmParams":
        return cls(
            np.zeros((4 * hidden_size, input_size)),
            np.zeros((4 * hidden_size, hidden_size)),
            np.zeros(4 * hidden_size),
        )


@dataclass
class LstmState:
    h: np.ndarray  # B x H
    c: np.ndarray  # B x H

    @classmethod
    def zeros(cls, batch: int, hidden_size: int) -> "LstmState":
        return cls(np.zeros((batch, hidden_size)), np.zeros((batch, hidden_size)))


@dataclass
class ForwardCache:
    """Everything the backward pass needs, stored row-aligned with the packed data."""

    inputs: np.ndarray  # N x D
    gates: np.ndarray  # N x 4H, post-activation
    c: np.ndarray  # N x H
    tanh_c: np.ndarray  # N x H
    h_prev: np.ndarray  # N x H
    c_prev: np.ndarray  # N x H
    batch_sizes: np.ndarray
    offsets: np.ndarray


def _gates(params: LstmParams, z: np.ndarray) -> np.ndarray:
    h = params.hidden_size
    act = np.empty_like(z)
    act[:, : 2 * h] = sigmoid(z[:, : 2 * h])
    act[:, 2 * h : 3 * h] = tanh_m(z[:, 2 * h : 3 * h])
    act[:, 3 * h :] = sigmoid(z[:, 3 * h :])
    return act


def cell_forward(params: LstmParams, x_t: np.ndarray, state: LstmState) -> LstmState:
    params.validate()
    h = params.hidden_size
    if x_t.ndim != 2 or x_t.shape[1] != params.input_size:
        raise ShapeError(f"x_t must be B x {params.input_size}, got {x_t.shape}")
    if state.h.shape != (x_t.shape[0], h) or state.c.shape != state.h.shape:
        raise ShapeError(f"state must be {(x_t.shape[0], h)}, got h {state.h.shape} c {state.c.shape}")
    z = matmul(x_t, params.W_ih.T) + matmul(state.h, params.W_hh.T) + params.b
    a = _gates(params, z)
    i, f, g, o = a[:, :h], a[:, h : 2 * h], a[:, 2 * h : 3 * h], a[:, 3 * h :]
    c = f * state.c + i * g
    return LstmState(o * tanh_m(c), c)


def _prev_rows(batch_sizes: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Index of each packed row's predecessor in ``[initial state; outputs]``.

    Row ``j`` of timestep ``t`` follows row ``j`` of timestep ``t - 1``; at
    ``t = 0`` it follows row ``j`` of the initial state.
    """
    b0 = int(batch_sizes[0])
    parts = [np.arange(b0)]
    for t in range(1, len(batch_sizes)):
        parts.append(b0 + offsets[t - 1] + np.arange(batch_sizes[t]))
    return np.concatenate(parts)


def forward_packed_cached(
    params: LstmParams, packed: PackedBatch, state: LstmState | None = None
) -> tuple[PackedBatch, ForwardCache]:
    params.validate()
    check_packed(packed)
    x = packed.data
    if x.shape[1] != params.input_size:
        raise ShapeError(f"packed rows are {x.shape[1]} wide, LSTM expects {params.input_size}")
    hs = params.hidden_size
    bs = np.asarray(packed.batch_sizes)
    b0 = int(bs[0])
    if state is None:
        state = LstmState.zeros(b0, hs)
    if state.h.shape[0] < b0 or state.c.shape[0] < b0:
        raise ShapeError(f"initial state covers {state.h.shape[0]} sequences, batch needs {b0}")

    n_total = x.shape[0]
    # input projection for every real frame at once
    zx = matmul(x, params.W_ih.T) + params.b
    w_hh_t = params.W_hh.T
    gates = np.empty((n_total, 4 * hs))
    c_all = np.empty((n_total, hs))
    tanh_c = np.empty((n_total, hs))
    out = np.empty((n_total, hs))

    offsets = packed.offsets
    h, c = state.h[:b0], state.c[:b0]
    for t, s in enumerate(offsets):
        n = bs[t]
        rows = slice(s, s + n)
        a = _gates(params, zx[rows] + matmul(h[:n], w_hh_t))
        c = a[:, hs : 2 * hs] * c[:n] + a[:, :hs] * a[:, 2 * hs : 3 * hs]
        tc = tanh_m(c)
        h = a[:, 3 * hs :] * tc
        gates[rows], c_all[rows], tanh_c[rows], out[rows] = a, c, tc, h

    prev = _prev_rows(bs, offsets)
    h_prev = np.concatenate((state.h[:b0], out))[prev]
    c_prev = np.concatenate((state.c[:b0], c_all))[prev]
    cache = ForwardCache(x, gates, c_all, tanh_c, h_prev, c_prev, bs, offsets)
    return packed.with_data(out), cache


def forward_packed(params: LstmParams, packed: PackedBatch, state: LstmState | None = None) -> PackedBatch:
    return forward_packed_cached(params, packed, state)[0]


def backward_packed(
    params: LstmParams, cache: ForwardCache, grad_out: np.ndarray
) -> tuple[LstmParams, np.ndarray, LstmState]:
    """Reverse-mode pass over the same active-prefix schedule as the forward.

    ``grad_out`` is the gradient of a scalar loss with respect to every packed
    output row.  Returns parameter gradients (as an ``LstmParams``), the
    gradient with respect to the packed inputs, and the gradient with respect
    to the initial state.
    """
    hs = params.hidden_size
    if grad_out.shape != cache.c.shape:
        raise ShapeError(f"grad_out must be {cache.c.shape}, got {grad_out.shape}")
    n_total = grad_out.shape[0]
    a = cache.gates
    i, f, g, o = a[:, :hs], a[:, hs : 2 * hs], a[:, 2 * hs : 3 * hs], a[:, 3 * hs :]
    tc = cache.tanh_c
    # local derivatives that do not depend on the recurrence, for all rows at once:
    # dz_{i,f,g} = dc * dc_factor, dz_o = dh * do_factor, dc += dh * dh_to_dc
    dc_factor = np.stack((g * i * (1.0 - i), cache.c_prev * f * (1.0 - f), i * (1.0 - g * g)), axis=1)
    do_factor = tc * o * (1.0 - o)
    dh_to_dc = o * (1.0 - tc * tc)

    bs = cache.batch_sizes
    dz = np.empty((n_total, 4 * hs))
    dz3 = dz[:, : 3 * hs].reshape(n_total, 3, hs)
    dh_carry = np.zeros((int(bs[0]), hs))
    dc_carry = np.zeros((int(bs[0]), hs))
    for t in range(len(bs) - 1, -1, -1):
        n = bs[t]
        rows = slice(cache.offsets[t], cache.offsets[t] + n)
        dh = grad_out[rows] + dh_carry[:n]
        dc = dc_carry[:n] + dh * dh_to_dc[rows]
        np.multiply(dc[:, None, :], dc_factor[rows], out=dz3[rows])
        np.multiply(dh, do_factor[rows], out=dz[rows, 3 * hs :])
        dh_carry[:n] = matmul(dz[rows], params.W_hh)
        dc_carry[:n] = dc * f[rows]

    grads = LstmParams(
        W_ih=matmul(dz.T, cache.inputs),
        W_hh=matmul(dz.T, cache.h_prev),
        b=dz.sum(axis=0),
    )
    return grads, matmul(dz, params.W_ih), LstmState(dh_carry, dc_carry)
