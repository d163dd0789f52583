"""Recurrent cell variants.

All cells consume a batch of inputs x_t of shape (B, d) and a CellState
holding the last L hidden vectors (most recent first, zero padded before
enough steps have elapsed). First-order cells use L=1. The higher-order
cells build the augmented state s = [1, h_{t-1}, ..., h_{t-L}] and feed
it through a transition tensor: dense for HORNN, tensor-train for the
HOT family. LSTM-family memory follows

    c_t = c_{t-1} o f_t + i_t o g_t,    h_t = c_t o o_t

with sigmoid on i, f, o and tanh on g; there is no output tanh on c_t.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeError, Tensor
from .tt import DENSE_CAP, init_tt, tt_contract

GATES = ("i", "f", "g", "o")


@dataclass
class CellState:
    """Hidden-state history (most recent first) plus LSTM memory."""

    history: tuple
    memory: Optional[Tensor] = None

    def advanced(self, h: Tensor, c: Optional[Tensor] = None) -> "CellState":
        return CellState((h,) + self.history[:-1], c)


def _dense(rng, rows, cols, std=None) -> Tensor:
    if std is None:
        std = 1.0 / np.sqrt(rows)
    return Tensor(rng.normal(0.0, std, size=(rows, cols)))


class Cell:
    """Shared plumbing: state creation and parameter enumeration."""

    input_size: int
    hidden_size: int
    lags: int = 1

    def initial_state(self, batch: int) -> CellState:
        zero = Tensor(np.zeros((batch, self.hidden_size)))
        history = tuple(
            Tensor(np.zeros((batch, self.hidden_size))) for _ in range(self.lags)
        )
        memory = zero if self.uses_memory else None
        return CellState(history, memory)

    uses_memory = False

    def parameters(self) -> dict:
        raise NotImplementedError

    def step(self, state: CellState, x: Tensor):
        raise NotImplementedError

    def _check_input(self, x: Tensor):
        if x.ndim != 2 or x.shape[1] != self.input_size:
            raise ShapeError(
                f"input shape {x.shape} incompatible with input size {self.input_size}"
            )


def _augmented_state(state: CellState, batch: int) -> Tensor:
    """s = [1, h_{t-1}, ..., h_{t-L}] per batch row."""
    bias = Tensor(np.ones((batch, 1)))
    return ad.concat((bias,) + state.history, axis=1)


class RNNCell(Cell):
    """First-order cell: h_t = tanh(x W_hx + h_{t-1} W_hh + b)."""

    kind = "rnn"

    def __init__(self, input_size, hidden_size, rng):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.lags = 1
        self.w_hx = _dense(rng, input_size, hidden_size)
        self.w_hh = _dense(rng, hidden_size, hidden_size)
        self.b = Tensor(np.zeros(hidden_size))

    def parameters(self):
        return {"w_hx": self.w_hx, "w_hh": self.w_hh, "b": self.b}

    def step(self, state, x):
        self._check_input(x)
        pre = ad.matmul(x, self.w_hx) + ad.matmul(state.history[0], self.w_hh) + self.b
        h = ad.tanh(pre)
        return h, state.advanced(h)


class MRNNCell(Cell):
    """Matrix RNN: linear map of the concatenated L-state history."""

    kind = "mrnn"

    def __init__(self, input_size, hidden_size, lags, rng):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.lags = lags
        self.w_hx = _dense(rng, input_size, hidden_size)
        self.w_hh = _dense(rng, hidden_size * lags, hidden_size)
        self.b = Tensor(np.zeros(hidden_size))

    def parameters(self):
        return {"w_hx": self.w_hx, "w_hh": self.w_hh, "b": self.b}

    def step(self, state, x):
        self._check_input(x)
        hist = ad.concat(state.history, axis=1)
        pre = ad.matmul(x, self.w_hx) + ad.matmul(hist, self.w_hh) + self.b
        h = ad.tanh(pre)
        return h, state.advanced(h)


class LSTMCell(Cell):
    kind = "lstm"
    uses_memory = True

    def __init__(self, input_size, hidden_size, rng):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.lags = 1
        self.w_x = {g: _dense(rng, input_size, hidden_size) for g in GATES}
        self.w_h = {g: _dense(rng, hidden_size, hidden_size) for g in GATES}
        self.b = {g: Tensor(np.zeros(hidden_size)) for g in GATES}
        self.b["f"].data[:] = 1.0  # forget gate open at init

    def parameters(self):
        params = {}
        for g in GATES:
            params[f"w_x_{g}"] = self.w_x[g]
            params[f"w_h_{g}"] = self.w_h[g]
            params[f"b_{g}"] = self.b[g]
        return params

    def _gates(self, state, x):
        h_prev = state.history[0]
        pre = {
            g: ad.matmul(x, self.w_x[g]) + ad.matmul(h_prev, self.w_h[g]) + self.b[g]
            for g in GATES
        }
        return pre

    def step(self, state, x):
        self._check_input(x)
        pre = self._gates(state, x)
        return _lstm_update(pre, state)


class MLSTMCell(LSTMCell):
    kind = "mlstm"

    def __init__(self, input_size, hidden_size, lags, rng):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.lags = lags
        self.w_x = {g: _dense(rng, input_size, hidden_size) for g in GATES}
        self.w_h = {g: _dense(rng, hidden_size * lags, hidden_size) for g in GATES}
        self.b = {g: Tensor(np.zeros(hidden_size)) for g in GATES}
        self.b["f"].data[:] = 1.0

    def _gates(self, state, x):
        hist = ad.concat(state.history, axis=1)
        return {
            g: ad.matmul(x, self.w_x[g]) + ad.matmul(hist, self.w_h[g]) + self.b[g]
            for g in GATES
        }


def _lstm_update(pre: dict, state: CellState):
    i = ad.sigmoid(pre["i"])
    f = ad.sigmoid(pre["f"])
    g = ad.tanh(pre["g"])
    o = ad.sigmoid(pre["o"])
    c = state.memory * f + i * g
    h = c * o
    return h, state.advanced(h, c)


def _dense_transition_contract(weight: Tensor, s: Tensor) -> Tensor:
    """Batched contraction of a dense (H, n, ..., n) tensor with s (B, n)."""
    h = weight.shape[0]
    n = weight.shape[1]
    order = weight.ndim - 1
    b = s.shape[0]
    # contract the last mode via one matmul, remaining modes batched
    flat = ad.reshape(weight, (h * n ** (order - 1), n))
    out = ad.transpose(ad.matmul(flat, ad.transpose(s)))  # (B, H n^{P-1})
    for p in range(order - 1, 0, -1):
        out = ad.reshape(out, (b, h * n ** (p - 1), n))
        out = ad.reshape(ad.bmm(out, ad.reshape(s, (b, n, 1))), (b, h * n ** (p - 1)))
    return out  # (B, H)


class HORNNCell(Cell):
    """Higher-order cell with the full unfactorized transition tensor."""

    kind = "hornn"

    def __init__(self, input_size, hidden_size, lags, order, rng, cap=DENSE_CAP):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.lags = lags
        self.order = order
        n = hidden_size * lags + 1
        total = hidden_size * n**order
        if total > cap:
            raise ShapeError(
                f"dense transition tensor of {total} entries exceeds cap {cap}"
            )
        self.w_hx = _dense(rng, input_size, hidden_size)
        std = n ** (-order / 2.0)
        self.w_t = Tensor(rng.normal(0.0, std, size=(hidden_size,) + (n,) * order))

    def parameters(self):
        return {"w_hx": self.w_hx, "w_t": self.w_t}

    def step(self, state, x):
        self._check_input(x)
        s = _augmented_state(state, x.shape[0])
        pre = ad.matmul(x, self.w_hx) + _dense_transition_contract(self.w_t, s)
        h = ad.tanh(pre)
        return h, state.advanced(h)


class HOTRNNCell(Cell):
    """Higher-order cell with tensor-train factorized transition."""

    kind = "hotrnn"

    def __init__(self, input_size, hidden_size, lags, order, ranks, rng):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.lags = lags
        self.order = order
        self.w_hx = _dense(rng, input_size, hidden_size)
        self.tt = init_tt(hidden_size, lags, order, ranks, rng)

    def parameters(self):
        params = {"w_hx": self.w_hx}
        for name, core in self.tt.parameters().items():
            params[f"tt_{name}"] = core
        return params

    def step(self, state, x):
        self._check_input(x)
        s = _augmented_state(state, x.shape[0])
        pre = ad.matmul(x, self.w_hx) + tt_contract(self.tt, s)
        h = ad.tanh(pre)
        return h, state.advanced(h)


class HOTLSTMCell(Cell):
    """LSTM-family cell with one tensor-train transition per gate.

    The four gates share the same augmented state; each contracts its own
    train. An explicit per-gate bias carries the +1 forget-gate init.
    """

    kind = "hotlstm"
    uses_memory = True

    def __init__(self, input_size, hidden_size, lags, order, ranks, rng):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.lags = lags
        self.order = order
        self.w_x = {g: _dense(rng, input_size, hidden_size) for g in GATES}
        self.tt = {g: init_tt(hidden_size, lags, order, ranks, rng) for g in GATES}
        self.b = {g: Tensor(np.zeros(hidden_size)) for g in GATES}
        self.b["f"].data[:] = 1.0

    def parameters(self):
        params = {}
        for g in GATES:
            params[f"w_x_{g}"] = self.w_x[g]
            params[f"b_{g}"] = self.b[g]
            for name, core in self.tt[g].parameters().items():
                params[f"tt_{g}_{name}"] = core
        return params

    def step(self, state, x):
        self._check_input(x)
        s = _augmented_state(state, x.shape[0])
        pre = {
            g: ad.matmul(x, self.w_x[g]) + tt_contract(self.tt[g], s) + self.b[g]
            for g in GATES
        }
        return _lstm_update(pre, state)


def make_cell(kind, input_size, hidden_size, rng, lags=1, order=1, ranks=1) -> Cell:
    """Factory keyed by cell kind string."""
    if kind == "rnn":
        return RNNCell(input_size, hidden_size, rng)
    if kind == "lstm":
        return LSTMCell(input_size, hidden_size, rng)
    if kind == "mrnn":
        return MRNNCell(input_size, hidden_size, lags, rng)
    if kind == "mlstm":
        return MLSTMCell(input_size, hidden_size, lags, rng)
    if kind == "hornn":
        return HORNNCell(input_size, hidden_size, lags, order, rng)
    if kind == "hotrnn":
        return HOTRNNCell(input_size, hidden_size, lags, order, ranks, rng)
    if kind == "hotlstm":
        return HOTLSTMCell(input_size, hidden_size, lags, order, ranks, rng)
    raise ValueError(f"unknown cell kind: {kind!r}")
