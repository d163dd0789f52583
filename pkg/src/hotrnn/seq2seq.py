"""Encoder-decoder forecaster.

The encoder consumes the observation window; its final state stack is
handed to the decoder, which rolls forward in closed loop: the first
decoder input is the last observation, every later input is the model's
own previous prediction. Predictions come from a linear head on the top
layer's hidden state. Training uses the same closed-loop rollout as
evaluation (no teacher forcing, no scheduled sampling).
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import ShapeError, Tensor
from .cells import CellState, make_cell


class Seq2SeqModel:
    """Stacked recurrent encoder/decoder with a linear output head."""

    def __init__(self, encoder, decoder, head_w: Tensor, head_b: Tensor):
        if len(encoder) != len(decoder):
            raise ShapeError("encoder and decoder must have equal layer counts")
        for enc, dec in zip(encoder, decoder):
            if enc.hidden_size != dec.hidden_size:
                raise ShapeError("encoder/decoder hidden sizes must match per layer")
        self.encoder = encoder
        self.decoder = decoder
        self.head_w = head_w
        self.head_b = head_b

    @classmethod
    def build(cls, kind, input_size, hidden_size, rng, layers=1, lags=1,
              order=1, ranks=1):
        def stack():
            cells = []
            for layer in range(layers):
                d = input_size if layer == 0 else hidden_size
                cells.append(
                    make_cell(kind, d, hidden_size, rng,
                              lags=lags, order=order, ranks=ranks)
                )
            return cells

        encoder = stack()
        decoder = stack()
        head_w = Tensor(
            rng.normal(0.0, 1.0 / np.sqrt(hidden_size), size=(hidden_size, input_size))
        )
        head_b = Tensor(np.zeros(input_size))
        return cls(encoder, decoder, head_w, head_b)

    @property
    def input_size(self):
        return self.encoder[0].input_size

    def parameters(self) -> dict:
        params = {}
        for tag, cells in (("enc", self.encoder), ("dec", self.decoder)):
            for i, cell in enumerate(cells):
                for name, p in cell.parameters().items():
                    params[f"{tag}{i}.{name}"] = p
        params["head.w"] = self.head_w
        params["head.b"] = self.head_b
        return params

    def _predict(self, h: Tensor) -> Tensor:
        return ad.matmul(h, self.head_w) + self.head_b

    def _run_stack(self, cells, states, x):
        new_states = []
        inp = x
        for cell, state in zip(cells, states):
            h, state = cell.step(state, inp)
            new_states.append(state)
            inp = h
        return inp, new_states

    def encode(self, window) -> list:
        """Consume a (B, T, d) window; return the final state stack."""
        window = np.asarray(window, dtype=np.float64)
        if window.ndim != 3:
            raise ShapeError(f"window must be (B, T, d), got shape {window.shape}")
        if window.shape[1] < 1:
            raise ShapeError("window must contain at least one observation")
        batch = window.shape[0]
        states = [cell.initial_state(batch) for cell in self.encoder]
        for t in range(window.shape[1]):
            _, states = self._run_stack(self.encoder, states, Tensor(window[:, t]))
        return states

    def decode(self, states, x_last, horizon: int) -> list:
        """Closed-loop rollout of ``horizon`` predictions, each (B, d)."""
        if horizon < 1:
            raise ShapeError(f"horizon must be >= 1, got {horizon}")
        x = x_last if isinstance(x_last, Tensor) else Tensor(x_last)
        outputs = []
        for _ in range(horizon):
            h, states = self._run_stack(self.decoder, states, x)
            y = self._predict(h)
            outputs.append(y)
            x = y
        return outputs

    def forecast(self, window, horizon: int) -> np.ndarray:
        """Numpy convenience wrapper: (B, T, d) window -> (B, horizon, d)."""
        window = np.asarray(window, dtype=np.float64)
        states = self.encode(window)
        handed = _handoff(states)
        outputs = self.decode(handed, window[:, -1], horizon)
        return np.stack([y.data for y in outputs], axis=1)

    def rollout(self, window, horizon: int) -> Tensor:
        """Differentiable rollout: returns predictions as one (B, T, d) tensor."""
        window = np.asarray(window, dtype=np.float64)
        states = self.encode(window)
        outputs = self.decode(_handoff(states), window[:, -1], horizon)
        return ad.stack(outputs, axis=1)


def _handoff(states) -> list:
    """Copy the encoder's final state stack into fresh decoder states."""
    return [CellState(tuple(state.history), state.memory) for state in states]
