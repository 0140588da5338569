"""Learned building blocks on top of the autodiff engine.

Each block registers its parameters in a :class:`ParamStore` under a name
prefix at construction time, so two blocks never share storage.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .autodiff import ParamStore, Tensor
from .autodiff import tensor as T
from .errors import ContractError, DimensionError


def _check_dim(block: str, v: Tensor, expected: int) -> None:
    if v.data.ndim != 1 or v.data.shape[0] != expected:
        raise DimensionError(f"{block}: expected vector of length {expected}, got {v.shape}")


class Attention:
    """``σ(W v + b)``, a per-dimension weighting in (0, 1)."""

    def __init__(self, store: ParamStore, name: str, d_in: int, d_out: int,
                 rng: np.random.Generator):
        self.d_in, self.d_out = d_in, d_out
        self.W = store.weight(f"{name}.W", (d_out, d_in), rng)
        self.b = store.zeros(f"{name}.b", (d_out,))

    def __call__(self, v: Tensor) -> Tensor:
        _check_dim("attention", v, self.d_in)
        return T.sigmoid(T.matvec(self.W, v) + self.b)


class FFNN:
    """Single fully connected layer with tanh."""

    def __init__(self, store: ParamStore, name: str, d_in: int, d_out: int,
                 rng: np.random.Generator):
        self.d_in, self.d_out = d_in, d_out
        self.W = store.weight(f"{name}.W", (d_out, d_in), rng)
        self.b = store.zeros(f"{name}.b", (d_out,))

    def __call__(self, v: Tensor) -> Tensor:
        _check_dim("ffnn", v, self.d_in)
        return T.tanh(T.matvec(self.W, v) + self.b)


class LSTMCell:
    """Standard LSTM (no peepholes): sigmoid input/forget/output gates,
    tanh candidate and output squashing. One weight matrix of shape
    ``H × (D + H)`` and one bias per gate, applied to ``[x; h]``."""

    GATES = ("i", "f", "o", "g")

    def __init__(self, store: ParamStore, name: str, d_in: int, hidden: int,
                 rng: np.random.Generator):
        self.d_in, self.hidden = d_in, hidden
        self.weights = [store.weight(f"{name}.W_{g}", (hidden, d_in + hidden), rng)
                        for g in self.GATES]
        self.biases = [store.zeros(f"{name}.b_{g}", (hidden,)) for g in self.GATES]

    def zero_state(self) -> tuple[Tensor, Tensor]:
        return T.constant(np.zeros(self.hidden)), T.constant(np.zeros(self.hidden))

    def step(self, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        _check_dim("lstm input", x, self.d_in)
        _check_dim("lstm hidden", h, self.hidden)
        _check_dim("lstm cell", c, self.hidden)
        hc = T.lstm_cell(x, h, c, self.weights, self.biases)
        return T.slice_(hc, 0, self.hidden), T.slice_(hc, self.hidden, 2 * self.hidden)

    def run(self, inputs: Sequence[Tensor]) -> list[Tensor]:
        h, c = self.zero_state()
        out = []
        for x in inputs:
            h, c = self.step(x, h, c)
            out.append(h)
        return out


def blstm_run(fwd: LSTMCell, bwd: LSTMCell,
              inputs: Sequence[Tensor]) -> tuple[list[Tensor], list[Tensor]]:
    """Forward states see inputs 1..t, backward states see t..T."""
    if len(inputs) == 0:
        raise ContractError("bidirectional LSTM needs a non-empty sequence")
    forward = fwd.run(inputs)
    backward = bwd.run(list(reversed(inputs)))[::-1]
    return forward, backward


class BLSTM:
    def __init__(self, store: ParamStore, name: str, d_in: int, hidden: int,
                 rng: np.random.Generator):
        self.fwd = LSTMCell(store, f"{name}.fwd", d_in, hidden, rng)
        self.bwd = LSTMCell(store, f"{name}.bwd", d_in, hidden, rng)

    def __call__(self, inputs: Sequence[Tensor]) -> tuple[list[Tensor], list[Tensor]]:
        return blstm_run(self.fwd, self.bwd, inputs)


def one_hot_index(x, size: int) -> int:
    """Accept an int id or a one-hot vector; return the id."""
    if isinstance(x, (int, np.integer)):
        if not 0 <= x < size:
            raise ContractError(f"index {x} outside [0, {size})")
        return int(x)
    a = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    if a.shape != (size,) or np.count_nonzero(a) != 1 or a.sum() != 1.0 or a.max() != 1.0:
        raise ContractError(f"expected a one-hot vector of length {size}")
    return int(np.argmax(a))


class FactoredWeight:
    """Token-conditioned matrix ``W(x) = W_a · diag(W_b x) · W_c``.

    ``apply`` computes ``W(x) h`` as ``W_a ((W_b x) ⊙ (W_c h))`` and never
    builds the m×n matrix.
    """

    def __init__(self, store: ParamStore, name: str, m: int, n: int, vocab: int,
                 rng: np.random.Generator, inner: int = 64):
        self.m, self.n, self.vocab, self.inner = m, n, vocab, inner
        self.W_a = store.weight(f"{name}.W_a", (m, inner), rng)
        self.W_b = store.weight(f"{name}.W_b", (inner, vocab), rng)
        self.W_c = store.weight(f"{name}.W_c", (inner, n), rng)

    def apply(self, x, h: Tensor) -> Tensor:
        idx = one_hot_index(x, self.vocab)
        _check_dim("factored weight", h, self.n)
        gate = T.column(self.W_b, idx)
        return T.matvec(self.W_a, T.mul(gate, T.matvec(self.W_c, h)))

    def materialize(self, x) -> np.ndarray:
        idx = one_hot_index(x, self.vocab)
        return self.W_a.data @ np.diag(self.W_b.data[:, idx]) @ self.W_c.data


def factored_weight_apply(p: FactoredWeight, x, h: Tensor) -> Tensor:
    return p.apply(x, h)
