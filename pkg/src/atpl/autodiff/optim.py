"""First-order optimizers: Adam (default) and plain SGD."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, TrainingError
from .params import ParamStore


@dataclass
class OptimizerState:
    lr: float = 1e-3
    rule: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = None
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ContractError(f"learning rate must be positive, got {self.lr}")
        if self.rule not in ("adam", "sgd"):
            raise ContractError(f"unknown update rule {self.rule!r}")


def optimizer_step(state: OptimizerState, params: ParamStore) -> None:
    """Update every parameter from its ``.grad`` slot, then clear the slots.

    Parameters whose grad is ``None`` were not reached by the loss and are
    treated as having zero gradient.
    """
    grads = {}
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        grads[name] = g

    if state.clip_norm is not None:
        total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        if total > state.clip_norm:
            factor = state.clip_norm / total
            grads = {k: g * factor for k, g in grads.items()}

    state.step += 1
    if state.rule == "sgd":
        for name, p in params.items():
            p.data = p.data - state.lr * grads[name]
    else:
        b1, b2 = state.beta1, state.beta2
        corr1 = 1.0 - b1 ** state.step
        corr2 = 1.0 - b2 ** state.step
        for name, p in params.items():
            g = grads[name]
            m = state.m.get(name)
            if m is None:
                m = np.zeros_like(p.data)
                state.v[name] = np.zeros_like(p.data)
            m = b1 * m + (1.0 - b1) * g
            v = b2 * state.v[name] + (1.0 - b2) * g * g
            state.m[name] = m
            state.v[name] = v
            p.data = p.data - state.lr * (m / corr1) / (np.sqrt(v / corr2) + state.eps)
    params.zero_grad()
