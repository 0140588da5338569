"""Minibatch training loop shared by every model."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from .autodiff import Graph, OptimizerState, ParamStore, Tensor, backward, optimizer_step
from .errors import ContractError

log = logging.getLogger(__name__)
E = TypeVar("E")


@dataclass
class TrainConfig:
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 8
    clip_norm: float | None = 5.0
    rule: str = "adam"


def fit(store: ParamStore, examples: Sequence[E], loss_fn: Callable[[E], Tensor],
        cfg: TrainConfig, rng: np.random.Generator,
        on_epoch: Callable[[int, float], bool | None] | None = None,
        name: str = "model") -> list[tuple[int, float]]:
    """Shuffle, accumulate gradients over each minibatch, take one step.

    Returns ``[(epoch, mean per-example loss)]``. ``on_epoch`` may return
    True to stop early.
    """
    if not examples:
        raise ContractError("training set is empty")
    state = OptimizerState(lr=cfg.lr, rule=cfg.rule, clip_norm=cfg.clip_norm)
    history = []
    n = len(examples)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            for i in batch:
                with Graph() as g:
                    loss = loss_fn(examples[i])
                backward(g, loss)
                total += loss.item()
            if len(batch) > 1:
                for p in store:
                    if p.grad is not None:
                        p.grad /= len(batch)
            optimizer_step(state, store)
        mean = total / n
        history.append((epoch, mean))
        log.info("%s epoch %d mean loss %.6f", name, epoch, mean)
        if on_epoch is not None and on_epoch(epoch, mean):
            break
    return history
