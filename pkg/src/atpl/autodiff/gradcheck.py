"""Central finite-difference verification of analytic gradients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import ParamStore
from .tensor import Graph, Tensor, backward


@dataclass
class GradCheckReport:
    passed: bool
    max_error: float
    worst_param: str
    worst_index: tuple[int, ...]
    checked: int
    tolerance: float


def finite_diff_check(
    build_loss: Callable[[], Tensor],
    params: ParamStore,
    tolerance: float = 1e-4,
    samples: int | None = 64,
    step: float = 1e-5,
    seed: int = 0,
) -> GradCheckReport:
    """Compare backprop gradients with central differences.

    Error per coordinate is ``|analytic - numeric| / max(1, |numeric|)``.
    ``samples`` coordinates are drawn uniformly over all parameters
    (``None`` checks every coordinate).
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    params.zero_grad()
    with Graph() as g:
        loss = build_loss()
    backward(g, loss)
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params.items()}
    params.zero_grad()

    coords = [(name, idx) for name, p in params.items() for idx in np.ndindex(p.data.shape)]
    if samples is not None and samples < len(coords):
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(coords), size=samples, replace=False)
        coords = [coords[i] for i in sorted(picks)]

    worst = (0.0, "", ())
    for name, idx in coords:
        p = params[name]
        orig = p.data[idx]
        p.data[idx] = orig + step
        plus = build_loss().item()
        p.data[idx] = orig - step
        minus = build_loss().item()
        p.data[idx] = orig
        numeric = (plus - minus) / (2 * step)
        err = abs(analytic[name][idx] - numeric) / max(1.0, abs(numeric))
        if err >= worst[0]:
            worst = (err, name, tuple(int(i) for i in idx))
    return GradCheckReport(
        passed=worst[0] <= tolerance,
        max_error=worst[0],
        worst_param=worst[1],
        worst_index=worst[2],
        checked=len(coords),
        tolerance=tolerance,
    )
