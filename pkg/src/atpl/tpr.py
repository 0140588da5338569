"""Tensor product representation algebra.

A sequence of fillers ``f_t`` bound to roles ``r_t`` is the d×d matrix
``S = Σ_t f_t r_tᵀ``. When the roles are orthonormal the unbinding vector
of role ``r_t`` is ``r_t`` itself and ``S r_t`` returns ``f_t`` exactly.
Sequences longer than ``d`` cannot have mutually orthogonal roles, so
recovery degrades for ``T > d``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ConstructionError, ContractError


def is_power_of_two(d: int) -> bool:
    return d >= 1 and (d & (d - 1)) == 0


def hadamard_basis(d: int) -> np.ndarray:
    """Sylvester Hadamard matrix of order ``d`` scaled by ``1/sqrt(d)``."""
    if not isinstance(d, (int, np.integer)) or not is_power_of_two(int(d)):
        raise ConstructionError(f"Hadamard basis needs a power-of-two order, got {d!r}")
    h = np.ones((1, 1))
    while h.shape[0] < d:
        h = np.block([[h, h], [h, -h]])
    return h / np.sqrt(d)


def _as_vectors(name: str, vs: Sequence, d: int | None) -> list[np.ndarray]:
    out = []
    for i, v in enumerate(vs):
        a = np.asarray(v, dtype=np.float64)
        if a.ndim != 1 or (d is not None and a.shape[0] != d):
            raise ContractError(f"{name}[{i}] has shape {a.shape}, expected ({d},)")
        d = a.shape[0]
        out.append(a)
    return out


def bind_sequence(fillers: Sequence, roles: Sequence, d: int | None = None) -> np.ndarray:
    """``Σ_t f_t r_tᵀ``. ``d`` is needed only to size the empty sum."""
    if len(fillers) != len(roles):
        raise ContractError(f"{len(fillers)} fillers but {len(roles)} roles")
    if not fillers:
        if d is None:
            raise ContractError("empty binding needs an explicit dimension")
        return np.zeros((d, d))
    f = np.stack(_as_vectors("fillers", fillers, d))
    r = np.stack(_as_vectors("roles", roles, f.shape[1]))
    return f.T @ r


def unbind(S: np.ndarray, u) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if S.ndim != 2 or u.ndim != 1 or S.shape[1] != u.shape[0]:
        raise ContractError(f"cannot unbind shape {S.shape} with vector {u.shape}")
    return S @ u


def accumulate(S: np.ndarray, f, r) -> np.ndarray:
    """``S + f rᵀ`` (returns a new matrix)."""
    S = np.asarray(S, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if S.ndim != 2 or f.shape != (S.shape[0],) or r.shape != (S.shape[1],):
        raise ContractError(
            f"accumulate shapes disagree: S {S.shape}, f {f.shape}, r {r.shape}")
    return S + np.outer(f, r)
