"""Named parameter registry."""
from __future__ import annotations

from typing import Iterator

import numpy as np

from ..errors import ContractError
from .tensor import Tensor


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


class ParamStore:
    """Ordered name -> parameter tensor map.

    Names are unique; registering a name twice is an error, which is what
    keeps separately constructed blocks from aliasing storage.
    """

    def __init__(self) -> None:
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ContractError(f"parameter {name!r} already registered")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._params[name] = t
        return t

    def weight(self, name: str, shape: tuple[int, int], rng: np.random.Generator) -> Tensor:
        a = glorot_bound(shape[1], shape[0])
        return self.add(name, rng.uniform(-a, a, size=shape))

    def zeros(self, name: str, shape: tuple[int, ...]) -> Tensor:
        return self.add(name, np.zeros(shape))

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self) -> list[str]:
        return list(self._params)

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.grad = None

    def size(self) -> int:
        return sum(p.data.size for p in self._params.values())

    def copy_from(self, values: dict[str, np.ndarray]) -> None:
        """Overwrite parameter values in place (shapes must match)."""
        for name, arr in values.items():
            if name not in self._params:
                raise ContractError(f"unknown parameter {name!r}")
            p = self._params[name]
            if p.data.shape != arr.shape:
                raise ContractError(
                    f"shape mismatch for {name!r}: stored {p.data.shape}, given {arr.shape}")
            p.data = np.array(arr, dtype=np.float64)
