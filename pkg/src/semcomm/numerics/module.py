"""Parameter containers: a tiny tree of named tensors."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from . import tensor as T
from .tensor import Tensor

INIT_STD = 0.02


def param(rng: np.random.Generator, *shape: int, zero: bool = False) -> Tensor:
    data = np.zeros(shape) if zero else rng.normal(0.0, INIT_STD, size=shape)
    return Tensor(data, requires_grad=True)


class Module:
    """Walks attributes for tensors, sub-modules and lists of sub-modules."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, val in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(val, Tensor) and val.requires_grad:
                yield name, val
            elif isinstance(val, Module):
                yield from val.named_parameters(name + ".")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> dict[str, Tensor]:
        return dict(self.named_parameters())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.named_parameters()}

    def load_state_dict(self, arrays: dict[str, np.ndarray], strict: bool = True) -> None:
        params = self.parameters()
        if strict:
            missing = set(params) - set(arrays)
            unexpected = set(arrays) - set(params)
            if missing or unexpected:
                raise KeyError(f"state mismatch: missing={sorted(missing)} unexpected={sorted(unexpected)}")
        for k, p in params.items():
            if k in arrays:
                if arrays[k].shape != p.shape:
                    raise ValueError(f"shape mismatch for {k}: {arrays[k].shape} vs {p.shape}")
                p.data = np.array(arrays[k], dtype=np.float64)


class Linear(Module):
    def __init__(self, rng: np.random.Generator, n_in: int, n_out: int):
        self.weight = param(rng, n_in, n_out)
        self.bias = param(rng, n_out, zero=True)

    @property
    def n_in(self) -> int:
        return self.weight.shape[0]

    @property
    def n_out(self) -> int:
        return self.weight.shape[1]

    def __call__(self, x) -> Tensor:
        return T.matmul(x, self.weight) + self.bias
