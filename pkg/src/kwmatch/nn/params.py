"""Named parameter tensors with gradient slots and optimizer moments."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeError
from .autograd import Tensor


class ParameterStore:
    """Owns every trainable tensor of a model.

    Names are dotted paths (``importance.jinn.0.W``). Insertion order is the
    creation order, which keeps seeded initialization reproducible.
    """

    def __init__(self, dtype=np.float32, seed: int = 0):
        self.dtype = np.dtype(dtype)
        self.rng = np.random.default_rng(seed)
        self.tensors: dict[str, Tensor] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value, trainable: bool = True) -> Tensor:
        if name in self.tensors:
            raise KeyError(f"parameter {name!r} already exists")
        t = Tensor(np.array(value, dtype=self.dtype), requires_grad=trainable, name=name)
        self.tensors[name] = t
        return t

    def xavier(self, name: str, fan_in: int, fan_out: int) -> Tensor:
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        return self.add(name, self.rng.uniform(-limit, limit, size=(fan_in, fan_out)))

    def zeros(self, name: str, shape, trainable: bool = True) -> Tensor:
        return self.add(name, np.zeros(shape), trainable)

    def normal(self, name: str, shape, std: float = 0.02) -> Tensor:
        return self.add(name, self.rng.normal(0.0, std, size=shape))

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def __iter__(self):
        return iter(self.tensors.items())

    def __len__(self):
        return len(self.tensors)

    def trainable(self):
        return [(n, t) for n, t in self.tensors.items() if t.requires_grad]

    def size(self) -> int:
        return sum(t.data.size for t in self.tensors.values())

    def zero_grads(self) -> None:
        for t in self.tensors.values():
            t.grad = np.zeros_like(t.data)

    def state(self) -> dict[str, np.ndarray]:
        return {n: t.data.copy() for n, t in self.tensors.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, value in state.items():
            t = self.tensors[name]
            if t.shape != value.shape:
                raise ShapeError(f"{name}: stored shape {value.shape} != {t.shape}")
            t.data = np.array(value, dtype=self.dtype)
