"""Parameter initialisation and the feed-forward block shared by scorer and refiner."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .tensor import Tensor, linear, relu


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype, name: str, gain: float = 1.0) -> Tensor:
    bound = gain * np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name, dtype=dtype)


def zeros(shape, dtype, name: str) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name, dtype=dtype)


def weight(rng, out_dim: int, in_dim: int, dtype, name: str, gain: float = 1.0) -> Tensor:
    return glorot(rng, (out_dim, in_dim), in_dim, out_dim, dtype, name, gain)


@dataclass
class FFNParams:
    """One hidden layer with relu, linear output."""

    w_in: Tensor
    b_in: Tensor
    w_out: Tensor
    b_out: Tensor

    @classmethod
    def init(cls, rng, in_dim: int, hidden: int, out_dim: int, dtype, prefix: str, gain: float = 1.0):
        return cls(
            weight(rng, hidden, in_dim, dtype, f"{prefix}.w_in", gain),
            zeros(hidden, dtype, f"{prefix}.b_in"),
            weight(rng, out_dim, hidden, dtype, f"{prefix}.w_out", gain),
            zeros(out_dim, dtype, f"{prefix}.b_out"),
        )


def ffn(x: Tensor, p: FFNParams) -> Tensor:
    return linear(relu(linear(x, p.w_in, p.b_in)), p.w_out, p.b_out)


def named_tensors(obj) -> Iterator[tuple[str, Tensor]]:
    """Walk dataclasses/lists and yield every Tensor with its ``name``."""
    if isinstance(obj, Tensor):
        yield obj.name, obj
    elif dataclasses.is_dataclass(obj):
        for f in dataclasses.fields(obj):
            yield from named_tensors(getattr(obj, f.name))
    elif isinstance(obj, (list, tuple)):
        for item in obj:
            yield from named_tensors(item)
