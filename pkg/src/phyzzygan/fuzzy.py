"""Differentiable fuzzy-logic operators.

All operators act on the last axis and accept :class:`~phyzzygan.ndcore.Tensor`
or array-like inputs, returning tensors. Vectors of unequal length are
cyclically tiled to the longer length before combining, so every element
keeps a gradient path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ndcore as nd

EPS = 1e-7
STEEPNESS = 9.0
_E_HALF = math.exp(STEEPNESS / 2.0)


@dataclass(frozen=True)
class FuzzyPartition:
    """Sizes of the four slices ``a, b, c, d`` cut from the generator head."""

    j: int = 8
    k: int = 8
    l: int = 8  # noqa: E741
    m: int = 16

    def __post_init__(self):
        for name in ("j", "k", "l", "m"):
            if getattr(self, name) < 1:
                raise ValueError(f"partition size {name} must be positive")

    @property
    def n(self) -> int:
        return self.j + self.k + self.l + self.m

    @property
    def width(self) -> int:
        """Implication width: the longest of the four slices."""
        return max(self.j, self.k, self.l, self.m)


def truth_vector(x) -> nd.Tensor:
    """Clamp raw values into ``[EPS, 1 - EPS]``."""
    return nd.clip(x, EPS, 1.0 - EPS)


def tile_to(x, length: int) -> nd.Tensor:
    x = nd.as_tensor(x)
    n = x.shape[-1]
    if n == length:
        return x
    return nd.take(x, np.arange(length) % n, axis=-1)


def _aligned(a, b):
    a, b = nd.as_tensor(a), nd.as_tensor(b)
    n = max(a.shape[-1], b.shape[-1])
    return tile_to(a, n), tile_to(b, n)


def t_norm(a, b) -> nd.Tensor:
    """Product t-norm."""
    a, b = _aligned(a, b)
    return a * b


def t_conorm(c, d) -> nd.Tensor:
    """Probabilistic sum, the dual of the product t-norm."""
    c, d = _aligned(c, d)
    return c + d - c * d


def reichenbach(t, s) -> nd.Tensor:
    t, s = nd.as_tensor(t), nd.as_tensor(s)
    if t.shape != s.shape:
        raise nd.ShapeError(f"reichenbach: incompatible shapes {t.shape} and {s.shape}")
    return 1.0 - t + t * s


def sigmoidal_map(i_rc) -> nd.Tensor:
    """Rescaled sigmoid that fixes 0, 1/2 and 1 and flattens the corners."""
    z = nd.sigmoid(STEEPNESS * (nd.as_tensor(i_rc) - 0.5))
    return ((1.0 + _E_HALF) * z - 1.0) / (_E_HALF - 1.0)


def sigmoidal_implication(t, s) -> nd.Tensor:
    return sigmoidal_map(reichenbach(t, s))


def product_aggregate(values) -> nd.Tensor:
    """Product over the last axis."""
    return nd.prod(values, axis=-1)


def implications(head, partition: FuzzyPartition) -> nd.Tensor:
    """Split ``head`` (..., N) into a, b, c, d and return the (..., M) implications."""
    head = nd.as_tensor(head)
    if head.shape[-1] != partition.n:
        raise nd.ShapeError(
            f"implications: head width {head.shape[-1]} != partition total {partition.n}"
        )
    head = truth_vector(head)
    j, k, l = partition.j, partition.k, partition.l  # noqa: E741
    a = head[..., :j]
    b = head[..., j : j + k]
    c = head[..., j + k : j + k + l]
    d = head[..., j + k + l :]
    width = partition.width
    t = tile_to(t_norm(a, b), width)
    s = tile_to(t_conorm(c, d), width)
    return sigmoidal_implication(t, s)
