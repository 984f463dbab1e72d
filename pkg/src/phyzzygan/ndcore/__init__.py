"""Minimal float64 tensor library: primitives, reverse-mode tape, Adam."""
from .optim import Adam
from .tensor import (
    DomainError,
    ShapeError,
    Tape,
    Tensor,
    add,
    as_tensor,
    backward,
    clip,
    concat,
    conv1d,
    div,
    exp,
    getitem,
    leaky_relu,
    log,
    matmul,
    mean,
    mul,
    prod,
    reshape,
    sigmoid,
    sqrt,
    sub,
    sum,
    take,
)

__all__ = [
    "Adam", "DomainError", "ShapeError", "Tape", "Tensor", "add", "as_tensor", "backward",
    "clip", "concat", "conv1d", "div", "exp", "getitem", "leaky_relu", "log", "matmul",
    "mean", "mul", "prod", "reshape", "sigmoid", "sqrt", "sub", "sum", "take",
]
