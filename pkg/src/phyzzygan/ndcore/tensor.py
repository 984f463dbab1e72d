"""Dense float64 tensors with tape-based reverse-mode differentiation.

Operations are recorded on the active :class:`Tape` only when at least one
input requires a gradient, so evaluation outside a tape costs nothing extra.

>>> x = Tensor(3.0, requires_grad=True)
>>> with Tape() as tape:
...     y = x * x
>>> tape.backward(y)
>>> float(x.grad)
6.0
"""
from __future__ import annotations

import contextvars
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .. import _kernels

_ACTIVE_TAPE: contextvars.ContextVar["Tape | None"] = contextvars.ContextVar(
    "phyzzygan_tape", default=None
)

_TINY = np.nextafter(0.0, 1.0)
_ALMOST_ONE = np.nextafter(1.0, 0.0)


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible for an operation."""


class DomainError(ValueError):
    """Raised when an input lies outside an operation's domain (log/sqrt)."""


class Tensor:
    """A float64 array plus optional gradient buffer."""

    __slots__ = ("data", "requires_grad", "grad", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def __len__(self) -> int:
        return len(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({self.data!r}{flag})"

    def __float__(self) -> float:
        return float(self.data)

    def item(self) -> float:
        return float(self.data.item())

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        tape = _ACTIVE_TAPE.get()
        if tape is None:
            raise RuntimeError("backward() needs an active Tape; use Tape.backward(loss)")
        tape.backward(self)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class TapeEntry:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass
class Tape:
    """Ordered record of primitive applications.

    Entries are appended in execution order, so every input of an entry was
    produced by an earlier entry or is a leaf.
    """

    entries: list[TapeEntry] = field(default_factory=list)
    _token: contextvars.Token | None = field(default=None, repr=False)

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def record(self, entry: TapeEntry) -> None:
        self.entries.append(entry)

    def reset(self) -> None:
        self.entries.clear()

    def backward(self, loss: Tensor) -> None:
        """Populate ``.grad`` of every grad-requiring leaf, then clear the tape."""
        if loss.size != 1:
            raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        produced = {id(e.output) for e in self.entries}
        leaves: dict[int, Tensor] = {}
        for entry in reversed(self.entries):
            g_out = grads.pop(id(entry.output), None)
            if g_out is None:
                continue
            in_grads = entry.backward(g_out)
            for t, g in zip(entry.inputs, in_grads):
                if g is None or not t.requires_grad:
                    continue
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + g
                else:
                    grads[key] = g
                if key not in produced:
                    leaves[key] = t
        for key, t in leaves.items():
            t.grad = grads.get(key, np.zeros_like(t.data))
        if loss.requires_grad and id(loss) not in produced:
            loss.grad = np.ones_like(loss.data)
        self.reset()


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    tape = tape if tape is not None else _ACTIVE_TAPE.get()
    if tape is None:
        raise RuntimeError("backward: no tape given and none active")
    tape.backward(loss)


def _make(op: str, data: np.ndarray, inputs: tuple[Tensor, ...], grad_fn) -> Tensor:
    needs = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs)
    tape = _ACTIVE_TAPE.get()
    if needs and tape is not None:
        tape.record(TapeEntry(op, inputs, out, grad_fn))
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# elementwise binary ------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)
    return _make(
        "add", a.data + b.data, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)
    return _make(
        "sub", a.data - b.data, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)
    return _make(
        "mul", a.data * b.data, (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("div", a, b)
    out = a.data / b.data
    return _make(
        "div", out, (a, b),
        lambda g: (_unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)),
    )


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    return _make(
        "matmul", a.data @ b.data, (a, b),
        lambda g: (g @ b.data.T, a.data.T @ g),
    )


# elementwise unary --------------------------------------------------------


def log(x) -> Tensor:
    x = as_tensor(x)
    if np.any(x.data <= 0):
        raise DomainError(f"log: non-positive input (min {x.data.min()!r}); clamp first")
    return _make("log", np.log(x.data), (x,), lambda g: (g / x.data,))


def exp(x) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.data)
    return _make("exp", out, (x,), lambda g: (g * out,))


def sqrt(x) -> Tensor:
    x = as_tensor(x)
    if np.any(x.data <= 0):
        raise DomainError(f"sqrt: non-positive input (min {x.data.min()!r}); clamp first")
    out = np.sqrt(x.data)
    return _make("sqrt", out, (x,), lambda g: (g * 0.5 / out,))


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    # keep the open interval (0, 1) even where float64 would round to 0 or 1
    return np.clip(out, _TINY, _ALMOST_ONE)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out = _sigmoid(x.data)
    return _make("sigmoid", out, (x,), lambda g: (g * out * (1.0 - out),))


def leaky_relu(x, slope: float = 0.2) -> Tensor:
    x = as_tensor(x)
    factor = np.where(x.data > 0, 1.0, slope)
    return _make("leaky_relu", x.data * factor, (x,), lambda g: (g * factor,))


def clip(x, lo: float = -np.inf, hi: float = np.inf) -> Tensor:
    """Clamp to ``[lo, hi]``; the gradient is zero where clamping is active."""
    x = as_tensor(x)
    inside = (x.data >= lo) & (x.data <= hi)
    return _make("clip", np.clip(x.data, lo, hi), (x,), lambda g: (g * inside,))


# structural ---------------------------------------------------------------


def conv1d(x, w, b, stride: int = 1) -> Tensor:
    """Valid 1-D convolution: ``x`` (B, Cin, L), ``w`` (Cout, Cin, K), ``b`` (Cout,)."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1] or b.shape != (w.shape[0],):
        raise ShapeError(
            f"conv1d: incompatible shapes {x.shape} and {w.shape} (bias {b.shape})"
        )
    if x.shape[2] < w.shape[2]:
        raise ShapeError(f"conv1d: input length {x.shape[2]} shorter than kernel {w.shape[2]}")
    xd = np.ascontiguousarray(x.data)
    wd = np.ascontiguousarray(w.data)
    out = _kernels.conv1d_forward(xd, wd, np.ascontiguousarray(b.data), stride)

    def grad_fn(g):
        return _kernels.conv1d_backward(xd, wd, np.ascontiguousarray(g), stride)

    return _make("conv1d", np.asarray(out), (x, w, b), grad_fn)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in ts]}") from None
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def grad_fn(g):
        return np.split(g, bounds, axis=axis)

    return _make("concat", out, ts, grad_fn)


def getitem(x, index) -> Tensor:
    """Basic or advanced indexing; repeated indices accumulate in the gradient."""
    x = as_tensor(x)
    out = x.data[index]

    def grad_fn(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return _make("getitem", out, (x,), grad_fn)


def take(x, indices, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    idx = np.asarray(indices, dtype=np.intp)
    axis = axis % x.ndim
    out = np.take(x.data, idx, axis=axis)

    def grad_fn(g):
        full = np.zeros_like(x.data)
        moved = np.moveaxis(full, axis, 0)
        np.add.at(moved, idx, np.moveaxis(g, axis, 0))
        return (full,)

    return _make("take", out, (x,), grad_fn)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {x.shape} to {shape}") from None
    return _make("reshape", out, (x,), lambda g: (g.reshape(x.shape),))


# reductions ---------------------------------------------------------------


def _expand(g: np.ndarray, shape, axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape)
    if not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def sum(x, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    x = as_tensor(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)
    return _make("sum", out, (x,), lambda g: (_expand(g, x.shape, axis, keepdims).copy(),))


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    out = x.data.mean(axis=axis, keepdims=keepdims)
    n = x.size / max(out.size, 1)
    return _make("mean", out, (x,), lambda g: (_expand(g, x.shape, axis, keepdims) / n,))


def prod(x, axis: int = -1) -> Tensor:
    """Product along one axis; the gradient uses exclusive products, so zeros are safe."""
    x = as_tensor(x)
    out = np.prod(x.data, axis=axis)

    def grad_fn(g):
        moved = np.moveaxis(x.data, axis, -1)
        ones = np.ones(moved.shape[:-1] + (1,))
        left = np.concatenate([ones, np.cumprod(moved, axis=-1)[..., :-1]], axis=-1)
        right_rev = np.cumprod(moved[..., ::-1], axis=-1)[..., :-1]
        right = np.concatenate([right_rev[..., ::-1], ones], axis=-1)
        local = left * right * np.expand_dims(g, -1)
        return (np.moveaxis(local, -1, axis),)

    return _make("prod", out, (x,), grad_fn)
