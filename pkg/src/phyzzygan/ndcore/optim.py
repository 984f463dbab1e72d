"""Adam with bias correction."""
from __future__ import annotations

import numpy as np

from .tensor import ShapeError, Tensor


class Adam:
    """Adam optimizer; the instance itself is the optimizer state.

    ``m`` and ``v`` hold per-parameter first and second moments, ``t`` the
    number of steps taken.
    """

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.params: list[Tensor] = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self, grads=None) -> None:
        """Apply one update using ``grads`` or, by default, each parameter's ``.grad``.

        Parameters without a gradient are treated as having a zero gradient.
        """
        if grads is None:
            grads = [p.grad for p in self.params]
        if len(grads) != len(self.params):
            raise ShapeError(f"adam_step: {len(grads)} gradients for {len(self.params)} params")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for i, (p, g) in enumerate(zip(self.params, grads)):
            if g is None:
                g = np.zeros_like(p.data)
            if g.shape != p.data.shape:
                raise ShapeError(f"adam_step: gradient {g.shape} vs parameter {p.data.shape}")
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            # rebinding rather than in-place update keeps earlier values immutable
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
