"""NumPy implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable and
the reference the compiled kernels are tested against.
"""
import numpy as np
from numpy.lib.stride_tricks import as_strided


def _windows(x, kernel, stride):
    batch, cin, length = x.shape
    n_out = (length - kernel) // stride + 1
    s0, s1, s2 = x.strides
    return as_strided(
        x, shape=(batch, cin, n_out, kernel), strides=(s0, s1, s2 * stride, s2), writeable=False
    )


def conv1d_forward(x, w, b, stride):
    cols = _windows(np.ascontiguousarray(x), w.shape[2], stride)
    out = np.einsum("bclk,ock->bol", cols, w, optimize=True)
    return out + b[None, :, None]


def conv1d_backward(x, w, grad_out, stride):
    x = np.ascontiguousarray(x)
    kernel = w.shape[2]
    n_out = grad_out.shape[2]
    cols = _windows(x, kernel, stride)
    grad_w = np.einsum("bol,bclk->ock", grad_out, cols, optimize=True)
    grad_b = grad_out.sum(axis=(0, 2))
    grad_cols = np.einsum("bol,ock->bclk", grad_out, w, optimize=True)
    grad_x = np.zeros_like(x)
    stop = stride * (n_out - 1) + 1
    for k in range(kernel):
        grad_x[:, :, k : k + stop : stride] += grad_cols[:, :, :, k]
    return grad_x, grad_w, grad_b


def vmd_admm(f_plus, freqs, omega0, alpha, tau, tol, max_iter):
    """Run the VMD alternating updates on the non-negative half spectrum.

    Returns ``(u_hat, omega, iterations, converged)`` where ``u_hat`` has
    shape ``(K, H)``.
    """
    n_modes = omega0.shape[0]
    u = np.zeros((n_modes, f_plus.shape[0]), dtype=np.complex128)
    lam = np.zeros_like(f_plus)
    omega = omega0.astype(np.float64).copy()
    total = np.zeros_like(f_plus)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        diff = 0.0
        norm = 0.0
        for k in range(n_modes):
            prev = u[k]
            others = total - prev
            new = (f_plus - others - 0.5 * lam) / (1.0 + alpha * (freqs - omega[k]) ** 2)
            power = new.real**2 + new.imag**2
            mass = power.sum()
            if mass > 0.0:
                omega[k] = np.dot(freqs, power) / mass
            total = others + new
            delta = new - prev
            diff += float(np.vdot(delta, delta).real)
            norm += float(np.vdot(prev, prev).real)
            u[k] = new
        if tau != 0.0:
            lam = lam + tau * (total - f_plus)
        if diff <= tol * norm:
            converged = True
            break
    return u, omega, it, converged
