"""Compare the compiled kernels against the NumPy reference.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on inputs shaped like the synthetic training workload and
the best wall time over ``--repeat`` calls is reported. Outputs of the two
backends are also compared so a speedup never hides a wrong answer.
"""
import argparse
import time

import numpy as np

from phyzzygan import _kernels
from phyzzygan._kernels import reference


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times)


def vmd_inputs(n=800, modes=3, seed=0):
    """Half spectrum of a mirror-extended noisy two-tone window, as sigproc builds it."""
    rng = np.random.default_rng(seed)
    t = np.arange(n) / 20000.0
    f = np.sin(2 * np.pi * 300 * t) + 0.6 * np.sin(2 * np.pi * 4000 * t) + 0.1 * rng.normal(size=n)
    half = n // 2
    mirrored = np.concatenate([f[:half][::-1], f, f[half:][::-1]])
    total = mirrored.size
    f_hat = np.fft.fftshift(np.fft.fft(mirrored))
    freqs = np.arange(total) / total - 0.5
    pos = slice(total // 2, total)
    omega0 = 0.5 / modes * np.arange(modes)
    return (np.ascontiguousarray(f_hat[pos]), np.ascontiguousarray(freqs[pos]), omega0,
            2000.0, 0.0, 1e-7, 500)


def conv_inputs(batch=32, cin=2, cout=8, length=1024, kernel=16, stride=8, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(batch, cin, length))
    w = rng.normal(size=(cout, cin, kernel))
    b = rng.normal(size=cout)
    n_out = (length - kernel) // stride + 1
    g = rng.normal(size=(batch, cout, n_out))
    return x, w, b, g, stride


def cases():
    x, w, b, g, stride = conv_inputs()
    vmd_args = vmd_inputs()
    yield "conv1d forward (32x2x1024, k16 s8)", lambda m: m.conv1d_forward(x, w, b, stride)
    yield "conv1d backward", lambda m: m.conv1d_backward(x, w, g, stride)
    yield "vmd admm (800 samples, K=3)", lambda m: m.vmd_admm(*vmd_args)


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b)
                   if isinstance(x, np.ndarray) or isinstance(x, tuple))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    if _kernels.compiled is None:
        print("compiled extension unavailable; only the NumPy reference can be timed")
    print(f"{'kernel':40s} {'numpy ms':>10s} {'compiled ms':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, call in cases():
        t_ref = best_of(lambda: call(reference), args.repeat)
        if _kernels.compiled is None:
            print(f"{name:40s} {1e3 * t_ref:10.2f} {'-':>12s} {'-':>8s} {'-':>11s}")
            continue
        t_cmp = best_of(lambda: call(_kernels.compiled), args.repeat)
        diff = max_diff(call(reference), call(_kernels.compiled))
        print(f"{name:40s} {1e3 * t_ref:10.2f} {1e3 * t_cmp:12.2f} {t_ref / t_cmp:7.2f}x {diff:11.1e}")


if __name__ == "__main__":
    main()
