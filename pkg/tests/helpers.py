"""Finite-difference oracle shared by the gradient tests."""
import numpy as np

from phyzzygan import ndcore as nd

STEP = 1e-6


def numeric_grads(f, arrays, step=STEP):
    """Central differences of the scalar f(*arrays) with respect to each array."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            hi = f(*arrays)
            flat[i] = keep - step
            lo = f(*arrays)
            flat[i] = keep
            gflat[i] = (hi - lo) / (2 * step)
        grads.append(g)
    return grads


def analytic_grads(build, arrays):
    """Gradients of the scalar tensor build(*tensors) from one backward pass."""
    tensors = [nd.Tensor(a, requires_grad=True) for a in arrays]
    with nd.Tape() as tape:
        loss = build(*tensors)
        tape.backward(loss)
    return [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]


def rel_error(a, n, floor=1e-4):
    a, n = np.asarray(a), np.asarray(n)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / scale)) if a.size else 0.0


def gradcheck(build, arrays, floor=1e-4):
    """Largest relative error between tape gradients and central differences."""
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    analytic = analytic_grads(build, arrays)

    def value(*xs):
        return build(*[nd.Tensor(x) for x in xs]).item()

    numeric = numeric_grads(value, arrays)
    return max(rel_error(a, n, floor) for a, n in zip(analytic, numeric))


def projected(op, shape_out_seed=0):
    """Wrap a tensor-valued op into a scalar by a fixed random projection."""
    cache = {}

    def build(*xs):
        out = op(*xs)
        if out.shape not in cache:
            rng = np.random.default_rng(shape_out_seed)
            cache[out.shape] = rng.uniform(0.5, 1.5, out.shape)
        return nd.sum(out * cache[out.shape])

    return build


def _away(rng, shape, edges, margin=0.01, lo=-2.0, hi=2.0):
    """Uniform samples nudged at least ``margin`` away from each kink in ``edges``."""
    x = rng.uniform(lo, hi, shape)
    for e in edges:
        close = np.abs(x - e) < margin
        x[close] = e + np.where(x[close] >= e, margin, -margin)
    return x


def _signed(rng, shape, lo, hi):
    return rng.uniform(lo, hi, shape) * rng.choice([-1.0, 1.0], shape)


# name -> (op on tensors, sampler of input arrays)
PRIMITIVES = {
    "add": (nd.add, lambda r: [r.normal(size=(3, 4)), r.normal(size=(4,))]),
    "sub": (nd.sub, lambda r: [r.normal(size=(3, 1)), r.normal(size=(3, 4))]),
    "mul": (nd.mul, lambda r: [r.normal(size=(3, 4)), r.normal(size=(3, 4))]),
    "div": (nd.div, lambda r: [r.normal(size=(3, 4)), _signed(r, (4,), 0.5, 2.0)]),
    "matmul": (nd.matmul, lambda r: [r.normal(size=(3, 4)), r.normal(size=(4, 2))]),
    "log": (nd.log, lambda r: [r.uniform(0.1, 3.0, (5,))]),
    "exp": (nd.exp, lambda r: [r.normal(size=(5,))]),
    "sqrt": (nd.sqrt, lambda r: [r.uniform(0.1, 3.0, (5,))]),
    "sigmoid": (nd.sigmoid, lambda r: [3 * r.normal(size=(5,))]),
    "leaky_relu": (nd.leaky_relu, lambda r: [_away(r, (6,), [0.0])]),
    "clip": (lambda x: nd.clip(x, -0.5, 0.5), lambda r: [_away(r, (6,), [-0.5, 0.5], lo=-1, hi=1)]),
    "conv1d": (lambda x, w, b: nd.conv1d(x, w, b, stride=2),
               lambda r: [r.normal(size=(2, 2, 13)), r.normal(size=(3, 2, 4)), r.normal(size=(3,))]),
    "concat": (lambda a, b: nd.concat([a, b], axis=1),
               lambda r: [r.normal(size=(2, 3)), r.normal(size=(2, 2))]),
    "getitem": (lambda x: x[1:, ::2], lambda r: [r.normal(size=(3, 5))]),
    "take": (lambda x: nd.take(x, [0, 2, 2, 1], axis=-1), lambda r: [r.normal(size=(2, 3))]),
    "reshape": (lambda x: nd.reshape(x, (3, 4)), lambda r: [r.normal(size=(2, 6))]),
    "sum": (lambda x: nd.sum(x, axis=0), lambda r: [r.normal(size=(3, 4))]),
    "mean": (lambda x: nd.mean(x, axis=1), lambda r: [r.normal(size=(3, 4))]),
    "prod": (lambda x: nd.prod(x, axis=-1), lambda r: [_signed(r, (3, 4), 0.5, 1.5)]),
}


def primitive_error(name, points=100, seed=0):
    """Worst relative gradient error of one primitive over ``points`` random inputs."""
    op, sample = PRIMITIVES[name]
    rng = np.random.default_rng(seed)
    build = projected(op)
    return max(gradcheck(build, sample(rng)) for _ in range(points))


# synthetic run-to-failure experiment used by the training and acceptance tests
SYNTH_T_MAX = 640
SYNTH_RATE = 0.0036


def synthetic_experiment(seed=0):
    """(dataset, truth rows, extraction seconds) for the default synthetic spec."""
    import time

    from phyzzygan import data
    from phyzzygan.sigproc import ExtractConfig, SignalWindow, aggregate_sp, extract_sp

    spec = data.SynthSpec()
    record, truth = data.synth_bearing(spec, seed)
    config = ExtractConfig(analysis_window=spec.analysis_window, psi=spec.psi)
    signals = record.bearing_signals()
    table = {}
    started = time.perf_counter()
    for i, ts in enumerate(record.timestamps):
        obs = [extract_sp(SignalWindow(signals[i, b], record.fs, b), config=config)
               for b in range(signals.shape[1])]
        table[(record.experiment_id, ts)] = aggregate_sp(obs)
    elapsed = time.perf_counter() - started
    return data.assemble([record], table, SYNTH_T_MAX), truth, elapsed


def synthetic_physics():
    from phyzzygan.gan import Physics
    from phyzzygan.physics import BearingGeometry, SpallGrowthConfig

    geom = BearingGeometry(0.0715, 0.0084, 2000 / 60, 20000.0)
    return Physics(geom, SpallGrowthConfig(growth_rate=SYNTH_RATE, t_max=SYNTH_T_MAX))
