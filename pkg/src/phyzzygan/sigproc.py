"""Spall-passage extraction from a vibration window.

The chain is: VMD denoising of the analysis segment, cumulative trapezoid
integration to velocity, a fourth-order velocity model, the entry-point
formula on that model, and impact detection on the squared second
difference of the raw signal. ``sp`` is the sample count between entry and
impact.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import _kernels


class VmdConvergenceWarning(RuntimeWarning):
    pass


class DetectionError(ValueError):
    """A stage of the extraction chain could not produce a result."""

    def __init__(self, stage: str, reason: str):
        super().__init__(f"{stage}: {reason}")
        self.stage = stage
        self.reason = reason


@dataclass(frozen=True)
class SignalWindow:
    samples: np.ndarray
    fs: float
    channel: int | str = 0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("SignalWindow needs a non-empty 1-D sample vector")
        if self.fs <= 0:
            raise ValueError("sampling frequency must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.fs

    def __len__(self) -> int:
        return self.samples.size

    def head(self, n: int) -> "SignalWindow":
        return SignalWindow(self.samples[:n], self.fs, self.channel)


@dataclass(frozen=True)
class VmdConfig:
    num_modes: int = 3
    alpha: float = 2000.0
    tol: float = 1e-7
    max_iter: int = 500
    tau: float = 0.0

    def __post_init__(self):
        if self.num_modes < 1 or self.tol <= 0 or self.max_iter < 1 or self.alpha <= 0:
            raise ValueError("invalid VMD configuration")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")


@dataclass
class VmdResult:
    modes: np.ndarray  # (K, n), ascending center frequency
    center_hz: np.ndarray
    iterations: int
    converged: bool


def vmd(window: SignalWindow, config: VmdConfig = VmdConfig()) -> VmdResult:
    """Variational mode decomposition of a mirror-extended window.

    Center frequencies start uniformly spaced on [0, fs/2) and modes are
    returned sorted by their final center frequency.
    """
    f = window.samples
    n = f.size
    if n < 16:
        raise ValueError(f"vmd: window length {n} < 16")
    half = n // 2
    mirrored = np.concatenate([f[:half][::-1], f, f[half:][::-1]])
    total = mirrored.size
    f_hat = np.fft.fftshift(np.fft.fft(mirrored))
    freqs = np.arange(total) / total - 0.5
    pos = slice(total // 2, total)
    omega0 = 0.5 / config.num_modes * np.arange(config.num_modes)
    u_plus, omega, iterations, converged = _kernels.vmd_admm(
        np.ascontiguousarray(f_hat[pos]), np.ascontiguousarray(freqs[pos]), omega0,
        float(config.alpha), float(config.tau), float(config.tol), int(config.max_iter),
    )
    if not converged:
        warnings.warn(
            f"vmd did not converge in {config.max_iter} iterations", VmdConvergenceWarning,
            stacklevel=2,
        )
    u_hat = np.zeros((config.num_modes, total), dtype=np.complex128)
    u_hat[:, total // 2 :] = u_plus
    mirror_idx = np.arange(total // 2, 0, -1)
    u_hat[:, mirror_idx] = np.conj(u_plus)
    u_hat[:, 0] = np.conj(u_hat[:, -1])
    modes = np.real(np.fft.ifft(np.fft.ifftshift(u_hat, axes=-1), axis=-1))[:, half : half + n]
    order = np.argsort(omega, kind="stable")
    return VmdResult(modes[order], omega[order] * window.fs, int(iterations), bool(converged))


def denoise(window: SignalWindow, config: VmdConfig = VmdConfig(), keep: int = 2) -> SignalWindow:
    """Reconstruct from the ``keep`` lowest-frequency VMD modes."""
    result = vmd(window, config)
    return SignalWindow(result.modes[:keep].sum(axis=0), window.fs, window.channel)


def cumtrapz(signal, dt: float) -> np.ndarray:
    signal = np.asarray(signal, dtype=np.float64)
    if signal.size < 2:
        raise ValueError("cumtrapz needs at least two samples")
    return cumulative_trapezoid(signal, dx=dt, initial=0.0)


@dataclass(frozen=True)
class VelocityModel:
    """v(t) = psi * (p1 psi^4 t^4 + p2 psi^3 t^3 + p3 psi^2 t^2 + p4 psi t + p5)."""

    coeffs: tuple[float, float, float, float, float]
    psi: float
    residual: float = 0.0
    degenerate: bool = False

    def velocity(self, t):
        t = np.asarray(t, dtype=np.float64)
        p1, p2, p3, p4, p5 = self.coeffs
        s = self.psi * t
        return self.psi * ((((p1 * s + p2) * s + p3) * s + p4) * s + p5)

    def acceleration(self, t):
        return acceleration_model(self, t)


def _design(t: np.ndarray, psi: float) -> np.ndarray:
    s = psi * t
    return psi * np.stack([s**4, s**3, s**2, s, np.ones_like(s)], axis=1)


def fit_velocity_model(velocity, dt: float, psi: float, window_len: int = 600) -> VelocityModel:
    """Least-squares fit of the quartic velocity model to the first ``window_len`` samples."""
    v = np.asarray(velocity, dtype=np.float64)
    if window_len > v.size:
        raise ValueError(f"window_len {window_len} exceeds series length {v.size}")
    v = v[:window_len]
    t = np.arange(window_len) * dt
    design = _design(t, psi)
    scale = np.linalg.norm(design, axis=0)
    scale[scale == 0] = 1.0
    sol, _, rank, _ = np.linalg.lstsq(design / scale, v, rcond=None)
    coeffs = sol / scale
    resid = float(np.sqrt(np.mean((design @ coeffs - v) ** 2)))
    degenerate = bool(rank < 5 or not np.any(v))
    return VelocityModel(tuple(float(c) for c in coeffs), float(psi), resid, degenerate)


def acceleration_model(model: VelocityModel, t):
    """Exact time derivative of the velocity model."""
    t = np.asarray(t, dtype=np.float64)
    p1, p2, p3, p4, _ = model.coeffs
    psi = model.psi
    s = psi * t
    return psi * psi * (((4 * p1 * s + 3 * p2) * s + 2 * p3) * s + p4)


def find_entry(model: VelocityModel, window_len: int, dt: float) -> int:
    """Entry sample index from the lowest interior local minimum of the acceleration.

    The minimum is searched on a grid of pitch ``dt / 10`` over the open
    interval ``(0, window_len * dt)``.
    """
    grid = np.arange(1, 10 * window_len) * (dt / 10.0)
    acc = acceleration_model(model, grid)
    interior = np.flatnonzero((acc[1:-1] < acc[:-2]) & (acc[1:-1] <= acc[2:])) + 1
    if interior.size == 0:
        raise DetectionError("entry", "no local minimum")
    i_min = interior[np.argmin(acc[interior])]
    t_m = grid[i_min]
    a_min = float(acc[i_min])
    if abs(a_min) < 1e-12:
        raise DetectionError("entry", "acceleration minimum too close to zero")
    k = float(model.velocity(t_m))
    entry_t = t_m + k * model.psi / a_min
    index = int(np.rint(entry_t / dt))
    if not 0 <= index < window_len:
        raise DetectionError("entry", f"entry index {index} outside [0, {window_len})")
    return index


def squared_second_difference(samples) -> np.ndarray:
    """(x[i+1] - 2 x[i] + x[i-1])**2 centred on i; the two end samples are zero."""
    x = np.asarray(samples, dtype=np.float64)
    out = np.zeros_like(x)
    if x.size >= 3:
        out[1:-1] = np.diff(x, 2) ** 2
    return out


def find_impact(raw: SignalWindow, entry_index: int, window_len: int = 600,
                threshold_fraction: float = 0.05) -> int:
    """First sample after the entry reaching ``threshold_fraction`` of the window peak."""
    seg = raw.samples[:window_len]
    if not 0 <= entry_index < seg.size:
        raise DetectionError("impact", f"entry index {entry_index} outside the window")
    energy = squared_second_difference(seg)
    peak = energy.max()
    if peak <= 0:
        raise DetectionError("impact", "flat signal")
    hits = np.flatnonzero(energy[entry_index + 1 :] >= threshold_fraction * peak)
    if hits.size == 0:
        raise DetectionError("impact", "no sample above threshold after entry")
    return int(entry_index + 1 + hits[0])


def peak_ratio(raw: SignalWindow, window_len: int = 600) -> float:
    """Peak of the squared second difference over its median (impact distinctness)."""
    energy = squared_second_difference(raw.samples[:window_len])[1:-1]
    med = float(np.median(energy)) if energy.size else 0.0
    peak = float(energy.max()) if energy.size else 0.0
    if med <= 0:
        return np.inf if peak > 0 else 0.0
    return peak / med


@dataclass(frozen=True)
class ExtractConfig:
    psi: float = 2.0
    analysis_window: int = 600
    keep_modes: int = 2
    threshold_fraction: float = 0.05
    # windows whose impact peak is not this many times the median are unreliable
    min_peak_ratio: float = 100.0
    vmd: VmdConfig = field(default_factory=VmdConfig)


@dataclass
class SpallObservation:
    entry_index: int = -1
    impact_index: int = -1
    sp: int = 0
    valid: bool = False
    reason: str = ""
    channel: int | str = 0
    timestamp: str = ""

    def as_record(self) -> dict:
        return {
            "timestamp": self.timestamp, "channel": self.channel,
            "entry": self.entry_index, "impact": self.impact_index, "sp": self.sp,
            "valid": int(self.valid), "reason": self.reason,
        }


def extract_sp(window: SignalWindow, psi: float | None = None,
               config: ExtractConfig = ExtractConfig()) -> SpallObservation:
    """Run the full chain on one window; failures become invalid observations."""
    psi = config.psi if psi is None else psi
    n = min(config.analysis_window, len(window))
    obs = SpallObservation(channel=window.channel)
    segment = window.head(n)
    try:
        if not np.all(np.isfinite(segment.samples)):
            raise DetectionError("input", "non-finite samples")
        if not np.any(segment.samples):
            raise DetectionError("input", "zero signal")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", VmdConvergenceWarning)
            smooth = denoise(segment, config.vmd, config.keep_modes)
        velocity = cumtrapz(smooth.samples, window.dt)
        model = fit_velocity_model(velocity, window.dt, psi, n)
        if model.degenerate:
            raise DetectionError("fit", "degenerate velocity fit")
        entry = find_entry(model, n, window.dt)
        obs.entry_index = entry
        impact = find_impact(window, entry, n, config.threshold_fraction)
        obs.impact_index = impact
        if peak_ratio(window, n) < config.min_peak_ratio:
            raise DetectionError("reliability", "impact peak not distinct from noise")
    except DetectionError as err:
        obs.reason = str(err)
        return obs
    obs.sp = impact - entry
    obs.valid = True
    return obs


def aggregate_sp(observations) -> tuple[int, bool]:
    """Per-timestamp feature: the largest valid sp over channels, or 0 if none."""
    valid = [o.sp for o in observations if o.valid]
    return (max(valid), True) if valid else (0, False)
