"""IMS bearing data: ingestion, scaling, RUL labels, splitting, and a synthetic generator.

An IMS experiment is a directory of ASCII files named ``YYYY.MM.DD.HH.MM.SS``,
one per snapshot, each holding tab-separated channel readings (in g), one
row per sample.
"""
from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

IMS_ROWS = 20480
IMS_FS = 20000.0
T_MAX = 6324
TIMESTAMP_FORMAT = "%Y.%m.%d.%H.%M.%S"
_TIMESTAMP_RE = re.compile(r"^\d{4}\.\d{2}\.\d{2}\.\d{2}\.\d{2}\.\d{2}$")


class DataValidationError(ValueError):
    """Malformed input data; the message names the file (and line) at fault."""


def parse_timestamp(name: str) -> datetime:
    return datetime.strptime(name, TIMESTAMP_FORMAT)


def channel_map(channels: int) -> dict[str, tuple[int, ...]]:
    """Bearing -> channel indices. Eight channels means two accelerometers per bearing."""
    if channels == 8:
        return {f"bearing{b + 1}": (2 * b, 2 * b + 1) for b in range(4)}
    return {f"bearing{c + 1}": (c,) for c in range(channels)}


@dataclass
class ExperimentRecord:
    experiment_id: str
    timestamps: list[str]
    data: np.ndarray  # (n_timestamps, rows, channels)
    fs: float = IMS_FS
    bearing_map: dict[str, tuple[int, ...]] = field(default_factory=dict)
    path: str | None = None

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[0] != len(self.timestamps):
            raise DataValidationError(
                f"{self.experiment_id}: data shape {self.data.shape} does not match "
                f"{len(self.timestamps)} timestamps"
            )
        parsed = [parse_timestamp(t) for t in self.timestamps]
        if any(b <= a for a, b in zip(parsed, parsed[1:])):
            raise DataValidationError(f"{self.experiment_id}: timestamps not strictly increasing")
        if not self.bearing_map:
            self.bearing_map = channel_map(self.channels)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def rows(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def bearing_signals(self) -> np.ndarray:
        """(n, n_bearings, rows): each bearing is the mean of its accelerometers."""
        parts = [self.data[:, :, list(ch)].mean(axis=2) for ch in self.bearing_map.values()]
        return np.stack(parts, axis=1)


def read_ims_file(path, rows: int | None = IMS_ROWS, channels: int | None = None) -> np.ndarray:
    path = Path(path)
    lines = path.read_text().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if rows is not None and len(lines) != rows:
        raise DataValidationError(f"{path}: expected {rows} rows, found {len(lines)}")
    table = []
    for lineno, line in enumerate(lines, start=1):
        fields_ = line.split()
        if channels is None:
            channels = len(fields_)
        if len(fields_) != channels or channels == 0:
            raise DataValidationError(
                f"{path}:{lineno}: expected {channels} channels, found {len(fields_)}"
            )
        try:
            table.append([float(v) for v in fields_])
        except ValueError:
            raise DataValidationError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
    return np.asarray(table, dtype=np.float64)


def write_ims_file(path, matrix: np.ndarray, fmt: str = "%.17g") -> None:
    np.savetxt(path, np.asarray(matrix), fmt=fmt, delimiter="\t")


def _snapshot_files(directory: Path) -> list[Path]:
    return [p for p in directory.iterdir() if p.is_file() and _TIMESTAMP_RE.match(p.name)]


def ingest_ims(directory, rows: int | None = IMS_ROWS, fs: float = IMS_FS,
               experiment_id: str | None = None) -> ExperimentRecord:
    """Load one experiment directory, sorted by timestamp."""
    directory = Path(directory)
    files = sorted(_snapshot_files(directory), key=lambda p: parse_timestamp(p.name))
    if not files:
        raise DataValidationError(f"{directory}: no snapshot files")
    first = read_ims_file(files[0], rows)
    channels = first.shape[1]
    data = np.empty((len(files),) + first.shape)
    data[0] = first
    for i, f in enumerate(files[1:], start=1):
        data[i] = read_ims_file(f, first.shape[0], channels)
    return ExperimentRecord(
        experiment_id or directory.name, [f.name for f in files], data, fs,
        channel_map(channels), str(directory),
    )


def find_experiments(directory) -> list[Path]:
    """The directory itself if it holds snapshots, else its snapshot-holding subdirectories."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataValidationError(f"{directory}: not a directory")
    if _snapshot_files(directory):
        return [directory]
    found = sorted(d for d in directory.iterdir() if d.is_dir() and _snapshot_files(d))
    if not found:
        raise DataValidationError(f"{directory}: no IMS experiment directories found")
    return found


# scaling -----------------------------------------------------------------


@dataclass
class ScalingStats:
    mean: np.ndarray  # per channel
    std: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Scale (n, C, L) windows channel-wise."""
        return (x - self.mean[None, :, None]) / np.maximum(self.std, 1e-12)[None, :, None]

    def unscale(self, x: np.ndarray) -> np.ndarray:
        return x * np.maximum(self.std, 1e-12)[None, :, None] + self.mean[None, :, None]

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingStats":
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64))


def zscore_fit(train: np.ndarray) -> ScalingStats:
    return ScalingStats(train.mean(axis=(0, 2)), train.std(axis=(0, 2)))


def zscore_fit_apply(train: np.ndarray, windows: np.ndarray) -> tuple[np.ndarray, ScalingStats]:
    stats = zscore_fit(train)
    return stats.apply(windows), stats


# labels and split ----------------------------------------------------------


def label_rul(experiment, t_max: float = T_MAX) -> np.ndarray:
    """y_i = (L - 1 - i) / t_max for an experiment of L snapshots."""
    n = experiment if isinstance(experiment, int) else len(experiment)
    if n < 1:
        raise DataValidationError("experiment must have at least one snapshot")
    if n - 1 > t_max:
        raise DataValidationError(f"experiment of {n} snapshots exceeds t_max={t_max}")
    return (n - 1 - np.arange(n)) / float(t_max)


@dataclass(frozen=True)
class SplitSpec:
    fraction: float = 0.8
    seed: int = 0
    # "none": one shuffle over everything; "experiment": split each experiment separately
    stratify: str = "none"

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise ValueError("train fraction must lie in (0, 1)")
        if self.stratify not in ("none", "experiment"):
            raise ValueError("stratify must be 'none' or 'experiment'")


def concat_split(groups, spec: SplitSpec = SplitSpec()) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle and split sample indices; train size is floor(fraction * n).

    ``groups`` is the experiment id of each concatenated sample (or just a
    sample count when there is a single group).
    """
    groups = np.zeros(groups, dtype=int) if isinstance(groups, int) else np.asarray(groups)
    n = groups.size
    if n == 0:
        raise DataValidationError("cannot split an empty dataset")
    rng = np.random.default_rng(spec.seed)
    if spec.stratify == "none":
        order = rng.permutation(n)
        cut = math.floor(spec.fraction * n)
        return np.sort(order[:cut]), np.sort(order[cut:])
    train, test = [], []
    for g in np.unique(groups):
        idx = np.flatnonzero(groups == g)
        idx = idx[rng.permutation(idx.size)]
        cut = math.floor(spec.fraction * idx.size)
        train.append(idx[:cut])
        test.append(idx[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


# synthetic bearing ---------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Run-to-failure experiment whose spall grows by the exponential law.

    With ``initial_sp=None`` the initial spall is chosen so that sp reaches
    ``sp_at_failure`` exactly at the final snapshot, which makes the physics
    head's remaining life agree with the snapshot labels.
    """

    experiment_id: str = "synth"
    n_timestamps: int = 641
    channels: int = 2
    window_len: int = 1024
    sampling_hz: float = 20000.0
    noise_level: float = 0.01
    onset: int = 40
    initial_sp: float | None = None
    growth_rate: float = 0.0036
    sp_at_failure: float = 600.0
    faulty_channel: int = 0
    analysis_window: int = 800
    psi: float = 2.0
    dip_amplitude: float = 1.0
    burst_amplitude: float = 2.0
    entry_min: int = 40
    entry_max: int = 100
    start: str = "2004.02.12.10.32.39"
    interval_s: int = 600

    def resolved_initial_sp(self) -> float:
        if self.initial_sp is not None:
            return float(self.initial_sp)
        steps = self.n_timestamps - 1 - self.onset
        return self.sp_at_failure / (1.0 + self.growth_rate) ** steps

    def sp_at(self, i: int) -> int | None:
        if i < self.onset:
            return None
        return int(round(self.resolved_initial_sp() * (1.0 + self.growth_rate) ** (i - self.onset)))

    def validate(self) -> None:
        if self.n_timestamps < 1 or self.channels < 1:
            raise DataValidationError("synthetic spec needs at least one snapshot and channel")
        if not 0 <= self.faulty_channel < self.channels:
            raise DataValidationError("faulty_channel out of range")
        if self.analysis_window > self.window_len:
            raise DataValidationError("analysis_window exceeds window_len")
        if not 0 <= self.entry_min < self.entry_max:
            raise DataValidationError("need 0 <= entry_min < entry_max")
        if self.onset < self.n_timestamps:
            largest = self.sp_at(self.n_timestamps - 1)
            if largest + self.entry_max + _BURST_LEN > self.analysis_window:
                raise DataValidationError(
                    f"sp reaches {largest} samples, which does not fit the "
                    f"{self.analysis_window}-sample analysis window"
                )


_BURST_LEN = 32


def _impact_burst(amplitude: float) -> np.ndarray:
    j = np.arange(_BURST_LEN)
    burst = amplitude * np.exp(-j / 4.0) * np.sin(np.pi * j / 2.0)
    # zero mean so the burst does not shift the integrated velocity
    return burst - burst.mean()


def _entry_profile(rng, spec: SynthSpec, entry: int) -> np.ndarray:
    """Cubic acceleration dip placed so the entry formula lands on ``entry``.

    The dip has its local minimum at t_m; its offset is solved from
    t_m + psi * v(t_m) / a(t_m) = t_entry with v the integral from 0.
    """
    dt = 1.0 / spec.sampling_hz
    w = spec.analysis_window
    t = np.arange(spec.window_len) * dt
    t_m = rng.uniform(0.5, 0.65) * w * dt
    h = rng.uniform(0.3, 0.4) * w * dt
    t_c = t_m - h
    alpha = 3.0 * spec.dip_amplitude / (4.0 * h**3)

    def shape(x):
        return alpha * ((x - t_c) ** 3 / 3.0 - h * h * (x - t_c))

    def integral(x):
        return alpha * (((x - t_c) ** 4 - t_c**4) / 12.0 - h * h * ((x - t_c) ** 2 - t_c**2) / 2.0)

    lead = entry * dt - t_m
    offset = (lead * shape(t_m) - spec.psi * integral(t_m)) / (spec.psi * t_m - lead)
    profile = shape(t) + offset
    k = np.arange(spec.window_len)
    tail = k >= w
    profile[tail] *= 0.5 * (1.0 + np.cos(np.pi * np.minimum(k[tail] - w, 100) / 100.0))
    return profile


def synth_bearing(spec: SynthSpec = SynthSpec(), seed: int = 0) -> tuple[ExperimentRecord, list[dict]]:
    """Generate an experiment plus its ground-truth table."""
    spec.validate()
    rng = np.random.default_rng(seed)
    n, rows, c = spec.n_timestamps, spec.window_len, spec.channels
    data = spec.noise_level * rng.standard_normal((n, rows, c))
    burst = _impact_burst(spec.burst_amplitude)
    start = parse_timestamp(spec.start)
    names = [(start + timedelta(seconds=spec.interval_s * i)).strftime(TIMESTAMP_FORMAT)
             for i in range(n)]
    truth = []
    for i in range(n):
        sp = spec.sp_at(i)
        row = {"timestamp": names[i], "index": i, "entry": "", "impact": "", "sp": "",
               "present": 0, "rul": n - 1 - i}
        if sp is not None:
            entry = int(rng.integers(spec.entry_min, spec.entry_max))
            impact = entry + sp
            data[i, :, spec.faulty_channel] += _entry_profile(rng, spec, entry)
            stop = min(rows, impact + _BURST_LEN)
            data[i, impact:stop, spec.faulty_channel] += burst[: stop - impact]
            row.update(entry=entry, impact=impact, sp=sp, present=1)
        truth.append(row)
    record = ExperimentRecord(spec.experiment_id, names, data, spec.sampling_hz, channel_map(c))
    return record, truth


def write_experiment(record: ExperimentRecord, directory, fmt: str = "%.6f") -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, matrix in zip(record.timestamps, record.data):
        write_ims_file(directory / name, matrix, fmt)
    record.path = str(directory)
    return directory


# manifest and sp tables -----------------------------------------------------

MANIFEST_VERSION = 1


def manifest_entry(record: ExperimentRecord) -> dict:
    return {
        "id": record.experiment_id,
        "path": record.path,
        "rows": record.rows,
        "channels": record.channels,
        "fs": record.fs,
        "n_timestamps": len(record),
        "first": record.timestamps[0],
        "last": record.timestamps[-1],
        "bearing_map": {k: list(v) for k, v in record.bearing_map.items()},
    }


def write_manifest(path, records, t_max: float = T_MAX) -> dict:
    manifest = {
        "version": MANIFEST_VERSION,
        "label": {"t_max": t_max, "rule": "(L - 1 - i) / t_max"},
        "experiments": [manifest_entry(r) for r in records],
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def read_manifest(path) -> dict:
    path = Path(path)
    try:
        manifest = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise DataValidationError(f"{path}: unreadable manifest ({err})") from None
    if manifest.get("version") != MANIFEST_VERSION:
        raise DataValidationError(f"{path}: unsupported manifest version {manifest.get('version')}")
    base = path.parent
    for exp in manifest["experiments"]:
        p = Path(exp["path"])
        exp["path"] = str(p if p.is_absolute() else base / p)
    return manifest


def load_manifest_experiments(manifest: dict) -> list[ExperimentRecord]:
    records = []
    for exp in manifest["experiments"]:
        rec = ingest_ims(exp["path"], exp["rows"], exp["fs"], exp["id"])
        rec.bearing_map = {k: tuple(v) for k, v in exp["bearing_map"].items()}
        records.append(rec)
    return records


SP_FIELDS = ("experiment", "index", "timestamp", "sp", "valid")


def write_sp_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SP_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in SP_FIELDS})


def read_sp_csv(path) -> dict[tuple[str, str], tuple[int, bool]]:
    """(experiment, timestamp) -> (sp, valid)."""
    table = {}
    try:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                table[(row["experiment"], row["timestamp"])] = (int(row["sp"]), row["valid"] == "1")
    except (OSError, KeyError, ValueError) as err:
        raise DataValidationError(f"{path}: unreadable sp table ({err})") from None
    return table


@dataclass
class Dataset:
    """Concatenated samples from several experiments."""

    x: np.ndarray  # (n, bearings, rows), unscaled
    sp: np.ndarray
    y: np.ndarray
    groups: np.ndarray
    keys: list[tuple[str, str]]

    def __len__(self) -> int:
        return self.y.size

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.x[idx], self.sp[idx], self.y[idx], self.groups[idx],
                       [self.keys[i] for i in idx])


def assemble(records, sp_table, t_max: float = T_MAX) -> Dataset:
    xs, sps, ys, groups, keys = [], [], [], [], []
    for g, rec in enumerate(records):
        labels = label_rul(len(rec), t_max)
        xs.append(rec.bearing_signals())
        for i, ts in enumerate(rec.timestamps):
            key = (rec.experiment_id, ts)
            if key not in sp_table:
                raise DataValidationError(f"sp table has no entry for {key[0]}/{key[1]}")
            sp, valid = sp_table[key]
            sps.append(sp if valid else 0)
            keys.append(key)
        ys.append(labels)
        groups.append(np.full(len(rec), g))
    widths = {x.shape[1:] for x in xs}
    if len(widths) != 1:
        raise DataValidationError(f"experiments have mismatched window shapes {sorted(widths)}")
    return Dataset(np.concatenate(xs), np.asarray(sps, dtype=np.float64), np.concatenate(ys),
                   np.concatenate(groups), keys)


def synth_spec_dict(spec: SynthSpec) -> dict:
    return asdict(spec)
