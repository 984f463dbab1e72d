"""Command-line pipeline: ingest, synth, extract-sp, train, evaluate, report.

Every subcommand takes ``--config FILE`` as a base layer under its flags and
writes the fully resolved settings next to its output as ``<out>.config``;
passing that file back with ``--config`` repeats the run.

Exit codes: 0 success, 1 usage or configuration error, 2 data validation
error, 3 training failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import config as cfg
from . import data
from .gan import io as params_io
from .gan.model import Model, check_variant
from .gan.train import TrainingError, predict_dataset, train
from .metrics import mae, mse
from .physics import GEOMETRY_KEYS, ConfigError
from .sigproc import SignalWindow, aggregate_sp, extract_sp

log = logging.getLogger("phyzzygan")

EXIT_USAGE, EXIT_DATA, EXIT_TRAINING = 1, 2, 3
DEFAULT_GEOMETRY = Path(__file__).parent / "configs" / "ims.cfg"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _base(args) -> dict:
    return cfg.read_kv(args.config) if getattr(args, "config", None) else {}


def _pick(flag, raw: dict, key: str, default=None):
    """Flag beats config file beats default."""
    if flag is not None:
        return flag
    return raw.get(key, default)


def _existing(path, what: str) -> Path:
    if path is None:
        raise UsageError(f"missing {what}")
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {p}")
    return p.resolve()


def _config_path(out: Path) -> Path:
    return out.with_name(out.name + ".config")


def _write_resolved(out: Path, command: str, values: dict) -> None:
    cfg.write_kv(_config_path(out), values, f"resolved settings for 'phyzzygan {command}'")


def _int(value, key: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def _float(value, key: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


# ingest ---------------------------------------------------------------------


def cmd_ingest(args) -> int:
    raw = _base(args)
    directory = _existing(_pick(args.directory, raw, "directory"), "data directory")
    rows = _int(_pick(args.rows, raw, "rows", data.IMS_ROWS), "rows")
    fs = _float(_pick(args.fs, raw, "fs", data.IMS_FS), "fs")
    t_max = _float(_pick(args.t_max, raw, "t_max", data.T_MAX), "t_max")
    records = [data.ingest_ims(d, rows, fs) for d in data.find_experiments(directory)]
    for rec in records:
        data.label_rul(len(rec), t_max)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    data.write_manifest(out, records, t_max)
    _write_resolved(out, "ingest", {"directory": directory, "rows": rows, "fs": fs, "t_max": t_max})
    log.info("manifest with %d experiments -> %s", len(records), out)
    return 0


# synth ----------------------------------------------------------------------


def _synth_train_config(spec: data.SynthSpec, t_max: float) -> dict:
    """Geometry and growth that match a synthetic experiment."""
    geometry = cfg.read_kv(DEFAULT_GEOMETRY)
    geometry["sampling_hz"] = spec.sampling_hz
    out = {k: geometry[k] for k in GEOMETRY_KEYS if k in geometry}
    out.update(growth_rate=spec.growth_rate, sp_at_failure=spec.sp_at_failure, t_max=t_max)
    # the four-layer stack needs far longer windows than the synthetic default
    out["conv_channels"] = "8,16" if spec.window_len < 8776 else "8,16,32,32"
    return out


def cmd_synth(args) -> int:
    raw = cfg.read_kv(_existing(args.spec, "spec file")) if args.spec else {}
    raw.update(_base(args))
    seed = _int(_pick(args.seed, raw, "seed", 0), "seed")
    t_max_raw = raw.pop("t_max", "auto")
    raw.pop("seed", None)
    spec = cfg.synth_spec(raw)
    t_max = float(spec.n_timestamps - 1) if t_max_raw in ("", "auto") else _float(t_max_raw, "t_max")
    record, truth = data.synth_bearing(spec, seed)
    out = Path(args.out)
    data.write_experiment(record, out / spec.experiment_id)
    record.path = spec.experiment_id
    data.write_manifest(out / "manifest.json", [record], t_max)
    with open(out / "truth.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(truth[0]))
        writer.writeheader()
        writer.writerows(truth)
    cfg.write_kv(out / "train.cfg", _synth_train_config(spec, t_max),
                 "bearing geometry and growth matching the synthetic experiment")
    cfg.write_kv(out / "extract.cfg", {"psi": spec.psi, "analysis_window": spec.analysis_window},
                 "sp extraction settings matching the synthetic experiment")
    resolved = {**data.synth_spec_dict(spec), "seed": seed, "t_max": t_max}
    _write_resolved(out / "synth", "synth", resolved)
    log.info("synthetic experiment %s (%d snapshots) -> %s", spec.experiment_id, len(record), out)
    return 0


# extract-sp -------------------------------------------------------------------

OBSERVATION_FIELDS = ("experiment", "index", "timestamp", "channel", "entry", "impact", "sp",
                      "valid", "reason")


def cmd_extract_sp(args) -> int:
    raw = _base(args)
    manifest_path = _existing(_pick(args.manifest, raw, "manifest"), "manifest")
    resolved = {"manifest": manifest_path, **cfg.resolve_extract(raw)}
    settings = cfg.extract_config(resolved)
    manifest = data.read_manifest(manifest_path)
    rows, observations = [], []
    for rec in data.load_manifest_experiments(manifest):
        signals = rec.bearing_signals()
        names = list(rec.bearing_map)
        for i, ts in enumerate(rec.timestamps):
            obs = []
            for b, name in enumerate(names):
                o = extract_sp(SignalWindow(signals[i, b], rec.fs, name), config=settings)
                o.timestamp = ts
                obs.append(o)
                observations.append({"experiment": rec.experiment_id, "index": i, **o.as_record()})
            sp, valid = aggregate_sp(obs)
            rows.append({"experiment": rec.experiment_id, "index": i, "timestamp": ts,
                         "sp": sp, "valid": int(valid)})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    data.write_sp_csv(out, rows)
    with open(out.with_name(out.stem + ".observations.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=OBSERVATION_FIELDS)
        writer.writeheader()
        writer.writerows(observations)
    _write_resolved(out, "extract-sp", resolved)
    log.info("%d of %d snapshots with a valid sp -> %s",
             sum(r["valid"] for r in rows), len(rows), out)
    return 0


# train / evaluate --------------------------------------------------------------


def _dataset(manifest_path: Path, sp_path: Path) -> tuple[data.Dataset, float]:
    manifest = data.read_manifest(manifest_path)
    t_max = float(manifest["label"]["t_max"])
    records = data.load_manifest_experiments(manifest)
    return data.assemble(records, data.read_sp_csv(sp_path), t_max), t_max


def cmd_train(args) -> int:
    raw = _base(args)
    variant = _pick(args.variant, raw, "variant")
    if variant is None:
        raise UsageError("missing --variant")
    check_variant(variant)
    manifest_path = _existing(_pick(args.manifest, raw, "manifest"), "manifest")
    sp_path = _existing(_pick(args.sp, raw, "sp"), "sp table")
    dataset, t_max = _dataset(manifest_path, sp_path)
    raw.setdefault("t_max", t_max)
    seed = _int(args.seed, "seed") if args.seed is not None else None
    resolved = cfg.resolve_train(raw, variant.lower(), seed)
    config = cfg.variant_config(resolved)
    physics = cfg.physics_from(resolved)
    split = cfg.split_spec(resolved)
    train_idx, test_idx = data.concat_split(dataset.groups, split)
    train_set, test_set = dataset.subset(train_idx), dataset.subset(test_idx)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    full = {"manifest": manifest_path, "sp": sp_path, **resolved}
    _write_resolved(out, "train", full)
    model, report = train(train_set, config, physics, test_set, eval_seed=resolved["eval_seed"])
    tensors = {f"generator/{k}": v for k, v in model.generator.state().items()}
    tensors.update({f"discriminator/{k}": v for k, v in model.discriminator.state().items()})
    metadata = {
        "config": {k: str(v) if isinstance(v, Path) else v for k, v in full.items()},
        "scaling": model.scaling.to_dict(),
        "in_channels": model.in_channels,
        "window_len": model.window_len,
        "label_t_max": t_max,
    }
    params_io.save(out, config.variant, tensors, metadata)
    report.wall_clock_s = round(report.wall_clock_s, 3)
    out.with_name(out.name + ".report.json").write_text(report.to_json() + "\n")
    log.info("%s seed %d: test MAE %.4f -> %s", config.variant, config.seed, report.test_mae, out)
    return 0


def load_model(path) -> tuple[Model, dict]:
    variant, tensors, meta = params_io.load(path)
    resolved = meta["config"]
    model = Model(cfg.variant_config(resolved), meta["in_channels"], meta["window_len"],
                  cfg.physics_from(resolved), data.ScalingStats.from_dict(meta["scaling"]))
    if model.config.variant != variant:
        raise params_io.ParamsFormatError(f"{path}: variant tag {variant!r} disagrees with config")
    for prefix, module in (("generator/", model.generator), ("discriminator/", model.discriminator)):
        state = {k[len(prefix):]: v for k, v in tensors.items() if k.startswith(prefix)}
        missing = set(module.params) - set(state)
        if missing:
            raise params_io.ParamsFormatError(f"{path}: missing tensors {sorted(missing)}")
        module.load_state(state)
    return model, meta


def cmd_evaluate(args) -> int:
    raw = _base(args)
    params_path = _existing(_pick(args.params, raw, "params"), "params file")
    model, meta = load_model(params_path)
    trained = meta["config"]
    manifest_path = _existing(_pick(args.manifest, raw, "manifest", trained["manifest"]), "manifest")
    sp_path = _existing(_pick(args.sp, raw, "sp", trained["sp"]), "sp table")
    eval_seed = _int(_pick(args.eval_seed, raw, "eval_seed", trained["eval_seed"]), "eval_seed")
    split = _pick(args.split, raw, "split", "test")
    if split not in ("test", "all"):
        raise ConfigError(f"split must be 'test' or 'all', not {split!r}")
    dataset, _ = _dataset(manifest_path, sp_path)
    if split == "test":
        _, test_idx = data.concat_split(dataset.groups, cfg.split_spec(trained))
        dataset = dataset.subset(test_idx)
    if len(dataset) == 0:
        raise data.DataValidationError("no samples to evaluate")
    pred = predict_dataset(model, dataset, eval_seed)
    resolved = {"params": params_path, "manifest": manifest_path, "sp": sp_path,
                "eval_seed": eval_seed, "split": split}
    report = {
        "variant": model.config.variant,
        "seed": model.config.seed,
        "mae": mae(dataset.y, pred),
        "mse": mse(dataset.y, pred),
        "n": len(dataset),
        "eval_seed": eval_seed,
        "split": split,
        "config_digest": cfg.digest({"train": trained, "eval_seed": eval_seed, "split": split}),
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2) + "\n")
    with open(out.with_name(out.stem + ".predictions.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["experiment", "timestamp", "truth", "prediction"])
        for (exp, ts), y, p in zip(dataset.keys, dataset.y, pred):
            writer.writerow([exp, ts, repr(float(y)), repr(float(p))])
    _write_resolved(out, "evaluate", resolved)
    log.info("%s: MAE %.4f MSE %.5f over %d samples", report["variant"], report["mae"],
             report["mse"], report["n"])
    return 0


# report -------------------------------------------------------------------------

CURVE_FIELDS = ("run", "kind", "step", "g_loss", "d_loss", "truth", "prediction")


def cmd_report(args) -> int:
    raw = _base(args)
    runs = _existing(_pick(args.runs, raw, "runs"), "runs directory")
    rows = []
    for path in sorted(runs.rglob("*.report.json")):
        rep = json.loads(path.read_text())
        name = str(path.relative_to(runs))[: -len(".report.json")]
        for epoch, (g, d) in enumerate(zip(rep["g_losses"], rep["d_losses"])):
            rows.append({"run": name, "kind": "loss", "step": epoch, "g_loss": g, "d_loss": d})
    for path in sorted(runs.rglob("*.predictions.csv")):
        name = str(path.relative_to(runs))[: -len(".predictions.csv")]
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.DictReader(fh)):
                rows.append({"run": name, "kind": "prediction", "step": i,
                             "truth": row["truth"], "prediction": row["prediction"]})
    if not rows:
        raise data.DataValidationError(f"{runs}: no training reports or predictions found")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CURVE_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    _write_resolved(out, "report", {"runs": runs})
    return 0


# entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phyzzygan", description="Bearing RUL with physics-informed fuzzy GANs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    config_help = "key = value file used as defaults; flags override it"

    p = sub.add_parser("ingest", help="index IMS experiment directories into a manifest")
    p.add_argument("directory", nargs="?", help="one experiment directory or a parent of several")
    p.add_argument("--out", required=True, help="manifest JSON to write")
    p.add_argument("--rows", type=int, help="samples per snapshot file (default 20480)")
    p.add_argument("--fs", type=float, help="sampling frequency in Hz (default 20000)")
    p.add_argument("--t-max", type=float, help="label normalizer in snapshots (default 6324)")
    p.add_argument("--config", help=config_help)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic run-to-failure experiment")
    p.add_argument("--spec", help="key = value overrides of the synthetic experiment")
    p.add_argument("--seed", type=int, help="generator seed (default 0)")
    p.add_argument("--out", required=True, help="directory for snapshots, manifest and configs")
    p.add_argument("--config", help=config_help)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract-sp", help="estimate sp for every snapshot")
    p.add_argument("--manifest", help="manifest written by ingest or synth")
    p.add_argument("--out", required=True, help="sp table CSV to write")
    p.add_argument("--config", help=config_help)
    p.set_defaults(func=cmd_extract_sp)

    p = sub.add_parser("train", help="train one variant")
    p.add_argument("--variant", help="cgan, fuzzygan, physicgan or phyzzygan")
    p.add_argument("--manifest", help="manifest written by ingest or synth")
    p.add_argument("--sp", help="sp table written by extract-sp")
    p.add_argument("--config", help=config_help + " (geometry, growth, network, split)")
    p.add_argument("--seed", type=int, help="training seed")
    p.add_argument("--out", required=True, help="parameter record to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score saved parameters on the held-out split")
    p.add_argument("--params", help="parameter record written by train")
    p.add_argument("--manifest", help="manifest (default: the one used for training)")
    p.add_argument("--sp", help="sp table (default: the one used for training)")
    p.add_argument("--eval-seed", type=int, help="seed for the evaluation noise")
    p.add_argument("--split", choices=("test", "all"), help="samples to score (default test)")
    p.add_argument("--out", required=True, help="metric report JSON to write")
    p.add_argument("--config", help=config_help)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="collect loss curves and predictions into one CSV")
    p.add_argument("--runs", help="directory searched recursively for run outputs")
    p.add_argument("--out", required=True, help="CSV to write")
    p.add_argument("--config", help=config_help)
    p.set_defaults(func=cmd_report)
    return parser


def _fail(code: int, message: str) -> int:
    print(f"phyzzygan: error: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        return _fail(EXIT_USAGE, err)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as err:
        return _fail(EXIT_USAGE, err)
    except TrainingError as err:
        return _fail(EXIT_TRAINING, err)
    except (data.DataValidationError, params_io.ParamsFormatError) as err:
        return _fail(EXIT_DATA, err)
    except (ConfigError, ValueError) as err:
        return _fail(EXIT_USAGE, err)
    except OSError as err:
        return _fail(EXIT_DATA, f"{err.filename}: {err.strerror}")


if __name__ == "__main__":
    sys.exit(main())
