"""Plain-text ``key = value`` configuration files.

Lines starting with ``#`` or ``;`` are comments. No section headers are
needed; keys are case-insensitive.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import fields
from pathlib import Path

from .data import SplitSpec, SynthSpec
from .fuzzy import FuzzyPartition
from .gan.model import PHYSICS_VARIANTS, Physics, VariantConfig
from .physics import (
    GEOMETRY_KEYS,
    GROWTH_KEYS,
    ConfigError,
    geometry_from_mapping,
    growth_from_mapping,
)
from .sigproc import ExtractConfig, VmdConfig

_SECTION = "config"


def read_kv(path) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror}") from None
    try:
        parser.read_string(f"[{_SECTION}]\n" + text, source=str(path))
    except configparser.Error as err:
        raise ConfigError(f"{path}: {err}") from None
    return dict(parser[_SECTION])


def format_kv(values: dict, header: str = "") -> str:
    lines = [f"# {line}" for line in header.splitlines()]
    for key, value in values.items():
        if value is None:
            value = "auto"
        elif isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def write_kv(path, values: dict, header: str = "") -> None:
    Path(path).write_text(format_kv(values, header))


def digest(values: dict) -> str:
    canonical = json.dumps(values, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _int_list(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


def _typed(raw: dict, key: str, cast, default):
    if key not in raw or raw[key] in ("", "auto"):
        return default
    try:
        return cast(raw[key])
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw[key]!r}") from None


# training -------------------------------------------------------------------

TRAIN_KEYS = (
    "variant", "seed", "epochs", "batch_size", "lr_g", "lr_d", "noise_dim", "noise_proj",
    "conv_channels", "kernel", "stride", "hidden", "leak", "j", "k", "l", "m",
    "train_fraction", "split_seed", "stratify", "eval_seed",
)


def resolve_train(raw: dict, variant: str | None = None, seed: int | None = None) -> dict:
    """Materialize every training setting, CLI overrides winning over the file."""
    d = VariantConfig()
    part = FuzzyPartition()
    split = SplitSpec()
    out = {
        "variant": variant or raw.get("variant") or None,
        "seed": seed if seed is not None else _typed(raw, "seed", int, 0),
        "epochs": _typed(raw, "epochs", int, d.epochs),
        "batch_size": _typed(raw, "batch_size", int, d.batch_size),
        "lr_g": _typed(raw, "lr_g", float, d.lr_g),
        "lr_d": _typed(raw, "lr_d", float, d.lr_d),
        "noise_dim": _typed(raw, "noise_dim", int, d.noise_dim),
        "noise_proj": _typed(raw, "noise_proj", int, d.noise_proj),
        "conv_channels": list(_typed(raw, "conv_channels", _int_list, d.conv_channels)),
        "kernel": _typed(raw, "kernel", int, d.kernel),
        "stride": _typed(raw, "stride", int, d.stride),
        "hidden": list(_typed(raw, "hidden", _int_list, d.hidden)),
        "leak": _typed(raw, "leak", float, d.leak),
        "j": _typed(raw, "j", int, part.j),
        "k": _typed(raw, "k", int, part.k),
        "l": _typed(raw, "l", int, part.l),
        "m": _typed(raw, "m", int, part.m),
        "train_fraction": _typed(raw, "train_fraction", float, split.fraction),
        "split_seed": _typed(raw, "split_seed", int, split.seed),
        "stratify": raw.get("stratify", split.stratify),
        "eval_seed": _typed(raw, "eval_seed", int, 0),
    }
    if out["variant"] is None:
        raise ConfigError("no variant given (use --variant or a 'variant' key)")
    for key in GEOMETRY_KEYS + GROWTH_KEYS:
        if key in raw:
            out[key] = raw[key]
    if out["variant"].lower() in PHYSICS_VARIANTS:
        geom = geometry_from_mapping(raw)
        growth = growth_from_mapping(raw)
        for key in GEOMETRY_KEYS:
            out[key] = getattr(geom, key)
        for key in GROWTH_KEYS:
            out[key] = getattr(growth, key)
    return out


def variant_config(resolved: dict) -> VariantConfig:
    return VariantConfig(
        variant=resolved["variant"],
        partition=FuzzyPartition(resolved["j"], resolved["k"], resolved["l"], resolved["m"]),
        noise_dim=resolved["noise_dim"], noise_proj=resolved["noise_proj"],
        conv_channels=tuple(resolved["conv_channels"]), kernel=resolved["kernel"],
        stride=resolved["stride"], hidden=tuple(resolved["hidden"]), leak=resolved["leak"],
        epochs=resolved["epochs"], batch_size=resolved["batch_size"],
        lr_g=resolved["lr_g"], lr_d=resolved["lr_d"], seed=resolved["seed"],
    )


def physics_from(resolved: dict) -> Physics | None:
    if not all(k in resolved for k in GEOMETRY_KEYS[:4]):
        if resolved["variant"].lower() in PHYSICS_VARIANTS:
            raise ConfigError(f"{resolved['variant']} needs bearing geometry in the config")
        return None
    return Physics(geometry_from_mapping(resolved), growth_from_mapping(resolved))


def split_spec(resolved: dict) -> SplitSpec:
    return SplitSpec(resolved["train_fraction"], resolved["split_seed"], resolved["stratify"])


# sp extraction -----------------------------------------------------------------


def resolve_extract(raw: dict) -> dict:
    d = ExtractConfig()
    v = VmdConfig()
    return {
        "psi": _typed(raw, "psi", float, d.psi),
        "analysis_window": _typed(raw, "analysis_window", int, d.analysis_window),
        "keep_modes": _typed(raw, "keep_modes", int, d.keep_modes),
        "threshold_fraction": _typed(raw, "threshold_fraction", float, d.threshold_fraction),
        "min_peak_ratio": _typed(raw, "min_peak_ratio", float, d.min_peak_ratio),
        "vmd_modes": _typed(raw, "vmd_modes", int, v.num_modes),
        "vmd_alpha": _typed(raw, "vmd_alpha", float, v.alpha),
        "vmd_tol": _typed(raw, "vmd_tol", float, v.tol),
        "vmd_max_iter": _typed(raw, "vmd_max_iter", int, v.max_iter),
        "vmd_tau": _typed(raw, "vmd_tau", float, v.tau),
    }


def extract_config(resolved: dict) -> ExtractConfig:
    return ExtractConfig(
        psi=resolved["psi"], analysis_window=resolved["analysis_window"],
        keep_modes=resolved["keep_modes"], threshold_fraction=resolved["threshold_fraction"],
        min_peak_ratio=resolved["min_peak_ratio"],
        vmd=VmdConfig(resolved["vmd_modes"], resolved["vmd_alpha"], resolved["vmd_tol"],
                      resolved["vmd_max_iter"], resolved["vmd_tau"]),
    )


# synthetic spec ------------------------------------------------------------------


def synth_spec(raw: dict) -> SynthSpec:
    kwargs = {}
    for f in fields(SynthSpec):
        if f.name not in raw or raw[f.name] in ("", "auto"):
            continue
        default = getattr(SynthSpec, f.name)
        cast = type(default) if default is not None else float
        try:
            kwargs[f.name] = cast(raw[f.name])
        except ValueError:
            raise ConfigError(f"bad value for {f.name}: {raw[f.name]!r}") from None
    unknown = set(raw) - {f.name for f in fields(SynthSpec)}
    if unknown:
        raise ConfigError(f"unknown synthetic spec keys: {', '.join(sorted(unknown))}")
    return SynthSpec(**kwargs)
