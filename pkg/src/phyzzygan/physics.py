"""Bearing spall-width model and exponential-growth RUL head."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import ndcore as nd
from .fuzzy import EPS


class ConfigError(ValueError):
    """Invalid or missing physics configuration."""


@dataclass(frozen=True)
class BearingGeometry:
    pitch_diameter_m: float
    ball_diameter_m: float
    shaft_hz: float
    sampling_hz: float
    fault_depth_m: float = 0.0

    def __post_init__(self):
        if not self.pitch_diameter_m > self.ball_diameter_m > 0:
            raise ConfigError("geometry requires pitch_diameter_m > ball_diameter_m > 0")
        if self.shaft_hz <= 0 or self.sampling_hz <= 0:
            raise ConfigError("geometry requires positive shaft_hz and sampling_hz")
        if self.fault_depth_m < 0:
            raise ConfigError("fault_depth_m must be non-negative")


@dataclass(frozen=True)
class SpallGrowthConfig:
    growth_rate: float = 0.001
    sp_at_failure: float = 600.0
    t_max: float = 6324.0
    # None means spall_width(geometry, 1) / 10
    l_floor: float | None = None

    def __post_init__(self):
        if self.growth_rate <= 0 or self.sp_at_failure <= 0 or self.t_max <= 0:
            raise ConfigError("growth_rate, sp_at_failure and t_max must be positive")
        if self.l_floor is not None and self.l_floor <= 0:
            raise ConfigError("l_floor must be positive")


GEOMETRY_KEYS = tuple(f.name for f in fields(BearingGeometry))
GROWTH_KEYS = tuple(f.name for f in fields(SpallGrowthConfig))


def geometry_from_mapping(values: dict) -> BearingGeometry:
    missing = [k for k in GEOMETRY_KEYS[:4] if k not in values]
    if missing:
        raise ConfigError(f"bearing geometry missing keys: {', '.join(missing)}")
    return BearingGeometry(**{k: float(values[k]) for k in GEOMETRY_KEYS if k in values})


def growth_from_mapping(values: dict) -> SpallGrowthConfig:
    kwargs = {}
    for k in GROWTH_KEYS:
        if k in values and values[k] not in (None, "", "auto"):
            kwargs[k] = float(values[k])
    return SpallGrowthConfig(**kwargs)


def spall_width(geom: BearingGeometry, sp):
    """Spall width in meters for ``sp`` samples between entry and impact."""
    sp = np.asarray(sp, dtype=np.float64)
    if np.any(sp < 0):
        raise ValueError("sp must be non-negative")
    d_p, d_b = geom.pitch_diameter_m, geom.ball_diameter_m
    slope = math.pi * geom.shaft_hz * (d_p**2 - d_b**2) / (d_p * geom.sampling_hz)
    depth = math.sqrt(d_b * geom.fault_depth_m + geom.fault_depth_m**2)
    out = slope * sp + depth
    return float(out) if out.ndim == 0 else out


def floor_width(geom: BearingGeometry, growth: SpallGrowthConfig) -> float:
    if growth.l_floor is not None:
        return growth.l_floor
    return spall_width(geom, 1) / 10.0


def rul_raw(l_o, weight, geom: BearingGeometry, growth: SpallGrowthConfig) -> nd.Tensor:
    """Unclamped remaining life in timestamps: ln(w * l_max / l_o) / ln(1 + r)."""
    l_max = spall_width(geom, growth.sp_at_failure)
    l_eff = np.maximum(np.asarray(l_o, dtype=np.float64), floor_width(geom, growth))
    w = nd.clip(weight, EPS, np.inf)
    return (nd.log(w) + np.log(l_max / l_eff)) / math.log1p(growth.growth_rate)


def rul_exponential(l_o, weight, geom: BearingGeometry, growth: SpallGrowthConfig) -> nd.Tensor:
    """Remaining life normalized by ``t_max`` and clamped to [0, 1].

    ``weight`` is the confidence in the physics (the product of fuzzy
    implications, or a plain sigmoid output) and may be a tensor carrying
    gradients; ``l_o`` is a fixed covariate.
    """
    return nd.clip(rul_raw(l_o, weight, geom, growth) / growth.t_max, 0.0, 1.0)


def geometry_dict(geom: BearingGeometry) -> dict:
    return asdict(geom)
