"""Generator, discriminator, prediction heads and losses for the four variants."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .. import fuzzy
from .. import ndcore as nd
from ..fuzzy import FuzzyPartition
from ..physics import BearingGeometry, ConfigError, SpallGrowthConfig, rul_exponential, spall_width

VARIANTS = ("cgan", "fuzzygan", "physicgan", "phyzzygan")
FUZZY_VARIANTS = ("fuzzygan", "phyzzygan")
PHYSICS_VARIANTS = ("physicgan", "phyzzygan")
LOSS_EPS = 1e-7


def check_variant(name: str) -> str:
    key = name.lower()
    if key not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; choose one of: {', '.join(VARIANTS)}")
    return key


@dataclass
class VariantConfig:
    variant: str = "phyzzygan"
    partition: FuzzyPartition = field(default_factory=FuzzyPartition)
    noise_dim: int = 32
    noise_proj: int = 32
    conv_channels: tuple[int, ...] = (8, 16, 32, 32)
    kernel: int = 16
    stride: int = 8
    hidden: tuple[int, ...] = (128, 64)
    leak: float = 0.2
    epochs: int = 200
    batch_size: int = 32
    lr_g: float = 1e-4
    lr_d: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        self.variant = check_variant(self.variant)
        self.conv_channels = tuple(int(c) for c in self.conv_channels)
        self.hidden = tuple(int(h) for h in self.hidden)
        if isinstance(self.partition, dict):
            self.partition = FuzzyPartition(**self.partition)

    @property
    def head_width(self) -> int:
        return self.partition.n if self.variant in FUZZY_VARIANTS else 1

    def min_window(self) -> int:
        """Shortest input the convolution stack accepts."""
        length = 1
        for _ in self.conv_channels:
            length = (length - 1) * self.stride + self.kernel
        return length

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conv_channels"] = list(self.conv_channels)
        d["hidden"] = list(self.hidden)
        return d


def _he(rng, shape, fan_in):
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


class Module:
    """Ordered named parameters."""

    def __init__(self):
        self.params: dict[str, nd.Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> nd.Tensor:
        t = nd.Tensor(value, requires_grad=True, name=name)
        self.params[name] = t
        return t

    def parameters(self) -> list[nd.Tensor]:
        return list(self.params.values())

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for k, t in self.params.items():
            if state[k].shape != t.data.shape:
                raise nd.ShapeError(f"{k}: stored shape {state[k].shape} vs {t.data.shape}")
            t.data = np.array(state[k], dtype=np.float64)


class _Backbone(Module):
    def __init__(self, rng, in_channels: int, cfg: VariantConfig):
        super().__init__()
        self.cfg = cfg
        self.n_conv = len(cfg.conv_channels)
        cin = in_channels
        for i, cout in enumerate(cfg.conv_channels):
            self.add(f"conv{i}.w", _he(rng, (cout, cin, cfg.kernel), cin * cfg.kernel))
            self.add(f"conv{i}.b", np.zeros(cout))
            cin = cout
        self.feature_dim = cin

    def features(self, x: nd.Tensor) -> nd.Tensor:
        h = x
        for i in range(self.n_conv):
            h = nd.conv1d(h, self.params[f"conv{i}.w"], self.params[f"conv{i}.b"], self.cfg.stride)
            h = nd.leaky_relu(h, self.cfg.leak)
        return nd.mean(h, axis=2)

    def _dense_layers(self, rng, prefix: str, sizes: list[int]) -> None:
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            self.add(f"{prefix}{i}.w", _he(rng, (fan_in, fan_out), fan_in))
            self.add(f"{prefix}{i}.b", np.zeros(fan_out))

    def _dense(self, h: nd.Tensor, prefix: str, n_layers: int, last_linear: bool) -> nd.Tensor:
        for i in range(n_layers):
            h = h @ self.params[f"{prefix}{i}.w"] + self.params[f"{prefix}{i}.b"]
            if i < n_layers - 1 or not last_linear:
                h = nd.leaky_relu(h, self.cfg.leak)
        return h


class Generator(_Backbone):
    """Conv features of x and a projection of z, concatenated, then dense layers to a sigmoid head."""

    def __init__(self, rng, in_channels: int, cfg: VariantConfig):
        super().__init__(rng, in_channels, cfg)
        self.add("noise.w", _he(rng, (cfg.noise_dim, cfg.noise_proj), cfg.noise_dim))
        self.add("noise.b", np.zeros(cfg.noise_proj))
        sizes = [self.feature_dim + cfg.noise_proj, *cfg.hidden, cfg.head_width]
        self._dense_layers(rng, "fc", sizes)
        self.n_fc = len(sizes) - 1

    def forward(self, x, z) -> nd.Tensor:
        feats = self.features(nd.as_tensor(x))
        noise = nd.leaky_relu(nd.as_tensor(z) @ self.params["noise.w"] + self.params["noise.b"],
                              self.cfg.leak)
        h = nd.concat([feats, noise], axis=1)
        return nd.sigmoid(self._dense(h, "fc", self.n_fc, last_linear=True))


class Discriminator(_Backbone):
    """Conv features of x with the candidate label appended; sigmoid score."""

    def __init__(self, rng, in_channels: int, cfg: VariantConfig):
        super().__init__(rng, in_channels, cfg)
        sizes = [self.feature_dim + 1, *cfg.hidden, 1]
        self._dense_layers(rng, "fc", sizes)
        self.n_fc = len(sizes) - 1

    def forward(self, x, y) -> nd.Tensor:
        feats = self.features(nd.as_tensor(x))
        y = nd.reshape(nd.as_tensor(y), (-1, 1))
        h = nd.concat([feats, y], axis=1)
        out = nd.sigmoid(self._dense(h, "fc", self.n_fc, last_linear=True))
        return nd.reshape(out, (-1,))


@dataclass
class Physics:
    geometry: BearingGeometry
    growth: SpallGrowthConfig

    def spall(self, sp) -> np.ndarray:
        return np.asarray(spall_width(self.geometry, np.asarray(sp, dtype=np.float64)))


def fuzzy_head(head, partition: FuzzyPartition) -> nd.Tensor:
    """Implications (B, M) from the generator head (B, N)."""
    return fuzzy.implications(head, partition)


def predict(head, sp, variant: str, partition: FuzzyPartition | None = None,
            physics: Physics | None = None) -> nd.Tensor:
    """Map the generator head (B, width) to predictions in [0, 1], shape (B,)."""
    variant = check_variant(variant)
    head = nd.as_tensor(head)
    if variant in PHYSICS_VARIANTS and physics is None:
        raise ConfigError(f"{variant} needs bearing geometry")
    if variant == "cgan":
        return nd.reshape(head, (-1,))
    if variant == "physicgan":
        weight = nd.reshape(head, (-1,))
    else:
        weight = fuzzy.product_aggregate(fuzzy_head(head, partition))
        if variant == "fuzzygan":
            return weight
    return rul_exponential(physics.spall(sp), weight, physics.geometry, physics.growth)


def bce_loss(d_real, d_fake) -> nd.Tensor:
    """Discriminator loss: -log D(x, y) - log(1 - D(x, y_hat)), batch-averaged."""
    d_real = nd.clip(d_real, LOSS_EPS, 1.0 - LOSS_EPS)
    d_fake = nd.clip(d_fake, LOSS_EPS, 1.0 - LOSS_EPS)
    return nd.mean(-nd.log(d_real)) + nd.mean(-nd.log(1.0 - d_fake))


def real_loss(d_real) -> nd.Tensor:
    return nd.mean(-nd.log(nd.clip(d_real, LOSS_EPS, 1.0 - LOSS_EPS)))


def fake_loss(d_fake) -> nd.Tensor:
    return nd.mean(-nd.log(1.0 - nd.clip(d_fake, LOSS_EPS, 1.0 - LOSS_EPS)))


def generator_loss(d_fake) -> nd.Tensor:
    """Non-saturating generator objective -log D(x, G(x, z))."""
    return nd.mean(-nd.log(nd.clip(d_fake, LOSS_EPS, 1.0 - LOSS_EPS)))


class Model:
    """A generator/discriminator pair with everything needed to predict."""

    def __init__(self, config: VariantConfig, in_channels: int, window_len: int,
                 physics: Physics | None = None, scaling=None):
        if config.variant in PHYSICS_VARIANTS and physics is None:
            raise ConfigError(f"{config.variant} needs bearing geometry")
        if window_len < config.min_window():
            raise nd.ShapeError(
                f"window of {window_len} samples is shorter than the {config.min_window()} "
                f"the {len(config.conv_channels)}-layer convolution stack needs"
            )
        self.config = config
        self.in_channels = in_channels
        self.window_len = window_len
        self.physics = physics
        self.scaling = scaling
        rng = np.random.default_rng(config.seed)
        self.generator = Generator(rng, in_channels, config)
        self.discriminator = Discriminator(rng, in_channels, config)

    def head(self, x, z) -> nd.Tensor:
        return self.generator.forward(x, z)

    def predict(self, x, z, sp) -> nd.Tensor:
        return predict(self.head(x, z), sp, self.config.variant, self.config.partition,
                       self.physics)
