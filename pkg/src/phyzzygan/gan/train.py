"""Adversarial training loop and evaluation."""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import ndcore as nd
from ..data import Dataset, ScalingStats, zscore_fit
from ..metrics import mae, mse
from .model import Model, Physics, VariantConfig, fake_loss, generator_loss, real_loss

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    """Training produced a non-finite loss; ``checkpoint`` holds the last finite state."""

    def __init__(self, message: str, epoch: int, batch: int, checkpoint=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.checkpoint = checkpoint


@dataclass
class TrainReport:
    variant: str
    seed: int
    epochs: int
    g_losses: list[float] = field(default_factory=list)
    d_losses: list[float] = field(default_factory=list)
    test_mae: float | None = None
    test_mse: float | None = None
    n_train: int = 0
    n_test: int = 0
    wall_clock_s: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainReport":
        return cls(**json.loads(text))


def _checkpoint(model: Model) -> tuple[dict, dict]:
    return model.generator.state(), model.discriminator.state()


def _restore(model: Model, ckpt) -> None:
    model.generator.load_state(ckpt[0])
    model.discriminator.load_state(ckpt[1])


def _finite(value: float, what: str, epoch: int, batch: int, ckpt) -> float:
    if not math.isfinite(value):
        raise TrainingError(f"non-finite {what} loss at epoch {epoch}, batch {batch}",
                            epoch, batch, ckpt)
    return value


def build_model(train: Dataset, config: VariantConfig, physics: Physics | None = None,
                scaling: ScalingStats | None = None) -> Model:
    scaling = scaling if scaling is not None else zscore_fit(train.x)
    return Model(config, train.x.shape[1], train.x.shape[2], physics, scaling)


def train(train_set: Dataset, config: VariantConfig, physics: Physics | None = None,
          test_set: Dataset | None = None, model: Model | None = None,
          eval_seed: int = 0) -> tuple[Model, TrainReport]:
    """Alternate discriminator passes on (x, y) and (x, y_hat) with a generator step.

    All randomness (initialization, batch order, noise) derives from
    ``config.seed``.
    """
    started = time.perf_counter()
    model = model if model is not None else build_model(train_set, config, physics)
    x_all = model.scaling.apply(train_set.x)
    sp_all, y_all = train_set.sp, train_set.y
    rng = np.random.default_rng([config.seed, 1])
    g_opt = nd.Adam(model.generator.parameters(), lr=config.lr_g)
    d_opt = nd.Adam(model.discriminator.parameters(), lr=config.lr_d)
    report = TrainReport(config.variant, config.seed, config.epochs, n_train=len(train_set))
    n = len(train_set)
    ckpt = _checkpoint(model)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        g_total = d_total = 0.0
        batches = 0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            x, y, sp = x_all[idx], y_all[idx], sp_all[idx]
            z = rng.standard_normal((idx.size, config.noise_dim))
            y_hat = model.predict(x, z, sp).data

            with nd.Tape() as tape:
                loss_real = real_loss(model.discriminator.forward(x, y))
                tape.backward(loss_real)
            d_opt.step()
            with nd.Tape() as tape:
                loss_fake = fake_loss(model.discriminator.forward(x, y_hat))
                tape.backward(loss_fake)
            d_opt.step()
            d_value = _finite(loss_real.item() + loss_fake.item(), "discriminator", epoch, b, ckpt)

            with nd.Tape() as tape:
                loss_g = generator_loss(model.discriminator.forward(x, model.predict(x, z, sp)))
                tape.backward(loss_g)
            g_opt.step()
            g_value = _finite(loss_g.item(), "generator", epoch, b, ckpt)
            g_total += g_value
            d_total += d_value
            batches += 1
        report.g_losses.append(g_total / batches)
        report.d_losses.append(d_total / batches)
        ckpt = _checkpoint(model)
        log.debug("epoch %d: g=%.4f d=%.4f", epoch, report.g_losses[-1], report.d_losses[-1])
    if test_set is not None and len(test_set):
        metrics = evaluate(model, test_set, eval_seed)
        report.test_mae, report.test_mse = metrics["mae"], metrics["mse"]
        report.n_test = len(test_set)
    report.wall_clock_s = time.perf_counter() - started
    return model, report


def predict_dataset(model: Model, dataset: Dataset, eval_seed: int = 0,
                    batch_size: int = 256) -> np.ndarray:
    """Predictions with one fixed-seed noise draw per sample."""
    rng = np.random.default_rng([eval_seed, 2])
    z_all = rng.standard_normal((len(dataset), model.config.noise_dim))
    x_all = model.scaling.apply(dataset.x)
    out = []
    for start in range(0, len(dataset), batch_size):
        sl = slice(start, start + batch_size)
        out.append(model.predict(x_all[sl], z_all[sl], dataset.sp[sl]).data)
    return np.concatenate(out) if out else np.zeros(0)


def evaluate(model: Model, dataset: Dataset, eval_seed: int = 0) -> dict:
    pred = predict_dataset(model, dataset, eval_seed)
    return {"mae": mae(dataset.y, pred), "mse": mse(dataset.y, pred), "n": len(dataset),
            "predictions": pred}
