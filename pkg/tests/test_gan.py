import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import gradcheck
from phyzzygan import data, fuzzy
from phyzzygan import ndcore as nd
from phyzzygan.gan import (
    VARIANTS,
    Model,
    Physics,
    TrainingError,
    TrainReport,
    VariantConfig,
    bce_loss,
    evaluate,
    fuzzy_head,
    generator_loss,
    predict,
    train,
)
from phyzzygan.gan import io as params_io
from phyzzygan.gan.model import fake_loss, real_loss
from phyzzygan.physics import BearingGeometry, ConfigError, SpallGrowthConfig, spall_width

GEOM = BearingGeometry(0.0715, 0.0084, 2000 / 60, 20000.0)
PHYSICS = Physics(GEOM, SpallGrowthConfig(growth_rate=0.001, t_max=6324))
SMALL = dict(conv_channels=(4,), kernel=8, stride=4, hidden=(16, 8), epochs=2, batch_size=8)
PART = fuzzy.FuzzyPartition()


def small_model(variant, seed=0, window=64, channels=2):
    cfg = VariantConfig(variant=variant, seed=seed, **SMALL)
    return Model(cfg, channels, window, PHYSICS, data.ScalingStats(np.zeros(channels),
                                                                   np.ones(channels)))


def toy_dataset(n=32, channels=2, window=64, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.uniform(0, 1, n)
    x = rng.normal(size=(n, channels, window)) + y[:, None, None]
    sp = rng.integers(0, 600, n).astype(float)
    keys = [("toy", str(i)) for i in range(n)]
    return data.Dataset(x, sp, y, np.zeros(n, dtype=int), keys)


# configuration and shapes ------------------------------------------------------------


def test_head_widths():
    assert VariantConfig(variant="phyzzygan").head_width == 40
    assert VariantConfig(variant="fuzzygan").head_width == 40
    assert VariantConfig(variant="cgan").head_width == 1
    assert VariantConfig(variant="physicgan").head_width == 1


def test_unknown_variant_lists_all_four():
    with pytest.raises(ValueError) as info:
        VariantConfig(variant="wgan")
    for name in VARIANTS:
        assert name in str(info.value)


def test_physics_variant_needs_geometry():
    cfg = VariantConfig(variant="physicgan", **SMALL)
    with pytest.raises(ConfigError):
        Model(cfg, 2, 64, physics=None)
    with pytest.raises(ConfigError):
        predict(np.full((1, 1), 0.5), [10.0], "phyzzygan", PART, None)


def test_window_too_short_rejected():
    with pytest.raises(nd.ShapeError):
        Model(VariantConfig(variant="cgan"), 4, 4096)
    assert VariantConfig().min_window() == 8776


@pytest.mark.parametrize("variant", VARIANTS)
def test_generator_head_in_open_interval(variant):
    model = small_model(variant)
    rng = np.random.default_rng(1)
    head = model.head(100 * rng.normal(size=(5, 2, 64)), rng.normal(size=(5, 32))).data
    assert head.shape == (5, model.config.head_width)
    assert np.all((head > 0) & (head < 1))


def test_generator_deterministic():
    model = small_model("phyzzygan")
    rng = np.random.default_rng(2)
    x, z = rng.normal(size=(3, 2, 64)), rng.normal(size=(3, 32))
    assert np.array_equal(model.head(x, z).data, model.head(x, z).data)
    twin = small_model("phyzzygan")
    assert np.array_equal(model.head(x, z).data, twin.head(x, z).data)


def test_discriminator_output_range():
    model = small_model("cgan")
    out = model.discriminator.forward(np.random.default_rng(3).normal(size=(4, 2, 64)),
                                      np.linspace(0, 1, 4)).data
    assert out.shape == (4,)
    assert np.all((out > 0) & (out < 1))


# heads ------------------------------------------------------------------------------


def test_fuzzy_head_all_ones():
    out = fuzzy_head(np.ones((1, 40)), PART).data
    assert out.shape == (1, 16)
    assert np.allclose(out, 1.0, atol=1e-6)


def test_fuzzy_head_half():
    # T = 0.25, S = 0.75, I_RC = 0.9375, then the sigmoidal map (mpmath value)
    assert np.allclose(fuzzy_head(np.full((1, 40), 0.5), PART).data, 0.99168008502260824318,
                       rtol=1e-13)


def test_fuzzygan_all_ones_predicts_one():
    assert predict(np.ones((2, 40)), [0.0, 0.0], "fuzzygan", PART).data == pytest.approx(1.0, abs=1e-5)


def test_cgan_passes_head_through():
    assert np.array_equal(predict([[0.3], [0.7]], [0, 0], "cgan").data, [0.3, 0.7])


def test_phyzzygan_zero_case():
    head = np.full((1, 40), 0.5)
    w = fuzzy.product_aggregate(fuzzy_head(head, PART)).item()
    l_max = spall_width(GEOM, 600)
    sp = (w * l_max) / spall_width(GEOM, 1)
    assert predict(head, [sp], "phyzzygan", PART, PHYSICS).item() == pytest.approx(0.0, abs=1e-12)


def test_phyzzygan_ratio_e():
    head = np.full((1, 40), 0.5)
    w = fuzzy.product_aggregate(fuzzy_head(head, PART)).item()
    sp = w * spall_width(GEOM, 600) / math.e / spall_width(GEOM, 1)
    out = predict(head, [sp], "phyzzygan", PART, PHYSICS).item()
    assert out == pytest.approx(0.15820681794881514282, rel=1e-9)


def test_physicgan_uses_scalar_weight():
    sp = 0.6 * spall_width(GEOM, 600) / math.e / spall_width(GEOM, 1)
    assert predict([[0.6]], [sp], "physicgan", None, PHYSICS).item() == pytest.approx(
        0.15820681794881514282, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(VARIANTS), st.integers(0, 10_000), st.floats(0, 5000))
def test_predictions_in_unit_interval(variant, seed, sp):
    rng = np.random.default_rng(seed)
    width = 40 if variant in ("fuzzygan", "phyzzygan") else 1
    head = rng.uniform(0, 1, (3, width))
    out = predict(head, np.full(3, sp), variant, PART, PHYSICS).data
    assert np.all((out >= 0) & (out <= 1))


def test_phyzzygan_monotone_in_sp():
    model = small_model("phyzzygan")
    rng = np.random.default_rng(4)
    x, z = rng.normal(size=(1, 2, 64)), rng.normal(size=(1, 32))
    preds = [model.predict(x, z, [sp]).item() for sp in np.linspace(0, 900, 60)]
    assert all(b <= a for a, b in zip(preds, preds[1:]))


# losses -----------------------------------------------------------------------------


def test_bce_examples():
    assert bce_loss(nd.Tensor([1.0]), nd.Tensor([0.0])).item() < 1e-6
    assert generator_loss(nd.Tensor([0.5])).item() == pytest.approx(math.log(2), rel=1e-15)
    assert bce_loss(nd.Tensor([0.5]), nd.Tensor([0.5])).item() == pytest.approx(2 * math.log(2),
                                                                                rel=1e-15)


def test_bce_is_sum_of_halves():
    rng = np.random.default_rng(5)
    d_real, d_fake = rng.uniform(0.01, 0.99, (2, 6))
    total = bce_loss(d_real, d_fake).item()
    assert total == pytest.approx(real_loss(d_real).item() + fake_loss(d_fake).item(), rel=1e-14)


@pytest.mark.parametrize("variant", VARIANTS)
def test_generator_loss_gradient_wrt_head(variant):
    model = small_model(variant)
    rng = np.random.default_rng(6)
    x = rng.normal(size=(4, 2, 64))
    width = model.config.head_width

    for _ in range(20):
        sp = rng.uniform(50, 550, 4)

        def build(head):
            y_hat = predict(head, sp, variant, PART, PHYSICS)
            return generator_loss(model.discriminator.forward(x, y_hat))

        assert gradcheck(build, [rng.uniform(0.05, 0.95, (4, width))]) < 1e-3


@pytest.mark.parametrize("variant", ["cgan", "phyzzygan"])
def test_generator_loss_gradient_wrt_parameters(variant):
    model = small_model(variant)
    rng = np.random.default_rng(7)
    x, z, sp = rng.normal(size=(3, 2, 64)), rng.normal(size=(3, 32)), rng.uniform(50, 500, 3)
    names = ["conv0.w", "noise.w", "fc2.b"]
    originals = [model.generator.params[n] for n in names]

    def build(*tensors):
        for n, t in zip(names, tensors):
            model.generator.params[n] = t
        try:
            return generator_loss(model.discriminator.forward(x, model.predict(x, z, sp)))
        finally:
            for n, t in zip(names, originals):
                model.generator.params[n] = t

    assert gradcheck(build, [t.data for t in originals]) < 1e-3


# training ---------------------------------------------------------------------------


def test_two_epoch_smoke():
    cfg = VariantConfig(variant="phyzzygan", **SMALL)
    model, report = train(toy_dataset(), cfg, PHYSICS, toy_dataset(seed=1))
    assert len(report.g_losses) == len(report.d_losses) == 2
    assert all(math.isfinite(v) for v in report.g_losses + report.d_losses)
    assert report.n_train == 32 and report.n_test == 32
    assert 0 <= report.test_mae <= 1


@pytest.mark.parametrize("variant", VARIANTS)
def test_training_deterministic(variant):
    cfg = VariantConfig(variant=variant, seed=3, **SMALL)
    _, a = train(toy_dataset(), cfg, PHYSICS, toy_dataset(seed=1))
    _, b = train(toy_dataset(), cfg, PHYSICS, toy_dataset(seed=1))
    assert a.g_losses == b.g_losses and a.d_losses == b.d_losses
    assert a.test_mae == b.test_mae


def test_different_seeds_differ():
    base = dict(SMALL)
    _, a = train(toy_dataset(), VariantConfig(variant="cgan", seed=0, **base))
    _, b = train(toy_dataset(), VariantConfig(variant="cgan", seed=1, **base))
    assert a.g_losses != b.g_losses


def test_non_finite_loss_aborts_with_checkpoint():
    ds = toy_dataset()
    ds.x[20] = np.nan
    cfg = VariantConfig(variant="cgan", **SMALL)
    model = small_model("cgan")
    before = model.generator.state()
    with pytest.raises(TrainingError) as info:
        train(ds, cfg, model=model)
    err = info.value
    assert err.epoch == 0 and err.batch >= 0
    g_state, _ = err.checkpoint
    assert all(np.array_equal(g_state[k], before[k]) for k in before)


def test_evaluate_perfect_and_constant():
    ds = toy_dataset(8)
    model = small_model("cgan")
    metrics = evaluate(model, ds)
    assert metrics["n"] == 8 and metrics["predictions"].shape == (8,)
    assert metrics["mae"] == pytest.approx(np.mean(np.abs(metrics["predictions"] - ds.y)))
    assert evaluate(model, ds, eval_seed=1)["mae"] != metrics["mae"]
    assert evaluate(model, ds, eval_seed=0)["mae"] == metrics["mae"]


def test_report_json_round_trip():
    rep = TrainReport("cgan", 1, 2, [0.5, 0.4], [1.3, 1.2], 0.1, 0.02, 10, 3, 1.5)
    assert TrainReport.from_json(rep.to_json()) == rep


@pytest.mark.slow
def test_phyzzygan_beats_untrained_on_synthetic(synthetic_dataset):
    trs, tes, physics = synthetic_dataset
    cfg = VariantConfig(variant="phyzzygan", conv_channels=(8, 16), epochs=30, seed=0)
    model, report = train(trs, cfg, physics, tes)
    untrained = Model(cfg, trs.x.shape[1], trs.x.shape[2], physics, model.scaling)
    assert report.test_mae <= 0.7 * evaluate(untrained, tes)["mae"]


# parameter records ------------------------------------------------------------------------


def test_params_round_trip(tmp_path):
    model = small_model("fuzzygan")
    tensors = {f"generator/{k}": v for k, v in model.generator.state().items()}
    meta = {"seed": 0, "scaling": {"mean": [0.0], "std": [1.0]}}
    params_io.save(tmp_path / "p.bin", "fuzzygan", tensors, meta)
    variant, loaded, meta2 = params_io.load(tmp_path / "p.bin")
    assert variant == "fuzzygan" and meta2 == meta
    assert list(loaded) == list(tensors)
    assert all(np.array_equal(loaded[k], tensors[k]) for k in tensors)


def test_params_bad_magic_and_truncation():
    raw = params_io.dumps("cgan", {"w": np.ones((2, 3))}, {})
    with pytest.raises(params_io.ParamsFormatError, match="magic"):
        params_io.loads(b"XXXXXXXX" + raw[8:])
    with pytest.raises(params_io.ParamsFormatError):
        params_io.loads(raw[:-5])
    with pytest.raises(params_io.ParamsFormatError):
        params_io.loads(raw + b"\x00")


def test_params_layout_header():
    raw = params_io.dumps("cgan", {"w": np.arange(3.0)})
    assert raw.startswith(params_io.MAGIC)
    assert raw.endswith(np.arange(3.0).astype("<f8").tobytes())
