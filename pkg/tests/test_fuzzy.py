import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import gradcheck, projected
from phyzzygan import fuzzy
from phyzzygan import ndcore as nd

# mpmath, 40 digits: ((1 + e^4.5) sigmoid(9 (i - 1/2)) - 1) / (e^4.5 - 1)
SIGMOIDAL_AT_0_9375 = 0.99168008502260824318
SIGMOIDAL_AT_0_75 = 0.91374205555743701949

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
# subnormal products depend on evaluation order, so keep factors normal or zero
factor = st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=1.0))


def values(t):
    return np.asarray(t.data)


def test_t_norm_examples():
    assert np.array_equal(values(fuzzy.t_norm([1, 1], [1, 1])), [1, 1])
    assert np.allclose(values(fuzzy.t_norm([0.5], [0.5, 0.8])), [0.25, 0.4])
    assert np.array_equal(values(fuzzy.t_norm([0, 0.3], [0.7, 0])), [0, 0])


def test_t_conorm_examples():
    assert values(fuzzy.t_conorm([0.0], [0.0]))[0] == 0.0
    assert values(fuzzy.t_conorm([1.0], [0.3]))[0] == 1.0
    assert values(fuzzy.t_conorm([0.5], [0.5]))[0] == 0.75


def test_reichenbach_examples():
    assert fuzzy.reichenbach(0.0, 0.0).item() == 1.0
    assert fuzzy.reichenbach(1.0, 0.0).item() == 0.0
    assert fuzzy.reichenbach(0.5, 0.5).item() == 0.75


def test_reichenbach_shape_mismatch():
    with pytest.raises(nd.ShapeError):
        fuzzy.reichenbach([0.1, 0.2], [0.3])


@pytest.mark.parametrize("i_rc", [0.0, 0.5, 1.0])
def test_sigmoidal_fixed_points(i_rc):
    assert abs(fuzzy.sigmoidal_map(i_rc).item() - i_rc) < 1e-12


def test_sigmoidal_against_high_precision():
    assert fuzzy.sigmoidal_map(0.9375).item() == pytest.approx(SIGMOIDAL_AT_0_9375, rel=1e-13)
    assert fuzzy.sigmoidal_implication(0.5, 0.5).item() == pytest.approx(SIGMOIDAL_AT_0_75, rel=1e-13)


def test_sigmoidal_strictly_increasing():
    grid = np.linspace(0.0, 1.0, 10001)
    assert np.all(np.diff(values(fuzzy.sigmoidal_map(grid))) > 0)


def test_product_aggregate_examples():
    assert fuzzy.product_aggregate(np.ones(7)).item() == 1.0
    assert fuzzy.product_aggregate([0.0, 0.4, 0.9]).item() == 0.0
    assert fuzzy.product_aggregate([0.5, 0.5]).item() == 0.25


@pytest.mark.parametrize("implication", [fuzzy.reichenbach, fuzzy.sigmoidal_implication])
def test_implication_boundaries(implication):
    for a, c, want in [(0, 0, 1), (0, 1, 1), (1, 1, 1), (1, 0, 0)]:
        assert abs(implication(float(a), float(c)).item() - want) < 1e-12


@pytest.mark.parametrize("implication", [fuzzy.reichenbach, fuzzy.sigmoidal_implication])
def test_implication_monotone_on_samples(implication):
    rng = np.random.default_rng(7)
    a, c = rng.uniform(size=(2, 10_000))
    da, dc = rng.uniform(0, 0.2, size=(2, 10_000))
    a2, c2 = np.minimum(a + da, 1.0), np.minimum(c + dc, 1.0)
    base = values(implication(a, c))
    assert np.all(values(implication(a2, c)) <= base + 1e-15)
    assert np.all(values(implication(a, c2)) >= base - 1e-15)


@settings(max_examples=300, deadline=None)
@given(unit, unit, unit)
def test_reichenbach_non_increasing_in_antecedent(a, b, c):
    lo, hi = min(a, b), max(a, b)
    assert fuzzy.reichenbach(hi, c).item() <= fuzzy.reichenbach(lo, c).item() + 1e-15


@settings(max_examples=300, deadline=None)
@given(unit, unit, unit)
def test_sigmoidal_non_decreasing_in_consequent(a, c, d):
    lo, hi = min(c, d), max(c, d)
    assert fuzzy.sigmoidal_implication(a, hi).item() >= fuzzy.sigmoidal_implication(a, lo).item() - 1e-15


@settings(max_examples=200, deadline=None)
@given(st.lists(factor, min_size=1, max_size=12), st.randoms(use_true_random=False))
def test_product_aggregate_symmetric(xs, rnd):
    shuffled = xs[:]
    rnd.shuffle(shuffled)
    assert fuzzy.product_aggregate(xs).item() == pytest.approx(
        fuzzy.product_aggregate(shuffled).item(), rel=1e-12, abs=0
    )


def test_product_aggregate_monotone_on_samples():
    rng = np.random.default_rng(11)
    x = rng.uniform(size=(10_000, 5))
    bumped = x.copy()
    col = rng.integers(0, 5, 10_000)
    bumped[np.arange(10_000), col] = np.minimum(1.0, bumped[np.arange(10_000), col] + 0.1)
    assert np.all(values(fuzzy.product_aggregate(bumped)) >= values(fuzzy.product_aggregate(x)))
    assert fuzzy.product_aggregate(np.zeros(5)).item() == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(unit, min_size=1, max_size=8), st.lists(unit, min_size=1, max_size=8))
def test_norm_and_conorm_stay_in_unit_interval(a, b):
    for op in (fuzzy.t_norm, fuzzy.t_conorm):
        out = values(op(a, b))
        assert out.shape == (max(len(a), len(b)),)
        assert np.all((out >= 0) & (out <= 1))


def test_partition_defaults():
    p = fuzzy.FuzzyPartition()
    assert (p.j, p.k, p.l, p.m) == (8, 8, 8, 16)
    assert p.n == 40
    assert p.width == 16


def test_partition_rejects_empty_slice():
    with pytest.raises(ValueError):
        fuzzy.FuzzyPartition(j=0)


def test_implications_all_ones_head():
    out = fuzzy.implications(np.ones((2, 40)), fuzzy.FuzzyPartition())
    assert out.shape == (2, 16)
    assert np.allclose(values(out), 1.0, atol=1e-6)


def test_implications_half_head():
    out = fuzzy.implications(np.full((1, 40), 0.5), fuzzy.FuzzyPartition())
    assert np.allclose(values(out), SIGMOIDAL_AT_0_9375, rtol=1e-13)


def test_implications_width_check():
    with pytest.raises(nd.ShapeError):
        fuzzy.implications(np.ones((1, 39)), fuzzy.FuzzyPartition())


def test_truth_vector_clamps():
    out = values(fuzzy.truth_vector([-1.0, 0.0, 0.5, 1.0, 2.0]))
    assert np.array_equal(out, [1e-7, 1e-7, 0.5, 1 - 1e-7, 1 - 1e-7])


def test_tiling_is_cyclic():
    assert np.array_equal(values(fuzzy.tile_to([1.0, 2.0, 3.0], 7)), [1, 2, 3, 1, 2, 3, 1])


@pytest.mark.parametrize("op", [fuzzy.t_norm, fuzzy.t_conorm, fuzzy.reichenbach,
                                fuzzy.sigmoidal_implication])
def test_operator_gradients(op):
    rng = np.random.default_rng(3)
    build = projected(op)
    for _ in range(50):
        assert gradcheck(build, list(rng.uniform(0.01, 0.99, (2, 6)))) < 1e-4


def test_fuzzy_chain_gradient():
    rng = np.random.default_rng(4)
    part = fuzzy.FuzzyPartition(3, 2, 4, 5)

    def chain(head):
        return nd.sum(fuzzy.product_aggregate(fuzzy.implications(head, part)))

    for _ in range(30):
        assert gradcheck(chain, [rng.uniform(0.01, 0.99, (2, part.n))]) < 1e-4


def test_every_head_element_gets_gradient():
    part = fuzzy.FuzzyPartition(3, 2, 4, 5)
    head = nd.Tensor(np.full((1, part.n), 0.4), requires_grad=True)
    with nd.Tape() as tape:
        tape.backward(nd.sum(fuzzy.implications(head, part)))
    assert np.all(head.grad != 0)
