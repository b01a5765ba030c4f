import math
from dataclasses import astuple

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cuboidnet.errors import LengthMismatch
from cuboidnet.losses import LossWeights, TERMS, smooth_l1, softmax, softmax_log_loss, total_loss
from oracles import central_difference, rel_error


def test_smooth_l1_zero_at_target():
    loss, grad = smooth_l1([1.0, -2.0], [1.0, -2.0])
    assert loss == 0.0
    np.testing.assert_array_equal(grad, 0.0)


def test_smooth_l1_linear_branch():
    loss, grad = smooth_l1([2.0], [0.0])
    assert loss == 1.5
    assert grad[0] == 1.0


def test_smooth_l1_is_a_mean():
    loss, _ = smooth_l1([0.5, 3.0, 0.0, 0.0], [0.0] * 4)
    assert loss == pytest.approx((0.125 + 2.5) / 4)


def test_smooth_l1_is_c1_at_one():
    for x in (1.0 - 1e-9, 1.0, 1.0 + 1e-9):
        loss, grad = smooth_l1([x], [0.0])
        assert loss == pytest.approx(0.5, abs=1e-8)
        assert grad[0] == pytest.approx(1.0, abs=1e-8)


def test_smooth_l1_shape_mismatch():
    with pytest.raises(LengthMismatch):
        smooth_l1(np.zeros(3), np.zeros(4))


def test_smooth_l1_empty():
    loss, grad = smooth_l1(np.zeros((0, 4)), np.zeros((0, 4)))
    assert loss == 0.0 and grad.shape == (0, 4)


def test_smooth_l1_gradient_random_points():
    rng = np.random.default_rng(0)
    for _ in range(100):
        shape = tuple(rng.integers(1, 5, size=rng.integers(1, 3)))
        target = rng.normal(size=shape)
        pred = target + rng.normal(scale=2.0, size=shape)
        # keep away from the kink at |x| = 1 where the second derivative jumps
        pred = np.where(np.abs(np.abs(pred - target) - 1) < 1e-3, pred + 0.01, pred)
        _, grad = smooth_l1(pred, target)
        num = central_difference(lambda p: smooth_l1(p, target)[0], pred)
        assert rel_error(grad, num) < 1e-6


def test_softmax_log_loss_uniform():
    loss, grad = softmax_log_loss([0.0, 0.0], 1)
    assert loss == pytest.approx(math.log(2))
    np.testing.assert_allclose(grad, [0.5, -0.5])


def test_softmax_log_loss_is_stable():
    loss, grad = softmax_log_loss([1000.0, 0.0], 0)
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.isfinite(grad))
    loss, _ = softmax_log_loss([1000.0, 0.0], 1)
    assert loss == pytest.approx(1000.0)


def test_softmax_log_loss_gradient_random_points():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        logits = rng.normal(scale=3.0, size=(n, 2))
        labels = rng.integers(0, 2, n)
        _, grad = softmax_log_loss(logits, labels)
        num = central_difference(lambda z: softmax_log_loss(z, labels)[0], logits)
        assert rel_error(grad, num) < 1e-6


def test_softmax_rows_sum_to_one():
    p = softmax(np.array([[1.0, 2.0], [-500.0, 500.0]]))
    np.testing.assert_allclose(p.sum(axis=1), 1.0)


def test_total_loss_arithmetic():
    assert total_loss([1, 2, 3, 4, 5]).total == 15
    assert total_loss([1, 2, 3, 4, 5], LossWeights(0, 0, 0, 0, 0)).total == 0
    bd = total_loss(dict(zip(TERMS, [1, 2, 3, 4, 5])), LossWeights(roi_corner=0.0))
    assert bd.total == 10
    assert bd.roi_corner == 5  # the breakdown keeps the raw term


def test_zero_weight_removes_even_nonfinite_terms():
    assert total_loss([1, 1, 1, 1, float("nan")], LossWeights(roi_corner=0.0)).total == 4


def test_total_loss_rejects_wrong_length():
    with pytest.raises(LengthMismatch):
        total_loss([1, 2, 3])


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        LossWeights(anchor_cls=-1)


@settings(max_examples=100)
@given(st.lists(st.floats(0, 10), min_size=5, max_size=5),
       st.lists(st.floats(0, 10), min_size=5, max_size=5),
       st.integers(0, 4), st.floats(0, 10))
def test_total_loss_is_linear_in_each_weight(terms, weights, i, scale):
    w = list(weights)
    base = total_loss(terms, LossWeights(*w)).total
    w[i] = weights[i] * scale
    scaled = total_loss(terms, LossWeights(*w)).total
    assert scaled - base == pytest.approx((scale - 1) * weights[i] * terms[i], abs=1e-9)


def test_default_weights_are_all_one():
    assert astuple(LossWeights()) == (1.0,) * 5
