import math

import numpy as np
import pytest

from wmlab.errors import DimensionError, InputError
from wmlab.nn.functional import (binary_cross_entropy, cross_entropy, logistic,
                                 one_hot, softmax)


def test_softmax_symmetry():
    np.testing.assert_allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])


def test_softmax_shift_invariance():
    for c in (-3.0, 0.0, 7.5):
        np.testing.assert_allclose(softmax(np.array([c, c, c])),
                                   [1 / 3, 1 / 3, 1 / 3], atol=1e-15)


def test_softmax_large_logits_no_overflow():
    p = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(p))
    assert p[0] > 0.999999
    assert p[1] < 1e-6


def test_softmax_rows_sum_to_one():
    gen = np.random.default_rng(0)
    logits = gen.uniform(-1e4, 1e4, size=(50, 6))
    p = softmax(logits)
    np.testing.assert_allclose(p.sum(axis=1), np.ones(50), atol=1e-12)
    assert np.all(p >= 0) and np.all(p <= 1)
    moderate = softmax(gen.normal(size=(50, 6)))
    assert np.all(moderate > 0) and np.all(moderate < 1)


def test_softmax_batch_matches_rowwise():
    gen = np.random.default_rng(1)
    logits = gen.normal(size=(8, 5))
    p = softmax(logits)
    for i in range(8):
        np.testing.assert_allclose(p[i], softmax(logits[i]), atol=1e-15)


def test_softmax_rejects_3d():
    with pytest.raises(DimensionError):
        softmax(np.zeros((2, 2, 2)))


def test_one_hot_values():
    y = one_hot(np.array([0, 2, 1]), 3)
    np.testing.assert_array_equal(y, [[1, 0, 0], [0, 0, 1], [0, 1, 0]])


def test_one_hot_rejects_out_of_range():
    with pytest.raises(InputError):
        one_hot(np.array([3]), 3)
    with pytest.raises(InputError):
        one_hot(np.array([-1]), 3)


def test_cross_entropy_zero_on_perfect_prediction():
    y = one_hot(np.array([1]), 3)
    probs = np.array([[0.0, 1.0, 0.0]])
    assert cross_entropy(y, probs) < 1e-10


def test_cross_entropy_uniform_is_log_k():
    y = one_hot(np.array([0]), 4)
    probs = np.full((1, 4), 0.25)
    assert abs(cross_entropy(y, probs) - math.log(4)) < 1e-12


def test_cross_entropy_soft_labels():
    y = np.array([[0.5, 0.5]])
    probs = np.array([[0.5, 0.5]])
    assert abs(cross_entropy(y, probs) - math.log(2)) < 1e-12


def test_cross_entropy_is_batch_mean():
    y = one_hot(np.array([0, 1]), 2)
    probs = np.array([[1.0, 0.0], [0.5, 0.5]])
    expect = (0.0 + math.log(2)) / 2
    assert abs(cross_entropy(y, probs) - expect) < 1e-9


def test_cross_entropy_rejects_mismatched_classes():
    with pytest.raises(DimensionError):
        cross_entropy(np.ones((1, 3)) / 3, np.ones((1, 4)) / 4)


def test_logistic_midpoint_and_tails():
    assert logistic(np.array([0.0]))[0] == 0.5
    z = logistic(np.array([-800.0, 800.0]))
    assert np.all(np.isfinite(z))
    assert z[0] < 1e-12 and z[1] > 1 - 1e-12


def test_logistic_matches_closed_form():
    x = np.linspace(-5, 5, 21)
    np.testing.assert_allclose(logistic(x), 1 / (1 + np.exp(-x)), atol=1e-12)


def test_binary_cross_entropy_analytic():
    probs = np.array([0.5, 0.5])
    targets = np.array([1.0, 0.0])
    assert abs(binary_cross_entropy(probs, targets) - math.log(2)) < 1e-12
    assert binary_cross_entropy(np.array([1.0]), np.array([1.0])) < 1e-10
