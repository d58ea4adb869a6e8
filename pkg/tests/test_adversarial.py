import numpy as np
import pytest

from wmlab.errors import InputError
from wmlab.nn.adversarial import fgm, input_gradient, pgd
from wmlab.nn.functional import one_hot
from wmlab.nn.layers import Dense, Flatten
from wmlab.nn.model import Model, build_model


def _logistic_pair():
    """2-class model whose class-1 logit is the raw input value."""
    w = np.array([[0.0], [1.0]])
    model = Model([Flatten(), Dense(w, np.zeros(2))], 2, (1, 1, 1), "logit")
    x = np.full((1, 1, 1, 1), 0.5)
    return model, x


def test_fgm_hand_case():
    # loss for true class 0 grows with the input, so the sign step is +epsilon
    model, x = _logistic_pair()
    y = one_hot(np.array([0]), 2)
    out = fgm(model, x, y, 0.1)
    np.testing.assert_allclose(out, np.full_like(x, 0.6), atol=1e-12)


def test_fgm_hand_case_other_class():
    model, x = _logistic_pair()
    y = one_hot(np.array([1]), 2)
    out = fgm(model, x, y, 0.1)
    np.testing.assert_allclose(out, np.full_like(x, 0.4), atol=1e-12)


def test_fgm_zero_epsilon_is_identity():
    model = build_model("dense_h32", 4, 3, input_shape=(1, 10, 10))
    x = np.random.default_rng(0).uniform(size=(4, 1, 10, 10))
    y = one_hot(np.array([0, 1, 2, 3]), 4)
    np.testing.assert_array_equal(fgm(model, x, y, 0.0), x)


def test_fgm_stays_in_unit_box_and_budget():
    model = build_model("dense_h32", 4, 5, input_shape=(1, 10, 10))
    gen = np.random.default_rng(1)
    x = gen.uniform(size=(8, 1, 10, 10))
    y = one_hot(gen.integers(0, 4, size=8), 4)
    for eps in (0.05, 0.3, 1.0):
        out = fgm(model, x, y, eps)
        assert out.min() >= 0.0 and out.max() <= 1.0
        assert np.abs(out - x).max() <= eps + 1e-12


def test_fgm_rejects_negative_epsilon():
    model, x = _logistic_pair()
    y = one_hot(np.array([0]), 2)
    with pytest.raises(InputError):
        fgm(model, x, y, -0.1)


def test_fgm_moves_loss_uphill():
    model = build_model("dense_h32", 4, 7, input_shape=(1, 10, 10))
    gen = np.random.default_rng(2)
    x = gen.uniform(0.2, 0.8, size=(6, 1, 10, 10))
    labels = model.predict_labels(x)
    y = one_hot(labels, 4)
    adv = fgm(model, x, y, 0.2)
    before = model.predict_probs(x)[np.arange(6), labels]
    after = model.predict_probs(adv)[np.arange(6), labels]
    assert (after <= before + 1e-9).all()


def test_pgd_single_step_equals_fgm():
    model = build_model("dense_h32", 4, 9, input_shape=(1, 10, 10))
    gen = np.random.default_rng(3)
    x = gen.uniform(size=(5, 1, 10, 10))
    y = one_hot(gen.integers(0, 4, size=5), 4)
    np.testing.assert_allclose(pgd(model, x, y, 0.1, 0.1, 1),
                               fgm(model, x, y, 0.1), atol=1e-12)


def test_pgd_zero_epsilon_is_identity():
    model, x = _logistic_pair()
    y = one_hot(np.array([0]), 2)
    np.testing.assert_array_equal(pgd(model, x, y, 0.0, 0.0, 5), x)


def test_pgd_projection_bounds():
    model = build_model("dense_h48x2", 4, 11, input_shape=(1, 10, 10))
    gen = np.random.default_rng(4)
    x = gen.uniform(size=(6, 1, 10, 10))
    y = one_hot(gen.integers(0, 4, size=6), 4)
    out = pgd(model, x, y, 0.15, 0.01, 40)
    assert np.abs(out - x).max() <= 0.15 + 1e-12
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_pgd_rejects_step_above_epsilon():
    model, x = _logistic_pair()
    y = one_hot(np.array([0]), 2)
    with pytest.raises(InputError):
        pgd(model, x, y, 0.1, 0.2, 5)


def test_input_gradient_matches_finite_differences():
    model = build_model("dense_h32", 4, 13, input_shape=(1, 10, 10))
    gen = np.random.default_rng(5)
    x = gen.uniform(0.3, 0.7, size=(1, 1, 10, 10))
    y = one_hot(np.array([2]), 4)
    grad = input_gradient(model, x, y)
    h = 1e-5
    from wmlab.nn.functional import cross_entropy, softmax
    flat_idx = [(0, 0, 2, 3), (0, 0, 7, 1), (0, 0, 5, 5)]
    for idx in flat_idx:
        up = x.copy()
        up[idx] += h
        down = x.copy()
        down[idx] -= h
        loss = lambda z: cross_entropy(y, softmax(model.forward(z)))
        num = (loss(up) - loss(down)) / (2 * h)
        assert abs(grad[idx] - num) <= 1e-4 * max(1.0, abs(num))
