"""Analytic layer gradients against central finite differences."""
import numpy as np
import pytest

from wmlab.nn.functional import cross_entropy, one_hot, softmax
from wmlab.nn.layers import Conv2d, Dense, Flatten, ReLU, has_params

H = 1e-5


def _loss(layer, x, y):
    out = layer.forward(x)
    flat = out.reshape(out.shape[0], -1)
    return cross_entropy(y, softmax(flat))


def _analytic_grads(layer, x, y):
    out, cache = layer.forward_cached(x)
    flat = out.reshape(out.shape[0], -1)
    probs = softmax(flat)
    grad_flat = (probs - y) / x.shape[0]
    return layer.backward(grad_flat.reshape(out.shape), cache)


def _numeric(fn, arr):
    num = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + H
        up = fn()
        arr[idx] = orig - H
        down = fn()
        arr[idx] = orig
        num[idx] = (up - down) / (2 * H)
    return num


def _rel_err(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
    return np.abs(a - b).max() / denom


def _check_gradients(layer, x, y):
    grad_in, param_grads = _analytic_grads(layer, x, y)
    loss = lambda: _loss(layer, x, y)
    assert _rel_err(grad_in, _numeric(loss, x)) <= 1e-4
    if has_params(layer):
        for p, g in zip((layer.W, layer.b), param_grads):
            assert _rel_err(g, _numeric(loss, p)) <= 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_dense_gradients(seed):
    gen = np.random.default_rng(seed)
    layer = Dense.init(6, 4, gen)
    x = gen.normal(size=(3, 6))
    y = one_hot(gen.integers(0, 4, size=3), 4)
    _check_gradients(layer, x, y)


@pytest.mark.parametrize("seed", range(5))
def test_conv2d_gradients(seed):
    gen = np.random.default_rng(100 + seed)
    layer = Conv2d.init(2, 3, 3, gen)
    x = gen.normal(size=(2, 2, 5, 5))
    width = layer.forward(x)[0].size
    y = one_hot(gen.integers(0, width, size=2), width)
    _check_gradients(layer, x, y)


@pytest.mark.parametrize("seed", range(5))
def test_relu_input_gradient(seed):
    gen = np.random.default_rng(200 + seed)
    x = gen.normal(size=(3, 7))
    # keep activations away from the kink so finite differences are clean
    x[np.abs(x) < 0.05] += 0.1
    y = one_hot(gen.integers(0, 7, size=3), 7)
    _check_gradients(ReLU(), x, y)


@pytest.mark.parametrize("seed", range(5))
def test_flatten_input_gradient(seed):
    gen = np.random.default_rng(300 + seed)
    x = gen.normal(size=(2, 2, 3, 3))
    y = one_hot(gen.integers(0, 18, size=2), 18)
    _check_gradients(Flatten(), x, y)


def test_dense_forward_identity():
    layer = Dense(np.eye(2), np.zeros(2))
    np.testing.assert_array_equal(layer.forward(np.array([[1.0, 2.0]])),
                                  [[1.0, 2.0]])


def test_dense_forward_affine():
    layer = Dense(np.array([[2.0, 0.0], [0.0, 3.0]]), np.array([1.0, -1.0]))
    np.testing.assert_allclose(layer.forward(np.array([[1.0, 1.0]])),
                               [[3.0, 2.0]])


def test_conv2d_forward_matches_naive():
    gen = np.random.default_rng(4)
    layer = Conv2d.init(2, 3, 3, gen)
    x = gen.normal(size=(2, 2, 6, 6))
    out = layer.forward(x)
    n, cout, oh, ow = out.shape
    assert (cout, oh, ow) == (3, 4, 4)
    naive = np.zeros_like(out)
    for b in range(n):
        for co in range(cout):
            for i in range(oh):
                for j in range(ow):
                    patch = x[b, :, i:i + 3, j:j + 3]
                    naive[b, co, i, j] = (patch * layer.W[co]).sum() + layer.b[co]
    np.testing.assert_allclose(out, naive, atol=1e-12)


def test_relu_clips_negatives():
    out = ReLU().forward(np.array([[-1.0, 0.0, 2.0]]))
    np.testing.assert_array_equal(out, [[0.0, 0.0, 2.0]])


def test_flatten_shape():
    out = Flatten().forward(np.zeros((4, 2, 3, 3)))
    assert out.shape == (4, 18)


def test_has_params():
    gen = np.random.default_rng(0)
    assert has_params(Dense.init(2, 2, gen))
    assert has_params(Conv2d.init(1, 1, 2, gen))
    assert not has_params(ReLU())
    assert not has_params(Flatten())


def test_filters_round_trip():
    gen = np.random.default_rng(1)
    layer = Dense.init(3, 2, gen)
    f = layer.filters().copy()
    layer.set_filters(f * 2)
    np.testing.assert_allclose(layer.filters(), f * 2)
