import numpy as np
import pytest

from wmlab.errors import ConfigError, DimensionError
from wmlab.nn.functional import one_hot, softmax
from wmlab.nn.layers import Dense, Flatten, ReLU
from wmlab.nn.model import (ARCHITECTURES, Model, accuracy, build_model,
                            hidden_activation_index)


def _dense_net(seed=0):
    gen = np.random.default_rng(seed)
    layers = [Flatten(), Dense.init(9, 6, gen), ReLU(), Dense.init(6, 3, gen)]
    return Model(layers, 3, (1, 3, 3), "test_net")


def test_forward_matches_hand_rolled_matmul():
    model = _dense_net(7)
    gen = np.random.default_rng(1)
    x = gen.uniform(0, 1, size=(4, 1, 3, 3))
    flat = x.reshape(4, -1)
    w1, b1 = model.layers[1].W, model.layers[1].b
    w2, b2 = model.layers[3].W, model.layers[3].b
    hidden = np.maximum(flat @ w1.T + b1, 0.0)
    expect = hidden @ w2.T + b2
    np.testing.assert_allclose(model.forward(x), expect, atol=1e-12)


def test_forward_identity_single_layer():
    model = Model([Flatten(), Dense(np.eye(2), np.zeros(2))], 2, (1, 1, 2), "id")
    out = model.forward(np.array([[[[1.0, 2.0]]]]))
    np.testing.assert_array_equal(out, [[1.0, 2.0]])


def test_forward_zero_weights():
    model = Model([Flatten(), Dense(np.zeros((3, 4)), np.zeros(3))], 3,
                  (1, 2, 2), "zero")
    out = model.forward(np.random.default_rng(0).uniform(size=(5, 1, 2, 2)))
    np.testing.assert_array_equal(out, np.zeros((5, 3)))


def test_forward_rejects_wrong_shape():
    model = _dense_net()
    with pytest.raises(DimensionError):
        model.forward(np.zeros((2, 1, 4, 4)))


def test_predict_labels_ties_take_lowest_index():
    model = Model([Flatten(), Dense(np.zeros((3, 4)), np.zeros(3))], 3,
                  (1, 2, 2), "zero")
    labels = model.predict_labels(np.zeros((2, 1, 2, 2)))
    np.testing.assert_array_equal(labels, [0, 0])


def test_predict_probs_is_softmax_of_logits():
    model = _dense_net(3)
    x = np.random.default_rng(2).uniform(size=(3, 1, 3, 3))
    np.testing.assert_allclose(model.predict_probs(x),
                               softmax(model.forward(x)), atol=1e-15)


def test_clone_is_deep_and_equal():
    model = _dense_net(5)
    copy = model.clone()
    assert model.params_equal(copy)
    copy.layers[1].W[0, 0] += 1.0
    assert not model.params_equal(copy)
    assert model is not copy


def test_param_layers_and_count():
    model = _dense_net()
    assert model.param_layers() == [1, 3]
    assert model.parameter_count() == 9 * 6 + 6 + 6 * 3 + 3


def test_hidden_permutation_invariance():
    # permuting hidden units together with the next layer's columns is a no-op
    for seed in range(5):
        model = _dense_net(40 + seed)
        x = np.random.default_rng(seed).uniform(size=(6, 1, 3, 3))
        base = model.forward(x)
        perm = np.random.default_rng(99 + seed).permutation(6)
        h = model.layers[1]
        nxt = model.layers[3]
        h.W = h.W[perm]
        h.b = h.b[perm]
        nxt.W = nxt.W[:, perm]
        np.testing.assert_allclose(model.forward(x), base, atol=1e-12)


def test_build_model_architectures():
    for arch in ARCHITECTURES:
        model = build_model(arch, 4, 11, input_shape=(1, 10, 10))
        out = model.forward(np.zeros((2, 1, 10, 10)))
        assert out.shape == (2, 4)
        assert model.architecture == arch


def test_build_model_deterministic():
    a = build_model("dense_h32", 4, 13, input_shape=(1, 10, 10))
    b = build_model("dense_h32", 4, 13, input_shape=(1, 10, 10))
    assert a.params_equal(b)
    c = build_model("dense_h32", 4, 14, input_shape=(1, 10, 10))
    assert not a.params_equal(c)


def test_build_model_unknown_architecture():
    with pytest.raises(ConfigError):
        build_model("resnet50", 4, 0, input_shape=(1, 10, 10))


def test_architectures_differ():
    x = np.random.default_rng(0).uniform(size=(2, 1, 10, 10))
    outs = [build_model(a, 4, 21, input_shape=(1, 10, 10)).forward(x)
            for a in ("dense_h32", "dense_h64", "dense_h48x2", "conv_c6")]
    for i in range(len(outs)):
        for j in range(i + 1, len(outs)):
            assert not np.allclose(outs[i], outs[j])


def test_accuracy_matches_per_sample_oracle(small_model, small_task):
    _, test_data = small_task
    predicted = small_model.predict_labels(test_data.images)
    truth = test_data.labels.argmax(axis=1)
    expect = float((predicted == truth).mean())
    assert accuracy(small_model, test_data) == expect


def test_accuracy_constant_predictor():
    model = Model([Flatten(), Dense(np.zeros((2, 4)), np.array([1.0, 0.0]))],
                  2, (1, 2, 2), "const")
    images = np.zeros((4, 1, 2, 2))

    class Data:
        pass

    data = Data()
    data.images = images
    data.labels = one_hot(np.array([0, 0, 0, 0]), 2)
    assert accuracy(model, data) == 1.0
    data.labels = one_hot(np.array([0, 0, 1, 1]), 2)
    assert accuracy(model, data) == 0.5


def test_forward_to_prefix_consistency():
    model = _dense_net(8)
    x = np.random.default_rng(3).uniform(size=(2, 1, 3, 3))
    upto = 2
    partial, caches = model.forward_to(upto, x)
    assert len(caches) == upto + 1
    full = partial
    for layer in model.layers[upto + 1:]:
        full = layer.forward(full)
    np.testing.assert_allclose(full, model.forward(x), atol=1e-12)


def test_hidden_activation_index():
    model = _dense_net()
    assert hidden_activation_index(model) == 2
    for arch in ARCHITECTURES:
        m = build_model(arch, 4, 1, input_shape=(1, 10, 10))
        idx = hidden_activation_index(m)
        assert isinstance(m.layers[idx], ReLU)
