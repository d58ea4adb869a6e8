import numpy as np
import pytest

from wmlab.data import Dataset, generate_task
from wmlab.errors import ConfigError, InputError
from wmlab.nn.functional import one_hot, softmax
from wmlab.nn.layers import Dense, Flatten
from wmlab.nn.model import Model, accuracy, build_model
from wmlab.nn.train import EarlyStopConfig, TrainConfig, _EarlyStopper, fit, train


def _tiny_data(n=8, seed=0):
    gen = np.random.default_rng(seed)
    images = gen.uniform(0, 1, size=(n, 1, 2, 2))
    labels = one_hot(gen.integers(0, 2, size=n), 2)
    return Dataset(images, labels, 2, seed)


def _tiny_model(seed=0):
    return build_model("dense_h32", 2, seed, input_shape=(1, 2, 2))


def test_zero_learning_rate_keeps_params():
    model = _tiny_model()
    out = train(model, _tiny_data(),
                TrainConfig(learning_rate=0.0, epochs=5, batch_size=4))
    assert out.params_equal(model)
    assert out is not model


def test_zero_epochs_keeps_params():
    model = _tiny_model()
    out = train(model, _tiny_data(), TrainConfig(learning_rate=0.5, epochs=0))
    assert out.params_equal(model)


def test_single_sgd_step_matches_hand_gradient():
    w = np.array([[0.3, -0.2], [0.1, 0.4]])
    b = np.array([0.05, -0.05])
    model = Model([Flatten(), Dense(w.copy(), b.copy())], 2, (1, 1, 2), "hand")
    x = np.array([[[[0.6, -0.3]]]])
    y = one_hot(np.array([1]), 2)
    lr = 0.2
    fit(model, x, y, TrainConfig(learning_rate=lr, epochs=1, batch_size=1, seed=0))
    probs = softmax(x.reshape(1, 2) @ w.T + b)
    grad_logits = probs - y
    expect_w = w - lr * grad_logits.T @ x.reshape(1, 2)
    expect_b = b - lr * grad_logits[0]
    np.testing.assert_allclose(model.layers[1].W, expect_w, atol=1e-12)
    np.testing.assert_allclose(model.layers[1].b, expect_b, atol=1e-12)


def test_training_reaches_high_accuracy():
    train_data, _ = generate_task(seed=2, class_count=4, train_per_class=50,
                                  test_per_class=10)
    model = build_model("dense_h32", 4, 6, input_shape=(1, 10, 10))
    out = train(model, train_data,
                TrainConfig(learning_rate=0.1, epochs=30, batch_size=16, seed=3))
    assert accuracy(out, train_data) >= 0.95


def test_training_deterministic():
    data = _tiny_data(16, seed=4)
    cfg = TrainConfig(learning_rate=0.1, epochs=10, batch_size=4, seed=12)
    a = train(_tiny_model(1), data, cfg)
    b = train(_tiny_model(1), data, cfg)
    assert a.params_equal(b)
    c = train(_tiny_model(1), data,
              TrainConfig(learning_rate=0.1, epochs=10, batch_size=4, seed=13))
    assert not a.params_equal(c)


def test_weight_decay_shrinks_weights():
    data = _tiny_data(16, seed=5)
    plain = train(_tiny_model(2), data,
                  TrainConfig(learning_rate=0.1, epochs=10, batch_size=8, seed=1))
    decayed = train(_tiny_model(2), data,
                    TrainConfig(learning_rate=0.1, epochs=10, batch_size=8,
                                weight_decay=0.5, seed=1))
    norm = lambda m: sum(float(np.abs(m.layers[i].W).sum())
                         for i in m.param_layers())
    assert norm(decayed) < norm(plain)


def test_empty_dataset_rejected():
    with pytest.raises(InputError):
        fit(_tiny_model(), np.zeros((0, 1, 2, 2)), np.zeros((0, 2)),
            TrainConfig(epochs=1))


def test_unlabeled_data_rejected():
    data = _tiny_data()
    data.labels = None
    with pytest.raises(InputError):
        train(_tiny_model(), data, TrainConfig(epochs=1))


def test_train_rejects_non_task_monitor():
    cfg = TrainConfig(epochs=1, early_stop=EarlyStopConfig(
        monitored_loss="watermark", patience=1))
    with pytest.raises(ConfigError):
        train(_tiny_model(), _tiny_data(), cfg)


def test_fit_requires_monitor_for_watermark_loss():
    cfg = TrainConfig(epochs=1, early_stop=EarlyStopConfig(
        monitored_loss="watermark", patience=1))
    data = _tiny_data()
    with pytest.raises(ConfigError):
        fit(_tiny_model(), data.images, data.labels, cfg)


def test_early_stopper_counts_consecutive_misses():
    stopper = _EarlyStopper(EarlyStopConfig(patience=2))
    assert not stopper.check(1.0)
    assert not stopper.check(0.5)
    assert not stopper.check(0.6)
    assert stopper.check(0.7)
    assert stopper.stopped


def test_early_stopper_resets_on_improvement():
    stopper = _EarlyStopper(EarlyStopConfig(patience=3))
    values = [1.0, 1.1, 1.2, 0.9, 1.0, 1.1, 1.2]
    stops = [stopper.check(v) for v in values]
    assert stops == [False, False, False, False, False, False, True]


def test_early_stopping_halts_training():
    # constant monitor never improves, so training stops after patience checks
    calls = []

    def monitor(model):
        calls.append(1)
        return 1.0

    data = _tiny_data(16, seed=6)
    cfg = TrainConfig(learning_rate=0.05, epochs=50, batch_size=8, seed=2,
                      early_stop=EarlyStopConfig(monitored_loss="watermark",
                                                 patience=3))
    model = fit(_tiny_model(3), data.images, data.labels, cfg, monitor=monitor)
    # first check records the best; patience misses follow; no further checks
    assert len(calls) == 4
    assert len(model.loss_history) == 4


def test_max_batches_caps_work():
    data = _tiny_data(16, seed=7)
    model = _tiny_model(4)
    before = model.clone()
    fit(model, data.images, data.labels,
        TrainConfig(learning_rate=0.1, epochs=10, batch_size=4, seed=0),
        max_batches=1)
    changed = sum(int(not np.array_equal(model.layers[i].W, before.layers[i].W))
                  for i in model.param_layers())
    assert changed > 0
    assert len(model.loss_history) == 1


def test_frozen_layers_stay_fixed():
    data = _tiny_data(16, seed=8)
    model = _tiny_model(5)
    first = model.param_layers()[0]
    frozen_w = model.layers[first].W.copy()
    fit(model, data.images, data.labels,
        TrainConfig(learning_rate=0.1, epochs=5, batch_size=8, seed=0),
        frozen_layers=(first,))
    np.testing.assert_array_equal(model.layers[first].W, frozen_w)
    last = model.param_layers()[-1]
    assert not np.array_equal(model.layers[last].W,
                              build_model("dense_h32", 2, 5,
                                          input_shape=(1, 2, 2)).layers[last].W)


def test_periodic_hook_runs_every_period():
    data = _tiny_data(16, seed=9)
    ticks = []
    fit(_tiny_model(6), data.images, data.labels,
        TrainConfig(learning_rate=0.05, epochs=2, batch_size=4, seed=0),
        periodic=(2, lambda m: ticks.append(1)))
    # 4 batches per epoch, 2 epochs, hook every 2 batches
    assert len(ticks) == 4


def test_scaled_config():
    cfg = TrainConfig(epochs=10)
    assert cfg.scaled(0.5).epochs == 5
    assert cfg.scaled(0.01).epochs == 1
    assert TrainConfig(epochs=0).scaled(2.0).epochs == 0


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=-0.1)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=-1)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        EarlyStopConfig(patience=0)
    with pytest.raises(ConfigError):
        EarlyStopConfig(monitored_loss="validation")
