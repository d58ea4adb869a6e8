"""Shared fixtures.

The desk lab and its full payoff matrix take seconds to build, so they are
session-scoped and shared by the integration and acceptance tests. Unit tests
build their own tiny models and datasets instead.
"""
from __future__ import annotations

import pytest

from wmlab.config import desk_config
from wmlab.data import generate_task
from wmlab.experiment import Lab, build_matrix
from wmlab.nn.model import build_model
from wmlab.nn.train import TrainConfig, train


@pytest.fixture(scope="session")
def small_task():
    # small but still separable: unit tests that need a trained classifier
    return generate_task(seed=3, class_count=4, train_per_class=20,
                         test_per_class=15, noise_std=0.12, image_size=10)


@pytest.fixture(scope="session")
def small_model(small_task):
    train_data, _ = small_task
    model = build_model("dense_h32", 4, 5, input_shape=(1, 10, 10))
    return train(model, train_data,
                 TrainConfig(learning_rate=0.1, epochs=25, batch_size=16, seed=9))


@pytest.fixture(scope="session")
def desk_lab(tmp_path_factory):
    cfg = desk_config(out_dir=str(tmp_path_factory.mktemp("desk")))
    return Lab(cfg)


@pytest.fixture(scope="session")
def desk_matrix(desk_lab):
    return build_matrix(desk_lab, jobs=4)
