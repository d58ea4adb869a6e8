import json

import numpy as np
import pytest

from wmlab.errors import ConfigError
from wmlab.nn.io import load_model, model_from_json, model_to_json, save_model
from wmlab.nn.model import build_model


@pytest.mark.parametrize("arch", ["dense_h32", "dense_h48x2", "conv_c6"])
def test_round_trip_bit_exact(arch):
    model = build_model(arch, 4, 17, input_shape=(1, 10, 10))
    # denormals and odd values must survive the trip untouched
    first = model.param_layers()[0]
    model.layers[first].W.flat[0] = 5e-324
    model.layers[first].W.flat[1] = -0.1 + 0.2  # not exactly 0.1
    back = model_from_json(model_to_json(model))
    assert back.params_equal(model)
    assert back.architecture == model.architecture
    assert back.class_count == model.class_count
    x = np.random.default_rng(0).uniform(size=(3,) + model.input_shape)
    np.testing.assert_array_equal(back.forward(x), model.forward(x))


def test_json_is_versioned():
    doc = json.loads(model_to_json(build_model("dense_h32", 4, 1,
                                               input_shape=(1, 10, 10))))
    assert doc["format"] == "wmlab-model"
    assert doc["version"] == 1


def test_rejects_wrong_format():
    with pytest.raises(ConfigError):
        model_from_json(json.dumps({"format": "other", "version": 1}))


def test_rejects_wrong_version():
    model = build_model("dense_h32", 4, 1, input_shape=(1, 10, 10))
    doc = json.loads(model_to_json(model))
    doc["version"] = 99
    with pytest.raises(ConfigError):
        model_from_json(json.dumps(doc))


def test_save_and_load_file(tmp_path):
    model = build_model("dense_h64", 4, 23, input_shape=(1, 10, 10))
    path = tmp_path / "model.json"
    save_model(model, path)
    assert load_model(path).params_equal(model)
