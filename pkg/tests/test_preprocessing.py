import numpy as np
import pytest

from wmlab.attacks.preprocessing import preprocess, preprocess_batch
from wmlab.errors import ConfigError


def _img(values):
    return np.asarray(values, dtype=np.float64)[None]


def test_flip_mirrors_left_right():
    img = _img([[0.0, 0.25, 1.0]])
    out = preprocess(img, "flip")
    np.testing.assert_array_equal(out, _img([[1.0, 0.25, 0.0]]))


def test_flip_is_involution():
    img = np.random.default_rng(0).uniform(size=(1, 10, 10))
    twice = preprocess(preprocess(img, "flip"), "flip")
    np.testing.assert_array_equal(twice, img)


def test_quantize_one_bit_exact():
    assert preprocess(_img([[0.3]]), "quantize", {"bits": 1})[0, 0, 0] == 0.25
    assert preprocess(_img([[0.8]]), "quantize", {"bits": 1})[0, 0, 0] == 0.75


def test_quantize_two_bits_levels():
    xs = _img([[0.0, 0.3, 0.6, 1.0]])
    out = preprocess(xs, "quantize", {"bits": 2})
    np.testing.assert_allclose(out[0, 0], [0.125, 0.375, 0.625, 0.875])


def test_quantize_stays_in_unit_interval():
    img = np.random.default_rng(1).uniform(size=(1, 10, 10))
    for bits in (1, 2, 4, 8):
        out = preprocess(img, "quantize", {"bits": bits})
        assert out.min() >= 0.0 and out.max() <= 1.0
        assert len(np.unique(out)) <= 2 ** bits


def test_quantize_rejects_zero_bits():
    with pytest.raises(ConfigError):
        preprocess(np.zeros((1, 2, 2)), "quantize", {"bits": 0})


def test_squeeze_depth_one_rounds_to_halves():
    out = preprocess(_img([[0.3, 0.6, 0.76]]), "squeeze", {"depth": 1})
    np.testing.assert_allclose(out[0, 0], [0.5, 0.5, 1.0])


def test_squeeze_reduces_distinct_values():
    img = np.random.default_rng(2).uniform(size=(1, 10, 10))
    out = preprocess(img, "squeeze", {"depth": 2})
    grid = np.round(np.unique(out) * 4) / 4
    np.testing.assert_allclose(np.unique(out), grid, atol=1e-12)


def test_noise_deterministic_and_bounded():
    img = np.random.default_rng(3).uniform(0.2, 0.8, size=(1, 10, 10))
    a = preprocess(img, "noise", {"sigma": 0.1, "seed": 5})
    b = preprocess(img, "noise", {"sigma": 0.1, "seed": 5})
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0.0 and a.max() <= 1.0
    assert not np.array_equal(a, img)


def test_noise_rejects_negative_sigma():
    with pytest.raises(ConfigError):
        preprocess(np.zeros((1, 2, 2)), "noise", {"sigma": -1.0})


def test_smooth_mean_constant_image_fixed_point():
    img = np.full((1, 6, 6), 0.4)
    out = preprocess(img, "smooth", {"kernel": "mean"})
    np.testing.assert_allclose(out, img, atol=1e-12)


def test_smooth_mean_center_value():
    img = np.zeros((1, 5, 5))
    img[0, 2, 2] = 0.9
    out = preprocess(img, "smooth", {"kernel": "mean"})
    assert abs(out[0, 2, 2] - 0.1) < 1e-12


def test_smooth_median_kills_salt():
    img = np.zeros((1, 5, 5))
    img[0, 2, 2] = 1.0
    out = preprocess(img, "smooth", {"kernel": "median"})
    assert out[0, 2, 2] == 0.0


def test_smooth_gaussian_keeps_shape_and_range():
    img = np.random.default_rng(4).uniform(size=(1, 10, 10))
    out = preprocess(img, "smooth", {"kernel": "gaussian"})
    assert out.shape == img.shape
    assert out.min() >= 0.0 and out.max() <= 1.0
    assert not np.array_equal(out, img)


def test_preprocess_rejects_unknown_method():
    with pytest.raises(ConfigError):
        preprocess(np.zeros((1, 3, 3)), "sharpen")


def test_preprocess_batch_matches_per_image():
    gen = np.random.default_rng(5)
    batch = gen.uniform(size=(4, 1, 10, 10))
    out = preprocess_batch(batch, "quantize", {"bits": 2})
    for i in range(4):
        np.testing.assert_array_equal(out[i],
                                      preprocess(batch[i], "quantize",
                                                 {"bits": 2}))
