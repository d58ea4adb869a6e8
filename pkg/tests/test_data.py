import numpy as np
import pytest

from wmlab.data import (Dataset, crop_resize, dataset_from_json,
                        dataset_to_json, generate_task, generate_transfer,
                        generate_unrelated, load_dataset, merge, random_affine,
                        relabel, save_dataset, shift_edge, split,
                        subpixel_shift)
from wmlab.errors import ConfigError, DimensionError, InputError
from wmlab.nn.model import accuracy, build_model
from wmlab.nn.train import TrainConfig, train


def test_generate_task_shapes_and_ranges():
    train_data, test_data = generate_task(seed=11, class_count=4,
                                          train_per_class=6, test_per_class=3)
    assert train_data.images.shape == (24, 1, 10, 10)
    assert test_data.images.shape == (12, 1, 10, 10)
    for data in (train_data, test_data):
        assert data.images.dtype == np.float64
        assert data.images.min() >= 0.0 and data.images.max() <= 1.0
        assert data.labels.shape == (len(data.images), 4)
        np.testing.assert_allclose(data.labels.sum(axis=1), 1.0)
    counts = train_data.labels.sum(axis=0)
    np.testing.assert_array_equal(counts, [6, 6, 6, 6])


def test_generate_task_deterministic():
    a, _ = generate_task(seed=5, train_per_class=4, test_per_class=2)
    b, _ = generate_task(seed=5, train_per_class=4, test_per_class=2)
    np.testing.assert_array_equal(a.images, b.images)
    c, _ = generate_task(seed=6, train_per_class=4, test_per_class=2)
    assert not np.array_equal(a.images, c.images)


def test_generate_task_is_separable():
    train_data, test_data = generate_task(seed=11)
    model = build_model("dense_h32", 4, 2, input_shape=(1, 10, 10))
    model = train(model, train_data,
                  TrainConfig(learning_rate=0.1, epochs=40, batch_size=16, seed=1))
    assert accuracy(model, test_data) >= 0.95


def test_generate_task_rejects_bad_args():
    with pytest.raises(ConfigError):
        generate_task(seed=0, class_count=1)
    with pytest.raises(ConfigError):
        generate_task(seed=0, train_per_class=0)


def test_generate_unrelated_styles_differ():
    strokes = generate_unrelated(seed=3, count=10, style="strokes")
    tiles = generate_unrelated(seed=3, count=10, style="tiles")
    assert strokes.images.shape == (10, 1, 10, 10)
    assert not np.array_equal(strokes.images, tiles.images)
    again = generate_unrelated(seed=3, count=10, style="strokes")
    np.testing.assert_array_equal(strokes.images, again.images)


def test_generate_transfer_shapes():
    data = generate_transfer(seed=9, class_count=6, per_class=5)
    assert data.images.shape == (30, 1, 10, 10)
    assert data.class_count == 6
    assert data.labels.shape == (30, 6)


def test_dataset_validation():
    with pytest.raises(DimensionError):
        Dataset(np.zeros((2, 10, 10)), None, 4, 0)
    with pytest.raises(InputError):
        Dataset(np.full((2, 1, 10, 10), 2.0), None, 4, 0)
    bad_labels = np.array([[0.5, 0.4], [1.0, 0.0]])
    with pytest.raises(InputError):
        Dataset(np.zeros((2, 1, 10, 10)), bad_labels, 2, 0)


def test_merge_concatenates():
    a, _ = generate_task(seed=1, train_per_class=2, test_per_class=1)
    b, _ = generate_task(seed=2, train_per_class=3, test_per_class=1)
    out = merge(a, b)
    assert len(out.images) == len(a.images) + len(b.images)
    np.testing.assert_array_equal(out.images[: len(a.images)], a.images)


def test_split_modification_keeps_labels_on_both_sides():
    data, _ = generate_task(seed=4, train_per_class=9, test_per_class=2)
    left, right = split(data, "modification", seed=0)
    assert len(left.images) + len(right.images) == len(data.images)
    assert len(left.images) == (2 * len(data.images)) // 3
    assert left.labels is not None and right.labels is not None


def test_split_extraction_strips_labels():
    data, _ = generate_task(seed=4, train_per_class=9, test_per_class=2)
    defender, attacker = split(data, "extraction", seed=0)
    assert len(defender.images) == (2 * len(data.images)) // 3
    assert defender.labels is not None
    assert len(attacker.images) == len(data.images)
    assert attacker.labels is None


def test_split_deterministic_and_disjoint():
    data, _ = generate_task(seed=4, train_per_class=6, test_per_class=2)
    a1, b1 = split(data, "modification", seed=5)
    a2, _ = split(data, "modification", seed=5)
    np.testing.assert_array_equal(a1.images, a2.images)
    joined = np.concatenate([a1.images, b1.images])
    assert {img.tobytes() for img in joined} == \
        {img.tobytes() for img in data.images}


def test_split_unknown_mode():
    data, _ = generate_task(seed=4, train_per_class=3, test_per_class=1)
    with pytest.raises(ConfigError):
        split(data, "bisect", seed=0)


def test_relabel_hard_matches_predictions(small_model, small_task):
    _, test_data = small_task
    out = relabel(test_data, small_model, "hard")
    want = small_model.predict_labels(test_data.images)
    np.testing.assert_array_equal(out.labels.argmax(axis=1), want)
    np.testing.assert_allclose(out.labels.sum(axis=1), 1.0)


def test_relabel_soft_matches_probs(small_model, small_task):
    _, test_data = small_task
    out = relabel(test_data, small_model, "soft")
    np.testing.assert_allclose(out.labels,
                               small_model.predict_probs(test_data.images),
                               atol=1e-12)


def test_subpixel_shift_exact_bilinear():
    img = np.zeros((1, 3, 3))
    img[0, 1, 1] = 1.0
    out = subpixel_shift(img, 0.0, 0.5)
    # mass moves half a pixel to the right
    assert abs(out[0, 1, 1] - 0.5) < 1e-12
    assert abs(out[0, 1, 2] - 0.5) < 1e-12
    assert abs(out[0, 1, 0] - 0.0) < 1e-12
    assert abs(out.sum() - 1.0) < 1e-12


def test_subpixel_shift_zero_is_identity():
    gen = np.random.default_rng(0)
    img = gen.uniform(size=(1, 5, 5))
    np.testing.assert_allclose(subpixel_shift(img, 0.0, 0.0), img, atol=1e-12)


def test_random_affine_properties():
    gen = np.random.default_rng(1)
    img = gen.uniform(size=(1, 10, 10))
    for seed in range(12):
        out = random_affine(img, seed)
        assert out.shape == img.shape
        assert out.min() >= 0.0 and out.max() <= 1.0
        np.testing.assert_array_equal(out, random_affine(img, seed))
    variants = {random_affine(img, s).tobytes() for s in range(12)}
    assert len(variants) > 1


def test_random_affine_2d_input():
    img = np.random.default_rng(2).uniform(size=(10, 10))
    out = random_affine(img, 3)
    assert out.shape == (10, 10)


def test_random_affine_rejects_bad_rank():
    with pytest.raises(DimensionError):
        random_affine(np.zeros((2, 1, 10, 10)), 0)


def test_random_affine_preserves_labels(small_model, small_task):
    # the whole point of the family: class identity survives the transform
    _, test_data = small_task
    images = test_data.images[:40]
    want = small_model.predict_labels(images)
    for seed in range(3):
        moved = np.stack([random_affine(img, seed * 997 + i)
                          for i, img in enumerate(images)])
        got = small_model.predict_labels(moved)
        assert (got == want).mean() >= 0.95


def test_shift_edge_directions():
    img = np.zeros((1, 3, 3))
    img[0, 1, 1] = 1.0
    up = shift_edge(img, 0)
    assert up[0, 0, 1] == 1.0
    down = shift_edge(img, 1)
    assert down[0, 2, 1] == 1.0
    left = shift_edge(img, 2)
    assert left[0, 1, 0] == 1.0
    right = shift_edge(img, 3)
    assert right[0, 1, 2] == 1.0


def test_crop_resize_shape_and_range():
    img = np.random.default_rng(3).uniform(size=(1, 10, 10))
    out = crop_resize(img)
    assert out.shape == (1, 10, 10)
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_dataset_json_round_trip():
    data, _ = generate_task(seed=8, train_per_class=3, test_per_class=1)
    back = dataset_from_json(dataset_to_json(data))
    np.testing.assert_array_equal(back.images, data.images)
    np.testing.assert_array_equal(back.labels, data.labels)
    assert back.class_count == data.class_count


def test_dataset_json_unlabeled():
    data, _ = generate_task(seed=8, train_per_class=3, test_per_class=1)
    _, stripped = split(data, "extraction", seed=0)
    back = dataset_from_json(dataset_to_json(stripped))
    assert back.labels is None
    np.testing.assert_array_equal(back.images, stripped.images)


def test_dataset_file_round_trip(tmp_path):
    data, _ = generate_task(seed=8, train_per_class=2, test_per_class=1)
    path = tmp_path / "data.json"
    save_dataset(data, path)
    back = load_dataset(path)
    np.testing.assert_array_equal(back.images, data.images)
