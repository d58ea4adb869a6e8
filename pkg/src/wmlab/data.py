"""Procedural image tasks: tiny labeled pattern datasets plus unrelated and
transfer-domain generators, dataset splitting and relabeling utilities.

Images are [n, 1, H, W] float64 in [0, 1]; labels are one-hot (or soft) rows.
Class patterns are deterministic per (seed, class): with noise_std=0 every
sample of a class is pixel-identical.
"""
from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, InputError
from .nn.functional import one_hot, softmax
from .rng import derive_seed, rng


@dataclass
class Dataset:
    images: np.ndarray
    labels: np.ndarray | None
    class_count: int
    seed: int = 0

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        if self.images.ndim != 4:
            raise DimensionError(f"images must be [n, c, h, w], got {self.images.shape}")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise InputError("pixel values must lie in [0, 1]")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.float64)
            if self.labels.shape != (len(self.images), self.class_count):
                raise DimensionError("labels must be [n, class_count]")
            if len(self.labels) and not np.allclose(self.labels.sum(axis=1), 1.0, atol=1e-9):
                raise InputError("label rows must sum to one")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        labels = self.labels[idx] if self.labels is not None else None
        return Dataset(self.images[idx], labels, self.class_count, self.seed)

    def without_labels(self) -> "Dataset":
        return Dataset(self.images, None, self.class_count, self.seed)

    def label_indices(self) -> np.ndarray:
        if self.labels is None:
            raise InputError("dataset is unlabeled")
        return np.argmax(self.labels, axis=1)


def merge(a: Dataset, b: Dataset) -> Dataset:
    if (a.labels is None) != (b.labels is None):
        raise InputError("cannot merge labeled with unlabeled data")
    labels = None if a.labels is None else np.concatenate([a.labels, b.labels])
    return Dataset(np.concatenate([a.images, b.images]), labels, a.class_count, a.seed)


# -- pattern rendering ---------------------------------------------------

_BG = 0.08
_FG = 0.85


def _canvas(size: int) -> np.ndarray:
    return np.full((size, size), _BG)


def _hbar(size, variant):
    img = _canvas(size)
    r = 3 + variant % (size - 5)
    img[r:r + 2, :] = _FG
    return img


def _vbar(size, variant):
    img = _canvas(size)
    c = 3 + variant % (size - 5)
    img[:, c:c + 2] = _FG
    return img


def _blob(size, variant):
    # corner bump; the top-left corner is reserved for trigger masks
    corners = [(size - 3, size - 3), (size - 3, 2), (2, size - 3)]
    cy, cx = corners[variant % 3]
    yy, xx = np.mgrid[0:size, 0:size]
    bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * 1.6 ** 2))
    return np.clip(_canvas(size) + _FG * bump, 0.0, 1.0)


def _checker(size, variant):
    yy, xx = np.mgrid[0:size, 0:size]
    phase = variant % 2
    img = _canvas(size)
    img[((yy // 2 + xx // 2) % 2) == phase] = 0.6
    return img


def _diag(size, variant):
    img = _canvas(size)
    yy, xx = np.mgrid[0:size, 0:size]
    d = (yy - xx) if variant % 2 == 0 else (yy + xx - size + 1)
    img[np.abs(d) <= 1] = _FG
    return img


def _cross(size, variant):
    img = _canvas(size)
    mid = size // 2 + (variant % 2) - 1
    img[mid - 1:mid + 1, :] = _FG
    img[:, mid - 1:mid + 1] = _FG
    return img


def _hpair(size, variant):
    img = _canvas(size)
    r = 2 + variant % 2
    img[r:r + 1, :] = _FG
    img[r + 4:r + 5, :] = _FG
    return img


def _xshape(size, variant):
    img = _canvas(size)
    yy, xx = np.mgrid[0:size, 0:size]
    img[np.abs(yy - xx) <= variant % 2] = _FG
    img[np.abs(yy + xx - size + 1) <= variant % 2] = _FG
    return img


def _frame(size, variant):
    img = _canvas(size)
    a = 2 + variant % 2
    b = size - 1 - a
    img[a, a:b + 1] = _FG
    img[b, a:b + 1] = _FG
    img[a:b + 1, a] = _FG
    img[a:b + 1, b] = _FG
    return img


def _split_half(size, variant):
    img = _canvas(size)
    if variant % 2 == 0:
        img[size // 2:, :] = 0.55
    else:
        img[:, size // 2:] = 0.55
    return img


_TASK_PATTERNS = [_hbar, _vbar, _blob, _checker, _diag, _cross, _hpair,
                  _xshape, _frame, _split_half]


def _disc(size, variant):
    yy, xx = np.mgrid[0:size, 0:size]
    cy = size / 2 - 0.5 + (variant % 2)
    cx = size / 2 - 0.5 - (variant % 2)
    img = _canvas(size)
    img[((yy - cy) ** 2 + (xx - cx) ** 2) <= 2.5 ** 2] = _FG
    return img


def _ring(size, variant):
    yy, xx = np.mgrid[0:size, 0:size]
    c = size / 2 - 0.5
    r2 = (yy - c) ** 2 + (xx - c) ** 2
    img = _canvas(size)
    img[(r2 <= (3.5 + variant % 2) ** 2) & (r2 >= 2.0 ** 2)] = _FG
    return img


def _hgrad(size, variant):
    g = np.linspace(0.05, 0.9, size)
    if variant % 2:
        g = g[::-1]
    return np.tile(g, (size, 1))


def _vgrad(size, variant):
    return _hgrad(size, variant).T


def _block(size, variant):
    img = _canvas(size)
    r = 2 + variant % 3
    img[r:r + 4, size - 6:size - 2] = _FG
    return img


def _wide_anti(size, variant):
    img = _canvas(size)
    yy, xx = np.mgrid[0:size, 0:size]
    img[np.abs(yy + xx - size + 1) <= 2 + variant % 2] = 0.7
    return img


_TRANSFER_PATTERNS = [_disc, _ring, _hgrad, _vgrad, _block, _wide_anti]


def _render_classes(patterns, class_count: int, seed: int, size: int) -> np.ndarray:
    if class_count > len(patterns):
        raise ConfigError(f"at most {len(patterns)} classes supported")
    gen = rng(derive_seed(seed, "class-patterns"))
    order = gen.permutation(len(patterns))[:class_count]
    variants = gen.integers(0, 6, size=class_count)
    return np.stack([patterns[order[c]](size, int(variants[c])) for c in range(class_count)])


def _noisy_samples(base: np.ndarray, n: int, noise_std: float,
                   gen: np.random.Generator) -> np.ndarray:
    out = np.repeat(base[None, :, :], n, axis=0)
    if noise_std > 0:
        out = out + gen.normal(0.0, noise_std, size=out.shape)
    return np.clip(out, 0.0, 1.0)


def generate_task(seed: int, class_count: int = 4, train_per_class: int = 60,
                  test_per_class: int = 40, noise_std: float = 0.12,
                  image_size: int = 10) -> tuple[Dataset, Dataset]:
    """Labeled train/test datasets of noisy deterministic class patterns."""
    if class_count < 2:
        raise ConfigError("need at least two classes")
    if train_per_class < 1 or test_per_class < 1:
        raise ConfigError("need at least one sample per class per split")
    bases = _render_classes(_TASK_PATTERNS, class_count, seed, image_size)
    splits = []
    for name, per_class in (("train", train_per_class), ("test", test_per_class)):
        images, labels = [], []
        for c in range(class_count):
            gen = rng(derive_seed(seed, "task", name, c))
            images.append(_noisy_samples(bases[c], per_class, noise_std, gen))
            labels.extend([c] * per_class)
        imgs = np.concatenate(images)[:, None, :, :]
        splits.append(Dataset(imgs, one_hot(np.array(labels), class_count),
                              class_count, seed))
    return splits[0], splits[1]


def generate_unrelated(seed: int, count: int, image_size: int = 10,
                       class_count: int = 0, style: str = "strokes") -> Dataset:
    """Unlabeled out-of-distribution images.

    style="strokes" draws random line segments; style="tiles" renders random
    low-resolution intensity tiles (abstract textures).
    """
    if count < 1:
        raise ConfigError("count must be >= 1")
    if style not in ("strokes", "tiles"):
        raise ConfigError("style must be 'strokes' or 'tiles'")
    gen = rng(derive_seed(seed, "unrelated", style))
    if style == "tiles":
        coarse = gen.random(size=(count, 4, 4))
        reps = int(np.ceil(image_size / 4))
        images = np.repeat(np.repeat(coarse, reps, axis=1), reps, axis=2)
        images = images[:, :image_size, :image_size]
        return Dataset(images[:, None, :, :], None, class_count, seed)
    images = np.full((count, image_size, image_size), 0.05)
    for i in range(count):
        for _ in range(3):
            y0, x0, y1, x1 = gen.integers(0, image_size, size=4)
            shade = 0.55 + 0.45 * gen.random()
            steps = int(max(abs(int(y1) - int(y0)), abs(int(x1) - int(x0)))) + 1
            ys = np.round(np.linspace(y0, y1, steps)).astype(int)
            xs = np.round(np.linspace(x0, x1, steps)).astype(int)
            images[i, ys, xs] = shade
    return Dataset(images[:, None, :, :], None, class_count, seed)


def generate_transfer(seed: int, class_count: int = 6, per_class: int = 50,
                      noise_std: float = 0.1, image_size: int = 10) -> Dataset:
    """Labeled dataset from a different pattern family (transfer domain)."""
    bases = _render_classes(_TRANSFER_PATTERNS, class_count, seed, image_size)
    images, labels = [], []
    for c in range(class_count):
        gen = rng(derive_seed(seed, "transfer", c))
        images.append(_noisy_samples(bases[c], per_class, noise_std, gen))
        labels.extend([c] * per_class)
    imgs = np.concatenate(images)[:, None, :, :]
    return Dataset(imgs, one_hot(np.array(labels), class_count), class_count, seed)


# -- splitting and relabeling ---------------------------------------------

SPLIT_MODES = ("modification", "extraction")


def split(data: Dataset, mode: str, seed: int) -> tuple[Dataset, Dataset]:
    """Defender/attacker views of the training data.

    modification: defender gets a labeled two-thirds split, the attacker the
    remaining labeled third (attacks that only assume domain access discard
    the labels themselves). extraction: defender keeps the same two thirds;
    the attacker sees every training image, label-stripped.
    """
    if mode not in SPLIT_MODES:
        raise ConfigError(f"split mode must be one of {SPLIT_MODES}")
    if not data.labeled:
        raise InputError("split expects the labeled training dataset")
    n = len(data)
    if n < 3:
        raise InputError("need at least three samples to split into thirds")
    order = rng(derive_seed(seed, "split")).permutation(n)
    cut = (2 * n) // 3
    defender = data.subset(np.sort(order[:cut]))
    if mode == "modification":
        attacker = data.subset(np.sort(order[cut:]))
    else:
        attacker = data.without_labels()
    return defender, attacker


def relabel(data: Dataset, model, kind: str = "hard") -> Dataset:
    """Replace labels with the model's predictions (hard one-hot or soft)."""
    if kind not in ("hard", "soft"):
        raise ConfigError("relabel kind must be 'hard' or 'soft'")
    logits = model.forward(data.images)
    if kind == "hard":
        labels = one_hot(np.argmax(logits, axis=1), model.class_count)
    else:
        labels = softmax(logits)
    return Dataset(data.images, labels, model.class_count, data.seed)


# -- augmentation ----------------------------------------------------------

def random_affine(image: np.ndarray, seed: int) -> np.ndarray:
    """One seed-determined label-preserving transform.

    Either a light pixel jitter or a half-pixel bilinear translation. On a
    10x10 canvas a full 1-px shift moves 10% of the image and can flip the
    class (patterns may sit flush against a border), so the affine part of
    the family stays sub-pixel.
    """
    img = np.asarray(image, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[None]
    if img.ndim != 3:
        raise DimensionError("random_affine expects [c, h, w] or [h, w]")
    gen = rng(derive_seed(seed, "affine"))
    choice = int(gen.integers(0, 6))
    if choice == 0:
        out = np.clip(img + gen.normal(0.0, 0.05, size=img.shape), 0.0, 1.0)
    elif choice == 1:
        out = np.clip(img + gen.normal(0.0, 0.10, size=img.shape), 0.0, 1.0)
    else:
        dy, dx = ((-0.5, 0.0), (0.5, 0.0), (0.0, -0.5), (0.0, 0.5))[choice - 2]
        out = subpixel_shift(img, dy, dx)
    return out[0] if squeeze else out


def subpixel_shift(img: np.ndarray, dy: float, dx: float) -> np.ndarray:
    """Translate by a fractional pixel offset, bilinear with edge clamping."""
    _, h, w = img.shape
    ys = np.arange(h, dtype=np.float64)[:, None] - dy
    xs = np.arange(w, dtype=np.float64)[None, :] - dx
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)
    wx = np.clip(xs - x0, 0.0, 1.0)
    return ((1 - wy) * (1 - wx) * img[:, y0, x0]
            + (1 - wy) * wx * img[:, y0, x1]
            + wy * (1 - wx) * img[:, y1, x0]
            + wy * wx * img[:, y1, x1])


def shift_edge(img: np.ndarray, direction: int) -> np.ndarray:
    """Shift by one pixel (0=up, 1=down, 2=left, 3=right), edge padding."""
    out = img.copy()
    if direction == 0:
        out[:, :-1, :] = img[:, 1:, :]
        out[:, -1, :] = img[:, -1, :]
    elif direction == 1:
        out[:, 1:, :] = img[:, :-1, :]
        out[:, 0, :] = img[:, 0, :]
    elif direction == 2:
        out[:, :, :-1] = img[:, :, 1:]
        out[:, :, -1] = img[:, :, -1]
    else:
        out[:, :, 1:] = img[:, :, :-1]
        out[:, :, 0] = img[:, :, 0]
    return out


def crop_resize(img: np.ndarray) -> np.ndarray:
    """Drop the 1-px border and stretch back via nearest-neighbour indexing."""
    _, h, w = img.shape
    if h < 3 or w < 3:
        raise DimensionError("image too small to crop")
    inner = img[:, 1:h - 1, 1:w - 1]
    ys = np.round(np.linspace(0, h - 3, h)).astype(int)
    xs = np.round(np.linspace(0, w - 3, w)).astype(int)
    return inner[:, ys][:, :, xs].copy()


# -- serialization ----------------------------------------------------------

_FORMAT = "wmlab-dataset"
_VERSION = 1


def dataset_to_json(data: Dataset) -> str:
    doc = {
        "format": _FORMAT,
        "version": _VERSION,
        "shape": list(data.images.shape),
        "class_count": data.class_count,
        "seed": data.seed,
        "images": base64.b64encode(np.ascontiguousarray(data.images).tobytes()).decode(),
        "labels": (None if data.labels is None else
                   base64.b64encode(np.ascontiguousarray(data.labels).tobytes()).decode()),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def dataset_from_json(text: str) -> Dataset:
    doc = json.loads(text)
    if doc.get("format") != _FORMAT or doc.get("version") != _VERSION:
        raise ConfigError("not a supported dataset document")
    shape = tuple(doc["shape"])
    images = np.frombuffer(base64.b64decode(doc["images"]), dtype=np.float64).reshape(shape).copy()
    labels = None
    if doc["labels"] is not None:
        labels = np.frombuffer(base64.b64decode(doc["labels"]), dtype=np.float64)
        labels = labels.reshape(shape[0], doc["class_count"]).copy()
    return Dataset(images, labels, doc["class_count"], doc["seed"])


def save_dataset(data: Dataset, path: str | Path) -> None:
    Path(path).write_text(dataset_to_json(data) + "\n", encoding="ascii")


def load_dataset(path: str | Path) -> Dataset:
    return dataset_from_json(Path(path).read_text(encoding="ascii"))
