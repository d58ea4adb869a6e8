"""Input preprocessing attacks: transform every query before the model.

All methods map [0,1] images to [0,1] images of the same shape.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError, DimensionError
from ..rng import derive_seed, rng

PREPROCESS_METHODS = ("flip", "noise", "quantize", "smooth", "squeeze")


def _check(images: np.ndarray) -> np.ndarray:
    img = np.asarray(images, dtype=np.float64)
    if img.ndim != 4:
        raise DimensionError("preprocessing expects [n, c, h, w] batches")
    return img


def flip(images: np.ndarray) -> np.ndarray:
    """Mirror each image left-to-right."""
    return _check(images)[:, :, :, ::-1].copy()


def noise(images: np.ndarray, sigma: float, seed: int = 0) -> np.ndarray:
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    img = _check(images)
    gen = rng(derive_seed(seed, "input-noise"))
    return np.clip(img + gen.normal(0.0, sigma, size=img.shape), 0.0, 1.0)


def quantize(images: np.ndarray, bits: int) -> np.ndarray:
    """Map every pixel to the mean of its interval among 2^bits equal bins."""
    if bits < 1:
        raise ConfigError("bits must be >= 1")
    img = _check(images)
    levels = 2 ** bits
    idx = np.minimum((img * levels).astype(np.int64), levels - 1)
    return (idx + 0.5) / levels


def squeeze(images: np.ndarray, depth: int) -> np.ndarray:
    """Round every pixel to the nearest multiple of 0.5^depth."""
    if depth < 1:
        raise ConfigError("depth must be >= 1")
    img = _check(images)
    step = 0.5 ** depth
    return np.clip(np.round(img / step) * step, 0.0, 1.0)


def _window3(img: np.ndarray) -> np.ndarray:
    padded = np.pad(img, ((0, 0), (0, 0), (1, 1), (1, 1)), mode="reflect")
    return sliding_window_view(padded, (3, 3), axis=(2, 3))


def smooth(images: np.ndarray, kernel: str = "gaussian", sigma: float = 0.3) -> np.ndarray:
    """3x3 mean/median/Gaussian filter with reflect padding."""
    img = _check(images)
    win = _window3(img)
    if kernel == "mean":
        return win.mean(axis=(-2, -1))
    if kernel == "median":
        return np.median(win, axis=(-2, -1))
    if kernel == "gaussian":
        if sigma <= 0:
            raise ConfigError("gaussian sigma must be > 0")
        ax = np.array([-1.0, 0.0, 1.0])
        g = np.exp(-(ax ** 2) / (2 * sigma ** 2))
        k = np.outer(g, g)
        k /= k.sum()
        return np.einsum("nchwij,ij->nchw", win, k)
    raise ConfigError("kernel must be one of mean/median/gaussian")


def preprocess(image: np.ndarray, method: str, params: dict | None = None) -> np.ndarray:
    """Apply one named preprocessing method to a single [c,h,w] image."""
    img = np.asarray(image, dtype=np.float64)
    squeeze_out = img.ndim == 3
    batch = img[None] if squeeze_out else img
    out = preprocess_batch(batch, method, params or {})
    return out[0] if squeeze_out else out


def preprocess_batch(images: np.ndarray, method: str, params: dict) -> np.ndarray:
    if method == "flip":
        return flip(images)
    if method == "noise":
        return noise(images, float(params.get("sigma", 0.05)),
                     int(params.get("seed", 0)))
    if method == "quantize":
        return quantize(images, int(params.get("bits", 4)))
    if method == "smooth":
        return smooth(images, str(params.get("kernel", "gaussian")),
                      float(params.get("sigma", 0.3)))
    if method == "squeeze":
        return squeeze(images, int(params.get("depth", 2)))
    raise ConfigError(f"unknown preprocessing method '{method}'")
