"""Layer implementations with explicit forward/backward passes.

Layers are stateless with respect to activations: forward_cached returns the
cache needed by backward, so read-only inference can run concurrently.
Weights for dense and convolution layers are float64 arrays; a dense layer
stores one output unit ("filter") per row so both layer kinds expose a
uniform [n_filters, flat_dim] filter view.
"""
from __future__ import annotations

from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError

Cache = dict[str, Any]


class Dense:
    kind = "dense"

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        self.W = np.asarray(weight, dtype=np.float64)
        self.b = np.asarray(bias, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise DimensionError("dense layer expects W [out, in] and b [out]")

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng: np.random.Generator) -> "Dense":
        w = rng.normal(0.0, np.sqrt(2.0 / in_dim), size=(out_dim, in_dim))
        return cls(w, np.zeros(out_dim))

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(f"dense layer expects [batch, {self.in_dim}], got {x.shape}")
        return x @ self.W.T + self.b

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, Cache]:
        return self.forward(x), {"x": x}

    def backward(self, grad_out: np.ndarray, cache: Cache):
        grad_in = grad_out @ self.W
        return grad_in, (grad_out.T @ cache["x"], grad_out.sum(axis=0))

    def filters(self) -> np.ndarray:
        """Filter view [n_filters, flat_dim]; rows are output units."""
        return self.W

    def set_filters(self, f: np.ndarray) -> None:
        self.W = np.asarray(f, dtype=np.float64).reshape(self.W.shape)

    def clone(self) -> "Dense":
        return Dense(self.W.copy(), self.b.copy())

    def spec(self) -> dict:
        return {"kind": self.kind, "in": self.in_dim, "out": self.out_dim}


class Conv2d:
    """Valid 2-D convolution, stride 1, square kernel."""

    kind = "conv2d"

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        self.W = np.asarray(weight, dtype=np.float64)  # [cout, cin, k, k]
        self.b = np.asarray(bias, dtype=np.float64)
        if self.W.ndim != 4 or self.W.shape[2] != self.W.shape[3]:
            raise DimensionError("conv layer expects W [cout, cin, k, k] with square kernel")
        if self.b.shape != (self.W.shape[0],):
            raise DimensionError("conv bias must have one entry per output channel")

    @classmethod
    def init(cls, cin: int, cout: int, k: int, rng: np.random.Generator) -> "Conv2d":
        w = rng.normal(0.0, np.sqrt(2.0 / (cin * k * k)), size=(cout, cin, k, k))
        return cls(w, np.zeros(cout))

    @property
    def kernel(self) -> int:
        return self.W.shape[2]

    def _cols(self, x: np.ndarray) -> tuple[np.ndarray, tuple[int, int]]:
        k = self.kernel
        # [n, cin, oh, ow, k, k] -> [n, oh*ow, cin*k*k]
        win = sliding_window_view(x, (k, k), axis=(2, 3))
        n, cin, oh, ow = win.shape[:4]
        return win.transpose(0, 2, 3, 1, 4, 5).reshape(n, oh * ow, cin * k * k), (oh, ow)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_cached(x)[0]

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, Cache]:
        cout, cin, k, _ = self.W.shape
        if x.ndim != 4 or x.shape[1] != cin:
            raise DimensionError(f"conv layer expects [batch, {cin}, H, W], got {x.shape}")
        if x.shape[2] < k or x.shape[3] < k:
            raise DimensionError("conv input smaller than kernel")
        cols, (oh, ow) = self._cols(x)
        wmat = self.W.reshape(cout, -1)
        out = cols @ wmat.T + self.b  # [n, oh*ow, cout]
        out = out.transpose(0, 2, 1).reshape(x.shape[0], cout, oh, ow)
        return out, {"cols": cols, "x_shape": x.shape, "oh": oh, "ow": ow}

    def backward(self, grad_out: np.ndarray, cache: Cache):
        cout, cin, k, _ = self.W.shape
        n, _, oh, ow = grad_out.shape
        g = grad_out.reshape(n, cout, oh * ow).transpose(0, 2, 1)  # [n, oh*ow, cout]
        cols = cache["cols"]
        dW = np.einsum("npc,npd->cd", g, cols).reshape(self.W.shape)
        db = g.sum(axis=(0, 1))
        dcols = g @ self.W.reshape(cout, -1)  # [n, oh*ow, cin*k*k]
        dcols = dcols.reshape(n, oh, ow, cin, k, k)
        dx = np.zeros(cache["x_shape"], dtype=np.float64)
        for di in range(k):
            for dj in range(k):
                dx[:, :, di:di + oh, dj:dj + ow] += dcols[:, :, :, :, di, dj].transpose(0, 3, 1, 2)
        return dx, (dW, db)

    def filters(self) -> np.ndarray:
        return self.W.reshape(self.W.shape[0], -1)

    def set_filters(self, f: np.ndarray) -> None:
        self.W = np.asarray(f, dtype=np.float64).reshape(self.W.shape)

    def clone(self) -> "Conv2d":
        return Conv2d(self.W.copy(), self.b.copy())

    def spec(self) -> dict:
        return {
            "kind": self.kind,
            "cin": self.W.shape[1],
            "cout": self.W.shape[0],
            "kernel": self.kernel,
        }


class ReLU:
    kind = "relu"
    W = None
    b = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(x, 0.0)

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, Cache]:
        return np.maximum(x, 0.0), {"mask": x > 0}

    def backward(self, grad_out: np.ndarray, cache: Cache):
        return grad_out * cache["mask"], None

    def clone(self) -> "ReLU":
        return ReLU()

    def spec(self) -> dict:
        return {"kind": self.kind}


class Flatten:
    kind = "flatten"
    W = None
    b = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(x.shape[0], -1)

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, Cache]:
        return x.reshape(x.shape[0], -1), {"shape": x.shape}

    def backward(self, grad_out: np.ndarray, cache: Cache):
        return grad_out.reshape(cache["shape"]), None

    def clone(self) -> "Flatten":
        return Flatten()

    def spec(self) -> dict:
        return {"kind": self.kind}


def has_params(layer) -> bool:
    return getattr(layer, "W", None) is not None
