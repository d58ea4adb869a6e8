"""Sequential model container with manual backpropagation.

A model is an ordered list of layers ending in a linear classifier head;
forward returns logits and the softmax head is applied by predict_probs and
the loss. Everything is float64 and fully deterministic given the seeds.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DimensionError, InputError
from ..rng import rng
from .functional import softmax
from .layers import Conv2d, Dense, Flatten, ReLU, has_params


class Model:
    def __init__(self, layers: list, class_count: int, input_shape: tuple[int, ...],
                 architecture: str = "custom"):
        self.layers = list(layers)
        self.class_count = int(class_count)
        self.input_shape = tuple(int(d) for d in input_shape)
        self.architecture = architecture
        self.loss_history: list[float] = []

    # -- forward / backward ------------------------------------------------

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != len(self.input_shape) + 1 or x.shape[1:] != self.input_shape:
            raise DimensionError(
                f"expected input [batch, {self.input_shape}], got {x.shape}")
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logits [batch, class_count] for a batch of inputs."""
        out = self._check_input(x)
        for layer in self.layers:
            out = layer.forward(out)
        if not np.isfinite(out).all():
            raise InputError("non-finite logits; diverged parameters or bad input")
        return out

    def forward_cached(self, x: np.ndarray):
        out = self._check_input(x)
        caches = []
        for layer in self.layers:
            out, cache = layer.forward_cached(out)
            caches.append(cache)
        return out, caches

    def forward_to(self, layer_index: int, x: np.ndarray):
        """Activations after layers[layer_index], plus caches up to there."""
        if not 0 <= layer_index < len(self.layers):
            raise ConfigError(f"layer index {layer_index} out of range")
        out = self._check_input(x)
        caches = []
        for layer in self.layers[: layer_index + 1]:
            out, cache = layer.forward_cached(out)
            caches.append(cache)
        return out, caches

    def backward(self, grad_out: np.ndarray, caches: list, upto: int | None = None):
        """Backpropagate from the logits.

        Returns (grad_input, {layer_index: (dW, db)}).
        """
        start = len(self.layers) - 1 if upto is None else upto
        grads: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        g = grad_out
        for i in range(start, -1, -1):
            g, pg = self.layers[i].backward(g, caches[i])
            if pg is not None:
                grads[i] = pg
        return g, grads

    def predict_probs(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.forward(x))

    def predict_labels(self, x: np.ndarray) -> np.ndarray:
        """Argmax class per row; ties resolve to the lowest class index."""
        return np.argmax(self.forward(x), axis=1)

    # -- structure ----------------------------------------------------------

    def param_layers(self) -> list[int]:
        return [i for i, layer in enumerate(self.layers) if has_params(layer)]

    def parameter_count(self) -> int:
        total = 0
        for i in self.param_layers():
            layer = self.layers[i]
            total += layer.W.size + layer.b.size
        return total

    def clone(self) -> "Model":
        m = Model([l.clone() for l in self.layers], self.class_count,
                  self.input_shape, self.architecture)
        return m

    def params_equal(self, other: "Model") -> bool:
        if len(self.layers) != len(other.layers):
            return False
        for a, b in zip(self.layers, other.layers):
            if a.kind != b.kind:
                return False
            if has_params(a):
                if not (np.array_equal(a.W, b.W) and np.array_equal(a.b, b.b)):
                    return False
        return True


def accuracy(model: Model, data) -> float:
    """Fraction of samples whose argmax prediction matches the label argmax."""
    if getattr(data, "labels", None) is None:
        raise InputError("accuracy requires labeled data")
    if len(data.images) == 0:
        raise InputError("accuracy requires at least one sample")
    pred = model.predict_labels(data.images)
    truth = np.argmax(data.labels, axis=1)
    return float(np.mean(pred == truth))


ARCHITECTURES = {
    "dense_h32": ("flatten", ("dense", 32), "relu", ("dense", None)),
    "dense_h64": ("flatten", ("dense", 64), "relu", ("dense", None)),
    "dense_h48x2": ("flatten", ("dense", 48), "relu", ("dense", 48), "relu", ("dense", None)),
    "conv_c6": (("conv", 6, 3), "relu", "flatten", ("dense", None)),
}


def build_model(architecture: str, class_count: int, seed: int,
                input_shape: tuple[int, ...] = (1, 10, 10)) -> Model:
    """Instantiate a named architecture with seeded He-normal weights."""
    if architecture not in ARCHITECTURES:
        raise ConfigError(f"unknown architecture '{architecture}'")
    if class_count < 2:
        raise ConfigError("need at least two classes")
    gen = rng(seed)
    layers = []
    shape = tuple(input_shape)
    for entry in ARCHITECTURES[architecture]:
        if entry == "flatten":
            layers.append(Flatten())
            shape = (int(np.prod(shape)),)
        elif entry == "relu":
            layers.append(ReLU())
        elif entry[0] == "dense":
            out_dim = entry[1] if entry[1] is not None else class_count
            if len(shape) != 1:
                raise ConfigError("dense layer needs flattened input")
            layers.append(Dense.init(shape[0], out_dim, gen))
            shape = (out_dim,)
        elif entry[0] == "conv":
            _, cout, k = entry
            cin, h, w = shape
            layers.append(Conv2d.init(cin, cout, k, gen))
            shape = (cout, h - k + 1, w - k + 1)
        else:  # pragma: no cover
            raise ConfigError(f"bad architecture entry {entry!r}")
    return Model(layers, class_count, input_shape, architecture)


def hidden_activation_index(model: Model) -> int:
    """Index of the first ReLU layer (the canonical hidden activation)."""
    for i, layer in enumerate(model.layers):
        if layer.kind == "relu":
            return i
    raise ConfigError("model has no hidden activation layer")
