"""White-box model modification attacks.

Every attack clones the given model, transforms the clone and (usually)
fine-tunes it on the attacker's data. Attacks declared with domain-only data
access relabel their samples with the model's own predictions first.
"""
from __future__ import annotations

import numpy as np

from ..data import Dataset, merge, relabel
from ..errors import AttackInfeasible, ConfigError, EmbeddingFailed, InputError
from ..nn.adversarial import pgd
from ..nn.functional import one_hot
from ..nn.layers import Conv2d, Dense, has_params
from ..nn.model import Model, hidden_activation_index
from ..nn.train import TrainConfig, fit
from ..rng import derive_seed, rng

DEFAULT_FT_EPOCHS = 5


def _require_data(data: Dataset | None, minimum: int = 1) -> Dataset:
    if data is None or len(data) < minimum:
        raise AttackInfeasible(f"attack needs at least {minimum} attacker samples")
    return data


def _ft_config(ctx, epochs: int, seed_label: str, lr: float | None = None,
               weight_decay: float = 0.0) -> TrainConfig:
    base = ctx.train
    scaled = max(1, round(epochs * ctx.epoch_multiplier))
    return TrainConfig(learning_rate=lr if lr is not None else base.learning_rate,
                       epochs=scaled, batch_size=base.batch_size,
                       weight_decay=weight_decay,
                       seed=derive_seed(ctx.seed, seed_label))


def _predicted(data: Dataset, model: Model) -> Dataset:
    return relabel(data.without_labels(), model, kind="hard")


def _last_param_layer(model: Model) -> int:
    return model.param_layers()[-1]


def _reinit_layer(model: Model, index: int, seed: int) -> None:
    layer = model.layers[index]
    gen = rng(derive_seed(seed, "reinit", index))
    if isinstance(layer, Dense):
        model.layers[index] = Dense.init(layer.in_dim, layer.out_dim, gen)
    elif isinstance(layer, Conv2d):
        cout, cin, k, _ = layer.W.shape
        model.layers[index] = Conv2d.init(cin, cout, k, gen)
    else:  # pragma: no cover
        raise ConfigError("cannot re-initialize a parameter-free layer")


def fine_tune(model: Model, data: Dataset, ctx, variant: str,
              epochs: int | None = None) -> Model:
    """FTAL/FTLL/RTAL/RTLL.

    FT* fine-tune from the current weights on ground-truth labels; RT* first
    re-initialize the classification head and use the model's own predicted
    labels. *LL variants freeze everything except the last layer.
    """
    if variant not in ("ftal", "ftll", "rtal", "rtll"):
        raise ConfigError(f"unknown fine-tune variant '{variant}'")
    data = _require_data(data)
    out = model.clone()
    if variant in ("rtal", "rtll"):
        # predictions are taken before the head is re-initialized
        data = _predicted(data, out)
        _reinit_layer(out, _last_param_layer(out), derive_seed(ctx.seed, variant))
    else:
        if not data.labeled:
            raise AttackInfeasible(f"{variant} needs ground-truth labels")
    frozen: tuple[int, ...] = ()
    if variant in ("ftll", "rtll"):
        frozen = tuple(i for i in out.param_layers() if i != _last_param_layer(out))
    cfg = _ft_config(ctx, epochs or DEFAULT_FT_EPOCHS, variant)
    fit(out, data.images, data.labels, cfg, frozen_layers=frozen)
    return out


def weight_prune(model: Model, sparsity: float, ctx=None, seed: int = 0) -> Model:
    """Zero exactly floor(sparsity * size) random weights in every layer."""
    if not 0.0 <= sparsity <= 1.0:
        raise ConfigError("sparsity must lie in [0, 1]")
    out = model.clone()
    gen = rng(derive_seed(seed, "weight-prune"))
    for i in out.param_layers():
        layer = out.layers[i]
        k = int(np.floor(sparsity * layer.W.size))
        if k == 0:
            continue
        idx = gen.choice(layer.W.size, size=k, replace=False)
        flat = layer.W.reshape(-1)
        flat[idx] = 0.0
    return out


def fine_prune(model: Model, data: Dataset, ctx, sparsity: float = 0.8,
               epochs: int | None = None) -> Model:
    """Zero the least-activated hidden units, then fine-tune."""
    if not 0.0 <= sparsity <= 1.0:
        raise ConfigError("sparsity must lie in [0, 1]")
    data = _require_data(data)
    out = model.clone()
    act_idx = hidden_activation_index(out)
    acts, _ = out.forward_to(act_idx, data.images)
    acts = np.abs(acts.reshape(len(data), -1)).mean(axis=0)
    feeding = max(i for i in out.param_layers() if i < act_idx)
    layer = out.layers[feeding]
    units = layer.W.shape[0]
    per_unit = acts.reshape(units, -1).mean(axis=1)
    k = int(np.floor(sparsity * units))
    if k > 0:
        drop = np.argsort(per_unit, kind="stable")[:k]
        layer.W[drop] = 0.0
        layer.b[drop] = 0.0
    labeled = data if data.labeled else _predicted(data, model)
    cfg = _ft_config(ctx, epochs or 2 * DEFAULT_FT_EPOCHS, "fine-prune")
    fit(out, labeled.images, labeled.labels, cfg)
    return out


def weight_quantize(model: Model, data: Dataset, ctx, bits: int = 4) -> Model:
    """Snap weights to 2^bits levels spanning each layer's range; 1 ft epoch."""
    if bits < 1:
        raise ConfigError("bits must be >= 1")
    data = _require_data(data)
    out = model.clone()
    levels = 2 ** bits
    for i in out.param_layers():
        layer = out.layers[i]
        lo, hi = float(layer.W.min()), float(layer.W.max())
        if hi <= lo:
            continue
        step = (hi - lo) / (levels - 1)
        layer.W = lo + np.round((layer.W - lo) / step) * step
    labeled = data if data.labeled else _predicted(data, model)
    cfg = _ft_config(ctx, 1, "weight-quantize")
    fit(out, labeled.images, labeled.labels, cfg)
    return out


def label_smooth(model: Model, data: Dataset, ctx, epsilon: float = 0.3,
                 epochs: int | None = None) -> Model:
    """Fine-tune on (1-eps) * predicted one-hot + eps * uniform targets."""
    if not 0.0 <= epsilon < 1.0:
        raise ConfigError("epsilon must lie in [0, 1)")
    data = _require_data(data)
    out = model.clone()
    k = model.class_count
    hard = one_hot(model.predict_labels(data.images), k)
    targets = (1.0 - epsilon) * hard + epsilon / k
    cfg = _ft_config(ctx, epochs or DEFAULT_FT_EPOCHS, "label-smooth")
    fit(out, data.images, targets, cfg)
    return out


def regularize(model: Model, data: Dataset, ctx, weight_decay: float = 0.1,
               epochs: int | None = None) -> Model:
    """Two phases: heavy weight decay to move the parameters, then recovery."""
    if weight_decay <= 0:
        raise ConfigError("weight_decay must be > 0")
    data = _require_data(data)
    labeled = _predicted(data, model)
    out = model.clone()
    e = epochs or DEFAULT_FT_EPOCHS
    fit(out, labeled.images, labeled.labels,
        _ft_config(ctx, e, "regularize-1", weight_decay=weight_decay))
    fit(out, labeled.images, labeled.labels, _ft_config(ctx, e, "regularize-2"))
    return out


def overwrite(model: Model, data: Dataset, ctx, params: dict | None = None) -> Model:
    """Embed a fresh key of the same scheme on top of the existing one."""
    from ..schemes import SchemeConfig, get_scheme
    if ctx.scheme_id is None:
        raise AttackInfeasible("overwriting needs to know the defender's scheme")
    data = _require_data(data)
    if not data.labeled:
        raise AttackInfeasible("overwriting needs labeled attacker data")
    scheme = get_scheme(ctx.scheme_id)
    cfg = SchemeConfig(params=dict(ctx.scheme_params or {}), train=ctx.embed_train,
                       data=data)
    cfg.params.update(params or {})
    cfg.params["seed"] = derive_seed(ctx.seed, "overwrite")
    key, message = scheme.keygen(cfg, data, model, derive_seed(ctx.seed, "overwrite-key"))
    try:
        return scheme.embed(key, message, model, cfg)
    except EmbeddingFailed as exc:
        # a half-embedded second watermark still counts as an overwrite
        # attempt; the attacker does not care whether their own mark took
        if exc.model is None:
            raise
        return exc.model


def adversarial_train(model: Model, data: Dataset, ctx, epsilon: float = 0.1,
                      step: float = 0.01, max_iters: int = 40,
                      fraction: float = 0.1, repeats: int = 2,
                      epochs: int | None = None) -> Model:
    """Fine-tune on PGD examples crafted from a slice of the attacker data."""
    if not 0 < fraction <= 1:
        raise ConfigError("fraction must lie in (0, 1]")
    data = _require_data(data, minimum=2)
    labeled = data if data.labeled else _predicted(data, model)
    out = model.clone()
    gen = rng(derive_seed(ctx.seed, "adv-train"))
    n_adv = max(1, int(np.floor(fraction * len(labeled))))
    pick = gen.choice(len(labeled), size=n_adv, replace=False)
    step = min(step, epsilon)
    adv = pgd(out, labeled.images[pick], labeled.label_indices()[pick],
              epsilon, step, max_iters)
    adv_set = Dataset(np.tile(adv, (repeats, 1, 1, 1)),
                      np.tile(labeled.labels[pick], (repeats, 1)),
                      labeled.class_count)
    combined = merge(Dataset(labeled.images, labeled.labels, labeled.class_count),
                     adv_set)
    cfg = _ft_config(ctx, epochs or DEFAULT_FT_EPOCHS, "adv-train")
    fit(out, combined.images, combined.labels, cfg)
    return out


def _flat_feature_permutation(layer, perm: np.ndarray, next_in_dim: int) -> np.ndarray:
    """Index permutation of the flattened features consumed downstream."""
    units = layer.W.shape[0]
    block = next_in_dim // units
    if block * units != next_in_dim:
        raise ConfigError("cannot align permuted units with the next layer")
    base = np.arange(next_in_dim).reshape(units, block)
    return base[perm].reshape(-1)


def feature_permute(model: Model, seed: int = 0) -> Model:
    """Permute hidden units and rewire consumers; function-preserving."""
    out = model.clone()
    gen = rng(derive_seed(seed, "feature-permute"))
    params = out.param_layers()
    for a, b in zip(params[:-1], params[1:]):
        layer = out.layers[a]
        nxt = out.layers[b]
        perm = gen.permutation(layer.W.shape[0])
        layer.W = layer.W[perm].copy()
        layer.b = layer.b[perm].copy()
        cols = _flat_feature_permutation(layer, perm, nxt.filters().shape[1])
        nxt.set_filters(nxt.filters()[:, cols].copy())
    return out


def shift_filters(filters: np.ndarray, lam1: float, lam2: float,
                  gen: np.random.Generator | None = None) -> np.ndarray:
    """W_i - (lam1/n) * sum_j W_j - lam2 * A with layer-variance Gaussian A."""
    f = np.asarray(filters, dtype=np.float64)
    mean = f.mean(axis=0)
    if lam2 != 0.0:
        if gen is None:
            raise InputError("lam2 != 0 requires a generator for the noise draw")
        noise = gen.normal(0.0, f.std() if f.std() > 0 else 1.0, size=f.shape[1])
    else:
        noise = 0.0
    return f - lam1 * mean - lam2 * noise


def weight_shift(model: Model, data: Dataset, ctx, lam1: float = 1.5,
                 lam2: float = 1.0, epochs: int | None = None) -> Model:
    """Shift every non-head layer's filters off their mean, then fine-tune."""
    data = _require_data(data)
    out = model.clone()
    gen = rng(derive_seed(ctx.seed, "weight-shift"))
    head = _last_param_layer(out)
    for i in out.param_layers():
        if i == head:
            continue
        layer = out.layers[i]
        layer.set_filters(shift_filters(layer.filters(), lam1, lam2, gen))
    labeled = data if data.labeled else _predicted(data, model)
    cfg = _ft_config(ctx, epochs or 2 * DEFAULT_FT_EPOCHS, "weight-shift")
    fit(out, labeled.images, labeled.labels, cfg)
    return out
