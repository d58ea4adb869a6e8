"""Model extraction attacks: train a surrogate from the target's responses.

Black-box strategies only ever see a QueryOracle; a bare model target is
wrapped before use so query counts are always tracked. Distillation is the
one exception: it reads the target's logits and therefore needs the actual
model object.
"""
from __future__ import annotations

import numpy as np

from ..data import Dataset, random_affine
from ..errors import AttackInfeasible, ConfigError
from ..nn.adversarial import pgd
from ..nn.functional import one_hot, softmax
from ..nn.layers import Dense
from ..nn.model import Model
from ..nn.train import fit
from ..rng import derive_seed, rng
from ..targets import maybe_white_box
from ..workmeter import measure_work
from .context import AttackContext, AttackOutcome
from .oracle import QueryOracle

MIN_SAMPLES = 8


def _as_oracle(target, ctx: AttackContext) -> QueryOracle:
    if isinstance(target, QueryOracle):
        return target
    return QueryOracle(target, max_queries=ctx.max_queries)


def _require_images(data: Dataset | None) -> np.ndarray:
    if data is None or len(data) < MIN_SAMPLES:
        raise AttackInfeasible(f"extraction needs at least {MIN_SAMPLES} attacker images")
    return data.images


def _train_surrogate(images: np.ndarray, labels: np.ndarray, architecture: str,
                     ctx: AttackContext, class_count: int, tag: str = "surrogate") -> Model:
    surrogate = ctx.fresh_model(architecture, class_count, tag, images.shape[1:])
    fit(surrogate, images, labels, ctx.surrogate_train(tag))
    return surrogate


def retrain(target, data: Dataset, architecture: str, ctx: AttackContext) -> AttackOutcome:
    """Train a fresh model on the oracle's probability responses."""
    images = _require_images(data)
    oracle = _as_oracle(target, ctx)
    with measure_work() as meter:
        labels = oracle.query(images)
        surrogate = _train_surrogate(images, labels, architecture, ctx,
                                     oracle.class_count)
    return AttackOutcome(surrogate, meter.seconds, len(images))


def cross_arch(target, data: Dataset, architecture: str, ctx: AttackContext) -> AttackOutcome:
    """Retraining with a different architecture than the source model."""
    alt = architecture if architecture != ctx.architecture else ctx.alt_architecture
    if alt == ctx.architecture:
        raise ConfigError("cross_arch needs an architecture differing from the source")
    return retrain(target, data, alt, ctx)


def distill(target, data: Dataset, architecture: str, ctx: AttackContext,
            temperature: float = 2.0) -> AttackOutcome:
    """Train on softmax(logits / T); needs white-box access for the logits."""
    if temperature <= 0:
        raise ConfigError("temperature must be > 0")
    images = _require_images(data)
    teacher = maybe_white_box(target)
    if teacher is None:
        raise AttackInfeasible("distillation requires white-box logit access")
    with measure_work() as meter:
        labels = softmax(teacher.forward(images) / temperature)
        surrogate = _train_surrogate(images, labels, architecture, ctx,
                                     teacher.class_count)
    return AttackOutcome(surrogate, meter.seconds, 0)


def averaged_responses(oracle, images: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Mean oracle response over n seed-determined variants of each image."""
    responses = np.zeros((len(images), oracle.class_count))
    for j in range(n):
        variants = np.stack([
            random_affine(img, derive_seed(seed, "smooth", j, i))
            for i, img in enumerate(images)])
        responses += oracle.query(variants)
    return responses / n


def smooth_retrain(target, data: Dataset, architecture: str, ctx: AttackContext,
                   n: int = 3) -> AttackOutcome:
    """Query n randomly transformed variants per image; average the responses.

    The surrogate trains on the original images with the averaged labels, so
    query-specific response poisoning must survive the mean to transfer.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    images = _require_images(data)
    oracle = _as_oracle(target, ctx)
    with measure_work() as meter:
        labels = averaged_responses(oracle, images, n, ctx.seed)
        surrogate = _train_surrogate(images, labels, architecture, ctx,
                                     oracle.class_count)
    return AttackOutcome(surrogate, meter.seconds, n * len(images))


def knockoff(target, data: Dataset, architecture: str, ctx: AttackContext) -> AttackOutcome:
    """Retrain on out-of-domain transfer images labeled by the oracle."""
    if data is None or len(data) < MIN_SAMPLES:
        raise AttackInfeasible("knockoff needs a transfer image set")
    return retrain(target, data, architecture, ctx)


def transfer_learn(target, data: Dataset, architecture: str, ctx: AttackContext,
                   freeze_batches: int = 30, epochs: int = 5) -> AttackOutcome:
    """Adapt a model pre-trained on a different task to the oracle's labels.

    The classifier head is replaced, only it trains for the first
    freeze_batches batches, then the whole model trains with the learning
    rate dropped tenfold over the last two epoch fifths.
    """
    images = _require_images(data)
    oracle = _as_oracle(target, ctx)
    with measure_work() as meter:
        surrogate = ctx.pretrained(architecture)
        head = surrogate.param_layers()[-1]
        gen = rng(derive_seed(ctx.seed, "transfer-head"))
        surrogate.layers[head] = Dense.init(surrogate.layers[head].in_dim,
                                            oracle.class_count, gen)
        surrogate.class_count = oracle.class_count
        labels = one_hot(np.argmax(oracle.query(images), axis=1), oracle.class_count)
        frozen = tuple(i for i in surrogate.param_layers() if i != head)
        cfg = ctx.surrogate_train("transfer-freeze", epochs=max(1, epochs))
        fit(surrogate, images, labels, cfg, frozen_layers=frozen,
            max_batches=max(1, round(freeze_batches * ctx.epoch_multiplier)))
        cfg = ctx.surrogate_train("transfer-full", epochs=epochs)

        def staged_lr(epoch: int) -> float:
            drop = 10.0 if epoch >= cfg.epochs - max(1, cfg.epochs // 5) * 2 else 1.0
            return cfg.learning_rate / drop

        fit(surrogate, images, labels, cfg, lr_for_epoch=staged_lr)
    return AttackOutcome(surrogate, meter.seconds, len(images))


def adv_scratch(target, data: Dataset, architecture: str, ctx: AttackContext,
                epsilon: float = 0.1, step: float = 0.01, max_iters: int = 40,
                fraction: float = 0.1) -> AttackOutcome:
    """Retraining with PGD examples crafted against the growing surrogate."""
    if not 0 < fraction <= 1:
        raise ConfigError("fraction must lie in (0, 1]")
    images = _require_images(data)
    oracle = _as_oracle(target, ctx)
    with measure_work() as meter:
        soft = oracle.query(images)
        hard = np.argmax(soft, axis=1)
        surrogate = ctx.fresh_model(architecture, oracle.class_count, "adv-scratch",
                                    images.shape[1:])
        base_cfg = ctx.surrogate_train("adv-scratch")
        warm = max(1, base_cfg.epochs // 2)
        fit(surrogate, images, soft, ctx.surrogate_train("adv-warm", epochs=warm))
        gen = rng(derive_seed(ctx.seed, "adv-scratch-pick"))
        n_adv = max(1, int(np.floor(fraction * len(images))))
        pick = gen.choice(len(images), size=n_adv, replace=False)
        adv = pgd(surrogate, images[pick], hard[pick], epsilon,
                  min(step, epsilon), max_iters)
        mix_x = np.concatenate([images, adv, adv])
        mix_y = np.concatenate([soft, soft[pick], soft[pick]])
        rest = max(1, base_cfg.epochs - warm)
        fit(surrogate, mix_x, mix_y, ctx.surrogate_train("adv-finish", epochs=rest))
    return AttackOutcome(surrogate, meter.seconds, len(images))
