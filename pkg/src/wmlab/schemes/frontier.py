"""Frontier Stitching: adversarial-example trigger set with true labels.

The key holds fast-gradient candidates near the decision boundary of the
source model: half "true adversaries" (the perturbation flips the
prediction) and half "false adversaries" (the prediction survives), all
labeled with their ground truth. Embedding fine-tunes the model to answer
every one of them correctly.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..nn.adversarial import fgm
from ..nn.functional import one_hot
from ..rng import derive_seed, rng
from .base import Scheme, message_of_ones
from .trigger import TriggerKey, _key_length, embed_triggers, extract_triggers


class FrontierStitchingScheme(Scheme):
    scheme_id = "frontier_stitching"
    category = "model_dependent"
    requires_model_for_keygen = True

    def keygen(self, cfg, data, model, seed):
        if model is None:
            raise ConfigError("frontier stitching keygen needs the source model")
        if data is None or not data.labeled:
            raise ConfigError("frontier stitching keygen needs labeled data")
        n = _key_length(cfg)
        if n % 2 != 0:
            raise ConfigError("key_length must be even (half true, half false)")
        epsilon = float(cfg.param("epsilon", 0.17))
        if epsilon <= 0:
            raise ConfigError("epsilon must be > 0 to produce true adversaries")
        truth = data.label_indices()
        correct = np.flatnonzero(model.predict_labels(data.images) == truth)
        gen = rng(derive_seed(seed, "frontier"))
        order = gen.permutation(correct)
        half = n // 2
        true_adv: list[np.ndarray] = []
        false_adv: list[np.ndarray] = []
        true_y: list[int] = []
        false_y: list[int] = []

        def consider(x, y) -> bool:
            adv = fgm(model, x, y, epsilon)
            flipped = int(model.predict_labels(adv[None])[0]) != y
            if flipped and len(true_adv) < half:
                true_adv.append(adv)
                true_y.append(y)
            elif not flipped and len(false_adv) < half:
                false_adv.append(adv)
                false_y.append(y)
            return len(true_adv) == half and len(false_adv) == half

        done = False
        for i in order:
            if consider(data.images[int(i)], int(truth[int(i)])):
                done = True
                break
        # when one kind runs short, jittered copies of the training images
        # widen the candidate pool; each must stay correctly classified
        budget = 50 * n
        while not done and budget > 0:
            budget -= 1
            i = int(gen.choice(correct))
            x = np.clip(data.images[i] + gen.normal(0.0, 0.08, data.images[i].shape),
                        0.0, 1.0)
            if int(model.predict_labels(x[None])[0]) != int(truth[i]):
                continue
            done = consider(x, int(truth[i]))
        if not done:
            raise ConfigError(
                f"could not collect {half} true and {half} false adversaries "
                f"(got {len(true_adv)}/{len(false_adv)}) at epsilon={epsilon}")
        images = np.stack(true_adv + false_adv)
        labels = one_hot(np.array(true_y + false_y), data.class_count)
        key = TriggerKey(self.scheme_id, images, labels,
                         meta={"epsilon": epsilon, "true_count": half,
                               "false_count": half})
        return key, message_of_ones(n)

    def embed(self, key, message, model, cfg):
        return embed_triggers(self, key, message, model, cfg)

    def extract(self, key, target):
        return extract_triggers(key, target)
