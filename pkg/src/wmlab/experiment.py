"""End-to-end experiment orchestration.

A Lab owns everything derived from one ExperimentConfig: the task data and
its defender/attacker splits, the unmarked baseline pool, per-scheme
decision thresholds, and cached marked models per defense grid entry. Cells
of the payoff grid run independently; every random choice derives from the
master seed and the cell's own descriptor, so partial grids, reordered
grids and parallel execution all produce identical records.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from threading import Lock

import numpy as np

from .attacks import ATTACK_META, AttackContext, QueryOracle, run_attack, run_pipeline
from .config import ExperimentConfig
from .data import generate_task, generate_transfer, split
from .errors import ConfigError, WmlabError
from .evaluation import (PayoffMatrix, ThresholdModel, attack_success,
                         estimate_threshold, rescale, target_accuracy)
from .nn.io import load_model, save_model
from .nn.model import Model, build_model
from .nn.train import train
from .records import ExperimentRecord, canonical_json
from .rng import derive_seed, rng
from .schemes import SchemeConfig, get_scheme
from .schemes.io import clone_key
from .workmeter import measure_work


def describe(kind_id: str, params: dict) -> str:
    """Compact one-token descriptor for grid axes and reports."""
    if not params:
        return kind_id
    parts = []
    for k in sorted(params):
        v = params[k]
        if k == "stages":
            v = "+".join(s if isinstance(s, str) else s[0] for s in v)
        parts.append(f"{k}={v}")
    return kind_id + "|" + "|".join(parts)


class Defense:
    """A marked model with its key, message and embedding bookkeeping."""

    def __init__(self, scheme_id, params, base, marked, key, message, runtime_s):
        self.scheme_id = scheme_id
        self.params = params
        self.base = base
        self.marked = marked
        self.key = key
        self.message = message
        self.runtime_s = runtime_s


class Lab:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        task = cfg.task
        self.train_data, self.test_data = generate_task(
            task.seed, task.class_count, task.train_per_class,
            task.test_per_class, task.noise_std, task.image_size)
        self.defender_data, self.attacker_labeled = split(
            self.train_data, "modification", derive_seed(cfg.master_seed, "split"))
        _, self.extraction_images = split(
            self.train_data, "extraction", derive_seed(cfg.master_seed, "split"))
        self.transfer_data = generate_transfer(
            derive_seed(cfg.master_seed, "transfer"), cfg.transfer.class_count,
            cfg.transfer.per_class, cfg.transfer.noise_std, task.image_size)
        self._reference: Model | None = None
        self._baselines: list[Model] | None = None
        self._holdouts: list[Model] | None = None
        self._thresholds: dict[str, ThresholdModel] = {}
        self._defenses: dict[str, Defense] = {}
        self._lock = Lock()

    # -- baseline pool -------------------------------------------------------

    def _train_baseline(self, label, index) -> Model:
        seed = derive_seed(self.cfg.master_seed, label, index)
        model = build_model(self.cfg.architecture, self.cfg.task.class_count,
                            derive_seed(seed, "init"),
                            self.train_data.images.shape[1:])
        return train(model, self.defender_data,
                     replace(self.cfg.train, seed=derive_seed(seed, "train")))

    @property
    def reference(self) -> Model:
        """The unmarked model all embedding losses compare against."""
        if self._reference is None:
            self._reference = self._train_baseline("baseline-ref", 0)
        return self._reference

    def baselines(self) -> list[Model]:
        if self._baselines is None:
            self._baselines = [self._train_baseline("baseline", i)
                               for i in range(self.cfg.threshold.n_unmarked)]
        return self._baselines

    def holdouts(self) -> list[Model]:
        """Unmarked models kept out of threshold fitting."""
        if self._holdouts is None:
            self._holdouts = [self._train_baseline("baseline-hold", i)
                              for i in range(self.cfg.threshold.n_holdout)]
        return self._holdouts

    # -- thresholds ----------------------------------------------------------

    def scheme_default_params(self, scheme_id: str) -> dict:
        grid = self.cfg.schemes.get(scheme_id)
        return dict(grid[0]) if grid else {}

    def threshold(self, scheme_id: str) -> ThresholdModel:
        if scheme_id not in self._thresholds:
            proto = self.cfg.threshold
            model = estimate_threshold(
                scheme_id, self.scheme_default_params(scheme_id),
                self.baselines(), proto.n_keys, proto.key_length, proto.p_value,
                data=self.defender_data, reference_model=self.reference,
                seed=derive_seed(self.cfg.master_seed, "threshold", scheme_id))
            self._thresholds[scheme_id] = model
        return self._thresholds[scheme_id]

    def set_threshold(self, model: ThresholdModel) -> None:
        self._thresholds[model.scheme_id] = model

    # -- defenses ------------------------------------------------------------

    def defense(self, scheme_id: str, params: dict) -> Defense:
        tag = f"{scheme_id}:{canonical_json(params)}"
        with self._lock:
            if tag in self._defenses:
                return self._defenses[tag]
        built = self._build_defense(scheme_id, params)
        with self._lock:
            self._defenses.setdefault(tag, built)
            return self._defenses[tag]

    def _build_defense(self, scheme_id: str, params: dict) -> Defense:
        scheme = get_scheme(scheme_id)
        seed = derive_seed(self.cfg.master_seed, "defense", scheme_id,
                           canonical_json(params))
        base = build_model(self.cfg.architecture, self.cfg.task.class_count,
                           derive_seed(seed, "init"),
                           self.train_data.images.shape[1:])
        base = train(base, self.defender_data,
                     replace(self.cfg.train, seed=derive_seed(seed, "train")))
        cfg = SchemeConfig(params=dict(params),
                           train=replace(self.cfg.embed,
                                         seed=derive_seed(seed, "embed")),
                           data=self.defender_data)
        with measure_work() as meter:
            key, message = scheme.keygen(cfg, self.defender_data, base,
                                         derive_seed(seed, "key"))
            marked = scheme.embed(key, message, base, cfg)
        return Defense(scheme_id, dict(params), base, marked, key, message,
                       meter.seconds)

    # -- attacker data -------------------------------------------------------

    def data_for(self, access: str, extraction_style: bool):
        if access == "none":
            return None
        if access == "labeled":
            return self.attacker_labeled
        if access == "transfer":
            return self.transfer_data.without_labels()
        if access == "domain":
            return self.extraction_images if extraction_style else \
                self.attacker_labeled.without_labels()
        raise ConfigError(f"unknown data access level '{access}'")


def _is_extraction_style(attack_id: str, params: dict) -> bool:
    if attack_id == "pipeline":
        return any(ATTACK_META[s if isinstance(s, str) else s[0]].category
                   == "model_extraction" for s in params.get("stages", []))
    return ATTACK_META[attack_id].category == "model_extraction"


def run_cell(lab: Lab, scheme_id: str, scheme_params: dict, attack_id: str,
             attack_params: dict) -> ExperimentRecord:
    """One (defense, attack) cell: embed, attack, measure, judge."""
    cfg = lab.cfg
    cell_seed = derive_seed(cfg.master_seed, "cell", scheme_id,
                            canonical_json(scheme_params), attack_id,
                            canonical_json(attack_params))
    scheme = get_scheme(scheme_id)
    defense = lab.defense(scheme_id, scheme_params)
    # per-cell key copy: active schemes accumulate query evidence during the
    # attack and cells must not see each other's traffic
    key, message = clone_key(defense.key, defense.message)
    marked = defense.marked
    deployed = scheme.deploy(marked, key)
    if isinstance(deployed, Model):
        target = deployed
    else:
        target = QueryOracle(deployed, max_queries=cfg.budgets.max_queries)
    threshold = lab.threshold(scheme_id)
    ctx = AttackContext(
        train=cfg.train, seed=cell_seed,
        epoch_multiplier=cfg.budgets.epoch_multiplier,
        architecture=cfg.architecture, alt_architecture=cfg.alt_architecture,
        embed_train=cfg.embed, scheme_id=scheme_id, scheme_params=scheme_params,
        transfer_data=lab.transfer_data, max_queries=cfg.budgets.max_queries)
    extraction_style = _is_extraction_style(attack_id, attack_params)
    data_for = lambda access: lab.data_for(access, extraction_style)

    error = None
    try:
        if attack_id == "pipeline":
            outcome = run_pipeline(attack_params.get("stages", []), target, ctx,
                                   data_for)
        else:
            outcome = run_attack(attack_id, attack_params, target,
                                 data_for(ATTACK_META[attack_id].data_access), ctx)
        surrogate = outcome.surrogate
        runtime_attack = outcome.runtime_seconds
        queries = outcome.queries_made
    except WmlabError as exc:
        error = f"{type(exc).__name__}: {exc}"
        surrogate = target
        runtime_attack = 0.0
        queries = 0

    # watermark evidence is read before any accuracy queries so that active
    # schemes only ever judge the attacker's own traffic
    wmacc_raw = scheme.watermark_accuracy(key, message, surrogate)
    acc_marked = target_accuracy(marked, lab.test_data)
    acc_surrogate = target_accuracy(surrogate, lab.test_data)
    loss = acc_marked - acc_surrogate
    if error is None:
        success = attack_success(wmacc_raw, threshold.theta, loss)
    else:
        success = False
    if threshold.theta < 1.0:
        wmacc_rescaled = rescale(wmacc_raw, threshold.theta)
    else:
        wmacc_rescaled = 0.0
        error = (error + "; " if error else "") + "degenerate threshold at 1.0"
    return ExperimentRecord(
        scheme_id=scheme_id, scheme_params=dict(scheme_params),
        attack_id=attack_id, attack_params=dict(attack_params), seed=cell_seed,
        acc_unmarked=target_accuracy(lab.reference, lab.test_data),
        acc_marked=acc_marked, acc_surrogate=acc_surrogate,
        wmacc_raw=wmacc_raw, wmacc_rescaled=wmacc_rescaled,
        theta_used=threshold.theta, success=success,
        runtime_embed_s=defense.runtime_s, runtime_attack_s=runtime_attack,
        query_count=queries, error=error)


def build_matrix(lab: Lab, jobs: int = 1):
    """Run the full defense x attack grid.

    Returns (PayoffMatrix, records in grid order). Cell failures become
    payoff-zero records with error notes; they never abort the grid.
    """
    defenses = lab.cfg.defense_grid()
    attacks = lab.cfg.attack_grid()
    if not defenses or not attacks:
        raise ConfigError("matrix needs nonempty scheme and attack grids")
    for scheme_id, params in defenses:
        lab.defense(scheme_id, params)
        lab.threshold(scheme_id)
    cells = [(i, j, d, a) for i, d in enumerate(defenses)
             for j, a in enumerate(attacks)]

    def one(cell):
        i, j, (scheme_id, sparams), (attack_id, aparams) = cell
        record = run_cell(lab, scheme_id, sparams, attack_id, aparams)
        record.extra["defense_index"] = i
        record.extra["attack_index"] = j
        return (i, j, record)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, cells))
    else:
        results = [one(cell) for cell in cells]
    values = np.zeros((len(defenses), len(attacks)))
    records = []
    for i, j, record in sorted(results, key=lambda r: (r[0], r[1])):
        values[i, j] = record.payoff
        records.append(record)
    matrix = PayoffMatrix(
        [describe(s, p) for s, p in defenses],
        [describe(a, p) for a, p in attacks], values)
    return matrix, records


def security_game(lab: Lab, scheme_id: str, scheme_params: dict, attack,
                  trials: int, seed: int, theta: float | None = None) -> float:
    """Defender's identification rate in the watermark security game.

    Per trial both an unmarked and a marked-and-attacked model are prepared,
    a fair coin picks which one the defender must judge, and the defender
    answers via threshold verification. attack may be "identity",
    "perfect_removal" (hands back the unmarked model), or (attack_id, params).
    """
    if trials < 1:
        raise ConfigError("the game needs at least one trial")
    cfg = lab.cfg
    scheme = get_scheme(scheme_id)
    if theta is None:
        theta = lab.threshold(scheme_id).theta
    correct = 0
    for t in range(trials):
        t_seed = derive_seed(seed, "trial", t)
        unmarked = build_model(cfg.architecture, cfg.task.class_count,
                               derive_seed(t_seed, "unmarked-init"),
                               lab.train_data.images.shape[1:])
        unmarked = train(unmarked, lab.defender_data,
                         replace(cfg.train, seed=derive_seed(t_seed, "unmarked-train")))
        base = build_model(cfg.architecture, cfg.task.class_count,
                           derive_seed(t_seed, "base-init"),
                           lab.train_data.images.shape[1:])
        base = train(base, lab.defender_data,
                     replace(cfg.train, seed=derive_seed(t_seed, "base-train")))
        scfg = SchemeConfig(params=dict(scheme_params),
                            train=replace(cfg.embed, seed=derive_seed(t_seed, "embed")),
                            data=lab.defender_data)
        key, message = scheme.keygen(scfg, lab.defender_data, base,
                                     derive_seed(t_seed, "key"))
        marked = scheme.embed(key, message, base, scfg)
        deployed = scheme.deploy(marked, key)
        if attack == "identity":
            suspect_marked = deployed
        elif attack == "perfect_removal":
            suspect_marked = unmarked.clone()
        else:
            attack_id, aparams = attack
            ctx = AttackContext(
                train=cfg.train, seed=derive_seed(t_seed, "attack"),
                epoch_multiplier=cfg.budgets.epoch_multiplier,
                architecture=cfg.architecture,
                alt_architecture=cfg.alt_architecture, embed_train=cfg.embed,
                scheme_id=scheme_id, scheme_params=scheme_params,
                transfer_data=lab.transfer_data, max_queries=cfg.budgets.max_queries)
            target = deployed if isinstance(deployed, Model) else \
                QueryOracle(deployed, max_queries=cfg.budgets.max_queries)
            extraction_style = _is_extraction_style(attack_id, aparams)
            data = lab.data_for(ATTACK_META[attack_id].data_access, extraction_style)
            suspect_marked = run_attack(attack_id, aparams, target, data, ctx).surrogate
        flip = int(rng(derive_seed(t_seed, "coin")).integers(0, 2))
        suspect = suspect_marked if flip == 1 else unmarked
        retained = scheme.watermark_accuracy(key, message, suspect) >= theta
        correct += int(retained == (flip == 1))
    return correct / trials


# -- persistence used by the CLI ---------------------------------------------


def baseline_dir(cfg: ExperimentConfig) -> Path:
    return Path(cfg.out_dir) / "baselines"


def threshold_path(cfg: ExperimentConfig, scheme_id: str) -> Path:
    return Path(cfg.out_dir) / "thresholds" / f"{scheme_id}.json"


def save_baselines(lab: Lab) -> dict:
    out = baseline_dir(lab.cfg)
    out.mkdir(parents=True, exist_ok=True)
    metrics = {"reference": target_accuracy(lab.reference, lab.test_data),
               "baseline": [], "holdout": []}
    save_model(lab.reference, out / "reference.json")
    for i, model in enumerate(lab.baselines()):
        save_model(model, out / f"baseline_{i:03d}.json")
        metrics["baseline"].append(target_accuracy(model, lab.test_data))
    for i, model in enumerate(lab.holdouts()):
        save_model(model, out / f"holdout_{i:03d}.json")
        metrics["holdout"].append(target_accuracy(model, lab.test_data))
    (out / "metrics.json").write_text(canonical_json(metrics) + "\n",
                                      encoding="ascii")
    return metrics


def load_baselines(lab: Lab) -> bool:
    """Use a previously saved pool if present; returns whether it loaded."""
    out = baseline_dir(lab.cfg)
    if not (out / "metrics.json").exists():
        return False
    proto = lab.cfg.threshold
    try:
        lab._reference = load_model(out / "reference.json")
        lab._baselines = [load_model(out / f"baseline_{i:03d}.json")
                          for i in range(proto.n_unmarked)]
        lab._holdouts = [load_model(out / f"holdout_{i:03d}.json")
                         for i in range(proto.n_holdout)]
    except FileNotFoundError:
        return False
    return True


def save_threshold(cfg: ExperimentConfig, model: ThresholdModel) -> Path:
    path = threshold_path(cfg, model.scheme_id)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(model.to_dict()) + "\n", encoding="ascii")
    return path


def load_threshold(cfg: ExperimentConfig, scheme_id: str) -> ThresholdModel | None:
    path = threshold_path(cfg, scheme_id)
    if not path.exists():
        return None
    return ThresholdModel.from_dict(json.loads(path.read_text(encoding="ascii")))
