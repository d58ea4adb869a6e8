"""Command line front end.

Every command rebuilds what it needs deterministically from the config file
and master seed, so reruns with identical inputs produce byte-identical
artifacts. baseline and threshold persist their intermediate products for
inspection; run and matrix write the record store that report consumes.

Exit codes: 0 success, 2 bad config or usage, 3 some cells errored.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, desk_config, load_config
from .errors import ConfigError, WmlabError
from .experiment import (Lab, build_matrix, run_cell, save_baselines,
                         save_threshold)
from .records import RecordStore
from .report import build_report, matrix_to_csv, nash_summary

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else desk_config()
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["master_seed"] = args.seed
    if getattr(args, "out", None) is not None:
        updates["out_dir"] = args.out
    return replace(cfg, **updates) if updates else cfg


def _store(cfg: ExperimentConfig) -> RecordStore:
    return RecordStore(Path(cfg.out_dir) / "records.jsonl")


def _grid_params(grid: dict, kind_id: str) -> dict:
    entries = grid.get(kind_id)
    return dict(entries[0]) if entries else {}


def cmd_baseline(args) -> int:
    cfg = _config_from_args(args)
    lab = Lab(cfg)
    metrics = save_baselines(lab)
    pool = metrics["baseline"]
    print(f"reference accuracy {metrics['reference']:.4f}")
    print(f"pool of {len(pool)} unmarked models, "
          f"mean accuracy {float(np.mean(pool)):.4f}, "
          f"plus {len(metrics['holdout'])} held out")
    print(f"saved under {Path(cfg.out_dir) / 'baselines'}")
    return EXIT_OK


def cmd_threshold(args) -> int:
    cfg = _config_from_args(args)
    lab = Lab(cfg)
    scheme_ids = [args.scheme] if args.scheme else sorted(cfg.schemes)
    if not scheme_ids:
        raise ConfigError("no schemes configured and none given via --scheme")
    for scheme_id in scheme_ids:
        model = lab.threshold(scheme_id)
        path = save_threshold(cfg, model)
        tail = " (degenerate null)" if model.degenerate else ""
        print(f"{scheme_id}: theta={model.theta:.4f} mu={model.mu:.4f} "
              f"sigma={model.sigma:.4f} p={model.p_value}{tail} -> {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    lab = Lab(cfg)
    scheme_params = _grid_params(cfg.schemes, args.scheme)
    attack_params = _grid_params(cfg.attacks, args.attack)
    record = run_cell(lab, args.scheme, scheme_params, args.attack,
                      attack_params)
    _store(cfg).append(record)
    verdict = "removed" if record.success else "survived"
    print(f"{args.scheme} vs {args.attack}: watermark {verdict} "
          f"(wmacc {record.wmacc_raw:.4f} vs theta {record.theta_used:.4f}, "
          f"stealing loss {record.stealing_loss:+.4f}, "
          f"queries {record.query_count})")
    if record.error:
        print(f"note: {record.error}")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_matrix(args) -> int:
    cfg = _config_from_args(args)
    lab = Lab(cfg)
    matrix, records = build_matrix(lab, jobs=args.jobs)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "matrix.csv"
    csv_path.write_text(matrix_to_csv(matrix), encoding="utf-8")
    _store(cfg).write_all(records)
    errors = [r for r in records if r.error]
    print(f"{len(records)} cells -> {csv_path}")
    print(nash_summary(matrix))
    if errors:
        print(f"{len(errors)} cells carry error notes "
              "(infeasible attacks score zero)")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _config_from_args(args)
    records = _store(cfg).load()
    path = build_report(records, cfg.out_dir)
    if not records:
        print("record store is empty; wrote an empty-report notice")
    print(f"report at {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wmlab",
        description="embed watermarks, attack them, and score the outcome")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, jobs=False):
        p.add_argument("--config", help="JSON config path (defaults to the "
                                        "built-in desk configuration)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="override the output directory")
        if jobs:
            p.add_argument("--jobs", type=int, default=1,
                           help="parallel cells (default 1)")

    common(sub.add_parser("baseline", help="train the unmarked model pool"))
    p = sub.add_parser("threshold", help="estimate decision thresholds")
    common(p)
    p.add_argument("--scheme", help="single scheme id (default: all configured)")
    p = sub.add_parser("run", help="run one embed/attack/verify cell")
    common(p)
    p.add_argument("--scheme", required=True, help="scheme id")
    p.add_argument("--attack", required=True, help="attack id")
    common(sub.add_parser("matrix", help="run the full payoff grid"),
           jobs=True)
    common(sub.add_parser("report", help="summarize the record store"))
    return parser


HANDLERS = {"baseline": cmd_baseline, "threshold": cmd_threshold,
            "run": cmd_run, "matrix": cmd_matrix, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WmlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
