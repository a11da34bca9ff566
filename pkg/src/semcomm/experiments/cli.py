"""Command-line entry point: ``semcomm <subcommand> --config c.json [--seed N] [--out DIR]``.

Exit status is 0 on success, 1 on usage or configuration errors and 2 when
the run itself fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pydantic
import torch

from .accounting import account_ops, account_symbols, format_table
from .config import ExperimentConfig
from .runner import METRICS, evaluate, get_dataset, load_trained, symbols_per_sample, train_and_save, write_dataset
from .sweep import eval_rng, run_sweep, run_user_sweep, run_wiring_ablation

log = logging.getLogger("semcomm")

SUBCOMMANDS = ("gen-data", "train", "eval", "sweep-snr", "sweep-users", "account", "attention-dump", "ablate-wiring")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="run a single seed instead of the config's list")
    common.add_argument("--out", help="output directory (overrides the config)")
    p = _Parser(prog="semcomm", description="Multi-user semantic communication simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("gen-data", parents=[common], help="generate and persist the dataset")
    sub.add_parser("train", parents=[common], help="train and checkpoint one model per seed")
    ev = sub.add_parser("eval", parents=[common], help="evaluate checkpoints channel-free and at one SNR")
    ev.add_argument("--snr", type=float, default=None, help="SNR in dB (default: channel-free only)")
    sub.add_parser("sweep-snr", parents=[common], help="metric versus SNR for every CSI setting")
    sub.add_parser("sweep-users", parents=[common], help="metric versus number of users at fixed SNR")
    sub.add_parser("account", parents=[common], help="analytic symbol and operation counts")
    ad = sub.add_parser("attention-dump", parents=[common], help="per-layer VQA guided-attention maps")
    ad.add_argument("--samples", type=int, default=4)
    ab = sub.add_parser("ablate-wiring", parents=[common], help="VQA layer-wise versus classic fusion wiring")
    ab.add_argument("--snr", type=float, default=12.0)
    return p


def _load_config(args) -> ExperimentConfig:
    path = Path(args.config)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        cfg = ExperimentConfig.load(path)
    except pydantic.ValidationError as e:
        raise UsageError(f"invalid config {path}:\n{e}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"config {path} is not valid JSON: {e}") from None
    updates = {}
    if args.seed is not None:
        updates["seeds"] = [args.seed]
    if args.out is not None:
        updates["out_dir"] = args.out
    return cfg.model_copy(update=updates) if updates else cfg


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _cmd(args, cfg: ExperimentConfig) -> None:
    out = Path(cfg.out_dir)
    if args.command == "gen-data":
        log.info("dataset written to %s", write_dataset(cfg))
        cfg.dump(out / "config.json")
    elif args.command == "train":
        ds = get_dataset(cfg)
        for seed in cfg.seeds:
            log.info("checkpoint %s", train_and_save(cfg, seed, ds))
        cfg.dump(out / "config.json")
    elif args.command == "eval":
        ds = get_dataset(cfg)
        rows = []
        for seed in cfg.seeds:
            model = load_trained(cfg, seed, ds)
            row = {"seed": seed, "metric": METRICS[cfg.task],
                   "channel_free": evaluate(cfg.task, model, ds, None, None, None, cfg.eval_limit)}
            if args.snr is not None:
                row["snr_db"] = args.snr
                row["value"] = evaluate(cfg.task, model, ds, cfg.channel.link(), args.snr,
                                        eval_rng(seed, args.snr, cfg.channel.K), cfg.eval_limit)
            row["symbols"] = symbols_per_sample(cfg.task, model, ds, cfg.eval_limit)
            rows.append(row)
            log.info("%s", row)
        _write_json(out / "eval.json", rows)
    elif args.command == "sweep-snr":
        records = run_sweep(cfg)
        log.info("%d records written to %s", len(records), out / "sweep_snr.csv")
    elif args.command == "sweep-users":
        records = run_user_sweep(cfg)
        log.info("%d records written to %s", len(records), out / "sweep_users.csv")
    elif args.command == "account":
        mc = cfg.model_config_obj()
        report = {"symbols": account_symbols(cfg.task, mc, cfg.baseline.scheme),
                  "ops": account_ops(cfg.task, mc)}
        _write_json(out / "account.json", report)
        print(format_table(report["symbols"]))
        print()
        print(format_table(report["ops"]))
    elif args.command == "attention-dump":
        if cfg.task != "vqa":
            raise UsageError("attention-dump is only defined for the vqa task")
        ds = get_dataset(cfg)
        for seed in cfg.seeds:
            model = load_trained(cfg, seed, ds)
            te = ds.test_idx[: args.samples]
            with torch.no_grad():
                img = torch.as_tensor(ds.images[ds.scene_index[te]], dtype=torch.float32) / 255.0
                z_img = model.image_semantic(img)
                z_txt, mask = model.text_semantic(torch.as_tensor(ds.questions[te]))
                _, trace = model.joint_decode(z_img, z_txt, mask)
            arrays = {f"layer{i}": w.numpy() for i, w in enumerate(trace.guided_attention)}
            arrays["questions"] = ds.questions[te]
            arrays["answers"] = ds.answers[te]
            path = out / f"attention-seed{seed}.npz"
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savez(path, **arrays)
            log.info("attention maps for %d samples written to %s", len(te), path)
    elif args.command == "ablate-wiring":
        if cfg.task != "vqa":
            raise UsageError("ablate-wiring is only defined for the vqa task")
        ds = get_dataset(cfg)
        for seed in cfg.seeds:
            log.info("%s", run_wiring_ablation(cfg, seed, args.snr, ds))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = _load_config(args)
        _cmd(args, cfg)
    except UsageError as e:
        print(f"semcomm: error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - report any runtime failure with a status code
        print(f"semcomm: {args.command} failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
