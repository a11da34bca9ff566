"""SNR and user-count sweeps writing plot-ready CSV and JSON."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .runner import METRICS, evaluate, evaluate_baseline, get_dataset, load_trained, symbols_per_sample, train_model

COLUMNS = ("task", "snr_db", "users", "csi", "seed", "metric", "value", "symbols", "wall_s")


@dataclass
class SweepRecord:
    task: str
    snr_db: float
    users: int
    csi: str
    seed: int
    metric: str
    value: float
    symbols: float
    wall_s: float = 0.0


def csi_label(sigma_e_sq: float) -> str:
    return "perfect" if sigma_e_sq == 0 else "imperfect"


def eval_rng(seed: int, snr_db: float, users: int, salt: int = 0) -> np.random.Generator:
    """Evaluation stream keyed by the sweep point; CSI settings share it so A/B rows are paired."""
    return np.random.default_rng([seed, int(round(snr_db * 1000)) + 10**6, users, salt])


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_records(records: list[SweepRecord], stem) -> tuple[Path, Path]:
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    with csv_path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    json_path.write_text(json.dumps([asdict(r) for r in records], indent=1) + "\n")
    return csv_path, json_path


def read_records(path) -> list[SweepRecord]:
    with Path(path).open() as f:
        rows = list(csv.DictReader(f))
    return [SweepRecord(r["task"], float(r["snr_db"]), int(r["users"]), r["csi"], int(r["seed"]), r["metric"],
                        float(r["value"]), float(r["symbols"]), float(r["wall_s"])) for r in rows]


def _points(cfg: ExperimentConfig, snrs: list[float], users: list[int], train_if_missing: bool, stem: str):
    ds = get_dataset(cfg)
    records, timings = [], []
    metric = METRICS[cfg.task]
    for seed in cfg.seeds:
        model = load_trained(cfg, seed, ds, train_if_missing)
        for K in users:
            sym = symbols_per_sample(cfg.task, model, ds, cfg.eval_limit)
            for ci, sigma in enumerate(cfg.csi):
                link = cfg.channel.link(K=K, sigma_e_sq=sigma)
                for snr in snrs:
                    t0 = time.perf_counter()
                    value = evaluate(cfg.task, model, ds, link, snr, eval_rng(seed, snr, K), cfg.eval_limit)
                    dt = time.perf_counter() - t0
                    timings.append({"seed": seed, "users": K, "csi": sigma, "snr_db": snr, "wall_s": dt})
                    records.append(SweepRecord(cfg.task, float(snr), K, csi_label(sigma), seed, metric, value, sym,
                                               dt if cfg.record_wall_time else 0.0))
                    if cfg.baseline.enabled and cfg.task != "vqa":
                        t0 = time.perf_counter()
                        bval, bsym = evaluate_baseline(cfg.task, model, ds, link, snr, eval_rng(seed, snr, K, 1),
                                                       cfg.baseline.scheme, cfg.baseline.interleaver_seed,
                                                       cfg.eval_limit)
                        dt = time.perf_counter() - t0
                        records.append(SweepRecord(cfg.task, float(snr), K, csi_label(sigma), seed,
                                                   f"baseline_{metric}", bval, bsym,
                                                   dt if cfg.record_wall_time else 0.0))
    out = Path(cfg.out_dir)
    cfg.dump(out / "config.json")
    (out / f"{stem}_timings.json").write_text(json.dumps(timings, indent=1) + "\n")
    write_records(records, out / stem)
    return records


def run_sweep(cfg: ExperimentConfig, train_if_missing: bool = False) -> list[SweepRecord]:
    """Every (CSI, SNR, seed) point at the configured K; raises ``MissingCheckpoint`` without weights."""
    return _points(cfg, cfg.snr_db, [cfg.channel.K], train_if_missing, "sweep_snr")


def run_user_sweep(cfg: ExperimentConfig, train_if_missing: bool = False) -> list[SweepRecord]:
    """Fixed SNR (``user_snr_db``), varying the number of simultaneous users.

    IR and MT users are independent task instances; for VQA each image/text
    pair occupies two streams, so K must be even.
    """
    M = cfg.channel.M
    for K in cfg.users:
        if K > M:
            raise ValueError(f"K={K} users exceed M={M} receive antennas")
        if cfg.task == "vqa" and K % 2:
            raise ValueError(f"VQA needs image/text pairs; K={K} is odd")
        if cfg.channel.model == "awgn" and K != M:
            raise ValueError("AWGN sweeps require K == M")
    return _points(cfg, [cfg.user_snr_db], cfg.users, train_if_missing, "sweep_users")


def summarize(records: list[SweepRecord], metric: str | None = None) -> dict:
    """Mean and standard error across seeds for every (csi, users, snr) point."""
    groups: dict[tuple, list[float]] = {}
    for r in records:
        if metric is not None and r.metric != metric:
            continue
        groups.setdefault((r.metric, r.csi, r.users, r.snr_db), []).append(r.value)
    out = {}
    for key, vals in groups.items():
        v = np.asarray(vals)
        se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
        out[key] = {"mean": float(v.mean()), "se": se, "n": len(v)}
    return out


def run_wiring_ablation(cfg: ExperimentConfig, seed: int, snr_db: float, ds=None, trained: dict | None = None) -> dict:
    """VQA accuracy with layer-wise versus classic fusion wiring, same data, seed and channel draws.

    ``trained`` may supply already trained models keyed ``"layerwise"`` or
    ``"classic"``; missing variants are trained from ``cfg``. The result is
    also written to ``ablation-seed{seed}.json`` in the output directory.
    """
    if cfg.task != "vqa":
        raise ValueError("the wiring ablation is only defined for the vqa task")
    ds = get_dataset(cfg) if ds is None else ds
    trained = trained or {}
    link = cfg.channel.link()
    out = {"seed": seed, "snr_db": snr_db, "channel": cfg.channel.model, "metric": METRICS["vqa"]}
    for name, flag in (("layerwise", True), ("classic", False)):
        model = trained.get(name)
        if model is None:
            variant = cfg.model_copy(update={"model": {**cfg.model, "layerwise": flag}})
            model = train_model(variant, seed, ds)
        if model.cfg.layerwise != flag:
            raise ValueError(f"model supplied as {name!r} has layerwise={model.cfg.layerwise}")
        out[name] = evaluate("vqa", model, ds, link, snr_db, eval_rng(seed, snr_db, link.K), cfg.eval_limit)
        out[f"{name}_channel_free"] = evaluate("vqa", model, ds, None, None, None, cfg.eval_limit)
    path = Path(cfg.out_dir) / f"ablation-seed{seed}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=2) + "\n")
    return out
