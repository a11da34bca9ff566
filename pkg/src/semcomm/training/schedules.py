"""Multi-phase training schedules for the three transceivers.

Each phase optimizes only its own parameter groups; everything else is held
in eval mode and excluded from the optimizer, so frozen tensors come out of a
phase bit-identical. Phases append their name to ``model.trained_phases``,
which is what the later phases check and what checkpoints record.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import torch
from torch import nn

from ..transceivers import BOS, EOS, PAD, IRTransceiver, LinkConfig, MTTransceiver, VQATransceiver
from .losses import loss_ce, loss_ir, loss_mse, loss_mse_joint


class TrainingDiverged(RuntimeError):
    pass


class PhaseOrderError(RuntimeError):
    pass


@dataclass
class PhaseConfig:
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 0.0
    batch_size: int = 64
    epochs: int = 10
    margin: float = 0.5
    snr_range_db: tuple[float, float] = (0.0, 18.0)
    warmup_steps: int = 0
    clip_norm: float | None = 1.0
    freeze_image_encoder: bool = False
    seed: int = 0


@dataclass
class LossReport:
    phase: str
    loss: str
    value: float
    grad_norm: float
    step: int
    epoch: int


class JsonlLog:
    """Append-only line-delimited JSON sink for loss reports."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def __call__(self, report: LossReport) -> None:
        with self.path.open("a") as f:
            f.write(json.dumps(asdict(report)) + "\n")


DIVERGENCE_GRAD_NORM = 1e6


def _params(modules: Iterable[nn.Module]) -> list[nn.Parameter]:
    seen, out = set(), []
    for m in modules:
        for p in m.parameters():
            if id(p) not in seen:
                seen.add(id(p))
                out.append(p)
    return out


class _Phase:
    def __init__(self, name: str, loss_name: str, model: nn.Module, trainable: list[nn.Module], cfg: PhaseConfig,
                 log: Callable[[LossReport], None] | None):
        self.name, self.loss_name, self.cfg, self.log = name, loss_name, cfg, log
        self.model = model
        self.trainable = trainable
        self.params = _params(trainable)
        self.opt = torch.optim.Adam(self.params, lr=cfg.lr, betas=tuple(cfg.betas), weight_decay=cfg.weight_decay)
        self.step_idx = 0
        self.epoch = 0
        self.reports: list[LossReport] = []

    def __enter__(self):
        self.model.eval()
        keep = {id(p) for p in self.params}
        self._saved = {}
        for p in self.model.parameters():
            self._saved[p] = p.requires_grad
            p.requires_grad_(id(p) in keep)
        for m in self.trainable:
            m.train()
        return self

    def __exit__(self, *exc):
        for p, flag in self._saved.items():
            p.requires_grad_(flag)
        self.model.eval()
        if exc[0] is None:
            phases = getattr(self.model, "trained_phases", [])
            self.model.trained_phases = phases + [self.name]
        return False

    def step(self, loss: torch.Tensor) -> float:
        value = float(loss.detach())
        if not math.isfinite(value):
            raise TrainingDiverged(f"{self.name}: non-finite loss at step {self.step_idx}")
        self.opt.zero_grad(set_to_none=True)
        loss.backward()
        limit = self.cfg.clip_norm if self.cfg.clip_norm else float("inf")
        gn = float(torch.nn.utils.clip_grad_norm_(self.params, limit))
        if not math.isfinite(gn) or gn > DIVERGENCE_GRAD_NORM:
            raise TrainingDiverged(f"{self.name}: gradient norm {gn:.3g} at step {self.step_idx}")
        if self.cfg.warmup_steps:
            scale = min(1.0, (self.step_idx + 1) / self.cfg.warmup_steps)
            for g in self.opt.param_groups:
                g["lr"] = self.cfg.lr * scale
        self.opt.step()
        rep = LossReport(self.name, self.loss_name, value, gn, self.step_idx, self.epoch)
        self.reports.append(rep)
        if self.log is not None:
            self.log(rep)
        self.step_idx += 1
        return value


def _snr(rng: np.random.Generator, cfg: PhaseConfig) -> float:
    lo, hi = cfg.snr_range_db
    return float(rng.uniform(lo, hi))


def _batches(n: int, batch_size: int, rng: np.random.Generator, drop_last: bool = True):
    order = rng.permutation(n)
    stop = n - (n % batch_size) if drop_last and n >= batch_size else n
    for i in range(0, stop, batch_size):
        yield order[i : i + batch_size]


def images_to_tensor(images: np.ndarray) -> torch.Tensor:
    return torch.as_tensor(np.ascontiguousarray(images), dtype=torch.float32) / 255.0


def _require(model, phases: Iterable[str], task: str) -> None:
    done = getattr(model, "trained_phases", [])
    missing = [p for p in phases if p not in done]
    if missing:
        raise PhaseOrderError(f"{task}: phase(s) {missing} must run first (have {done})")


# ---------------------------------------------------------------- retrieval

def _balanced_batches(labels: np.ndarray, batch_size: int, rng: np.random.Generator):
    """P classes x Q samples per batch, covering each sample about once per epoch."""
    classes = np.unique(labels)
    Q = max(2, batch_size // len(classes))
    P = max(2, min(len(classes), batch_size // Q))
    pools = {c: list(rng.permutation(np.flatnonzero(labels == c))) for c in classes}
    for _ in range(len(labels) // (P * Q)):
        chosen = rng.choice(classes, size=P, replace=False)
        idx = []
        for c in chosen:
            if len(pools[c]) < Q:
                pools[c] = list(rng.permutation(np.flatnonzero(labels == c)))
            idx.extend(pools[c][:Q])
            pools[c] = pools[c][Q:]
        yield np.asarray(idx)


def train_ir_semantic(model: IRTransceiver, images: np.ndarray, labels: np.ndarray, cfg: PhaseConfig,
                      log=None, augment_fn=None) -> list[LossReport]:
    rng = np.random.default_rng(cfg.seed)
    with _Phase("semantic", "ir", model, model.semantic_modules(), cfg, log) as ph:
        for ph.epoch in range(cfg.epochs):
            for idx in _balanced_batches(labels, cfg.batch_size, rng):
                x = images[idx] if augment_fn is None else augment_fn(images[idx], rng)
                z = model.semantic_encode(images_to_tensor(x))
                ph.step(loss_ir(z, torch.as_tensor(labels[idx]), cfg.margin))
    return ph.reports


def train_ir_jsc(model: IRTransceiver, images: np.ndarray, link: LinkConfig, cfg: PhaseConfig, log=None,
                 augment_fn=None) -> list[LossReport]:
    _require(model, ["semantic"], "IR JSC phase")
    rng = np.random.default_rng(cfg.seed)
    with _Phase("jsc", "mse", model, model.jsc_modules(), cfg, log) as ph:
        for ph.epoch in range(cfg.epochs):
            for idx in _batches(len(images), cfg.batch_size, rng):
                x = images[idx] if augment_fn is None else augment_fn(images[idx], rng)
                with torch.no_grad():
                    z = model.semantic_encode(images_to_tensor(x))
                _, z_hat = _ir_jsc_forward(model, z, link, _snr(rng, cfg), rng)
                ph.step(loss_mse(z, z_hat))
    return ph.reports


def _ir_jsc_forward(model: IRTransceiver, z, link, snr_db, rng):
    from ..transceivers.link import through_link

    x = through_link(model.jsc_encode(z), link, snr_db, rng, per_block=False)
    return z, model.jsc_decode(x)


def train_ir(model: IRTransceiver, images, labels, link: LinkConfig, semantic: PhaseConfig, jsc: PhaseConfig,
             log=None, augment_fn=None) -> list[LossReport]:
    """Metric learning on the semantic encoder, then the JSC codec through the channel."""
    reports = train_ir_semantic(model, images, labels, semantic, log, augment_fn)
    return reports + train_ir_jsc(model, images, link, jsc, log, augment_fn)


# -------------------------------------------------------------- translation

def mt_batch(src: list[list[int]], tgt: list[list[int]], max_len: int):
    """Padded source ``(B, T)``, target input ``(B, T)``, target output with EOS ``(B, T+1)`` and its mask."""
    B = len(src)
    s = torch.full((B, max_len), PAD, dtype=torch.long)
    t = torch.full((B, max_len), PAD, dtype=torch.long)
    out = torch.full((B, max_len + 1), PAD, dtype=torch.long)
    for i, (a, b) in enumerate(zip(src, tgt)):
        if len(a) > max_len or len(b) > max_len:
            raise ValueError(f"sentence longer than max_len={max_len}")
        s[i, : len(a)] = torch.as_tensor(a)
        t[i, : len(b)] = torch.as_tensor(b)
        out[i, : len(b)] = torch.as_tensor(b)
        out[i, len(b)] = EOS
    mask = torch.arange(max_len + 1)[None, :] <= torch.as_tensor([len(b) for b in tgt])[:, None]
    return s, t, out, mask


def train_mt_semantic(model: MTTransceiver, src, tgt, cfg: PhaseConfig, log=None) -> list[LossReport]:
    rng = np.random.default_rng(cfg.seed)
    T = model.cfg.max_len
    with _Phase("semantic", "ce", model, model.semantic_modules(), cfg, log) as ph:
        for ph.epoch in range(cfg.epochs):
            for idx in _batches(len(src), cfg.batch_size, rng):
                s, t, out, mask = mt_batch([src[i] for i in idx], [tgt[i] for i in idx], T)
                ph.step(loss_ce(model(s, t), out, mask))
    return ph.reports


def train_mt_jsc(model: MTTransceiver, src, link: LinkConfig, cfg: PhaseConfig, log=None) -> list[LossReport]:
    _require(model, ["semantic"], "MT JSC phase")
    rng = np.random.default_rng(cfg.seed)
    with _Phase("jsc", "mse", model, model.jsc_modules(), cfg, log) as ph:
        for ph.epoch in range(cfg.epochs):
            for idx in _batches(len(src), cfg.batch_size, rng):
                s = model.pad_source([src[i] for i in idx])
                with torch.no_grad():
                    z, mask = model.semantic_encode(s)
                z_hat = model.channel(z, link, _snr(rng, cfg), rng, per_block=False, mask=mask)
                ph.step(loss_mse(z, z_hat, mask))
    return ph.reports


def train_mt_whole(model: MTTransceiver, src, tgt, link: LinkConfig, cfg: PhaseConfig, log=None) -> list[LossReport]:
    _require(model, ["semantic", "jsc"], "MT whole-network phase")
    rng = np.random.default_rng(cfg.seed)
    T = model.cfg.max_len
    modules = model.semantic_modules() + model.jsc_modules()
    with _Phase("whole", "ce", model, modules, cfg, log) as ph:
        for ph.epoch in range(cfg.epochs):
            for idx in _batches(len(src), cfg.batch_size, rng):
                s, t, out, mask = mt_batch([src[i] for i in idx], [tgt[i] for i in idx], T)
                logits = model(s, t, link, _snr(rng, cfg), rng, per_block=False)
                ph.step(loss_ce(logits, out, mask))
    return ph.reports


def train_mt(model: MTTransceiver, src, tgt, link: LinkConfig, semantic: PhaseConfig, jsc: PhaseConfig,
             whole: PhaseConfig | None, log=None) -> list[LossReport]:
    reports = train_mt_semantic(model, src, tgt, semantic, log)
    reports += train_mt_jsc(model, src, link, jsc, log)
    if whole is not None:
        reports += train_mt_whole(model, src, tgt, link, whole, log)
    return reports


# ---------------------------------------------------------------------- VQA

def _vqa_batch(images, questions, answers, scene_index, idx):
    img = images_to_tensor(images[scene_index[idx]])
    return img, torch.as_tensor(questions[idx]), torch.as_tensor(answers[idx])


def train_vqa_semantic(model: VQATransceiver, ds, cfg: PhaseConfig, log=None) -> list[LossReport]:
    rng = np.random.default_rng(cfg.seed)
    tr = ds.train_idx
    with _Phase("semantic", "ce", model, model.semantic_modules(), cfg, log) as ph:
        for ph.epoch in range(cfg.epochs):
            for b in _batches(len(tr), cfg.batch_size, rng):
                img, q, a = _vqa_batch(ds.images, ds.questions, ds.answers, ds.scene_index, tr[b])
                ph.step(loss_ce(model(img, q), a))
    return ph.reports


def train_vqa_jsc(model: VQATransceiver, ds, link: LinkConfig, cfg: PhaseConfig, log=None) -> list[LossReport]:
    _require(model, ["semantic"], "VQA JSC phase")
    rng = np.random.default_rng(cfg.seed)
    tr = ds.train_idx
    with _Phase("jsc", "mse_joint", model, model.jsc_modules(), cfg, log) as ph:
        for ph.epoch in range(cfg.epochs):
            for b in _batches(len(tr), cfg.batch_size, rng):
                img, q, _ = _vqa_batch(ds.images, ds.questions, ds.answers, ds.scene_index, tr[b])
                with torch.no_grad():
                    z_img = model.image_semantic(img)
                    z_txt, mask = model.text_semantic(q)
                zi_hat, zt_hat = model.recover(z_img, z_txt, link, _snr(rng, cfg), rng, per_block=False,
                                               text_mask=mask)
                ph.step(loss_mse_joint(z_img, zi_hat, z_txt, zt_hat, mask))
    return ph.reports


def train_vqa_whole(model: VQATransceiver, ds, link: LinkConfig, cfg: PhaseConfig, log=None) -> list[LossReport]:
    _require(model, ["semantic", "jsc"], "VQA whole-network phase")
    rng = np.random.default_rng(cfg.seed)
    tr = ds.train_idx
    frozen = {id(m) for m in model.image_encoder_modules()} if cfg.freeze_image_encoder else set()
    modules = [m for m in model.semantic_modules() + model.jsc_modules() if id(m) not in frozen]
    with _Phase("whole", "ce", model, modules, cfg, log) as ph:
        for ph.epoch in range(cfg.epochs):
            for b in _batches(len(tr), cfg.batch_size, rng):
                img, q, a = _vqa_batch(ds.images, ds.questions, ds.answers, ds.scene_index, tr[b])
                logits = model(img, q, link, _snr(rng, cfg), rng, per_block=False)
                ph.step(loss_ce(logits, a))
    return ph.reports


def train_vqa(model: VQATransceiver, ds, link: LinkConfig, semantic: PhaseConfig, jsc: PhaseConfig,
              whole: PhaseConfig | None, log=None) -> list[LossReport]:
    reports = train_vqa_semantic(model, ds, semantic, log)
    reports += train_vqa_jsc(model, ds, link, jsc, log)
    if whole is not None:
        reports += train_vqa_whole(model, ds, link, whole, log)
    return reports
