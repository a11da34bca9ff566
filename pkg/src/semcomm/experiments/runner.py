"""Dataset/model construction, training runs and task evaluation from a config."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from ..baselines import baseline_end_to_end
from ..data import answer_accuracy, corpus_bleu, gen_retrieval, gen_translation, gen_vqa, load_dataset, save_dataset
from ..data.retrieval import augment
from ..transceivers import IRTransceiver, LinkConfig, MTTransceiver, VQATransceiver, ir_retrieve
from ..training import JsonlLog, images_to_tensor, train_ir, train_mt, train_vqa
from .checkpoint import load_model, save_model
from .config import ExperimentConfig

METRICS = {"ir": "recall@1", "mt": "bleu", "vqa": "accuracy"}
EVAL_CHUNK = 256


class MissingCheckpoint(FileNotFoundError):
    pass


def build_dataset(cfg: ExperimentConfig):
    gen = {"ir": gen_retrieval, "mt": gen_translation, "vqa": gen_vqa}[cfg.task]
    return gen(**cfg.dataset)


def dataset_dir(cfg: ExperimentConfig) -> Path:
    return Path(cfg.out_dir) / "data"


def get_dataset(cfg: ExperimentConfig):
    """Load the persisted dataset if ``gen-data`` wrote one, otherwise generate it."""
    d = dataset_dir(cfg)
    if (d / "manifest.json").exists():
        return load_dataset(d)
    return build_dataset(cfg)


def write_dataset(cfg: ExperimentConfig) -> Path:
    return save_dataset(build_dataset(cfg), dataset_dir(cfg))


def build_model(cfg: ExperimentConfig, ds=None) -> torch.nn.Module:
    mc = cfg.model_config_obj()
    if ds is not None:
        if cfg.task == "mt" and max(mc.src_vocab, mc.tgt_vocab) < ds.grammar.vocab_size:
            raise ValueError(f"model vocabulary smaller than the corpus vocabulary ({ds.grammar.vocab_size})")
        if cfg.task == "vqa":
            if mc.vocab < ds.vocab_size or mc.num_answers < len(ds.answer_set):
                raise ValueError("model vocabulary or answer set smaller than the dataset's")
            if mc.max_question_len < ds.questions.shape[1]:
                raise ValueError("model max_question_len shorter than the dataset's questions")
    return {"ir": IRTransceiver, "mt": MTTransceiver, "vqa": VQATransceiver}[cfg.task](mc)


def checkpoint_path(cfg: ExperimentConfig, seed: int) -> Path:
    return Path(cfg.out_dir) / "checkpoints" / f"{cfg.task}-seed{seed}.ckpt"


def _phase(cfg: ExperimentConfig, name: str, seed: int, index: int):
    s = cfg.phase(name)
    return None if s is None else s.phase_config(seed * 100 + index)


def train_model(cfg: ExperimentConfig, seed: int, ds=None, log_path=None, phases=None):
    """Train one model for ``seed``; ``phases`` limits the run to a prefix of the task's phases."""
    ds = get_dataset(cfg) if ds is None else ds
    torch.manual_seed(seed)
    model = build_model(cfg, ds)
    log = None
    if log_path is not None:
        Path(log_path).unlink(missing_ok=True)
        log = JsonlLog(log_path)
    link = cfg.channel.link()
    want = set(phases) if phases is not None else {"semantic", "jsc", "whole"}
    sem = _phase(cfg, "semantic", seed, 0)
    jsc = _phase(cfg, "jsc", seed, 1)
    whole = _phase(cfg, "whole", seed, 2) if "whole" in want else None
    if sem is None or jsc is None:
        raise ValueError("config must define 'semantic' and 'jsc' training phases")
    if cfg.task == "ir":
        x, y = ds.split("train")
        train_ir(model, x, y, link, sem, jsc, log, augment if cfg.augment else None)
    elif cfg.task == "mt":
        src, tgt = ds.split("train")
        train_mt(model, src, tgt, link, sem, jsc, whole, log)
    else:
        train_vqa(model, ds, link, sem, jsc, whole, log)
    model.eval()
    return model


def train_and_save(cfg: ExperimentConfig, seed: int, ds=None) -> Path:
    logs = Path(cfg.out_dir) / "logs" / f"{cfg.task}-seed{seed}.jsonl"
    model = train_model(cfg, seed, ds, logs)
    return save_model(checkpoint_path(cfg, seed), model, cfg.training_hash(), {"seed": seed, "task": cfg.task})


def load_trained(cfg: ExperimentConfig, seed: int, ds=None, train_if_missing: bool = False):
    path = checkpoint_path(cfg, seed)
    if not path.exists():
        if not train_if_missing:
            raise MissingCheckpoint(f"no checkpoint for seed {seed} at {path}; run 'train' first")
        train_and_save(cfg, seed, ds)
    model = build_model(cfg, ds)
    load_model(path, model, cfg.training_hash())
    model.eval()
    return model


# ---------------------------------------------------------------- evaluation

def _subset(n: int, limit: int | None) -> np.ndarray:
    if limit is None or limit >= n:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, limit).round().astype(int))


def symbols_per_sample(task: str, model, ds, limit: int | None = None) -> float:
    """Complex channel uses per sample actually emitted by the simulator (silent pad rows excluded)."""
    c = model.cfg
    if task == "ir":
        return float(c.L_C)
    if task == "mt":
        src, _ = ds.split("test")
        idx = _subset(len(src), limit)
        return float(np.mean([len(src[i]) for i in idx]) * c.L_C)
    te = ds.test_idx[_subset(len(ds.test_idx), limit)]
    q_tokens = (ds.questions[te] != 0).sum(1) + 1  # + CLS
    return float(c.image_tokens * c.L_C_img + q_tokens.mean() * c.L_C_txt)


@torch.no_grad()
def evaluate(task: str, model, ds, link: LinkConfig | None, snr_db: float | None, rng,
             limit: int | None = None) -> float:
    """Task metric on the held-out split. ``link=None`` evaluates the channel-free semantic path."""
    model.eval()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if task == "ir":
        x, y = ds.split("test")
        idx = _subset(len(x), limit)
        x, y = x[idx], y[idx]
        zs, zh = [], []
        for i in range(0, len(x), EVAL_CHUNK):
            img = images_to_tensor(x[i : i + EVAL_CHUNK])
            if link is None:
                z = model.semantic_encode(img)
                z_hat = z
            else:
                z, z_hat = model(img, link, snr_db, rng)
            zs.append(z)
            zh.append(z_hat)
        z, z_hat = torch.cat(zs), torch.cat(zh)
        top = ir_retrieve(z_hat, z, k=1, exclude=np.arange(len(z)))[:, 0]
        return float(np.mean(y[top] == y))
    if task == "mt":
        src, tgt = ds.split("test")
        idx = _subset(len(src), limit)
        hyps = []
        for i in range(0, len(idx), EVAL_CHUNK):
            part = idx[i : i + EVAL_CHUNK]
            hyps += model.translate(model.pad_source([src[j] for j in part]), link, snr_db, rng)
        return corpus_bleu(hyps, [tgt[j] for j in idx])
    te = ds.test_idx[_subset(len(ds.test_idx), limit)]
    preds = []
    for i in range(0, len(te), EVAL_CHUNK):
        part = te[i : i + EVAL_CHUNK]
        img = images_to_tensor(ds.images[ds.scene_index[part]])
        logits = model(img, torch.as_tensor(ds.questions[part]), link, snr_db, rng)
        preds.append(logits.argmax(-1).numpy())
    return answer_accuracy(np.concatenate(preds), ds.answers[te])


@torch.no_grad()
def evaluate_baseline(task: str, model, ds, link: LinkConfig, snr_db: float, rng, scheme: str,
                      interleaver_seed: int | None = 0, limit: int | None = None) -> tuple[float, float]:
    """Task metric when the raw source goes through the bit-level reference link.

    The receiver runs the semantic model channel-free on whatever the
    reference link delivered; an undecodable payload counts as a task
    failure. Returns ``(metric, symbols per sample)``.
    """
    model.eval()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    K = link.K

    def send(payloads, kind):
        out = []
        for i in range(0, len(payloads), K):
            out += baseline_end_to_end(payloads[i : i + K], kind, scheme, link, snr_db, rng, interleaver_seed)
        return out

    if task == "ir":
        x, y = ds.split("test")
        idx = _subset(len(x), limit)
        x, y = x[idx], y[idx]
        res = send(list(x), "image_raw")
        got = np.stack([r.payload if not r.failed and r.payload.shape == x[0].shape else np.zeros_like(x[0])
                        for r in res])
        failed = np.array([r.failed for r in res])
        z = model.semantic_encode(images_to_tensor(x))
        z_hat = model.semantic_encode(images_to_tensor(got))
        top = ir_retrieve(z_hat, z, k=1, exclude=np.arange(len(z)))[:, 0]
        hits = (y[top] == y) & ~failed
        return float(hits.mean()), float(np.mean([r.symbols for r in res]))
    if task == "mt":
        src, tgt = ds.split("test")
        idx = _subset(len(src), limit)
        g = ds.grammar
        res = send([g.render(src[i]) for i in idx], "text_utf8")
        hyps = []
        for r in res:
            try:
                ids = [] if r.failed else g.parse(r.payload)
            except (KeyError, ValueError):
                ids = []
            if ids and len(ids) <= model.cfg.max_len:
                hyps += model.translate(model.pad_source([ids]))
            else:
                hyps.append([])
        return corpus_bleu(hyps, [tgt[i] for i in idx]), float(np.mean([r.symbols for r in res]))
    raise ValueError(f"no bit-level reference wired for task {task!r}")
