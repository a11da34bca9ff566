"""Dataset persistence: ``.npy`` tensors plus a JSON manifest."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .retrieval import RetrievalDataset
from .translation import ParallelCorpus, ToyGrammar
from .vqa import SceneObject, VqaDataset

MANIFEST = "manifest.json"


def _pad(seqs: list[list[int]]) -> np.ndarray:
    width = max((len(s) for s in seqs), default=0)
    out = np.zeros((len(seqs), width), dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def _unpad(a: np.ndarray, lengths: np.ndarray) -> list[list[int]]:
    return [row[:n].tolist() for row, n in zip(a, lengths)]


def save_dataset(ds, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if isinstance(ds, RetrievalDataset):
        arrays = {"images": ds.images, "labels": ds.labels}
        manifest = {"kind": "retrieval", "classes": [list(c) for c in ds.classes],
                    "train_classes": ds.train_classes, "test_classes": ds.test_classes}
    elif isinstance(ds, ParallelCorpus):
        arrays = {"source": _pad(ds.source), "target": _pad(ds.target),
                  "source_len": np.array([len(s) for s in ds.source]),
                  "target_len": np.array([len(t) for t in ds.target]),
                  "train_idx": ds.train_idx, "test_idx": ds.test_idx}
        g = ds.grammar
        manifest = {"kind": "translation", "src_vocab": ["<pad>", "<bos>", "<eos>"] + g.src_words,
                    "tgt_vocab": ["<pad>", "<bos>", "<eos>"] + g.tgt_words}
    elif isinstance(ds, VqaDataset):
        arrays = {"images": ds.images, "questions": ds.questions, "answers": ds.answers,
                  "scene_index": ds.scene_index, "train_idx": ds.train_idx, "test_idx": ds.test_idx}
        manifest = {"kind": "vqa", "answer_set": list(ds.answer_set), "vocab": list(ds.vocab),
                    "scenes": [[o.__dict__ for o in s] for s in ds.scenes]}
    else:
        raise TypeError(f"cannot save {type(ds).__name__}")
    for name, a in arrays.items():
        np.save(path / f"{name}.npy", np.ascontiguousarray(a))
    manifest.update({"seed": ds.seed, "params": ds.meta, "arrays": sorted(arrays)})
    (path / MANIFEST).write_text(json.dumps(manifest, indent=2))
    return path


def load_dataset(path):
    path = Path(path)
    man = json.loads((path / MANIFEST).read_text())
    a = {name: np.load(path / f"{name}.npy") for name in man["arrays"]}
    kind = man["kind"]
    if kind == "retrieval":
        return RetrievalDataset(a["images"], a["labels"], [tuple(c) for c in man["classes"]],
                                man["train_classes"], man["test_classes"], man["seed"], man["params"])
    if kind == "translation":
        p = man["params"]
        g = ToyGrammar(p["num_words"], p["window"], p["grammar_seed"])
        return ParallelCorpus(_unpad(a["source"], a["source_len"]), _unpad(a["target"], a["target_len"]), g,
                              a["train_idx"], a["test_idx"], man["seed"], p)
    if kind == "vqa":
        scenes = [[SceneObject(**o) for o in s] for s in man["scenes"]]
        return VqaDataset(a["images"], scenes, a["questions"], a["answers"], a["scene_index"], a["train_idx"],
                          a["test_idx"], man["seed"], tuple(man["answer_set"]), tuple(man["vocab"]), man["params"])
    raise ValueError(f"unknown dataset kind {kind!r}")
