"""Toy retrieval set: classes are (shape, color) pairs with jittered placement."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .render import COLORS, SHAPES, blank, draw, to_uint8


@dataclass
class RetrievalDataset:
    images: np.ndarray  # (N, H, W, 3) uint8
    labels: np.ndarray  # (N,) int64
    classes: list[tuple[str, str]]
    train_classes: list[int]
    test_classes: list[int]
    seed: int
    meta: dict = field(default_factory=dict)

    def split(self, part: str) -> tuple[np.ndarray, np.ndarray]:
        keep = np.isin(self.labels, self.train_classes if part == "train" else self.test_classes)
        return self.images[keep], self.labels[keep]


def class_table(num_classes: int) -> list[tuple[int, int]]:
    """(shape, color) index pairs for each label.

    Classes are laid out along color-keyed diagonals: diagonal ``k`` pairs
    color ``c`` with shape ``(c + k) mod S``. The first half of the labels
    takes the earlier diagonals and the second half the later ones, so with
    16 classes the train and test halves are disjoint, every color occurs
    once in each half, and the test classes are told apart by attributes the
    encoder has seen during training.
    """
    S, C = len(SHAPES), len(COLORS)
    if num_classes > S * C:
        raise ValueError(f"at most {S * C} classes supported, got {num_classes}")
    order = [((c + k) % S, c) for k in range(S) for c in range(C)]
    return order[:num_classes]


def render_sample(shape: str, color: str, image_size: int, rng: np.random.Generator) -> np.ndarray:
    canvas = blank(image_size, image_size)
    radius = image_size * rng.uniform(0.22, 0.32)
    margin = radius + 0.5
    cx = rng.uniform(margin, image_size - margin)
    cy = rng.uniform(margin, image_size - margin)
    draw(canvas, shape, COLORS[color], cx, cy, radius)
    return to_uint8(canvas)


def gen_retrieval(num_classes: int = 16, per_class: int = 32, image_size: int = 32, seed: int = 0) -> RetrievalDataset:
    """Render ``num_classes * per_class`` images; labels ``0..num_classes-1`` in class-major order."""
    if num_classes < 4:
        raise ValueError(f"need at least 4 classes, got {num_classes}")
    if image_size < 12:
        raise ValueError(f"image size {image_size} too small to render shapes")
    table = class_table(num_classes)
    names = [(SHAPES[s], list(COLORS)[c]) for s, c in table]
    rng = np.random.default_rng(seed)
    images = np.empty((num_classes * per_class, image_size, image_size, 3), dtype=np.uint8)
    labels = np.repeat(np.arange(num_classes), per_class)
    for i, lab in enumerate(labels):
        images[i] = render_sample(*names[lab], image_size, rng)
    n_train = (num_classes + 1) // 2
    return RetrievalDataset(
        images=images,
        labels=labels,
        classes=names,
        train_classes=list(range(n_train)),
        test_classes=list(range(n_train, num_classes)),
        seed=seed,
        meta={"num_classes": num_classes, "per_class": per_class, "image_size": image_size},
    )


def augment(images: np.ndarray, rng: np.random.Generator, max_shift: int = 2) -> np.ndarray:
    """Random horizontal flip plus a small circular shift (training-time augmentation)."""
    out = images.copy()
    flip = rng.random(len(out)) < 0.5
    out[flip] = out[flip, :, ::-1]
    for i in range(len(out)):
        dy, dx = rng.integers(-max_shift, max_shift + 1, size=2)
        out[i] = np.roll(out[i], (dy, dx), axis=(0, 1))
    return out
