"""CLEVR-like toy VQA: colored shapes on a grid, templated questions, oracle answers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..transceivers.mt import NUM_SPECIAL, PAD
from .render import COLORS, blank, draw, to_uint8

VQA_SHAPES = ("circle", "square", "triangle")
VQA_COLORS = ("red", "green", "blue", "yellow")
ANSWERS = ("no", "yes", "0", "1", "2", "3", "4", "5") + VQA_COLORS + VQA_SHAPES
_WORDS = ("is", "there", "a", "how", "many", "objects", "what", "color", "shape", "the", "object")
QUESTION_WORDS = _WORDS + VQA_COLORS + VQA_SHAPES
MAX_QUESTION_LEN = 6
_WORD_ID = {w: NUM_SPECIAL + i for i, w in enumerate(QUESTION_WORDS)}


@dataclass(frozen=True)
class SceneObject:
    row: int
    col: int
    shape: str
    color: str


def encode_question(words: list[str]) -> list[int]:
    return [_WORD_ID[w] for w in words]


def decode_question(ids) -> list[str]:
    return [QUESTION_WORDS[int(t) - NUM_SPECIAL] for t in ids if int(t) != PAD]


def oracle_answer(scene: list[SceneObject], words: list[str]) -> str:
    """Answer a templated question from the scene graph alone."""
    if words[:3] == ["is", "there", "a"]:
        color, shape = words[3], words[4]
        return "yes" if any(o.color == color and o.shape == shape for o in scene) else "no"
    if words[:2] == ["how", "many"]:
        attr = words[2]
        n = sum(1 for o in scene if attr in (o.color, o.shape))
        return str(n)
    if words[:4] == ["what", "color", "is", "the"]:
        matches = [o for o in scene if o.shape == words[4]]
        if len(matches) != 1:
            raise ValueError("attribute question needs a unique referent")
        return matches[0].color
    if words[:4] == ["what", "shape", "is", "the"]:
        matches = [o for o in scene if o.color == words[4]]
        if len(matches) != 1:
            raise ValueError("attribute question needs a unique referent")
        return matches[0].shape
    raise ValueError(f"unknown question template: {' '.join(words)}")


@dataclass
class VqaDataset:
    images: np.ndarray  # (S, H, W, 3) uint8
    scenes: list[list[SceneObject]]
    questions: np.ndarray  # (Q, MAX_QUESTION_LEN) int64, PAD-padded
    answers: np.ndarray  # (Q,) int64 into ANSWERS
    scene_index: np.ndarray  # (Q,) int64
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    answer_set: tuple[str, ...] = ANSWERS
    vocab: tuple[str, ...] = QUESTION_WORDS
    meta: dict = field(default_factory=dict)

    @property
    def vocab_size(self) -> int:
        return NUM_SPECIAL + len(self.vocab)

    def verify(self) -> None:
        for q, a, s in zip(self.questions, self.answers, self.scene_index):
            if oracle_answer(self.scenes[s], decode_question(q)) != self.answer_set[a]:
                raise AssertionError("stored answer disagrees with scene-graph oracle")


def _sample_question(scene: list[SceneObject], rng: np.random.Generator) -> list[str]:
    shapes = [o.shape for o in scene]
    colors = [o.color for o in scene]
    templates = ["exist", "count"]
    if any(shapes.count(s) == 1 for s in VQA_SHAPES):
        templates.append("color_of")
    if any(colors.count(c) == 1 for c in VQA_COLORS):
        templates.append("shape_of")
    kind = templates[rng.integers(len(templates))]
    if kind == "exist":
        if rng.random() < 0.5:
            o = scene[rng.integers(len(scene))]
            color, shape = o.color, o.shape
        else:
            color, shape = VQA_COLORS[rng.integers(4)], VQA_SHAPES[rng.integers(3)]
        return ["is", "there", "a", color, shape]
    if kind == "count":
        attr = (VQA_COLORS + VQA_SHAPES)[rng.integers(len(VQA_COLORS) + len(VQA_SHAPES))]
        return ["how", "many", attr, "objects"]
    if kind == "color_of":
        unique = [s for s in VQA_SHAPES if shapes.count(s) == 1]
        return ["what", "color", "is", "the", unique[rng.integers(len(unique))]]
    unique = [c for c in VQA_COLORS if colors.count(c) == 1]
    return ["what", "shape", "is", "the", unique[rng.integers(len(unique))], "object"]


def render_scene(scene: list[SceneObject], grid: int, cell: int) -> np.ndarray:
    canvas = blank(grid * cell, grid * cell)
    for o in scene:
        c = (o.col + 0.5) * cell
        r = (o.row + 0.5) * cell
        draw(canvas, o.shape, COLORS[o.color], c, r, 0.4 * cell)
    return to_uint8(canvas)


def gen_vqa(num_scenes: int = 1000, questions_per_scene: int = 3, grid: int = 3, seed: int = 0, cell: int = 8,
            min_objects: int = 2, max_objects: int = 5, test_fraction: float = 0.2) -> VqaDataset:
    """Scenes of ``min_objects..max_objects`` objects on distinct cells of a ``grid x grid`` board."""
    if grid < 2:
        raise ValueError(f"grid must be at least 2x2, got {grid}")
    max_objects = min(max_objects, grid * grid)
    rng = np.random.default_rng(seed)
    scenes, images = [], []
    qs, ans, sidx = [], [], []
    for s in range(num_scenes):
        n = int(rng.integers(min_objects, max_objects + 1))
        cells = rng.choice(grid * grid, size=n, replace=False)
        scene = [SceneObject(int(c) // grid, int(c) % grid, VQA_SHAPES[rng.integers(3)], VQA_COLORS[rng.integers(4)])
                 for c in cells]
        scenes.append(scene)
        images.append(render_scene(scene, grid, cell))
        for _ in range(questions_per_scene):
            words = _sample_question(scene, rng)
            ids = encode_question(words)
            qs.append(ids + [PAD] * (MAX_QUESTION_LEN - len(ids)))
            ans.append(ANSWERS.index(oracle_answer(scene, words)))
            sidx.append(s)
    # split by scene so no test image is seen in training
    order = rng.permutation(num_scenes)
    test_scenes = set(order[: int(round(test_fraction * num_scenes))].tolist())
    sidx_arr = np.asarray(sidx, dtype=np.int64)
    is_test = np.isin(sidx_arr, list(test_scenes))
    ds = VqaDataset(
        images=np.stack(images) if images else np.zeros((0, grid * cell, grid * cell, 3), np.uint8),
        scenes=scenes,
        questions=np.asarray(qs, dtype=np.int64).reshape(-1, MAX_QUESTION_LEN),
        answers=np.asarray(ans, dtype=np.int64),
        scene_index=sidx_arr,
        train_idx=np.flatnonzero(~is_test),
        test_idx=np.flatnonzero(is_test),
        seed=seed,
        meta={"num_scenes": num_scenes, "questions_per_scene": questions_per_scene, "grid": grid, "cell": cell,
              "min_objects": min_objects, "max_objects": max_objects, "test_fraction": test_fraction},
    )
    ds.verify()
    return ds
