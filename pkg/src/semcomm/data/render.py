"""Anti-aliased rendering of flat-colored primitives."""
from __future__ import annotations

import numpy as np

SHAPES = ("circle", "square", "triangle", "cross", "diamond", "ring")
COLORS = {
    "red": (0.88, 0.16, 0.14),
    "green": (0.16, 0.70, 0.22),
    "blue": (0.14, 0.32, 0.90),
    "yellow": (0.95, 0.82, 0.10),
    "magenta": (0.82, 0.18, 0.78),
    "cyan": (0.12, 0.78, 0.82),
    "orange": (0.96, 0.52, 0.08),
    "purple": (0.46, 0.20, 0.72),
}
BACKGROUND = (0.55, 0.55, 0.55)
SUPERSAMPLE = 4


def shape_mask(shape: str, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Inside test on coordinates normalized to the shape's half-size (``v`` points down)."""
    au, av = np.abs(u), np.abs(v)
    if shape == "circle":
        return u * u + v * v <= 1.0
    if shape == "square":
        return np.maximum(au, av) <= 0.82
    if shape == "triangle":
        return (v <= 0.8) & (au <= 0.58 * (v + 1.0))
    if shape == "cross":
        return ((au <= 0.32) & (av <= 1.0)) | ((av <= 0.32) & (au <= 1.0))
    if shape == "diamond":
        return au + av <= 1.0
    if shape == "ring":
        r2 = u * u + v * v
        return (r2 <= 1.0) & (r2 >= 0.36)
    raise ValueError(f"unknown shape {shape!r}")


def draw(canvas: np.ndarray, shape: str, color, cx: float, cy: float, radius: float) -> None:
    """Composite one primitive onto a float ``(H, W, 3)`` canvas in place.

    Coverage is estimated on a ``SUPERSAMPLE``-times finer grid, which gives
    the edges their anti-aliasing.
    """
    H, W, _ = canvas.shape
    s = SUPERSAMPLE
    ys = (np.arange(H * s) + 0.5) / s
    xs = (np.arange(W * s) + 0.5) / s
    v, u = np.meshgrid((ys - cy) / radius, (xs - cx) / radius, indexing="ij")
    cover = shape_mask(shape, u, v).reshape(H, s, W, s).mean(axis=(1, 3))[..., None]
    canvas *= 1.0 - cover
    canvas += cover * np.asarray(color)


def to_uint8(canvas: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(canvas * 255.0), 0, 255).astype(np.uint8)


def blank(h: int, w: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(BACKGROUND), (h, w, 3)).copy()
