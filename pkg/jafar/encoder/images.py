"""Procedural images and image resizing.

Scenes are described in normalised coordinates so the same scene can be
rasterised at any pixel size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from jafar.core import kernels
from jafar.core.rng import Rng
from jafar.core.tensor import Array
from jafar.models.error_model import InvalidTargetSize
from jafar.models.feature_model import Image

MIN_IMAGE_SIZE = 16
MIN_SHAPES = 3
MAX_SHAPES = 8


@dataclass(frozen=True, slots=True)
class Shape:
    kind: Literal["rect", "circle"]
    color: tuple[float, float, float]
    # rect: (y0, x0, y1, x1); circle: (cy, cx, r)
    geometry: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class Scene:
    color_a: tuple[float, float, float]
    color_b: tuple[float, float, float]
    direction: float
    shapes: tuple[Shape, ...]


def _color(rng: Rng) -> tuple[float, float, float]:
    c = rng.uniform(3)
    return float(c[0]), float(c[1]), float(c[2])


def sample_scene(rng: Rng) -> Scene:
    color_a = _color(rng)
    color_b = _color(rng)
    direction: float = rng.uniform_scalar(0.0, 2.0 * math.pi)
    count: int = rng.integers(MIN_SHAPES, MAX_SHAPES + 1)
    shapes: list[Shape] = []

    for _ in range(count):
        color = _color(rng)

        if rng.uniform_scalar() < 0.5:
            y = sorted(rng.uniform(2).tolist())
            x = sorted(rng.uniform(2).tolist())
            # keep rectangles at least a few percent wide
            y1 = max(y[1], min(y[0] + 0.08, 1.0))
            x1 = max(x[1], min(x[0] + 0.08, 1.0))
            shapes.append(Shape("rect", color, (y[0], x[0], y1, x1)))

        else:
            cy, cx = rng.uniform(2).tolist()
            r: float = rng.uniform_scalar(0.05, 0.3)
            shapes.append(Shape("circle", color, (cy, cx, r)))

    return Scene(color_a, color_b, direction, tuple(shapes))


def render_scene(scene: Scene, size: int) -> Image:
    centers = (np.arange(size, dtype=np.float64) + 0.5) / size
    yy, xx = np.meshgrid(centers, centers, indexing="ij")

    dy, dx = math.sin(scene.direction), math.cos(scene.direction)
    proj = (yy - 0.5) * dy + (xx - 0.5) * dx
    t = np.clip(proj / math.sqrt(2.0) + 0.5, 0.0, 1.0)

    a = np.asarray(scene.color_a)[:, None, None]
    b = np.asarray(scene.color_b)[:, None, None]
    img: Array = a * (1.0 - t)[None] + b * t[None]

    for shape in scene.shapes:
        if shape.kind == "rect":
            y0, x0, y1, x1 = shape.geometry
            mask = (yy >= y0) & (yy < y1) & (xx >= x0) & (xx < x1)

        else:
            cy, cx, r = shape.geometry
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r

        img[:, mask] = np.asarray(shape.color)[:, None]

    return np.clip(img, 0.0, 1.0).astype(np.float32)


def synth_image(rng: Rng, size: int) -> Image:
    if size < MIN_IMAGE_SIZE:
        raise InvalidTargetSize(f"synthetic images need size >= {MIN_IMAGE_SIZE}")

    return render_scene(sample_scene(rng), size)


def resize_grid(
    x: Array, out_h: int, out_w: int, mode: kernels.ResizeMode = "bilinear"
) -> Array:
    """Resize every channel of a (C, H, W) array with half-pixel sampling."""
    if out_h < 1 or out_w < 1:
        raise InvalidTargetSize(f"target size {out_h}x{out_w} must be positive")

    _, h, w = x.shape

    if (out_h, out_w) == (h, w):
        return x.copy()

    rows = kernels.resize_matrix(h, out_h, mode, x.dtype)
    cols = kernels.resize_matrix(w, out_w, mode, x.dtype)

    return kernels.separable_apply(x, rows, cols).astype(x.dtype)


def image_resize(
    img: Image, out_h: int, out_w: int, mode: kernels.ResizeMode = "bilinear"
) -> Image:
    return resize_grid(img, out_h, out_w, mode)
