"""Deterministic synthetic inputs: test videos and small glyph datasets.

The videos use uniform foreground/background colors so that, after
background subtraction and max-normalization, the enhanced image is an
exact indicator of the moving shape; tests rely on that exactness.
"""

from __future__ import annotations

import math

import numpy as np

from .datasets import LabeledDataset
from .errors import InvalidArgumentError

SYNTH_KINDS = ("translate-square", "wave-bar", "static")

GLYPH_LABELS = ("stripes-v", "stripes-h", "frame", "cross", "checker", "disk")


def synth_video(
    kind: str,
    frames: int,
    seed: int,
    size: int = 256,
    square_size: int | None = None,
    bg_level: float | None = None,
    fg_level: float | None = None,
) -> np.ndarray:
    """Generate an (n, size, size, 3) float sequence with known geometry.

    ``translate-square``: a bright square crosses the scene left to right.
    ``wave-bar``: a horizontal bar oscillates vertically.
    ``static``: a fixed scene with a few rectangles, identical every frame.
    Foreground and background are uniform; levels default to seeded draws.
    """
    if kind not in SYNTH_KINDS:
        raise InvalidArgumentError(f"unknown synth kind {kind!r}, expected one of {SYNTH_KINDS}")
    if frames < 2:
        raise InvalidArgumentError(f"need at least 2 frames, got {frames}")
    if size < 32:
        raise InvalidArgumentError(f"size must be >= 32, got {size}")

    rng = np.random.default_rng(seed)
    bg = np.array([rng.uniform(0.02, 0.20) for _ in range(3)]) if bg_level is None else np.full(3, bg_level)
    fg = np.array([rng.uniform(0.75, 0.98) for _ in range(3)]) if fg_level is None else np.full(3, fg_level)

    canvas = np.empty((frames, size, size, 3), dtype=np.float64)
    canvas[:] = bg

    if kind == "static":
        n_rects = rng.integers(2, 5)
        for _ in range(n_rects):
            rh, rw = rng.integers(size // 12, size // 4, size=2)
            top = rng.integers(0, size - rh)
            left = rng.integers(0, size - rw)
            shade = rng.uniform(0.3, 0.7)
            canvas[:, top : top + rh, left : left + rw, :] = shade
        return canvas

    if kind == "translate-square":
        side = square_size if square_size is not None else max(8, size // 12)
        if side >= size:
            raise InvalidArgumentError(f"square size {side} does not fit in {size}")
        top = int(rng.integers(size // 4, size - side - size // 4))
        span = size - side
        for i in range(frames):
            left = round(i * span / (frames - 1))
            canvas[i, top : top + side, left : left + side, :] = fg
        return canvas

    # wave-bar: horizontally inset bar, vertical sinusoidal motion. The
    # inset keeps the bar ends inside the frame so they trace vertical edges.
    thickness = max(6, size // 20)
    inset = size // 8
    mid = size // 2
    amplitude = size // 4
    for i in range(frames):
        offset = round(amplitude * math.sin(2.0 * math.pi * i / frames))
        top = min(max(mid + offset - thickness // 2, 0), size - thickness)
        canvas[i, top : top + thickness, inset : size - inset, :] = fg
    return canvas


def square_positions(frames: int, size: int, side: int) -> list[int]:
    """Left edge of the translating square at each frame (construction rule)."""
    span = size - side
    return [round(i * span / (frames - 1)) for i in range(frames)]


def _glyph(kind: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """One binary glyph with seeded shape jitter."""
    img = np.zeros((size, size), dtype=np.float32)
    yy, xx = np.mgrid[0:size, 0:size]
    if kind == 0:  # vertical stripes
        period = int(rng.integers(6, 11))
        phase = int(rng.integers(0, period))
        img[(xx + phase) % period < period // 2] = 1.0
    elif kind == 1:  # horizontal stripes
        period = int(rng.integers(6, 11))
        phase = int(rng.integers(0, period))
        img[(yy + phase) % period < period // 2] = 1.0
    elif kind == 2:  # hollow square frame
        margin = int(rng.integers(size // 8, size // 4))
        thick = int(rng.integers(2, 5))
        img[margin : size - margin, margin : size - margin] = 1.0
        inner = margin + thick
        img[inner : size - inner, inner : size - inner] = 0.0
    elif kind == 3:  # diagonal cross
        thick = int(rng.integers(2, 5))
        img[np.abs(yy - xx) < thick] = 1.0
        img[np.abs(yy + xx - (size - 1)) < thick] = 1.0
    elif kind == 4:  # checkerboard blocks
        block = int(rng.integers(6, 11))
        img[((yy // block) + (xx // block)) % 2 == 0] = 1.0
    elif kind == 5:  # filled disk
        radius = int(rng.integers(size // 5, size // 3))
        cy, cx = size // 2, size // 2
        img[(yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius] = 1.0
    else:
        raise InvalidArgumentError(f"no glyph family for class {kind}")

    shift = size // 8
    dy, dx = rng.integers(-shift, shift + 1, size=2)
    img = np.roll(np.roll(img, int(dy), axis=0), int(dx), axis=1)
    noise = rng.random((size, size)) < 0.01
    img[noise] = 1.0 - img[noise]
    return img


def glyph_dataset(num_classes: int, per_class: int, size: int = 64, seed: int = 0) -> LabeledDataset:
    """Distinct binary glyph families, one per class, with per-sample jitter."""
    if not 2 <= num_classes <= len(GLYPH_LABELS):
        raise InvalidArgumentError(f"num_classes must be in [2, {len(GLYPH_LABELS)}]")
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for c in range(num_classes):
        for _ in range(per_class):
            xs.append(_glyph(c, size, rng)[:, :, None])
            ys.append(c)
    return LabeledDataset(np.stack(xs), np.asarray(ys), GLYPH_LABELS[:num_classes])


def glyph_class_samples(kind: int, count: int, size: int = 64, seed: int = 0) -> np.ndarray:
    """(count, size, size, 1) float32 samples of a single glyph family."""
    rng = np.random.default_rng(seed)
    return np.stack([_glyph(kind, size, rng)[:, :, None] for _ in range(count)]).astype(np.float32)
