"""Build an action pattern image (API) from a video frame sequence.

The pipeline: resize every frame to 256x256, estimate a static background
by temporal median, difference each sampled frame against it, stretch the
strong foreground responses, extract vertical edges, and accumulate the
per-frame edge maps into one binary 256x256 pattern for the whole clip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import imaging
from .errors import InsufficientFramesError, InvalidArgumentError, ShapeError
from .imaging import canny, resize_bilinear, rgb_to_gray

API_SIZE = 256

# Normalized differences at or below this level are treated as background.
ENHANCE_GATE = 0.3

# The enhanced image is snapped to 8-bit levels before edge extraction so
# the pattern is invariant to global illumination rescaling of the input.
QUANT_LEVELS = 255

DEFAULT_SAMPLE_STRIDE = 5
MIN_BACKGROUND_SAMPLES = 3


@dataclass
class ActionPatternImage:
    """A 256x256 binary summary of one video clip, optionally labeled."""

    pixels: np.ndarray
    label: str | None = None

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels, dtype=np.uint8)
        if pixels.shape != (API_SIZE, API_SIZE):
            raise ShapeError(f"action pattern image must be {API_SIZE}x{API_SIZE}, got {pixels.shape}")
        if not np.isin(pixels, (0, 1)).all():
            raise InvalidArgumentError("action pattern image values must be 0 or 1")
        self.pixels = pixels


@dataclass
class ApiOptions:
    """Knobs for the pattern builder; defaults match the standard pipeline."""

    direction_filter: bool = True
    normalize: str = "max"  # "max" = per-frame max of the difference, "fixed" = none
    outline: str = "binarize"  # or "perimeter"
    sample_stride: int = DEFAULT_SAMPLE_STRIDE

    def __post_init__(self) -> None:
        if self.normalize not in ("max", "fixed"):
            raise InvalidArgumentError(f"unknown normalize mode {self.normalize!r}")
        if self.outline not in ("binarize", "perimeter"):
            raise InvalidArgumentError(f"unknown outline mode {self.outline!r}")
        if self.sample_stride < 1:
            raise InvalidArgumentError("sample_stride must be >= 1")


def check_frames(frames, min_frames: int = 2) -> np.ndarray:
    """Validate and stack a frame sequence into an (n, h, w, 3) float array."""
    if isinstance(frames, np.ndarray) and frames.ndim == 4:
        stack = np.asarray(frames, dtype=np.float64)
    else:
        arrs = [imaging.check_rgb(f) for f in frames]
        if arrs and any(a.shape != arrs[0].shape for a in arrs):
            raise ShapeError("all frames must share the same dimensions")
        stack = np.stack(arrs) if arrs else np.zeros((0, 1, 1, 3))
    if stack.ndim != 4 or stack.shape[3] != 3:
        raise ShapeError(f"frame stack must be (n, h, w, 3), got {stack.shape}")
    if stack.shape[0] < min_frames:
        raise InsufficientFramesError(
            f"need at least {min_frames} frames, got {stack.shape[0]}"
        )
    return stack


def background_model(frames, sample_stride: int = DEFAULT_SAMPLE_STRIDE) -> np.ndarray:
    """Per-pixel temporal median of grayscale sampled frames.

    The stride is clamped so at least three frames are sampled; shorter
    sequences are rejected.
    """
    stack = check_frames(frames)
    n = stack.shape[0]
    if sample_stride < 1:
        raise InvalidArgumentError("sample_stride must be >= 1")
    stride = max(1, min(sample_stride, n // MIN_BACKGROUND_SAMPLES))
    samples = stack[::stride]
    if samples.shape[0] < MIN_BACKGROUND_SAMPLES:
        raise InsufficientFramesError(
            f"background model needs >= {MIN_BACKGROUND_SAMPLES} sampled frames, got {samples.shape[0]}"
        )
    grays = np.stack([rgb_to_gray(f) for f in samples])
    return np.median(grays, axis=0)


def subtract_and_enhance(frame: np.ndarray, background: np.ndarray, normalize: str = "max") -> np.ndarray:
    """Absolute grayscale difference against the background, then a stretch.

    The difference is optionally normalized by its frame-wide maximum, and
    values above the 0.3 gate are stretched linearly onto (0, 1]; everything
    at or below the gate becomes 0.
    """
    frame = imaging.check_rgb(frame, "frame")
    background = imaging.check_gray(background, "background")
    if frame.shape[:2] != background.shape:
        raise InvalidArgumentError(
            f"frame {frame.shape[:2]} and background {background.shape} dimensions differ"
        )
    diff = np.abs(rgb_to_gray(frame) - background)
    if normalize == "max":
        peak = diff.max()
        if peak == 0.0:
            return np.zeros_like(diff)
        diff = diff / peak
    elif normalize != "fixed":
        raise InvalidArgumentError(f"unknown normalize mode {normalize!r}")
    stretched = (diff - ENHANCE_GATE) / (1.0 - ENHANCE_GATE)
    return np.clip(np.where(diff > ENHANCE_GATE, stretched, 0.0), 0.0, 1.0)


def _resize_rgb(frame: np.ndarray, size: int) -> np.ndarray:
    if frame.shape[:2] == (size, size):
        return frame
    return np.stack([resize_bilinear(frame[:, :, c], size, size) for c in range(3)], axis=2)


def quantize(img: np.ndarray, levels: int = QUANT_LEVELS) -> np.ndarray:
    """Snap a [0, 1] image to ``levels`` uniform steps (8-bit by default)."""
    return np.round(img * levels) / levels


def outline(counts: np.ndarray, mode: str = "binarize") -> np.ndarray:
    """Collapse an edge-count accumulator into a binary pattern."""
    mask = counts >= 1
    if mode == "binarize":
        return mask.astype(np.uint8)
    if mode == "perimeter":
        # Boundary pixels of the accumulated region: set pixels with at
        # least one 4-connected empty neighbor.
        padded = np.pad(mask, 1, mode="constant")
        interior = (
            padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
        )
        return (mask & ~interior).astype(np.uint8)
    raise InvalidArgumentError(f"unknown outline mode {mode!r}")


def build_accumulator(frames, options: ApiOptions | None = None) -> np.ndarray:
    """Accumulate per-frame vertical-edge maps over every other frame.

    Frames are processed at indices 0, 2, 4, ... (the first, third, fifth
    frame and so on). Returns an int32 count per pixel at 256x256.
    """
    options = options or ApiOptions()
    stack = check_frames(frames, min_frames=3)
    resized = np.stack([_resize_rgb(f, API_SIZE) for f in stack])
    background = background_model(resized, options.sample_stride)

    counts = np.zeros((API_SIZE, API_SIZE), dtype=np.int32)
    for i in range(0, resized.shape[0], 2):
        enhanced = subtract_and_enhance(resized[i], background, options.normalize)
        edge = canny(quantize(enhanced), direction_filter=options.direction_filter)
        counts += edge
    return counts


def build_api(frames, options: ApiOptions | None = None, label: str | None = None) -> ActionPatternImage:
    """Full pipeline from a frame sequence to an action pattern image."""
    options = options or ApiOptions()
    counts = build_accumulator(frames, options)
    return ActionPatternImage(outline(counts, options.outline), label=label)
