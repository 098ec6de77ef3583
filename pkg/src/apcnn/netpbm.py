"""Binary netpbm (P5/P6) reading and writing, plus frame and pattern files.

Only 8-bit files (maxval 255) are supported. Pattern files are strict:
256x256 P5 images whose bytes are exactly 0 or 255.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .api_builder import API_SIZE, ActionPatternImage
from .errors import FormatError


def _parse_header(data: bytes, path) -> tuple[bytes, int, int, int, int]:
    """Parse magic, width, height, maxval; returns raster start offset too."""
    if len(data) < 2 or data[:1] != b"P":
        raise FormatError(f"{path}: not a netpbm file")
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: unsupported netpbm type {magic!r}")

    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise FormatError(f"{path}: malformed header token {token!r}")
        fields.append(int(token))
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}, only 255 is handled")
    return magic, width, height, maxval, pos


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM/PPM file as a uint8 array, (h, w) or (h, w, 3)."""
    path = Path(path)
    data = path.read_bytes()
    magic, width, height, _, pos = _parse_header(data, path)
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise FormatError(f"{path}: raster truncated, expected {expected} bytes, got {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(height, width).copy()
    return arr.reshape(height, width, 3).copy()


def write_pgm(path, image: np.ndarray) -> None:
    """Write a uint8 (h, w) array as binary PGM."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    if image.ndim != 2:
        raise FormatError(f"PGM output needs a 2-D array, got shape {image.shape}")
    h, w = image.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + image.tobytes())


def write_ppm(path, image: np.ndarray) -> None:
    """Write a uint8 (h, w, 3) array as binary PPM."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise FormatError(f"PPM output needs an (h, w, 3) array, got shape {image.shape}")
    h, w, _ = image.shape
    Path(path).write_bytes(b"P6\n%d %d\n255\n" % (w, h) + image.tobytes())


def load_frames(directory) -> np.ndarray:
    """Read a directory of P5/P6 frames, lexicographically, into (n, h, w, 3).

    Gray frames are replicated across channels; bytes map to [0, 1] by /255.
    """
    directory = Path(directory)
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in (".pgm", ".ppm", ".pnm"))
    if not paths:
        raise FormatError(f"{directory}: no .pgm/.ppm frame files found")
    frames = []
    shape = None
    for p in paths:
        arr = read_pnm(p)
        if arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], 3, axis=2)
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise FormatError(f"{p}: frame size {arr.shape[:2]} differs from {shape[:2]}")
        frames.append(arr.astype(np.float64) / 255.0)
    return np.stack(frames)


def save_frames(directory, frames: np.ndarray) -> list[Path]:
    """Write an (n, h, w, 3) float sequence as numbered PPM files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(np.asarray(frames)):
        p = directory / f"frame_{i:05d}.ppm"
        write_ppm(p, np.round(frame * 255.0).astype(np.uint8))
        paths.append(p)
    return paths


def save_api(path, api: ActionPatternImage) -> None:
    """Write a pattern as a strict 256x256 P5 file of 0/255 bytes."""
    write_pgm(path, api.pixels * np.uint8(255))


def load_api(path, label: str | None = None) -> ActionPatternImage:
    """Read a strict pattern file; any byte other than 0/255 is rejected."""
    arr = read_pnm(path)
    if arr.ndim != 2 or arr.shape != (API_SIZE, API_SIZE):
        raise FormatError(f"{path}: pattern file must be {API_SIZE}x{API_SIZE} grayscale, got {arr.shape}")
    if not np.isin(arr, (0, 255)).all():
        raise FormatError(f"{path}: pattern bytes must be 0 or 255")
    return ActionPatternImage((arr == 255).astype(np.uint8), label=label)
