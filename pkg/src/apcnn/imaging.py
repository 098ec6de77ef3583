"""Pixel-level primitives: grayscale conversion, resizing, blur, and edge detection.

Images are plain numpy arrays. Grayscale images are 2-D float arrays with
values in [0, 1], RGB images are (h, w, 3) float arrays in [0, 1], and
binary images (edge maps) are 2-D uint8 arrays holding only 0 and 1.
All functions are pure: same input, bit-identical output.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgumentError, ShapeError

# Luma weights of the classic NTSC conversion; they sum to 1 (up to rounding).
LUMA_R = 0.2989
LUMA_G = 0.5870
LUMA_B = 0.1141

# Blur width used ahead of gradient estimation in the edge detector.
CANNY_SIGMA = math.sqrt(2.0)

# Fraction of non-maximum-suppressed pixels kept below the high threshold.
CANNY_PERCENT_NOT_EDGES = 0.70
CANNY_LOW_RATIO = 0.40
CANNY_HIST_BINS = 64

CANNY_MIN_SIZE = 8


def check_gray(img: np.ndarray, name: str = "image") -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {img.shape}")
    return img


def check_rgb(img: np.ndarray, name: str = "image") -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty (h, w, 3) array, got shape {img.shape}")
    return img


def rgb_to_gray(img: np.ndarray) -> np.ndarray:
    """Convert an (h, w, 3) RGB image in [0, 1] to grayscale."""
    img = check_rgb(img)
    return LUMA_R * img[:, :, 0] + LUMA_G * img[:, :, 1] + LUMA_B * img[:, :, 2]


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resize a grayscale image with half-pixel-centered bilinear sampling."""
    img = check_gray(img)
    if out_w <= 0 or out_h <= 0:
        raise InvalidArgumentError(f"target size must be positive, got {out_w}x{out_h}")
    h, w = img.shape
    if (out_h, out_w) == (h, w):
        return img.copy()

    # Source coordinate of each output pixel center, clamped to the grid.
    sx = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    sy = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)

    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = (sy - y0)[:, None]

    top = img[y0][:, x0] * (1.0 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1.0 - fx) + img[y1][:, x1] * fx
    return top * (1.0 - fy) + bot * fy


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian with radius ceil(3*sigma)."""
    if sigma <= 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _correlate_rows(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # 1-D correlation along axis 1 with replicated borders.
    radius = kernel.size // 2
    padded = np.pad(img, ((0, 0), (radius, radius)), mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, kernel.size, axis=1)
    return windows @ kernel


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing with replicate-border handling."""
    img = check_gray(img)
    kernel = gaussian_kernel_1d(sigma)
    out = _correlate_rows(img, kernel)
    out = _correlate_rows(out.T, kernel).T
    return out


def _central_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Central differences with replicated borders; gx along columns, gy along rows.
    padded = np.pad(img, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy


def _nms(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Thin the magnitude image to local maxima along the gradient direction.

    Orientation is quantized to the nearest of four sectors (0, 45, 90,
    135 degrees modulo 180); each pixel is kept only if its magnitude is
    >= both neighbors along that axis, so plateau ties survive on both sides.
    """
    theta = np.degrees(np.arctan2(gy, gx)) % 180.0
    sector = np.round(theta / 45.0).astype(np.intp) % 4

    # Neighbor offsets (drow, dcol) per sector, along the gradient axis.
    offsets = ((0, 1), (1, 1), (1, 0), (1, -1))
    padded = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    keep = np.zeros((h, w), dtype=bool)
    for s, (dr, dc) in enumerate(offsets):
        fwd = padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
        bwd = padded[1 - dr : 1 - dr + h, 1 - dc : 1 - dc + w]
        in_sector = sector == s
        keep |= in_sector & (mag >= fwd) & (mag >= bwd)
    keep &= mag > 0.0
    return np.where(keep, mag, 0.0)


def _auto_thresholds(norm: np.ndarray) -> tuple[float, float]:
    """Histogram-based threshold selection on the surviving magnitudes.

    ``norm`` holds the suppressed magnitudes normalized so the peak is 1.
    Survivors are binned into 64 buckets; the high threshold is the upper
    edge of the lowest bin whose cumulative count covers 70% of them, low
    is 0.4 * high. Comparisons downstream are inclusive so a plateau of
    identical magnitudes (everything in the top bin) still yields edges.
    """
    survivors = norm[norm > 0.0]
    counts, edges = np.histogram(survivors, bins=CANNY_HIST_BINS, range=(0.0, 1.0))
    cumulative = np.cumsum(counts)
    idx = int(np.searchsorted(cumulative, CANNY_PERCENT_NOT_EDGES * survivors.size))
    idx = min(idx, CANNY_HIST_BINS - 1)
    high = float(edges[idx + 1])
    return high, CANNY_LOW_RATIO * high


def _hysteresis(norm: np.ndarray, low: float, high: float) -> np.ndarray:
    """8-connected tracking: grow strong seeds through weak candidates."""
    strong = norm >= high
    candidate = norm >= low
    visited = strong.copy()
    frontier = strong
    h, w = norm.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    while frontier.any():
        padded[:] = False
        padded[1:-1, 1:-1] = frontier
        grown = np.zeros((h, w), dtype=bool)
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                grown |= padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
        frontier = grown & candidate & ~visited
        visited |= frontier
    return visited


def canny(img: np.ndarray, direction_filter: bool = True) -> np.ndarray:
    """Canny edge detection with an optional vertical-edge direction filter.

    Pipeline: Gaussian blur (sigma sqrt(2)), central-difference gradients,
    non-maximum suppression, automatic hysteresis thresholds, 8-connected
    tracking. With ``direction_filter`` enabled only pixels whose gradient
    direction lies within 45 degrees of horizontal are kept, which retains
    vertical edges and discards horizontal ones.

    Returns a uint8 array of 0/1 values.
    """
    img = check_gray(img)
    h, w = img.shape
    if h < CANNY_MIN_SIZE or w < CANNY_MIN_SIZE:
        raise InvalidArgumentError(
            f"edge detection needs at least {CANNY_MIN_SIZE}x{CANNY_MIN_SIZE} pixels, got {w}x{h}"
        )

    blurred = gaussian_blur(img, CANNY_SIGMA)
    gx, gy = _central_gradients(blurred)
    mag = np.hypot(gx, gy)
    nms = _nms(mag, gx, gy)
    peak = nms.max()
    if peak == 0.0:
        return np.zeros(img.shape, dtype=np.uint8)
    norm = nms / peak
    high, low = _auto_thresholds(norm)
    edges = _hysteresis(norm, low, high)

    if direction_filter:
        # Gradient within +/-45 degrees of the x axis marks a vertical edge.
        theta = np.abs(np.degrees(np.arctan2(gy, gx)))
        vertical = np.minimum(theta, 180.0 - theta) <= 45.0
        edges &= vertical
    return edges.astype(np.uint8)


def canny_vertical(img: np.ndarray) -> np.ndarray:
    """Direction-filtered Canny: only vertical-ish edges survive."""
    return canny(img, direction_filter=True)
