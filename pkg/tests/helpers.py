"""Independent oracles and utilities shared across the test suite.

Everything here is deliberately naive (nested loops, direct formulas) so
it cannot share bugs with the vectorized implementations it checks.
"""

from __future__ import annotations

import numpy as np

from apcnn.datasets import LabeledDataset


def naive_conv2d(x, w, b, stride=1, padding=0):
    """Six-nested-loop cross-correlation, the reference for conv2d_forward."""
    n, h, wd, cin = x.shape
    kh, kw, _, cout = w.shape
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (wd + 2 * padding - kw) // stride + 1
    out = np.zeros((n, ho, wo, cout))
    for nn in range(n):
        for i in range(ho):
            for j in range(wo):
                for co in range(cout):
                    acc = 0.0
                    for a in range(kh):
                        for bb in range(kw):
                            for ci in range(cin):
                                acc += xp[nn, i * stride + a, j * stride + bb, ci] * w[a, bb, ci, co]
                    out[nn, i, j, co] = acc + b[co]
    return out


def naive_blur2d(img, kernel1d):
    """Direct non-separable 2-D convolution with replicate borders."""
    k2 = np.outer(kernel1d, kernel1d)
    r = kernel1d.size // 2
    padded = np.pad(img, r, mode="edge")
    h, w = img.shape
    out = np.zeros_like(img, dtype=np.float64)
    for i in range(h):
        for j in range(w):
            out[i, j] = (padded[i : i + 2 * r + 1, j : j + 2 * r + 1] * k2).sum()
    return out


def naive_resize_bilinear(img, out_w, out_h):
    """Scalar half-pixel-centered bilinear interpolation."""
    h, w = img.shape
    out = np.zeros((out_h, out_w), dtype=np.float64)
    for oy in range(out_h):
        for ox in range(out_w):
            sx = min(max((ox + 0.5) * (w / out_w) - 0.5, 0.0), w - 1.0)
            sy = min(max((oy + 0.5) * (h / out_h) - 0.5, 0.0), h - 1.0)
            x0, y0 = int(np.floor(sx)), int(np.floor(sy))
            x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
            fx, fy = sx - x0, sy - y0
            top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
            bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
            out[oy, ox] = top * (1 - fy) + bot * fy
    return out


def finite_difference(f, x, eps=1e-3):
    """Central finite differences of scalar-valued f() over array x, in place."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        fp = f()
        flat[i] = keep - eps
        fm = f()
        flat[i] = keep
        gflat[i] = (fp - fm) / (2.0 * eps)
    return grad


def relative_error(analytic, numeric):
    """Max absolute difference scaled by the numeric gradient's magnitude."""
    return float(np.abs(analytic - numeric).max() / max(np.abs(numeric).max(), 1e-8))


def ovr_counts(counts, positive):
    """One-vs-rest TP/FP/TN/FN by direct enumeration over all cells."""
    k = counts.shape[0]
    tp = fp = tn = fn = 0
    for pred in range(k):
        for target in range(k):
            c = int(counts[pred, target])
            if pred == positive and target == positive:
                tp += c
            elif pred == positive:
                fp += c
            elif target == positive:
                fn += c
            else:
                tn += c
    return tp, fp, tn, fn


def subset_dataset(ds: LabeledDataset, per_class: int) -> LabeledDataset:
    """First ``per_class`` items of every class, preserving order."""
    keep = []
    for c in range(len(ds.labels)):
        idx = np.flatnonzero(ds.y == c)[:per_class]
        keep.append(idx)
    keep = np.concatenate(keep)
    return LabeledDataset(ds.x[keep], ds.y[keep], ds.labels)
