"""Forward and backward passes for the six layer kinds of the network engine.

Tensors are numpy arrays in batch/height/width/channel order (row-major).
Every op is a pure function of its inputs and preserves the input dtype,
so the same code path serves float32 training and float64 gradient checks.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgumentError, InvalidStateError, ShapeError

BN_EPS = 1e-5
BN_MOMENTUM = 0.9

# When enabled, every op asserts its outputs are finite. Off by default:
# the scans are measurable on full-size batches.
FINITE_CHECKS = False


def _check_finite(name, *arrays):
    if FINITE_CHECKS:
        for a in arrays:
            if not np.isfinite(a).all():
                raise FloatingPointError(f"{name} produced non-finite values")


def _conv_out_size(size: int, k: int, stride: int, padding: int, what: str) -> int:
    span = size + 2 * padding - k
    if span < 0:
        raise ShapeError(f"{what}: window {k} exceeds padded size {size + 2 * padding}")
    if span % stride != 0:
        raise ShapeError(
            f"{what}: size {size} with kernel {k}, stride {stride}, padding {padding} "
            "does not tile evenly"
        )
    return span // stride + 1


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int):
    # (n, ho, wo, c, kh, kw) view over the padded input, then flattened to
    # rows ordered (kh, kw, c) to match a reshaped kernel.
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    n, ho, wo = win.shape[:3]
    cols = win.transpose(0, 1, 2, 4, 5, 3).reshape(n * ho * wo, -1)
    return cols, (n, ho, wo)


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
    """Cross-correlation of an NHWC batch with a (kh, kw, c_in, c_out) kernel."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and kernel, got {x.shape} and {w.shape}")
    kh, kw, c_in, c_out = w.shape
    if x.shape[3] != c_in:
        raise ShapeError(f"input has {x.shape[3]} channels, kernel expects {c_in}")
    if b.shape != (c_out,):
        raise ShapeError(f"bias must be ({c_out},), got {b.shape}")
    _conv_out_size(x.shape[1], kh, stride, padding, "conv2d height")
    _conv_out_size(x.shape[2], kw, stride, padding, "conv2d width")

    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
    cols, (n, ho, wo) = _im2col(xp, kh, kw, stride)
    out = (cols @ w.reshape(-1, c_out)).reshape(n, ho, wo, c_out) + b
    _check_finite("conv2d_forward", out)
    return out


def conv2d_backward(x: np.ndarray, w: np.ndarray, grad_out: np.ndarray, stride: int = 1, padding: int = 0):
    """Gradients of conv2d_forward w.r.t. input, kernel, and bias."""
    kh, kw, c_in, c_out = w.shape
    n, ho, wo, _ = grad_out.shape
    if grad_out.shape[3] != c_out:
        raise ShapeError(f"grad_out has {grad_out.shape[3]} channels, kernel produces {c_out}")

    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
    cols, dims = _im2col(xp, kh, kw, stride)
    if dims != (n, ho, wo):
        raise ShapeError(f"grad_out spatial dims {grad_out.shape} do not match forward output {dims}")

    g = grad_out.reshape(n * ho * wo, c_out)
    grad_b = g.sum(axis=0)
    grad_w = (cols.T @ g).reshape(kh, kw, c_in, c_out)

    # Scatter column gradients back onto the padded input, one kernel tap
    # at a time (stride windows never overlap within a single tap).
    gcols = (g @ w.reshape(-1, c_out).T).reshape(n, ho, wo, kh, kw, c_in)
    grad_xp = np.zeros_like(xp)
    for a in range(kh):
        for c in range(kw):
            grad_xp[:, a : a + stride * ho : stride, c : c + stride * wo : stride, :] += gcols[:, :, :, a, c, :]
    h, wdt = x.shape[1], x.shape[2]
    grad_x = grad_xp[:, padding : padding + h, padding : padding + wdt, :]
    _check_finite("conv2d_backward", grad_x, grad_w, grad_b)
    return grad_x, grad_w, grad_b


def maxpool_forward(x: np.ndarray, kernel: int = 2, stride: int = 2, padding: int = 0):
    """Per-window maximum; returns the pooled tensor and an argmax map.

    Padded positions are filled with -inf so they never win; the argmax map
    stores the flat within-window index (row-major, first max on ties) used
    by the backward pass.
    """
    if x.ndim != 4:
        raise ShapeError(f"maxpool expects 4-D input, got {x.shape}")
    _conv_out_size(x.shape[1], kernel, stride, padding, "maxpool height")
    _conv_out_size(x.shape[2], kernel, stride, padding, "maxpool width")

    xp = np.pad(
        x,
        ((0, 0), (padding, padding), (padding, padding), (0, 0)),
        constant_values=-np.inf,
    )
    win = sliding_window_view(xp, (kernel, kernel), axis=(1, 2))[:, ::stride, ::stride]
    flat = win.reshape(*win.shape[:4], kernel * kernel)
    argmax = flat.argmax(axis=4)
    out = np.take_along_axis(flat, argmax[..., None], axis=4)[..., 0]
    _check_finite("maxpool_forward", out)
    return out, argmax


def maxpool_backward(argmax: np.ndarray, grad_out: np.ndarray, x_shape, kernel: int = 2, stride: int = 2, padding: int = 0) -> np.ndarray:
    """Route each output gradient to the recorded argmax position."""
    if argmax.shape != grad_out.shape:
        raise ShapeError(f"argmax map {argmax.shape} does not match grad_out {grad_out.shape}")
    n, h, w, c = x_shape
    grad_xp = np.zeros((n, h + 2 * padding, w + 2 * padding, c), dtype=grad_out.dtype)

    _, ho, wo, _ = grad_out.shape
    ni, ii, ji, ci = np.indices(grad_out.shape, sparse=False)
    rows = ii * stride + argmax // kernel
    cols = ji * stride + argmax % kernel
    np.add.at(grad_xp, (ni, rows, cols, ci), grad_out)
    return grad_xp[:, padding : padding + h, padding : padding + w, :]


def batchnorm_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: str = "train",
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
):
    """Per-channel batch normalization over the batch and spatial axes.

    In train mode returns (y, cache, new_running_mean, new_running_var); in
    infer mode the running statistics are used unchanged and cache is None.
    """
    if x.ndim != 4:
        raise ShapeError(f"batchnorm expects 4-D input, got {x.shape}")
    if mode == "train":
        if x.shape[0] < 2:
            raise InvalidStateError("batchnorm training requires batch size >= 2")
        mean = x.mean(axis=(0, 1, 2))
        var = x.var(axis=(0, 1, 2))
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x - mean) * inv_std
        y = gamma * xhat + beta
        new_rm = momentum * running_mean + (1.0 - momentum) * mean
        new_rv = momentum * running_var + (1.0 - momentum) * var
        cache = (xhat, inv_std, gamma)
        _check_finite("batchnorm_forward", y)
        return y, cache, new_rm, new_rv
    if mode == "infer":
        xhat = (x - running_mean) / np.sqrt(running_var + eps)
        y = gamma * xhat + beta
        _check_finite("batchnorm_forward", y)
        return y, None, running_mean, running_var
    raise InvalidArgumentError(f"unknown batchnorm mode {mode!r}")


def batchnorm_backward(cache, grad_out: np.ndarray):
    """Exact gradient of the train-mode forward, including the statistics."""
    xhat, inv_std, gamma = cache
    m = grad_out.shape[0] * grad_out.shape[1] * grad_out.shape[2]
    dgamma = (grad_out * xhat).sum(axis=(0, 1, 2))
    dbeta = grad_out.sum(axis=(0, 1, 2))
    grad_x = (gamma * inv_std / m) * (m * grad_out - dbeta - xhat * dgamma)
    _check_finite("batchnorm_backward", grad_x)
    return grad_x, dgamma, dbeta


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)


def fc_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map of a flattened (n, in) batch through an (in, out) matrix."""
    if x.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"fc expects (n, {w.shape[0]}) input, got {x.shape}")
    out = x @ w + b
    _check_finite("fc_forward", out)
    return out


def fc_backward(x: np.ndarray, w: np.ndarray, grad_out: np.ndarray):
    if grad_out.shape != (x.shape[0], w.shape[1]):
        raise ShapeError(f"grad_out must be ({x.shape[0]}, {w.shape[1]}), got {grad_out.shape}")
    grad_w = x.T @ grad_out
    grad_b = grad_out.sum(axis=0)
    grad_x = grad_out @ w.T
    return grad_x, grad_w, grad_b


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax via the log-sum-exp shift."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_xent(logits: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy of softmax(logits) against integer targets.

    Returns (loss, grad_logits) with grad already averaged over the batch.
    """
    if logits.ndim != 2:
        raise ShapeError(f"logits must be (n, classes), got {logits.shape}")
    targets = np.asarray(targets)
    n, k = logits.shape
    if targets.shape != (n,):
        raise ShapeError(f"targets must be ({n},), got {targets.shape}")
    if targets.min() < 0 or targets.max() >= k:
        raise InvalidArgumentError(f"target indices must lie in [0, {k})")

    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), targets].mean()
    grad = np.exp(log_probs)
    grad[np.arange(n), targets] -= 1.0
    grad /= n
    _check_finite("softmax_xent", grad)
    return float(loss), grad
