"""Prediction, confusion matrices, derived metrics, and layer inspection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import network
from .api_builder import ActionPatternImage
from .datasets import LabeledDataset
from .errors import InvalidArgumentError
from .layers import softmax
from .network import NetworkSpec, ParamStore

EVAL_BATCH = 64


@dataclass
class ConfusionMatrix:
    """counts[predicted][target] over an ordered label list."""

    labels: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.labels)
        if self.counts.shape != (k, k):
            raise InvalidArgumentError(f"counts must be {k}x{k}, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise InvalidArgumentError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0


@dataclass
class Metrics:
    accuracy: float
    per_class: dict[str, tuple[float, float]]  # label -> (precision, recall)
    positive_class: str | None = None
    sensitivity: float | None = None
    specificity: float | None = None


def _as_batch(api, channels: int) -> np.ndarray:
    pixels = api.pixels if isinstance(api, ActionPatternImage) else np.asarray(api)
    x = pixels.astype(np.float32)[None, :, :, None]
    if channels == 3:
        x = np.repeat(x, 3, axis=3)
    return x


def predict(spec: NetworkSpec, params: ParamStore, api, labels: tuple[str, ...]):
    """Classify one pattern; returns (label, probability vector).

    Ties in the probability vector resolve to the lowest class index.
    """
    if len(labels) != spec.num_classes:
        raise InvalidArgumentError(f"{len(labels)} labels for a {spec.num_classes}-way network")
    x = _as_batch(api, spec.input_shape[2])
    logits = network.forward(spec, params, x, mode="infer")
    probs = softmax(logits)[0]
    return labels[int(probs.argmax())], probs


def confusion(spec: NetworkSpec, params: ParamStore, dataset: LabeledDataset, batch_size: int = EVAL_BATCH) -> ConfusionMatrix:
    """Predict every item and tally counts[predicted][target]."""
    if len(dataset.labels) != spec.num_classes:
        raise InvalidArgumentError(
            f"dataset has {len(dataset.labels)} classes, network expects {spec.num_classes}"
        )
    k = spec.num_classes
    counts = np.zeros((k, k), dtype=np.int64)
    for start in range(0, len(dataset), batch_size):
        bx = dataset.x[start : start + batch_size]
        by = dataset.y[start : start + batch_size]
        logits = network.forward(spec, params, bx, mode="infer")
        pred = logits.argmax(axis=1)
        np.add.at(counts, (pred, by), 1)
    return ConfusionMatrix(dataset.labels, counts)


def metrics(cm: ConfusionMatrix, positive_class: str | None = None) -> Metrics:
    """Accuracy, per-class precision/recall, and one-vs-rest sensitivity/specificity."""
    counts = cm.counts
    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)
    per_class = {}
    for i, label in enumerate(cm.labels):
        tp = counts[i, i]
        precision = tp / row_sums[i] if row_sums[i] else 0.0
        recall = tp / col_sums[i] if col_sums[i] else 0.0
        per_class[label] = (float(precision), float(recall))

    result = Metrics(accuracy=cm.accuracy, per_class=per_class)
    if positive_class is not None:
        if positive_class not in cm.labels:
            raise InvalidArgumentError(f"unknown class {positive_class!r}")
        p = cm.labels.index(positive_class)
        tp = counts[p, p]
        fn = col_sums[p] - tp
        fp = row_sums[p] - tp
        tn = cm.total - tp - fn - fp
        result.positive_class = positive_class
        result.sensitivity = float(tp / (tp + fn)) if tp + fn else 0.0
        result.specificity = float(tn / (tn + fp)) if tn + fp else 0.0
    return result


def _normalize_tile(tile: np.ndarray) -> np.ndarray:
    lo, hi = float(tile.min()), float(tile.max())
    if hi == lo:
        return np.full(tile.shape, 0.5)
    return (tile - lo) / (hi - lo)


def tile_grid(tiles: list[np.ndarray], columns: int | None = None, separator: float = 0.0) -> np.ndarray:
    """Pack same-sized 2-D tiles into a grid with 1-pixel separators."""
    if not tiles:
        raise InvalidArgumentError("no tiles to arrange")
    th, tw = tiles[0].shape
    columns = columns or math.ceil(math.sqrt(len(tiles)))
    rows = math.ceil(len(tiles) / columns)
    grid = np.full((rows * th + rows - 1, columns * tw + columns - 1), separator)
    for idx, tile in enumerate(tiles):
        r, c = divmod(idx, columns)
        grid[r * (th + 1) : r * (th + 1) + th, c * (tw + 1) : c * (tw + 1) + tw] = tile
    return grid


def resolve_conv_layer(spec: NetworkSpec, layer_id: str) -> str:
    """Map 'conv2' / 'c2' / '2' onto the conv layer's canonical name."""
    token = str(layer_id).strip().lower()
    if token.startswith("c") and not token.startswith("conv"):
        token = "conv" + token[1:]
    elif token.isdigit():
        token = "conv" + token
    names = [l.name for l in spec.layers if l.kind == "conv"]
    if token not in names:
        raise InvalidArgumentError(f"unknown convolution layer {layer_id!r}; have {names}")
    return token


def dump_filters(spec: NetworkSpec, params: ParamStore, layer_id: str) -> np.ndarray:
    """Tile a conv layer's kernels as a grayscale grid in [0, 1].

    One tile per (input channel, output channel) pair, rows indexed by
    input channel; each tile is min-max normalized, flat kernels map to 0.5.
    """
    name = resolve_conv_layer(spec, layer_id)
    w = params[f"{name}.w"]
    kh, kw, c_in, c_out = w.shape
    tiles = [_normalize_tile(w[:, :, ci, co]) for ci in range(c_in) for co in range(c_out)]
    return tile_grid(tiles, columns=c_out)


def dump_activations(spec: NetworkSpec, params: ParamStore, api, layer_id: str) -> np.ndarray:
    """Tile a conv layer's post-ReLU channel responses for one input."""
    name = resolve_conv_layer(spec, layer_id)
    idx = next(i for i, l in enumerate(spec.layers) if l.name == name)
    relu_name = next((l.name for l in spec.layers[idx:] if l.kind == "relu"), None)
    if relu_name is None:
        raise InvalidArgumentError(f"no activation follows {name}")

    capture: dict[str, np.ndarray] = {}
    x = _as_batch(api, spec.input_shape[2])
    network.forward(spec, params, x, mode="infer", capture=capture)
    maps = capture[relu_name][0]
    tiles = [_normalize_tile(maps[:, :, c]) for c in range(maps.shape[2])]
    return tile_grid(tiles)
