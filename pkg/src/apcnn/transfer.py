"""Extend a trained network to an additional class by layer transplant.

Everything up to and including the first fully connected layer is copied
bit-exactly (weights, biases, batchnorm scale and running statistics); the
classifier layer is replaced by a freshly seeded one sized for the larger
class list, optimizer velocity is discarded, and the new network trains on
all new-class samples plus a seeded fraction of each old class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .datasets import LabeledDataset
from .errors import InvalidArgumentError
from .network import NetworkSpec, ParamStore, init_params
from .training import TrainConfig, train

DEFAULT_OLD_FRACTION = 0.20


@dataclass(frozen=True)
class TransferPlan:
    """How to grow the class list and remix the data."""

    new_classes: tuple[str, ...]
    old_data_fraction: float = DEFAULT_OLD_FRACTION
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.old_data_fraction <= 1.0:
            raise InvalidArgumentError("old_data_fraction must lie in (0, 1]")
        if len(set(self.new_classes)) != len(self.new_classes):
            raise InvalidArgumentError("new class list contains duplicates")


def transplant(spec: NetworkSpec, params: ParamStore, new_num_classes: int, seed: int):
    """Copy every layer except the classifier head into a wider network.

    Returns (new_spec, new_params). The head is re-initialized with the
    seeded scheme used at first build; velocities start empty.
    """
    if new_num_classes <= spec.num_classes:
        raise InvalidArgumentError(
            f"new class count {new_num_classes} must exceed the source's {spec.num_classes}"
        )
    head = spec.layers[-2]
    if head.kind != "fc":
        raise InvalidArgumentError("source network must end with a fully connected classifier")

    new_layers = spec.layers[:-2] + (replace(head, out_units=new_num_classes), spec.layers[-1])
    new_spec = NetworkSpec(spec.input_shape, new_num_classes, new_layers)

    dtype = params[f"{head.name}.w"].dtype
    new_params = init_params(new_spec, seed, dtype=dtype)
    for key in new_params.keys():
        if not key.startswith(f"{head.name}."):
            new_params[key] = params[key].copy()
    return new_spec, new_params


def build_transfer_dataset(
    old: LabeledDataset,
    new_x: np.ndarray,
    new_label: str,
    fraction: float = DEFAULT_OLD_FRACTION,
    seed: int = 0,
) -> LabeledDataset:
    """All new-class samples plus ceil(fraction * count) of each old class."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidArgumentError("fraction must lie in (0, 1]")
    if new_label in old.labels:
        raise InvalidArgumentError(f"label {new_label!r} already exists in the old dataset")
    new_x = np.asarray(new_x, dtype=np.float32)
    if new_x.ndim != 4 or new_x.shape[1:] != old.x.shape[1:]:
        raise InvalidArgumentError(
            f"new samples {new_x.shape} do not match old sample shape {old.x.shape[1:]}"
        )

    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for c, label in enumerate(old.labels):
        idx = np.flatnonzero(old.y == c)
        keep = math.ceil(fraction * idx.size)
        chosen = rng.choice(idx, size=keep, replace=False)
        xs.append(old.x[np.sort(chosen)])
        ys.append(np.full(keep, c, dtype=np.int64))
    xs.append(new_x)
    ys.append(np.full(new_x.shape[0], len(old.labels), dtype=np.int64))
    return LabeledDataset(np.concatenate(xs), np.concatenate(ys), old.labels + (new_label,))


def layers_through(spec: NetworkSpec, name: str) -> frozenset[str]:
    """Learnable layer names up to and including ``name`` (for freezing)."""
    names = [l.name for l in spec.layers if l.kind in ("conv", "batchnorm", "fc")]
    if name not in names:
        raise InvalidArgumentError(f"unknown layer {name!r}; learnable layers: {names}")
    return frozenset(names[: names.index(name) + 1])


def transfer_train(
    source_spec: NetworkSpec,
    source_params: ParamStore,
    old: LabeledDataset,
    new_x: np.ndarray,
    new_label: str,
    cfg: TrainConfig,
    old_fraction: float = DEFAULT_OLD_FRACTION,
    freeze_through: str | None = None,
    log_callback=None,
):
    """Transplant, remix, and fine-tune; returns (spec, params, dataset, logs).

    No layer is frozen by default: the whole network keeps training with
    the unmodified configuration. ``freeze_through`` pins every learnable
    layer up to the named one for experimentation.
    """
    new_spec, new_params = transplant(source_spec, source_params, source_spec.num_classes + 1, cfg.seed)
    mixed = build_transfer_dataset(old, new_x, new_label, old_fraction, cfg.seed)
    freeze = layers_through(new_spec, freeze_through) if freeze_through else frozenset()
    new_params, logs = train(new_spec, new_params, mixed, cfg, freeze=freeze, log_callback=log_callback)
    return new_spec, new_params, mixed, logs
