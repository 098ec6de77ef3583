"""SGDM training loop with L2 regularization and a stepped learning rate.

Defaults: initial rate 0.01 dropped by 0.1 every 8 epochs, momentum 0.9,
L2 0.004 on conv/fc weights only, mini-batch 45, at most 30 epochs. A log
record is captured at iteration 1 and every 10 iterations after that.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .network import NetworkSpec, ParamStore, loss_and_gradients

LOG_EVERY = 10
STOP_PATIENCE = 3


@dataclass
class TrainConfig:
    initial_lr: float = 0.01
    momentum: float = 0.9
    l2_lambda: float = 0.004
    batch_size: int = 45
    lr_drop_factor: float = 0.1
    lr_drop_period_epochs: int = 8
    max_epochs: int = 30
    loss_stop_threshold: float | None = None
    max_iterations: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.initial_lr <= 0 or self.lr_drop_factor <= 0:
            raise InvalidArgumentError("learning rates and drop factor must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidArgumentError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.l2_lambda < 0:
            raise InvalidArgumentError("l2_lambda must be non-negative")
        if self.batch_size < 2:
            raise InvalidArgumentError("batch_size must be >= 2 (batchnorm needs it)")
        if self.lr_drop_period_epochs < 1 or self.max_epochs < 1:
            raise InvalidArgumentError("epoch counts must be >= 1")


@dataclass
class TrainLogRecord:
    epoch: int
    iteration: int
    elapsed_seconds: float
    accuracy_percent: float
    loss: float
    learning_rate: float

    def row(self) -> str:
        """Tab-separated line with the six progress columns."""
        hh = int(self.elapsed_seconds) // 3600
        mm = int(self.elapsed_seconds) % 3600 // 60
        ss = int(self.elapsed_seconds) % 60
        return "\t".join(
            (
                str(self.epoch),
                str(self.iteration),
                f"{hh:02d}:{mm:02d}:{ss:02d}",
                f"{self.accuracy_percent:.2f}%",
                f"{self.loss:.4f}",
                format_lr(self.learning_rate),
            )
        )


LOG_HEADER = "# epoch\titeration\telapsed\tminibatch_accuracy\tminibatch_loss\tbase_learning_rate"


def format_lr(lr: float) -> str:
    """Fixed-point rate formatting: at least 4 decimals, 2 significant digits."""
    decimals = max(4, 1 - math.floor(math.log10(lr)))
    return f"{lr:.{decimals}f}"


def lr_at(cfg: TrainConfig, epoch: int) -> float:
    """Stepped schedule: drop by the factor once per drop period."""
    if epoch < 1:
        raise InvalidArgumentError(f"epoch is 1-based, got {epoch}")
    drops = (epoch - 1) // cfg.lr_drop_period_epochs
    return cfg.initial_lr * cfg.lr_drop_factor**drops


def sgdm_step(
    params: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    momentum: float,
    l2_lambda: float,
    freeze: frozenset[str] = frozenset(),
) -> None:
    """One momentum update over every gradient entry, in place.

    L2 decay applies to conv/fc weight matrices only, never to biases or
    batchnorm parameters. Layers named in ``freeze`` are left untouched.
    """
    for key, grad in grads.items():
        layer_name = key.split(".", 1)[0]
        if layer_name in freeze:
            continue
        w = params[key]
        if grad.shape != w.shape:
            raise InvalidArgumentError(f"gradient shape {grad.shape} != param shape {w.shape} for {key}")
        g = grad + l2_lambda * w if key.endswith(".w") else grad
        v = params.velocity_for(key)
        v *= momentum
        v -= lr * g.astype(v.dtype, copy=False)
        w += v


def train(
    spec: NetworkSpec,
    params: ParamStore,
    dataset,
    cfg: TrainConfig,
    freeze: frozenset[str] = frozenset(),
    log_callback=None,
):
    """Optimize ``params`` on a labeled dataset; returns (params, log records).

    Each epoch reshuffles with the run's seeded generator and takes
    floor(n / batch) steps, dropping the remainder. Mini-batch accuracy is
    measured on the same forward pass that produced the gradients, before
    the update. Training stops at max_epochs, at max_iterations, or once
    the logged loss sits below loss_stop_threshold three logs in a row.
    """
    n = len(dataset)
    if n < cfg.batch_size:
        raise InvalidArgumentError(f"dataset has {n} items, need at least one batch of {cfg.batch_size}")
    iters_per_epoch = n // cfg.batch_size

    rng = np.random.default_rng(cfg.seed)
    logs: list[TrainLogRecord] = []
    start = time.monotonic()
    iteration = 0
    below_threshold = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        lr = lr_at(cfg, epoch)
        for step in range(iters_per_epoch):
            batch_idx = order[step * cfg.batch_size : (step + 1) * cfg.batch_size]
            bx = dataset.x[batch_idx]
            by = dataset.y[batch_idx]
            iteration += 1

            loss, logits, grads = loss_and_gradients(spec, params, bx, by)
            accuracy = 100.0 * float((logits.argmax(axis=1) == by).mean())
            sgdm_step(params, grads, lr, cfg.momentum, cfg.l2_lambda, freeze)

            if iteration == 1 or iteration % LOG_EVERY == 0:
                record = TrainLogRecord(epoch, iteration, time.monotonic() - start, accuracy, loss, lr)
                logs.append(record)
                if log_callback is not None:
                    log_callback(record)
                if cfg.loss_stop_threshold is not None:
                    below_threshold = below_threshold + 1 if loss < cfg.loss_stop_threshold else 0
                    if below_threshold >= STOP_PATIENCE:
                        return params, logs
            if cfg.max_iterations is not None and iteration >= cfg.max_iterations:
                return params, logs
    return params, logs
