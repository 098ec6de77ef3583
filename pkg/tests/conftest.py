"""Shared fixtures: strict finite checks and the desk-scale training runs.

The two training fixtures are session-scoped because several modules (and
the acceptance suite) interrogate the same trained networks.
"""

from __future__ import annotations

import os

# Keep the linear algebra single-threaded so the timed acceptance budgets
# reflect one CPU core. Must happen before numpy loads.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import time
from dataclasses import dataclass

import numpy as np
import pytest

from apcnn import layers, network, synth, training, transfer
from helpers import subset_dataset


@pytest.fixture(autouse=True, scope="session")
def strict_finite_checks():
    layers.FINITE_CHECKS = True
    yield
    layers.FINITE_CHECKS = False


@dataclass
class DeskRun:
    spec: object
    params: object
    logs: list
    dataset: object
    pool: object
    elapsed_seconds: float


@pytest.fixture(scope="session")
def desk_base() -> DeskRun:
    """5-class glyph training at 64x64 through the depth-reduced network.

    100 samples per class are generated (the sampling pool for transfer);
    the first 90 of each class train for up to 30 epochs of 10 iterations,
    mirroring the flagship configuration at desk scale.
    """
    pool = synth.glyph_dataset(5, 100, size=64, seed=101)
    train_ds = subset_dataset(pool, 90)
    spec = network.build_small_scnn(5, input_size=64)
    params = network.init_params(spec, seed=11)
    cfg = training.TrainConfig(seed=0)
    start = time.monotonic()
    params, logs = training.train(spec, params, train_ds, cfg)
    elapsed = time.monotonic() - start
    return DeskRun(spec, params, logs, train_ds, pool, elapsed)


@dataclass
class DeskTransferRun:
    source: DeskRun
    spec: object
    params: object
    logs: list
    mixed: object
    new_label: str
    fresh_new_x: np.ndarray


@pytest.fixture(scope="session")
def desk_transfer(desk_base) -> DeskTransferRun:
    """Grow the desk network by a sixth glyph class and fine-tune it."""
    new_x = synth.glyph_class_samples(5, 100, size=64, seed=202)
    cfg = training.TrainConfig(seed=0, loss_stop_threshold=0.02)
    spec, params, mixed, logs = transfer.transfer_train(
        desk_base.spec, desk_base.params, desk_base.pool, new_x, "disk", cfg
    )
    fresh = synth.glyph_class_samples(5, 100, size=64, seed=303)
    return DeskTransferRun(desk_base, spec, params, logs, mixed, "disk", fresh)


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {status} {name}", flush=True)
