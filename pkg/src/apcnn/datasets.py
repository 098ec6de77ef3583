"""Labeled datasets and the tab-separated manifest format.

A manifest lists one record per line: a path (relative to the manifest),
a tab, and a class label. Lines starting with '#' are comments.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .netpbm import load_api


@dataclass
class LabeledDataset:
    """In-memory batch of patterns: x is (n, h, w, c) float32, y holds class indices."""

    x: np.ndarray
    y: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.float32)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.x.ndim != 4 or self.x.shape[0] != self.y.shape[0]:
            raise InvalidArgumentError(
                f"dataset arrays disagree: x {self.x.shape}, y {self.y.shape}"
            )
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= len(self.labels)):
            raise InvalidArgumentError("class index out of range for the label list")

    def __len__(self) -> int:
        return int(self.x.shape[0])

    def class_indices(self, label: str) -> np.ndarray:
        return np.flatnonzero(self.y == self.labels.index(label))


def read_manifest(path) -> list[tuple[Path, str]]:
    """Parse a manifest; paths resolve relative to the manifest's directory."""
    path = Path(path)
    base = path.parent
    records: list[tuple[Path, str]] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" not in line:
            raise FormatError(f"{path}:{lineno}: expected '<path>\\t<label>'")
        rel, label = line.split("\t", 1)
        rel, label = rel.strip(), label.strip()
        if not rel or not label:
            raise FormatError(f"{path}:{lineno}: empty path or label")
        if rel in seen:
            raise FormatError(f"{path}:{lineno}: duplicate path {rel!r}")
        seen.add(rel)
        records.append((base / rel, label))
    return records


def write_manifest(path, records) -> None:
    """Write (relative path, label) records; paths are stored as given."""
    lines = [f"{rel}\t{label}" for rel, label in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_api_dataset(manifest_path, classes: list[str] | tuple[str, ...], channels: int = 1) -> LabeledDataset:
    """Load every pattern file in a manifest into a LabeledDataset.

    Labels must come from ``classes``, whose order fixes the class indices.
    ``channels=3`` replicates the single binary plane, for callers that
    expect three-channel input.
    """
    classes = tuple(classes)
    if len(set(classes)) != len(classes):
        raise InvalidArgumentError("class list contains duplicates")
    if channels not in (1, 3):
        raise InvalidArgumentError(f"channels must be 1 or 3, got {channels}")
    records = read_manifest(manifest_path)
    if not records:
        raise FormatError(f"{manifest_path}: manifest lists no records")

    xs, ys = [], []
    for file_path, label in records:
        if label not in classes:
            raise InvalidArgumentError(f"{file_path}: label {label!r} not in declared classes {classes}")
        api = load_api(file_path, label=label)
        plane = api.pixels.astype(np.float32)[:, :, None]
        xs.append(np.repeat(plane, channels, axis=2) if channels == 3 else plane)
        ys.append(classes.index(label))
    return LabeledDataset(np.stack(xs), np.asarray(ys), classes)
