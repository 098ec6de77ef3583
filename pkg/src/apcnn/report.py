"""Evaluation and training reports: aligned text, TSV records, and figures.

Figures are rendered straight to files through matplotlib's object API,
so no interactive backend is ever touched.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .evaluation import ConfusionMatrix, Metrics
from .training import LOG_HEADER, TrainLogRecord


def confusion_text(cm: ConfusionMatrix, m: Metrics) -> str:
    """Aligned confusion table: rows are predictions, columns are targets.

    Each cell shows the count and its share of the whole test set; the
    right column holds per-row precision, the bottom row per-column recall,
    and the corner the overall accuracy.
    """
    total = cm.total or 1
    k = len(cm.labels)
    cells = [[f"{cm.counts[i, j]} ({100.0 * cm.counts[i, j] / total:.1f}%)" for j in range(k)] for i in range(k)]
    precision_col = [f"{100.0 * m.per_class[lbl][0]:.1f}%" for lbl in cm.labels]
    recall_row = [f"{100.0 * m.per_class[lbl][1]:.1f}%" for lbl in cm.labels]
    corner = f"{100.0 * m.accuracy:.1f}%"

    header = ["output \\ target", *cm.labels, "precision"]
    rows = [header]
    for i, lbl in enumerate(cm.labels):
        rows.append([lbl, *cells[i], precision_col[i]])
    rows.append(["recall", *recall_row, corner])

    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = ["  ".join(val.ljust(widths[c]) for c, val in enumerate(row)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def confusion_records(cm: ConfusionMatrix, m: Metrics) -> str:
    """Line-oriented records: one cell, precision, recall, or metric per line."""
    total = cm.total or 1
    lines = []
    for i, pred in enumerate(cm.labels):
        for j, target in enumerate(cm.labels):
            count = int(cm.counts[i, j])
            lines.append(f"cell\t{pred}\t{target}\t{count}\t{100.0 * count / total:.4f}")
    for lbl in cm.labels:
        precision, recall = m.per_class[lbl]
        lines.append(f"precision\t{lbl}\t{precision:.6f}")
        lines.append(f"recall\t{lbl}\t{recall:.6f}")
    lines.append(f"accuracy\t{m.accuracy:.6f}")
    if m.positive_class is not None:
        lines.append(f"sensitivity\t{m.positive_class}\t{m.sensitivity:.6f}")
        lines.append(f"specificity\t{m.positive_class}\t{m.specificity:.6f}")
    return "\n".join(lines) + "\n"


def parse_confusion_records(text: str) -> ConfusionMatrix:
    """Rebuild a ConfusionMatrix from its record lines (for diffing runs)."""
    labels: list[str] = []
    cells: dict[tuple[str, str], int] = {}
    for line in text.strip().splitlines():
        parts = line.split("\t")
        if parts[0] != "cell":
            continue
        _, pred, target, count = parts[:4]
        if pred not in labels:
            labels.append(pred)
        cells[(pred, target)] = int(count)
    counts = [[cells.get((p, t), 0) for t in labels] for p in labels]
    return ConfusionMatrix(tuple(labels), np.asarray(counts, dtype=np.int64))


def save_confusion_figure(cm: ConfusionMatrix, path) -> None:
    """Annotated heatmap of the confusion counts."""
    k = len(cm.labels)
    fig = Figure(figsize=(1.2 * k + 2.5, 1.0 * k + 2.0))
    ax = fig.add_subplot()
    im = ax.imshow(cm.counts, cmap="Blues")
    threshold = cm.counts.max() / 2 if cm.total else 0
    for i in range(k):
        for j in range(k):
            color = "white" if cm.counts[i, j] > threshold else "black"
            ax.text(j, i, str(int(cm.counts[i, j])), ha="center", va="center", color=color)
    ax.set_xticks(range(k), cm.labels, rotation=45, ha="right")
    ax.set_yticks(range(k), cm.labels)
    ax.set_xlabel("target class")
    ax.set_ylabel("output class")
    ax.set_title(f"overall accuracy {100.0 * cm.accuracy:.1f}%")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def save_training_curves(logs: list[TrainLogRecord], path) -> None:
    """Mini-batch loss and accuracy against iteration, one panel each."""
    iterations = [r.iteration for r in logs]
    fig = Figure(figsize=(8, 6))
    ax_acc = fig.add_subplot(2, 1, 1)
    ax_acc.plot(iterations, [r.accuracy_percent for r in logs], marker="o", color="tab:blue")
    ax_acc.set_ylabel("mini-batch accuracy (%)")
    ax_acc.set_ylim(-2, 105)
    ax_acc.grid(True, alpha=0.3)

    ax_loss = fig.add_subplot(2, 1, 2, sharex=ax_acc)
    ax_loss.plot(iterations, [r.loss for r in logs], marker="o", color="tab:red")
    ax_loss.set_xlabel("iteration")
    ax_loss.set_ylabel("mini-batch loss")
    ax_loss.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def write_eval_report(directory, cm: ConfusionMatrix, m: Metrics) -> dict[str, Path]:
    """Write confusion.txt, confusion.tsv, and confusion_matrix.png."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = {
        "text": directory / "confusion.txt",
        "records": directory / "confusion.tsv",
        "figure": directory / "confusion_matrix.png",
    }
    out["text"].write_text(confusion_text(cm, m), encoding="utf-8")
    out["records"].write_text(confusion_records(cm, m), encoding="utf-8")
    save_confusion_figure(cm, out["figure"])
    return out


def format_train_log(logs: list[TrainLogRecord]) -> str:
    return "\n".join([LOG_HEADER, *(r.row() for r in logs)]) + "\n"


def write_train_report(directory, logs: list[TrainLogRecord]) -> dict[str, Path]:
    """Write training_log.tsv and training_curve.png."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = {
        "log": directory / "training_log.tsv",
        "figure": directory / "training_curve.png",
    }
    out["log"].write_text(format_train_log(logs), encoding="utf-8")
    save_training_curves(logs, out["figure"])
    return out
