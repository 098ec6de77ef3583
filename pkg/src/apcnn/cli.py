"""Command-line surface: build patterns, train, transfer, evaluate, inspect."""

from __future__ import annotations

import functools
from pathlib import Path

import click
import numpy as np

from . import evaluation, netpbm, network, report, synth, transfer
from .api_builder import ApiOptions, build_api
from .checkpoint import load_checkpoint, save_checkpoint
from .datasets import load_api_dataset
from .errors import ApcnnError
from .training import LOG_HEADER, TrainConfig, train


def guarded(fn):
    """Convert package errors into a one-line diagnostic and exit code 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ApcnnError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _ensure_parent(path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)


@click.group()
def main():
    """Action recognition from accumulated edge patterns."""


@main.group("api")
def api_group():
    """Action pattern image commands."""


@api_group.command("build")
@click.option("--frames", "frames_dir", required=True, type=click.Path(exists=True, file_okay=False), help="Directory of PGM/PPM frames.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="Output pattern file (PGM).")
@click.option("--no-direction-filter", is_flag=True, help="Keep edges of every orientation.")
@click.option("--norm", type=click.Choice(["fixed", "max"]), default="max", show_default=True, help="Difference normalization mode.")
@click.option("--outline", "outline_mode", type=click.Choice(["binarize", "perimeter"]), default="binarize", show_default=True)
@click.option("--stride", type=int, default=5, show_default=True, help="Background model sampling stride.")
@click.option("--label", default=None, help="Optional class label recorded in memory only.")
@guarded
def api_build(frames_dir, out_path, no_direction_filter, norm, outline_mode, stride, label):
    """Convert a frame sequence into a 256x256 action pattern image."""
    seq = netpbm.load_frames(frames_dir)
    options = ApiOptions(
        direction_filter=not no_direction_filter,
        normalize=norm,
        outline=outline_mode,
        sample_stride=stride,
    )
    pattern = build_api(seq, options, label=label)
    _ensure_parent(out_path)
    netpbm.save_api(out_path, pattern)
    click.echo(f"wrote {out_path} ({int(pattern.pixels.sum())} edge pixels from {seq.shape[0]} frames)")


def _train_options(fn):
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option("--lr", type=float, default=0.01, show_default=True, help="Initial learning rate.")(fn)
    fn = click.option("--batch", type=int, default=45, show_default=True, help="Mini-batch size.")(fn)
    fn = click.option("--epochs", type=int, default=30, show_default=True, help="Maximum epochs.")(fn)
    fn = click.option("--momentum", type=float, default=0.9, show_default=True)(fn)
    fn = click.option("--l2", type=float, default=0.004, show_default=True, help="L2 penalty on conv/fc weights.")(fn)
    fn = click.option("--drop-factor", type=float, default=0.1, show_default=True, help="Learning-rate drop factor.")(fn)
    fn = click.option("--drop-period", type=int, default=8, show_default=True, help="Epochs between rate drops.")(fn)
    fn = click.option("--stop-loss", type=float, default=None, help="Stop once the logged loss stays below this for 3 logs.")(fn)
    fn = click.option("--max-iterations", type=int, default=None, help="Hard iteration cap.")(fn)
    fn = click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None, help="Write the progress log to this file.")(fn)
    fn = click.option("--report", "report_dir", type=click.Path(file_okay=False), default=None, help="Write training_log.tsv and training_curve.png here.")(fn)
    return fn


def _make_config(seed, lr, batch, epochs, momentum, l2, drop_factor, drop_period, stop_loss, max_iterations):
    return TrainConfig(
        initial_lr=lr,
        momentum=momentum,
        l2_lambda=l2,
        batch_size=batch,
        lr_drop_factor=drop_factor,
        lr_drop_period_epochs=drop_period,
        max_epochs=epochs,
        loss_stop_threshold=stop_loss,
        max_iterations=max_iterations,
        seed=seed,
    )


def _finish_training(logs, log_path, report_dir):
    if log_path:
        _ensure_parent(log_path)
        Path(log_path).write_text(report.format_train_log(logs), encoding="utf-8")
    if report_dir:
        report.write_train_report(report_dir, logs)


@main.command("train")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--classes", "classes_csv", required=True, help="Comma-separated class labels, in index order.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="Output checkpoint.")
@click.option("--channels", type=click.Choice(["1", "3"]), default="1", show_default=True, help="Replicate the pattern plane to 3 channels.")
@click.option("--arch", type=click.Choice(["scnn", "small"]), default="scnn", show_default=True, help="Full 14-stage network or the depth-reduced variant.")
@_train_options
@guarded
def train_cmd(manifest_path, classes_csv, out_path, channels, arch, seed, lr, batch, epochs,
              momentum, l2, drop_factor, drop_period, stop_loss, max_iterations, log_path, report_dir):
    """Train a network from scratch on a manifest of pattern files."""
    classes = [c.strip() for c in classes_csv.split(",") if c.strip()]
    channels = int(channels)
    dataset = load_api_dataset(manifest_path, classes, channels=channels)
    if arch == "scnn":
        spec = network.build_scnn(len(classes), in_channels=channels)
    else:
        spec = network.build_small_scnn(len(classes), input_size=dataset.x.shape[1], in_channels=channels)

    cfg = _make_config(seed, lr, batch, epochs, momentum, l2, drop_factor, drop_period, stop_loss, max_iterations)
    params = network.init_params(spec, cfg.seed)
    click.echo(LOG_HEADER)
    _, logs = train(spec, params, dataset, cfg, log_callback=lambda r: click.echo(r.row()))
    _ensure_parent(out_path)
    save_checkpoint(out_path, spec, params, classes)
    _finish_training(logs, log_path, report_dir)
    click.echo(f"saved checkpoint {out_path} after {logs[-1].iteration if logs else 0} logged iterations")


@main.command("transfer")
@click.option("--source", "source_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Trained source checkpoint.")
@click.option("--new-class", "new_label", required=True, help="Label of the class to add.")
@click.option("--new-manifest", required=True, type=click.Path(exists=True, dir_okay=False), help="Manifest of new-class pattern files.")
@click.option("--old-manifest", required=True, type=click.Path(exists=True, dir_okay=False), help="Manifest covering the source classes.")
@click.option("--old-fraction", type=float, default=0.2, show_default=True, help="Fraction of each old class to retrain on.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--freeze-through", default=None, help="Freeze learnable layers up to and including this one.")
@_train_options
@guarded
def transfer_cmd(source_path, new_label, new_manifest, old_manifest, old_fraction, out_path, freeze_through,
                 seed, lr, batch, epochs, momentum, l2, drop_factor, drop_period, stop_loss, max_iterations,
                 log_path, report_dir):
    """Grow a trained checkpoint by one class and fine-tune it."""
    spec, params, labels = load_checkpoint(source_path)
    plan = transfer.TransferPlan(labels + (new_label,), old_data_fraction=old_fraction, seed=seed)
    channels = spec.input_shape[2]
    old = load_api_dataset(old_manifest, labels, channels=channels)
    new_only = load_api_dataset(new_manifest, [new_label], channels=channels)

    cfg = _make_config(seed, lr, batch, epochs, momentum, l2, drop_factor, drop_period, stop_loss, max_iterations)
    click.echo(LOG_HEADER)
    new_spec, new_params, mixed, logs = transfer.transfer_train(
        spec, params, old, new_only.x, new_label, cfg,
        old_fraction=plan.old_data_fraction, freeze_through=freeze_through,
        log_callback=lambda r: click.echo(r.row()),
    )
    _ensure_parent(out_path)
    save_checkpoint(out_path, new_spec, new_params, mixed.labels)
    _finish_training(logs, log_path, report_dir)
    click.echo(f"saved checkpoint {out_path} with classes {','.join(mixed.labels)} "
               f"({len(mixed)} training items)")


@main.command("eval")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_dir", required=True, type=click.Path(file_okay=False), help="Directory for the text, TSV, and figure outputs.")
@click.option("--positive-class", default=None, help="Class used for sensitivity/specificity (defaults to the last label).")
@guarded
def eval_cmd(ckpt_path, manifest_path, report_dir, positive_class):
    """Evaluate a checkpoint on a manifest and write a confusion report."""
    spec, params, labels = load_checkpoint(ckpt_path)
    dataset = load_api_dataset(manifest_path, labels, channels=spec.input_shape[2])
    cm = evaluation.confusion(spec, params, dataset)
    positive = positive_class if positive_class is not None else labels[-1]
    m = evaluation.metrics(cm, positive_class=positive)
    files = report.write_eval_report(report_dir, cm, m)
    click.echo(report.confusion_text(cm, m), nl=False)
    click.echo(f"sensitivity({positive}) {m.sensitivity:.4f}  specificity({positive}) {m.specificity:.4f}")
    click.echo("wrote " + ", ".join(str(p) for p in files.values()))


@main.command("inspect")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--api", "api_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Pattern file; when given, dump activations instead of kernels.")
@click.option("--layer", "layer_id", required=True, help="Convolution layer, e.g. conv2.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="Output image (.pgm or .png).")
@guarded
def inspect_cmd(ckpt_path, api_path, layer_id, out_path):
    """Dump a layer's kernels, or its responses to one pattern, as an image grid."""
    spec, params, _labels = load_checkpoint(ckpt_path)
    if api_path is None:
        grid = evaluation.dump_filters(spec, params, layer_id)
        what = "kernels"
    else:
        pattern = netpbm.load_api(api_path)
        grid = evaluation.dump_activations(spec, params, pattern, layer_id)
        what = "activations"
    _ensure_parent(out_path)
    _write_gray(out_path, grid)
    click.echo(f"wrote {what} of {layer_id} to {out_path} ({grid.shape[1]}x{grid.shape[0]})")


def _write_gray(path, grid: np.ndarray) -> None:
    if str(path).lower().endswith(".png"):
        import matplotlib.image

        matplotlib.image.imsave(path, grid, cmap="gray", vmin=0.0, vmax=1.0)
    else:
        netpbm.write_pgm(path, np.round(grid * 255.0).astype(np.uint8))


@main.command("synth")
@click.option("--kind", type=click.Choice(synth.SYNTH_KINDS), required=True)
@click.option("--frames", "n_frames", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--size", type=int, default=256, show_default=True)
@guarded
def synth_cmd(kind, n_frames, seed, out_dir, size):
    """Generate a deterministic synthetic frame sequence as PPM files."""
    seq = synth.synth_video(kind, n_frames, seed, size=size)
    paths = netpbm.save_frames(out_dir, seq)
    click.echo(f"wrote {len(paths)} frames to {out_dir}")


if __name__ == "__main__":
    main()
