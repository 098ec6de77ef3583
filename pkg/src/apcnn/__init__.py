"""Action recognition from accumulated edge patterns.

The library turns action-video frame sequences into binary 256x256
"action pattern images", trains a sequential CNN on them from scratch
with SGD-with-momentum, extends a trained network to a new class by
layer transplant, and evaluates with confusion matrices and one-vs-rest
sensitivity/specificity.
"""

from .api_builder import ActionPatternImage, ApiOptions, build_api
from .checkpoint import load_checkpoint, save_checkpoint
from .datasets import LabeledDataset, load_api_dataset, read_manifest, write_manifest
from .errors import (
    ApcnnError,
    FormatError,
    InsufficientFramesError,
    InvalidArgumentError,
    InvalidStateError,
    ShapeError,
)
from .evaluation import ConfusionMatrix, Metrics, confusion, metrics, predict
from .network import NetworkSpec, ParamStore, build_scnn, build_small_scnn, init_params
from .training import TrainConfig, TrainLogRecord, lr_at, sgdm_step, train
from .transfer import TransferPlan, build_transfer_dataset, transfer_train, transplant

__version__ = "0.1.0"

__all__ = [
    "ActionPatternImage",
    "ApiOptions",
    "ApcnnError",
    "ConfusionMatrix",
    "FormatError",
    "InsufficientFramesError",
    "InvalidArgumentError",
    "InvalidStateError",
    "LabeledDataset",
    "Metrics",
    "NetworkSpec",
    "ParamStore",
    "ShapeError",
    "TrainConfig",
    "TrainLogRecord",
    "TransferPlan",
    "build_api",
    "build_scnn",
    "build_small_scnn",
    "build_transfer_dataset",
    "confusion",
    "init_params",
    "load_api_dataset",
    "load_checkpoint",
    "lr_at",
    "metrics",
    "predict",
    "read_manifest",
    "save_checkpoint",
    "sgdm_step",
    "train",
    "transfer_train",
    "transplant",
    "write_manifest",
]
