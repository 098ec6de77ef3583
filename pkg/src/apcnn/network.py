"""Network assembly: layer descriptions, parameter storage, and whole-net passes.

The flagship architecture is a strictly sequential CNN for 256x256x1 action
pattern inputs: six conv/batchnorm/relu/maxpool blocks (8 to 256 channels),
five pool-free conv stages (512 to 1024 channels) at 4x4, a pool down to
2x2, three 2048-channel conv stages, a padded final pool, and two fully
connected layers ending in ``num_classes`` logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import layers as L
from .errors import InvalidArgumentError, ShapeError

SCNN_INPUT_SIZE = 256
SCNN_CONV_CHANNELS = (8, 16, 32, 64, 128, 256, 512, 1024, 1024, 1024, 1024, 2048, 2048, 2048)
SCNN_FC1_UNITS = 2048


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv | batchnorm | relu | maxpool | fc | softmax_xent
    name: str
    out_channels: int = 0
    kernel: int = 0
    stride: int = 1
    padding: int = 0
    out_units: int = 0


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: tuple[int, int, int]  # (h, w, c)
    num_classes: int
    layers: tuple[LayerSpec, ...]

    def to_dict(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
            "layers": [
                {
                    "kind": l.kind,
                    "name": l.name,
                    "out_channels": l.out_channels,
                    "kernel": l.kernel,
                    "stride": l.stride,
                    "padding": l.padding,
                    "out_units": l.out_units,
                }
                for l in self.layers
            ],
        }

    @staticmethod
    def from_dict(data: dict) -> "NetworkSpec":
        return NetworkSpec(
            input_shape=tuple(data["input_shape"]),
            num_classes=int(data["num_classes"]),
            layers=tuple(LayerSpec(**entry) for entry in data["layers"]),
        )


class ParamStore:
    """Ordered mapping of parameter arrays plus optimizer velocity state.

    Keys follow ``<layer>.<array>`` (e.g. ``conv1.w``, ``bn3.gamma``) and are
    inserted in build order, which fixes the checkpoint layout. Velocities
    are lazily created zeros and are never serialized.
    """

    def __init__(self):
        self.arrays: dict[str, np.ndarray] = {}
        self.velocity: dict[str, np.ndarray] = {}

    def __getitem__(self, key: str) -> np.ndarray:
        return self.arrays[key]

    def __setitem__(self, key: str, value: np.ndarray) -> None:
        self.arrays[key] = value

    def __contains__(self, key: str) -> bool:
        return key in self.arrays

    def keys(self):
        return self.arrays.keys()

    def velocity_for(self, key: str) -> np.ndarray:
        if key not in self.velocity:
            self.velocity[key] = np.zeros_like(self.arrays[key])
        return self.velocity[key]

    def reset_velocity(self) -> None:
        self.velocity.clear()

    def copy(self) -> "ParamStore":
        dup = ParamStore()
        dup.arrays = {k: v.copy() for k, v in self.arrays.items()}
        dup.velocity = {k: v.copy() for k, v in self.velocity.items()}
        return dup


def build_scnn(num_classes: int, in_channels: int = 1) -> NetworkSpec:
    """The full 14-stage sequential CNN for 256x256 inputs.

    Pools follow the first six conv stages and stages 11 and 14; the final
    pool pads by one so the 2x2 map stays 2x2, giving an 8192-wide flatten
    into the first fully connected layer.
    """
    if num_classes < 2:
        raise InvalidArgumentError(f"num_classes must be >= 2, got {num_classes}")
    if in_channels < 1:
        raise InvalidArgumentError("in_channels must be >= 1")

    specs: list[LayerSpec] = []
    pool_no = 0
    for i, ch in enumerate(SCNN_CONV_CHANNELS, start=1):
        specs.append(LayerSpec("conv", f"conv{i}", out_channels=ch, kernel=3, stride=1, padding=1))
        specs.append(LayerSpec("batchnorm", f"bn{i}", out_channels=ch))
        specs.append(LayerSpec("relu", f"relu{i}"))
        if i <= 6 or i == 11:
            pool_no += 1
            specs.append(LayerSpec("maxpool", f"pool{pool_no}", kernel=2, stride=2, padding=0))
        elif i == 14:
            pool_no += 1
            specs.append(LayerSpec("maxpool", f"pool{pool_no}", kernel=2, stride=2, padding=1))
    specs.append(LayerSpec("fc", "fc1", out_units=SCNN_FC1_UNITS))
    specs.append(LayerSpec("fc", "fc2", out_units=num_classes))
    specs.append(LayerSpec("softmax_xent", "loss"))

    spec = NetworkSpec((SCNN_INPUT_SIZE, SCNN_INPUT_SIZE, in_channels), num_classes, tuple(specs))
    shape_trace(spec)  # static consistency check
    return spec


def build_small_scnn(num_classes: int, input_size: int = 64, in_channels: int = 1) -> NetworkSpec:
    """A depth-reduced variant with the same layer kinds, for small inputs.

    Three conv/batchnorm/relu/pool blocks (8, 16, 32 channels) and two
    fully connected layers. Useful for quick experiments and CI-scale
    training runs.
    """
    if num_classes < 2:
        raise InvalidArgumentError(f"num_classes must be >= 2, got {num_classes}")
    if input_size < 8 or input_size % 8 != 0:
        raise InvalidArgumentError(f"input_size must be a positive multiple of 8, got {input_size}")

    specs: list[LayerSpec] = []
    for i, ch in enumerate((8, 16, 32), start=1):
        specs.append(LayerSpec("conv", f"conv{i}", out_channels=ch, kernel=3, stride=1, padding=1))
        specs.append(LayerSpec("batchnorm", f"bn{i}", out_channels=ch))
        specs.append(LayerSpec("relu", f"relu{i}"))
        specs.append(LayerSpec("maxpool", f"pool{i}", kernel=2, stride=2, padding=0))
    specs.append(LayerSpec("fc", "fc1", out_units=128))
    specs.append(LayerSpec("fc", "fc2", out_units=num_classes))
    specs.append(LayerSpec("softmax_xent", "loss"))

    spec = NetworkSpec((input_size, input_size, in_channels), num_classes, tuple(specs))
    shape_trace(spec)
    return spec


def shape_trace(spec: NetworkSpec) -> list[tuple[str, tuple]]:
    """Propagate shapes layer by layer, validating consistency.

    Returns [(name, output_shape), ...] starting with ("input", shape);
    4-D shapes are (h, w, c) and dense shapes are (units,).
    """
    h, w, c = spec.input_shape
    if h < 1 or w < 1 or c < 1:
        raise ShapeError(f"invalid input shape {spec.input_shape}")
    shape: tuple = (h, w, c)
    trace: list[tuple[str, tuple]] = [("input", shape)]
    for layer in spec.layers:
        if layer.kind == "conv":
            if len(shape) != 3:
                raise ShapeError(f"{layer.name}: conv requires a spatial input, got {shape}")
            oh = _out_size(shape[0], layer, f"{layer.name} height")
            ow = _out_size(shape[1], layer, f"{layer.name} width")
            shape = (oh, ow, layer.out_channels)
        elif layer.kind == "maxpool":
            if len(shape) != 3:
                raise ShapeError(f"{layer.name}: pool requires a spatial input, got {shape}")
            oh = _out_size(shape[0], layer, f"{layer.name} height")
            ow = _out_size(shape[1], layer, f"{layer.name} width")
            shape = (oh, ow, shape[2])
        elif layer.kind == "batchnorm":
            if len(shape) != 3 or shape[2] != layer.out_channels:
                raise ShapeError(f"{layer.name}: expected {layer.out_channels} channels, got {shape}")
        elif layer.kind == "relu":
            pass
        elif layer.kind == "fc":
            shape = (layer.out_units,)
        elif layer.kind == "softmax_xent":
            if shape != (spec.num_classes,):
                raise ShapeError(
                    f"classifier head expects {spec.num_classes} logits, got {shape}"
                )
        else:
            raise InvalidArgumentError(f"unknown layer kind {layer.kind!r}")
        trace.append((layer.name, shape))
    return trace


def _out_size(size: int, layer: LayerSpec, what: str) -> int:
    span = size + 2 * layer.padding - layer.kernel
    if span < 0 or span % layer.stride != 0:
        raise ShapeError(
            f"{what}: size {size} incompatible with kernel {layer.kernel}, "
            f"stride {layer.stride}, padding {layer.padding}"
        )
    return span // layer.stride + 1


# The classifier head uses a narrow Gaussian instead of the ReLU-scaled
# one: it feeds softmax, not a ReLU, and a wide head would start training
# far above the ln(num_classes) loss regime.
HEAD_INIT_STD = 0.01


def init_params(spec: NetworkSpec, seed: int, dtype=np.float32) -> ParamStore:
    """Seeded Gaussian init: He-scaled body, narrow classifier head.

    Conv and hidden fc weights ~ N(0, 2/fan_in); the final fc layer's
    weights ~ N(0, 0.01^2). Biases, beta, and running means start at zero;
    gamma and running variances start at one. Draws happen in build order
    so a seed fully determines the store.
    """
    rng = np.random.default_rng(seed)
    store = ParamStore()
    head_name = next(l.name for l in reversed(spec.layers) if l.kind == "fc")
    prev = spec.input_shape
    for (name, shape), layer in zip(shape_trace(spec)[1:], spec.layers):
        if layer.kind == "conv":
            c_in = prev[2]
            fan_in = layer.kernel * layer.kernel * c_in
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), (layer.kernel, layer.kernel, c_in, layer.out_channels))
            store[f"{name}.w"] = w.astype(dtype)
            store[f"{name}.b"] = np.zeros(layer.out_channels, dtype=dtype)
        elif layer.kind == "batchnorm":
            c = layer.out_channels
            store[f"{name}.gamma"] = np.ones(c, dtype=dtype)
            store[f"{name}.beta"] = np.zeros(c, dtype=dtype)
            store[f"{name}.running_mean"] = np.zeros(c, dtype=dtype)
            store[f"{name}.running_var"] = np.ones(c, dtype=dtype)
        elif layer.kind == "fc":
            fan_in = int(np.prod(prev))
            std = HEAD_INIT_STD if name == head_name else np.sqrt(2.0 / fan_in)
            w = rng.normal(0.0, std, (fan_in, layer.out_units))
            store[f"{name}.w"] = w.astype(dtype)
            store[f"{name}.b"] = np.zeros(layer.out_units, dtype=dtype)
        prev = shape
    return store


def forward(spec: NetworkSpec, params: ParamStore, x: np.ndarray, mode: str = "infer", capture: dict | None = None) -> np.ndarray:
    """Run the network on an NHWC batch and return the (n, classes) logits.

    In train mode batchnorm uses batch statistics and writes updated running
    statistics back into ``params``. When ``capture`` is a dict, every
    layer's output is copied into it keyed by layer name.
    """
    if x.ndim != 4 or x.shape[1:] != spec.input_shape:
        raise ShapeError(f"batch must be (n, {spec.input_shape}), got {x.shape}")
    out = x
    for layer in spec.layers:
        out = _layer_forward(layer, params, out, mode, caches=None)
        if capture is not None and layer.kind != "softmax_xent":
            capture[layer.name] = out.copy()
    return out


def forward_with_caches(spec: NetworkSpec, params: ParamStore, x: np.ndarray):
    """Train-mode forward that retains per-layer caches for backward."""
    if x.ndim != 4 or x.shape[1:] != spec.input_shape:
        raise ShapeError(f"batch must be (n, {spec.input_shape}), got {x.shape}")
    caches: list = []
    out = x
    for layer in spec.layers:
        out = _layer_forward(layer, params, out, "train", caches)
    return out, caches


def _layer_forward(layer: LayerSpec, params: ParamStore, x: np.ndarray, mode: str, caches: list | None):
    if layer.kind == "conv":
        w, b = params[f"{layer.name}.w"], params[f"{layer.name}.b"]
        out = L.conv2d_forward(x, w, b, layer.stride, layer.padding)
        if caches is not None:
            caches.append((layer, x))
        return out
    if layer.kind == "batchnorm":
        gamma, beta = params[f"{layer.name}.gamma"], params[f"{layer.name}.beta"]
        rm, rv = params[f"{layer.name}.running_mean"], params[f"{layer.name}.running_var"]
        y, cache, new_rm, new_rv = L.batchnorm_forward(x, gamma, beta, rm, rv, mode)
        if mode == "train":
            params[f"{layer.name}.running_mean"] = new_rm.astype(rm.dtype)
            params[f"{layer.name}.running_var"] = new_rv.astype(rv.dtype)
        if caches is not None:
            caches.append((layer, cache))
        return y
    if layer.kind == "relu":
        if caches is not None:
            caches.append((layer, x))
        return L.relu(x)
    if layer.kind == "maxpool":
        out, argmax = L.maxpool_forward(x, layer.kernel, layer.stride, layer.padding)
        if caches is not None:
            caches.append((layer, (argmax, x.shape)))
        return out
    if layer.kind == "fc":
        orig_shape = x.shape
        flat = x.reshape(x.shape[0], -1)
        w, b = params[f"{layer.name}.w"], params[f"{layer.name}.b"]
        out = L.fc_forward(flat, w, b)
        if caches is not None:
            caches.append((layer, (flat, orig_shape)))
        return out
    if layer.kind == "softmax_xent":
        if caches is not None:
            caches.append((layer, None))
        return x
    raise InvalidArgumentError(f"unknown layer kind {layer.kind!r}")


def backward(spec: NetworkSpec, params: ParamStore, caches: list, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Walk the caches in reverse and collect gradients for every learnable array."""
    grads: dict[str, np.ndarray] = {}
    grad = grad_logits
    for layer, cache in reversed(caches):
        if layer.kind == "conv":
            x = cache
            w = params[f"{layer.name}.w"]
            grad, gw, gb = L.conv2d_backward(x, w, grad, layer.stride, layer.padding)
            grads[f"{layer.name}.w"] = gw
            grads[f"{layer.name}.b"] = gb
        elif layer.kind == "batchnorm":
            grad, dgamma, dbeta = L.batchnorm_backward(cache, grad)
            grads[f"{layer.name}.gamma"] = dgamma
            grads[f"{layer.name}.beta"] = dbeta
        elif layer.kind == "relu":
            grad = L.relu_backward(cache, grad)
        elif layer.kind == "maxpool":
            argmax, x_shape = cache
            grad = L.maxpool_backward(argmax, grad, x_shape, layer.kernel, layer.stride, layer.padding)
        elif layer.kind == "fc":
            flat, orig_shape = cache
            w = params[f"{layer.name}.w"]
            grad, gw, gb = L.fc_backward(flat, w, grad)
            grads[f"{layer.name}.w"] = gw
            grads[f"{layer.name}.b"] = gb
            grad = grad.reshape(orig_shape)
        elif layer.kind == "softmax_xent":
            continue
    return grads


def loss_and_gradients(spec: NetworkSpec, params: ParamStore, x: np.ndarray, targets: np.ndarray):
    """One training step's worth of math: loss, logits, and all gradients."""
    logits, caches = forward_with_caches(spec, params, x)
    loss, grad_logits = L.softmax_xent(logits, targets)
    grads = backward(spec, params, caches, grad_logits)
    return loss, logits, grads


@dataclass(frozen=True)
class ParameterCounts:
    """Two bookkeeping conventions for the same network.

    ``standard`` counts every learnable scalar: convolutions as
    kh*kw*c_in*c_out + c_out, batchnorm as 2*c, dense layers as
    (in+1)*out. ``condensed`` mirrors a legacy summary style that omits
    input-channel multiplicity for convolutions (kh*kw*c_out + c_out),
    reports the first dense layer by its flattened input width and later
    dense layers by the square of their input width, and skips batchnorm.
    """

    per_layer: tuple[tuple[str, int, int], ...]  # (name, standard, condensed)
    standard_total: int
    condensed_total: int


def parameter_count(spec: NetworkSpec) -> ParameterCounts:
    rows: list[tuple[str, int, int]] = []
    prev = spec.input_shape
    seen_fc = False
    for (name, shape), layer in zip(shape_trace(spec)[1:], spec.layers):
        if layer.kind == "conv":
            c_in, c_out = prev[2], layer.out_channels
            standard = layer.kernel * layer.kernel * c_in * c_out + c_out
            condensed = layer.kernel * layer.kernel * c_out + c_out
            rows.append((name, standard, condensed))
        elif layer.kind == "batchnorm":
            rows.append((name, 2 * layer.out_channels, 0))
        elif layer.kind == "fc":
            fan_in = int(np.prod(prev))
            standard = (fan_in + 1) * layer.out_units
            condensed = fan_in if not seen_fc else fan_in * fan_in
            seen_fc = True
            rows.append((name, standard, condensed))
        prev = shape
    return ParameterCounts(
        per_layer=tuple(rows),
        standard_total=sum(r[1] for r in rows),
        condensed_total=sum(r[2] for r in rows),
    )
