"""Binary checkpoint format for trained networks.

Layout: magic ``SCNN``, a little-endian uint32 format version, a uint32
length-prefixed JSON header (network description, class labels, array
manifest), then each parameter array as raw little-endian float32 bytes,
row-major, in build order. Loading a saved file reproduces the store
bit-exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .network import NetworkSpec, ParamStore

MAGIC = b"SCNN"
VERSION = 1


def save_checkpoint(path, spec: NetworkSpec, params: ParamStore, labels) -> None:
    labels = list(labels)
    if len(labels) != spec.num_classes:
        raise InvalidArgumentError(
            f"{len(labels)} labels for a network with {spec.num_classes} classes"
        )
    manifest = [{"key": key, "shape": list(params[key].shape)} for key in params.keys()]
    header = json.dumps(
        {"spec": spec.to_dict(), "labels": labels, "arrays": manifest},
        separators=(",", ":"),
        sort_keys=True,
    ).encode("utf-8")

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for key in params.keys():
            fh.write(np.ascontiguousarray(params[key], dtype="<f4").tobytes())


def load_checkpoint(path):
    """Read a checkpoint; returns (spec, params, labels)."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: not a checkpoint file (bad magic)")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    (header_len,) = struct.unpack_from("<I", data, 8)
    try:
        header = json.loads(data[12 : 12 + header_len].decode("utf-8"))
        spec = NetworkSpec.from_dict(header["spec"])
        labels = tuple(header["labels"])
        manifest = header["arrays"]
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: corrupt checkpoint header: {exc}") from exc
    if len(labels) != spec.num_classes:
        raise FormatError(f"{path}: label list does not match the class count")

    params = ParamStore()
    offset = 12 + header_len
    for entry in manifest:
        shape = tuple(int(d) for d in entry["shape"])
        nbytes = int(np.prod(shape)) * 4
        chunk = data[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise FormatError(f"{path}: truncated array {entry['key']!r}")
        params[entry["key"]] = np.frombuffer(chunk, dtype="<f4").reshape(shape).copy()
        offset += nbytes
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after arrays")
    return spec, params, labels
