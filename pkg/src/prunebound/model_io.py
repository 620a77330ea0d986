"""Model container format: bit-exact, fixed-endian persistence.

Layout (all multi-byte fields little-endian regardless of host):

    magic   8 bytes  b"PBMSTACK"
    version u8       currently 1
    u32              number of layers
    u32              input_dim
    u32              num_classes
    per layer: u32 rows, u32 cols, u8 activation (0 = relu, 1 = identity)
    per layer: rows*cols float64 payload, row-major
    u32              CRC32 of everything above

A sidecar JSON file (same path + ".json") mirrors the metadata for humans
and tooling; the binary file alone is authoritative.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import ModelFormatError
from .models import Activation, LayerSpec, ModelStack

MAGIC = b"PBMSTACK"
VERSION = 1
_ACT_CODE = {Activation.RELU: 0, Activation.IDENTITY: 1}
_CODE_ACT = {v: k for k, v in _ACT_CODE.items()}


def save_model(model: ModelStack, path) -> None:
    path = Path(path)
    parts = [MAGIC, struct.pack("<B", VERSION),
             struct.pack("<III", model.depth, model.input_dim, model.num_classes)]
    for layer in model.layers:
        r, c = layer.weights.shape
        parts.append(struct.pack("<IIB", r, c, _ACT_CODE[layer.activation]))
    for layer in model.layers:
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
    body = b"".join(parts)
    crc = zlib.crc32(body) & 0xFFFFFFFF
    path.write_bytes(body + struct.pack("<I", crc))

    meta = {
        "format": MAGIC.decode(),
        "version": VERSION,
        "input_dim": model.input_dim,
        "num_classes": model.num_classes,
        "layers": [
            {"rows": layer.weights.shape[0], "cols": layer.weights.shape[1],
             "activation": layer.activation.value, "lipschitz": layer.lipschitz}
            for layer in model.layers
        ],
    }
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_model(path) -> ModelStack:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 1 + 12 + 4:
        raise ModelFormatError(f"{path}: file too short to be a model container")
    body, crc_bytes = raw[:-4], raw[-4:]
    if zlib.crc32(body) & 0xFFFFFFFF != struct.unpack("<I", crc_bytes)[0]:
        raise ModelFormatError(f"{path}: checksum mismatch (truncated or corrupted)")
    if body[:8] != MAGIC:
        raise ModelFormatError(f"{path}: bad magic {body[:8]!r}")
    version = body[8]
    if version != VERSION:
        raise ModelFormatError(f"{path}: unsupported container version {version}")

    off = 9
    depth, input_dim, num_classes = struct.unpack_from("<III", body, off)
    off += 12
    shapes = []
    for _ in range(depth):
        r, c, act = struct.unpack_from("<IIB", body, off)
        off += 9
        if act not in _CODE_ACT:
            raise ModelFormatError(f"{path}: unknown activation code {act}")
        shapes.append((r, c, _CODE_ACT[act]))

    layers = []
    for r, c, act in shapes:
        nbytes = r * c * 8
        if off + nbytes > len(body):
            raise ModelFormatError(f"{path}: payload shorter than declared dims")
        w = np.frombuffer(body, dtype="<f8", count=r * c, offset=off).reshape(r, c)
        off += nbytes
        layers.append(LayerSpec(w.astype(np.float64), act))
    if off != len(body):
        raise ModelFormatError(f"{path}: {len(body) - off} trailing bytes in payload")
    return ModelStack(tuple(layers), input_dim=input_dim, num_classes=num_classes)
