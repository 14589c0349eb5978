"""Flat binary checkpoints for dense-layer stacks.

Layout (all integers uint32 little-endian, all reals float64 little-endian)::

    magic        6 ASCII bytes ("LSVAE1", "LSCLF1", "LSTGT1")
    input_dim
    second_dim   latent k for a VAE, class count for classifiers
    layer_count
    per layer:   rows, cols, activation code, rows*cols weights (row-major), rows bias

A JSON sidecar ``<path>.json`` records hyperparameters and the seed.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .numeric import ACTIVATIONS, DenseLayer

VAE_MAGIC = b"LSVAE1"
CLASSIFIER_MAGIC = b"LSCLF1"
TARGET_MAGIC = b"LSTGT1"
_MAGICS = (VAE_MAGIC, CLASSIFIER_MAGIC, TARGET_MAGIC)


class CheckpointError(ValueError):
    pass


def encode_layers(magic: bytes, input_dim: int, second_dim: int, layers: list[DenseLayer]) -> bytes:
    if magic not in _MAGICS:
        raise CheckpointError(f"unknown checkpoint magic {magic!r}")
    parts = [magic, struct.pack("<III", input_dim, second_dim, len(layers))]
    for layer in layers:
        rows, cols = layer.weights.shape
        parts.append(struct.pack("<III", rows, cols, ACTIVATIONS.index(layer.activation)))
        parts.append(layer.weights.astype("<f8").tobytes(order="C"))
        parts.append(layer.bias.astype("<f8").tobytes())
    return b"".join(parts)


def decode_layers(raw: bytes, expected_magic: bytes | None = None):
    magic = raw[:6]
    if magic not in _MAGICS or (expected_magic is not None and magic != expected_magic):
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    off = 6
    try:
        input_dim, second_dim, count = struct.unpack_from("<III", raw, off)
        off += 12
        layers = []
        for _ in range(count):
            rows, cols, act = struct.unpack_from("<III", raw, off)
            off += 12
            w = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols)
            off += 8 * rows * cols
            b = np.frombuffer(raw, dtype="<f8", count=rows, offset=off)
            off += 8 * rows
            layers.append(DenseLayer(w.astype(np.float64), b.astype(np.float64), ACTIVATIONS[act]))
    except (struct.error, ValueError, IndexError) as exc:
        raise CheckpointError(f"truncated or corrupt checkpoint at byte offset {off}: {exc}") from exc
    if off != len(raw):
        raise CheckpointError(f"{len(raw) - off} trailing bytes after last layer")
    return magic, input_dim, second_dim, layers


def save_layers(path, magic: bytes, input_dim: int, second_dim: int, layers: list[DenseLayer],
                sidecar: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_layers(magic, input_dim, second_dim, layers))
    meta = {"magic": magic.decode(), "input_dim": input_dim, "second_dim": second_dim}
    meta.update(sidecar or {})
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def load_layers(path, expected_magic: bytes | None = None):
    return decode_layers(Path(path).read_bytes(), expected_magic)


def save_vae(path, model, sidecar: dict | None = None) -> Path:
    return save_layers(path, VAE_MAGIC, model.input_dim, model.k, model.layers(), sidecar)


def load_vae(path):
    from .vae import VaeModel

    _, input_dim, k, layers = load_layers(path, VAE_MAGIC)
    model = VaeModel.from_layers(layers)
    if model.input_dim != input_dim or model.k != k:
        raise CheckpointError("header dimensions disagree with layer shapes")
    return model


def save_classifier(path, clf, sidecar: dict | None = None, magic: bytes = CLASSIFIER_MAGIC) -> Path:
    return save_layers(path, magic, clf.net.n_in, clf.num_classes, clf.net.layers, sidecar)


def load_classifier(path, magic: bytes = CLASSIFIER_MAGIC):
    from .labels import LatentClassifier
    from .numeric import MLP

    _, input_dim, classes, layers = load_layers(path, magic)
    net = MLP(layers)
    if net.n_in != input_dim or net.n_out != classes:
        raise CheckpointError("header dimensions disagree with layer shapes")
    return LatentClassifier(net, classes)
