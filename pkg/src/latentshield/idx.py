"""IDX (MNIST / Fashion-MNIST layout) image and label files.

Headers are big-endian: a 32-bit magic (0x00000803 for 3-D ubyte images,
0x00000801 for 1-D ubyte labels) followed by one 32-bit size per axis.
Files ending in ``.gz`` are read transparently.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    pass


@dataclass(frozen=True)
class IdxHeader:
    magic: int
    dims: tuple[int, ...]


def _read_bytes(path) -> bytes:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read IDX file {path}: {exc}") from exc
    if path.suffix == ".gz":
        raw = gzip.decompress(raw)
    return raw


def parse_header(raw: bytes, expected_magic: int, path="") -> tuple[IdxHeader, int]:
    if len(raw) < 4:
        raise IdxFormatError(f"{path}: truncated header at byte offset {len(raw)}")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise IdxFormatError(f"{path}: bad magic 0x{magic:08x} at byte offset 0, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    end = 4 + 4 * ndim
    if len(raw) < end:
        raise IdxFormatError(f"{path}: truncated header at byte offset {len(raw)}, need {end} bytes")
    dims = struct.unpack(f">{ndim}I", raw[4:end])
    need = end + int(np.prod(dims, dtype=np.int64))
    if len(raw) != need:
        raise IdxFormatError(f"{path}: payload ends at byte offset {len(raw)}, header implies {need}")
    return IdxHeader(magic, tuple(dims)), end


def read_idx_images(path, raw_bytes: bool = False) -> np.ndarray:
    """N x (H*W) float matrix scaled to [0, 1] (or the raw uint8 block)."""
    raw = _read_bytes(path)
    header, off = parse_header(raw, IMAGE_MAGIC, path)
    n, h, w = header.dims
    block = np.frombuffer(raw, dtype=np.uint8, offset=off).reshape(n, h * w)
    if raw_bytes:
        return block.copy()
    return block.astype(np.float64) / 255.0


def read_idx_image_shape(path) -> tuple[int, int, int]:
    raw = _read_bytes(path)
    header, _ = parse_header(raw, IMAGE_MAGIC, path)
    return header.dims


def read_idx_labels(path) -> np.ndarray:
    raw = _read_bytes(path)
    header, off = parse_header(raw, LABEL_MAGIC, path)
    return np.frombuffer(raw, dtype=np.uint8, offset=off).astype(np.int64)


def quantize(images) -> np.ndarray:
    """[0, 1] floats to bytes with round-half-even (``np.rint``)."""
    x = np.asarray(images, dtype=np.float64)
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueError("pixels must lie in [0, 1]")
    return np.rint(x * 255.0).astype(np.uint8)


def encode_idx_images(images, height: int | None = None, width: int | None = None) -> bytes:
    img = np.asarray(images)
    if img.ndim == 3:
        height, width = height or img.shape[1], width or img.shape[2]
        img = img.reshape(img.shape[0], -1)
    if img.ndim != 2:
        raise ValueError(f"expected N x d or N x H x W images, got shape {img.shape}")
    if img.dtype != np.uint8:
        img = quantize(img)
    n, d = img.shape
    if height is None or width is None:
        side = int(round(np.sqrt(d)))
        if side * side != d:
            raise ValueError(f"cannot infer a square image from {d} pixels; pass height and width")
        height = width = side
    if height * width != d:
        raise ValueError(f"{height}x{width} does not match {d} pixels per image")
    return struct.pack(">IIII", IMAGE_MAGIC, n, height, width) + np.ascontiguousarray(img).tobytes()


def encode_idx_labels(labels) -> bytes:
    lab = np.asarray(labels).ravel()
    if lab.size and (lab.min() < 0 or lab.max() > 255):
        raise ValueError("labels must fit in one byte")
    return struct.pack(">II", LABEL_MAGIC, lab.shape[0]) + lab.astype(np.uint8).tobytes()


def _write(path, payload: bytes):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(gzip.compress(payload, mtime=0) if path.suffix == ".gz" else payload)
    except OSError as exc:
        raise OSError(f"cannot write IDX file {path}: {exc}") from exc


def write_idx_images(images, path, height: int | None = None, width: int | None = None) -> None:
    _write(path, encode_idx_images(images, height, width))


def write_idx_labels(labels, path) -> None:
    _write(path, encode_idx_labels(labels))
