"""Labeled image datasets and where to find them on disk."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .idx import read_idx_images, read_idx_labels

DATA_ENV = "LATENTSHIELD_DATA"
DATASET_DIRS = {"mnist": "mnist", "fashion": "fashion"}
IDX_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass
class LabeledDataset:
    images: np.ndarray  # N x d, entries in [0, 1]
    labels: np.ndarray  # N ints
    name: str = ""

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        if self.images.ndim == 1 and self.images.size == 0:
            self.images = self.images.reshape(0, 0)
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError(f"{self.images.shape[0]} images but {self.labels.shape[0]} labels")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        if self.labels.size and self.labels.min() < 0:
            raise ValueError("labels must be nonnegative")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.images.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    def subset(self, idx, name: str | None = None) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.images[idx], self.labels[idx], name or self.name)

    def head(self, n: int) -> "LabeledDataset":
        return self.subset(np.arange(min(n, len(self))))

    @classmethod
    def from_idx(cls, images_path, labels_path, name: str = "") -> "LabeledDataset":
        return cls(read_idx_images(images_path), read_idx_labels(labels_path), name or Path(images_path).stem)

    @staticmethod
    def concat(parts: list["LabeledDataset"], name: str = "") -> "LabeledDataset":
        return LabeledDataset(np.concatenate([p.images for p in parts]),
                              np.concatenate([p.labels for p in parts]), name)


def _resolve(directory: Path, stem: str) -> Path:
    for cand in (directory / stem, directory / (stem + ".gz")):
        if cand.exists():
            return cand
    raise FileNotFoundError(f"no {stem}[.gz] under {directory}")


def dataset_paths(dataset: str, root=None) -> dict[str, Path]:
    """Standard IDX file locations for ``dataset`` under ``root`` or ``$LATENTSHIELD_DATA``."""
    if dataset not in DATASET_DIRS:
        raise ValueError(f"unknown dataset {dataset!r}; choose from {sorted(DATASET_DIRS)}")
    root = root or os.environ.get(DATA_ENV)
    if not root:
        raise FileNotFoundError(f"set {DATA_ENV} to the directory holding {DATASET_DIRS[dataset]}/")
    root = Path(root)
    base = root / DATASET_DIRS[dataset]
    if not base.is_dir():
        base = root
    return {key: _resolve(base, stem) for key, stem in IDX_NAMES.items()}


def load_split(paths: dict, subset: int | None = None, name: str = ""):
    """Read ``(train, test)`` from a dict of the four IDX paths."""
    train = LabeledDataset.from_idx(paths["train_images"], paths["train_labels"], name + "-train")
    test = LabeledDataset.from_idx(paths["test_images"], paths["test_labels"], name + "-test")
    if subset:
        train = train.head(subset)
    return train, test
