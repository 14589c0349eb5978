"""Export the 5,000-image MNIST sample bundled with ``mlxtend`` as IDX files.

Used as desk-scale data when the full MNIST files are not available::

    python3 -m latentshield.sample_data OUT_DIR

writes ``OUT_DIR/mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte`` with
a fixed shuffle, 4,000 training and 1,000 test images.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from .data import IDX_NAMES
from .idx import write_idx_images, write_idx_labels

SAMPLE_TRAIN = 4000
SAMPLE_SHUFFLE_SEED = 20220101


def load_mlxtend_mnist():
    try:
        from mlxtend.data import mnist_data
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ImportError("the desk-scale sample needs `pip install mlxtend`") from exc
    x, y = mnist_data()
    x = np.asarray(x, dtype=np.uint8)
    order = np.random.default_rng(SAMPLE_SHUFFLE_SEED).permutation(x.shape[0])
    return x[order], np.asarray(y, dtype=np.int64)[order]


def export_sample(root, n_train: int = SAMPLE_TRAIN) -> Path:
    x, y = load_mlxtend_mnist()
    base = Path(root) / "mnist"
    base.mkdir(parents=True, exist_ok=True)
    write_idx_images(x[:n_train], base / IDX_NAMES["train_images"])
    write_idx_labels(y[:n_train], base / IDX_NAMES["train_labels"])
    write_idx_images(x[n_train:], base / IDX_NAMES["test_images"])
    write_idx_labels(y[n_train:], base / IDX_NAMES["test_labels"])
    return base


if __name__ == "__main__":  # pragma: no cover
    ap = argparse.ArgumentParser(prog="python3 -m latentshield.sample_data", description=__doc__.splitlines()[0])
    ap.add_argument("root", metavar="DIR", help="directory that will receive mnist/")
    print(export_sample(ap.parse_args().root))
