"""Model-driven label transfer: a small softmax classifier over latent codes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numeric import MLP, RngStream, ShapeError, as_matrix, softmax, train_softmax_classifier


@dataclass
class LabelerHyper:
    epochs: int = 30
    batch_size: int = 128
    learning_rate: float = 1e-3
    hidden: int = 128


@dataclass
class LatentClassifier:
    net: MLP
    num_classes: int

    @property
    def k(self) -> int:
        return self.net.n_in

    def predict_proba(self, z) -> np.ndarray:
        z = as_matrix(z)
        if z.shape[1] != self.k:
            raise ShapeError(f"code has {z.shape[1]} dims, classifier expects {self.k}")
        return softmax(self.net.forward(z))


def train_latent_classifier(z, labels, hyper: LabelerHyper, rng: RngStream,
                            num_classes: int | None = None) -> LatentClassifier:
    z = as_matrix(z)
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if z.shape[0] != labels.shape[0]:
        raise ValueError(f"{z.shape[0]} codes but {labels.shape[0]} labels")
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 0
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes})")
    if labels.shape[0] < num_classes:
        raise ValueError(f"need at least one code per class ({num_classes}), got {labels.shape[0]}")
    net = MLP.init([z.shape[1], hyper.hidden, num_classes], ["relu", "identity"], rng.child(0))
    train_softmax_classifier(net, z, labels, hyper.epochs, hyper.batch_size, hyper.learning_rate, rng.child(1))
    return LatentClassifier(net, num_classes)


def transfer_labels(mc: LatentClassifier, z_prime) -> np.ndarray:
    """Argmax class per code; ``np.argmax`` returns the lowest index on ties."""
    z_prime = as_matrix(z_prime) if np.size(z_prime) else np.zeros((0, mc.k))
    if z_prime.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.argmax(mc.predict_proba(z_prime), axis=1).astype(np.int64)
