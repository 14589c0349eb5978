"""Fully connected VAE used as the latent extractor and reconstructor.

Encoder: input -> 400 (ReLU) -> two parallel k-wide heads (mu, log variance).
Decoder: k -> 400 (ReLU) -> input (sigmoid). Bernoulli likelihood.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .numeric import MLP, DenseLayer, Optimizer, RngStream, ShapeError, as_matrix, layer_backward, layer_forward

log = logging.getLogger(__name__)

CLIP = 1e-7


class TrainingDiverged(FloatingPointError):
    pass


@dataclass
class VaeModel:
    encoder_trunk: DenseLayer
    mu_head: DenseLayer
    logvar_head: DenseLayer
    decoder: MLP

    @property
    def input_dim(self) -> int:
        return self.encoder_trunk.n_in

    @property
    def k(self) -> int:
        return self.mu_head.n_out

    def layers(self) -> list[DenseLayer]:
        return [self.encoder_trunk, self.mu_head, self.logvar_head, *self.decoder.layers]

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers() for p in layer.params()]

    @classmethod
    def from_layers(cls, layers: list[DenseLayer]) -> "VaeModel":
        if len(layers) != 5:
            raise ValueError(f"a VAE has 5 dense layers, got {len(layers)}")
        return cls(layers[0], layers[1], layers[2], MLP(layers[3:]))


@dataclass
class VaeHyper:
    epochs: int = 20
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    k: int = 20
    hidden: int = 400
    holdout_fraction: float = 0.1

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or not self.learning_rate > 0 or self.k < 1:
            raise ValueError(f"invalid VAE hyperparameters: {self}")


@dataclass
class LatentEncoding:
    mu: np.ndarray
    sigma: np.ndarray
    z: np.ndarray


@dataclass
class VaeHistory:
    train_loss: list[float] = field(default_factory=list)
    holdout_loss: list[float] = field(default_factory=list)  # index 0 = before training
    initial_train_loss: float = float("nan")


def init_vae(input_dim: int, k: int, rng: RngStream, hidden: int = 400) -> VaeModel:
    return VaeModel(
        DenseLayer.init(input_dim, hidden, "relu", rng),
        DenseLayer.init(hidden, k, "identity", rng),
        DenseLayer.init(hidden, k, "identity", rng),
        MLP([DenseLayer.init(k, hidden, "relu", rng), DenseLayer.init(hidden, input_dim, "sigmoid", rng)]),
    )


def encode(model: VaeModel, x):
    """Posterior mean and standard deviation; rows of ``x`` are samples."""
    x = as_matrix(x)
    if x.shape[1] != model.input_dim:
        raise ShapeError(f"input has {x.shape[1]} features, model expects {model.input_dim}")
    h = layer_forward(model.encoder_trunk, x)
    mu = layer_forward(model.mu_head, h)
    logvar = layer_forward(model.logvar_head, h)
    return mu, np.exp(0.5 * logvar)


def reparameterize(mu, sigma, rng: RngStream) -> np.ndarray:
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    eta = rng.gaussian(mu.size).reshape(mu.shape)
    return mu + sigma * eta


def decode(model: VaeModel, z) -> np.ndarray:
    z = as_matrix(z)
    if z.shape[1] != model.k:
        raise ShapeError(f"latent code has {z.shape[1]} dims, model expects {model.k}")
    return model.decoder.forward(z)


def decode_chunked(model: VaeModel, z: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Decode in fixed-size blocks so results never depend on the caller's batch size."""
    z = as_matrix(z)
    if z.shape[0] == 0:
        return np.zeros((0, model.input_dim))
    return np.concatenate([decode(model, z[i:i + chunk]) for i in range(0, z.shape[0], chunk)])


def encode_chunked(model: VaeModel, x: np.ndarray, chunk: int = 256):
    x = as_matrix(x) if np.size(x) else np.zeros((0, model.input_dim))
    if x.shape[0] == 0:
        return np.zeros((0, model.k)), np.zeros((0, model.k))
    parts = [encode(model, x[i:i + chunk]) for i in range(0, x.shape[0], chunk)]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def vae_loss(x, x_hat, mu, sigma):
    """Mean over rows of (BCE summed over pixels + KL to N(0, I)).

    Returns ``(total, recon, kl)``.
    """
    x = as_matrix(x)
    x_hat = np.clip(as_matrix(x_hat), CLIP, 1.0 - CLIP)
    mu = as_matrix(mu)
    sigma = as_matrix(sigma)
    if x.shape != x_hat.shape or mu.shape != sigma.shape or mu.shape[0] != x.shape[0]:
        raise ShapeError(f"loss shapes do not conform: x {x.shape}, x_hat {x_hat.shape}, mu {mu.shape}")
    recon = -(x * np.log(x_hat) + (1.0 - x) * np.log1p(-x_hat)).sum(axis=1)
    var = sigma * sigma
    kl = -0.5 * (1.0 + np.log(var) - mu * mu - var).sum(axis=1)
    return float(np.mean(recon + kl)), float(np.mean(recon)), float(np.mean(kl))


def loss_and_grads(model: VaeModel, x: np.ndarray, eta: np.ndarray):
    """Batch-mean loss and its gradient for every parameter, with the
    reparameterization noise ``eta`` held fixed."""
    n = x.shape[0]
    h = layer_forward(model.encoder_trunk, x)
    mu = layer_forward(model.mu_head, h)
    logvar = layer_forward(model.logvar_head, h)
    sigma = np.exp(0.5 * logvar)
    z = mu + sigma * eta
    x_hat, acts = model.decoder.forward(z, keep=True)

    total, recon, kl = vae_loss(x, x_hat, mu, sigma)

    inside = (x_hat > CLIP) & (x_hat < 1.0 - CLIP)
    xc = np.clip(x_hat, CLIP, 1.0 - CLIP)
    g_out = np.where(inside, (xc - x) / (xc * (1.0 - xc)), 0.0) / n
    g_z, dec_grads = model.decoder.backward(acts, g_out)

    g_mu = g_z + mu / n
    g_logvar = g_z * (0.5 * sigma * eta) + 0.5 * (sigma * sigma - 1.0) / n
    gh_mu, gw_mu, gb_mu = layer_backward(model.mu_head, h, g_mu, cached_output=mu)
    gh_lv, gw_lv, gb_lv = layer_backward(model.logvar_head, h, g_logvar, cached_output=logvar)
    _, gw_t, gb_t = layer_backward(model.encoder_trunk, x, gh_mu + gh_lv, cached_output=h)
    grads = [gw_t, gb_t, gw_mu, gb_mu, gw_lv, gb_lv, *dec_grads]
    return (total, recon, kl), grads


def _eval_loss(model: VaeModel, x: np.ndarray, rng: RngStream, chunk: int = 512) -> float:
    if x.shape[0] == 0:
        return float("nan")
    total = 0.0
    for start in range(0, x.shape[0], chunk):
        xb = x[start:start + chunk]
        mu, sigma = encode(model, xb)
        z = mu + sigma * rng.child(start).gaussian(mu.size).reshape(mu.shape)
        total += vae_loss(xb, decode(model, z), mu, sigma)[0] * xb.shape[0]
    return total / x.shape[0]


def train_vae(images, hyper: VaeHyper, rng: RngStream, model: VaeModel | None = None):
    """Train on ``images`` (rows in [0, 1]); returns ``(model, history)``.

    A ``holdout_fraction`` slice (chosen by the stream) is scored before
    and after every epoch with a fixed evaluation noise stream.
    """
    x = as_matrix(images)
    if x.shape[0] == 0:
        raise ValueError("cannot train a VAE on an empty dataset")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("pixels must lie in [0, 1]")
    if model is None:
        model = init_vae(x.shape[1], hyper.k, rng.child(0), hyper.hidden)
    order = rng.child(1).permutation(x.shape[0])
    n_hold = int(round(hyper.holdout_fraction * x.shape[0])) if x.shape[0] >= 10 else 0
    hold, train = x[order[:n_hold]], x[order[n_hold:]]
    eval_rng = rng.child(2)
    step_rng = rng.child(3)

    hist = VaeHistory()
    hist.holdout_loss.append(_eval_loss(model, hold, eval_rng))
    hist.initial_train_loss = _eval_loss(model, train, eval_rng)
    opt = Optimizer(hyper.optimizer, hyper.learning_rate)
    params = model.params()
    n = train.shape[0]
    for epoch in range(hyper.epochs):
        perm = step_rng.child(epoch, 0).permutation(n)
        noise = step_rng.child(epoch, 1)
        running = 0.0
        for start in range(0, n, hyper.batch_size):
            xb = train[perm[start:start + hyper.batch_size]]
            eta = noise.gaussian(xb.shape[0] * model.k).reshape(xb.shape[0], model.k)
            (total, _, _), grads = loss_and_grads(model, xb, eta)
            if not np.isfinite(total):
                raise TrainingDiverged(f"VAE loss became {total} at epoch {epoch}, batch offset {start}")
            opt.step(params, grads)
            running += total * xb.shape[0]
        hist.train_loss.append(running / n)
        hist.holdout_loss.append(_eval_loss(model, hold, eval_rng))
        log.info("vae epoch %d train %.3f holdout %.3f", epoch, hist.train_loss[-1], hist.holdout_loss[-1])
    return model, hist
