"""Finite-difference gradient oracles shared by the unit and acceptance tests."""

import numpy as np

from latentshield.attacks import TargetModel, extract_whitebox_features
from latentshield.numeric import MLP, RngStream, layer_forward
from latentshield.vae import init_vae, loss_and_grads, vae_loss


def _loss_fixed_eta(model, x, eta):
    h = layer_forward(model.encoder_trunk, x)
    mu = layer_forward(model.mu_head, h)
    sigma = np.exp(0.5 * layer_forward(model.logvar_head, h))
    return vae_loss(x, model.decoder.forward(mu + sigma * eta), mu, sigma)[0]


def vae_gradient_error(seed: int) -> float:
    """Max relative error between analytic and central-difference gradients on a tiny VAE."""
    g = np.random.default_rng(seed)
    model = init_vae(6, 2, RngStream(seed, 99), hidden=5)
    x = g.uniform(0, 1, (3, 6))
    eta = g.normal(size=(3, 2))
    _, grads = loss_and_grads(model, x, eta)
    h = 1e-5
    worst = 0.0
    for p, gp in zip(model.params(), grads):
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = _loss_fixed_eta(model, x, eta)
            p[idx] = old - h
            down = _loss_fixed_eta(model, x, eta)
            p[idx] = old
            num = (up - down) / (2 * h)
            worst = max(worst, abs(gp[idx] - num) / max(1e-6, abs(gp[idx]) + abs(num)))
    return worst


def small_target(seed, d=8, hidden=6, classes=4):
    return TargetModel(MLP.init([d, hidden, classes], ["relu", "identity"], RngStream(seed)), classes)


def last_layer_gradient_error(seed: int) -> float:
    """Max relative error of the white-box gradient block against central differences."""
    g = np.random.default_rng(seed)
    tgt = small_target(seed)
    x = g.uniform(size=(3, 8))
    y = g.integers(0, 4, 3)
    feats = extract_whitebox_features(tgt, x, y)
    w = tgt.net.layers[-1].weights
    h = 1e-5
    worst = 0.0
    for i in range(3):
        analytic = feats[i, : w.size].reshape(w.shape)
        for idx in np.ndindex(w.shape):
            old = w[idx]
            w[idx] = old + h
            up = -np.log(tgt.predict_proba(x[i:i + 1])[0, y[i]])
            w[idx] = old - h
            down = -np.log(tgt.predict_proba(x[i:i + 1])[0, y[i]])
            w[idx] = old
            num = (up - down) / (2 * h)
            worst = max(worst, abs(analytic[idx] - num) / max(1e-6, abs(analytic[idx]) + abs(num)))
    return worst
