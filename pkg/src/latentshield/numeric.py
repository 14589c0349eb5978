"""Dense float64 linear algebra, MLP layers with manual backprop, optimizers
and seeded random streams.

A "Matrix" throughout the package is a 2-D ``numpy.ndarray`` of dtype
float64 in C order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "identity", "leaky_relu")
LEAKY_SLOPE = 0.01


class ShapeError(ValueError):
    """Raised when operand shapes do not conform."""


def as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    return np.ascontiguousarray(a)


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


# ---------------------------------------------------------------------------
# random streams


class RngStream:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    Child streams extend the key, so work fanned out by sample index draws
    from independent sequences regardless of execution order. A stream is
    single-owner; do not share one across threads.
    """

    def __init__(self, seed: int, stream_id: int = 0, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = (self.stream_id,) + tuple(_path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self._path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self._path[1:] + tuple(int(k) for k in keys))

    def gaussian(self, n: int) -> np.ndarray:
        """``n`` i.i.d. standard normal draws."""
        if n < 1:
            raise ValueError("n must be >= 1")
        return self._gen.standard_normal(n)

    def uniform(self) -> float:
        """One draw from the open interval (0, 1); zero is rejected."""
        while True:
            u = self._gen.random()
            if u > 0.0:
                return u

    def uniform_array(self, n: int) -> np.ndarray:
        u = self._gen.random(n)
        bad = u <= 0.0
        while bad.any():
            u[bad] = self._gen.random(int(bad.sum()))
            bad = u <= 0.0
        return u

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, pool, size: int) -> np.ndarray:
        return self._gen.choice(np.asarray(pool), size=size, replace=False)

    def init_uniform(self, shape, bound: float) -> np.ndarray:
        return self._gen.uniform(-bound, bound, size=shape)


def rng_gaussian(rng: RngStream, n: int) -> np.ndarray:
    return rng.gaussian(n)


def rng_uniform(rng: RngStream) -> float:
    return rng.uniform()


# ---------------------------------------------------------------------------
# layers


def _activate(kind: str, pre: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(pre, 0.0)
    if kind == "sigmoid":
        # split by sign so exp never overflows
        out = np.empty_like(pre)
        pos = pre >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-pre[pos]))
        e = np.exp(pre[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    if kind == "identity":
        return pre
    if kind == "leaky_relu":
        return np.where(pre > 0, pre, LEAKY_SLOPE * pre)
    raise ValueError(f"unknown activation {kind!r}")


def _activation_grad(kind: str, out: np.ndarray) -> np.ndarray | None:
    """Derivative of the activation expressed through its output (None = 1)."""
    if kind == "relu":
        return (out > 0).astype(np.float64)
    if kind == "sigmoid":
        return out * (1.0 - out)
    if kind == "identity":
        return None
    if kind == "leaky_relu":
        return np.where(out > 0, 1.0, LEAKY_SLOPE)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class DenseLayer:
    weights: np.ndarray  # out x in
    bias: np.ndarray  # out
    activation: str = "identity"

    def __post_init__(self):
        self.weights = as_matrix(self.weights)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64).ravel()
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ShapeError(f"bias length {self.bias.shape[0]} does not match {self.weights.shape[0]} outputs")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @classmethod
    def init(cls, n_in: int, n_out: int, activation: str, rng: RngStream) -> "DenseLayer":
        bound = 1.0 / np.sqrt(n_in)
        return cls(rng.init_uniform((n_out, n_in), bound), rng.init_uniform(n_out, bound), activation)

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def params(self) -> list[np.ndarray]:
        return [self.weights, self.bias]

    def forward(self, x) -> np.ndarray:
        return layer_forward(self, x)


def layer_forward(layer: DenseLayer, x) -> np.ndarray:
    x = as_matrix(x)
    if x.shape[1] != layer.n_in:
        raise ShapeError(f"input {x.shape[0]}x{x.shape[1]} does not fit layer weights {layer.n_out}x{layer.n_in}")
    return _activate(layer.activation, x @ layer.weights.T + layer.bias)


def layer_backward(layer: DenseLayer, cached_input, grad_out, cached_output=None):
    """Gradients of a loss through one layer.

    Returns ``(grad_in, grad_w, grad_b)`` given the upstream gradient with
    respect to the layer's post-activation output. ``cached_output`` skips
    recomputing the forward pass when the caller kept it.
    """
    x = as_matrix(cached_input)
    g = as_matrix(grad_out)
    if x.shape[1] != layer.n_in or g.shape != (x.shape[0], layer.n_out):
        raise ShapeError(
            f"backward shapes do not conform: input {x.shape}, grad_out {g.shape}, "
            f"weights {layer.weights.shape}"
        )
    out = layer_forward(layer, x) if cached_output is None else cached_output
    d_act = _activation_grad(layer.activation, out)
    if d_act is not None:
        g = g * d_act
    return g @ layer.weights, g.T @ x, g.sum(axis=0)


class MLP:
    """A stack of dense layers with cached forward activations."""

    def __init__(self, layers: list[DenseLayer]):
        for prev, nxt in zip(layers, layers[1:]):
            if prev.n_out != nxt.n_in:
                raise ShapeError(f"layer widths do not chain: {prev.n_out} -> {nxt.n_in}")
        self.layers = layers

    @classmethod
    def init(cls, sizes: list[int], activations: list[str], rng: RngStream) -> "MLP":
        if len(activations) != len(sizes) - 1:
            raise ValueError("need one activation per layer")
        return cls([DenseLayer.init(a, b, act, rng) for a, b, act in zip(sizes, sizes[1:], activations)])

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def forward(self, x, keep: bool = False):
        """Run the stack; with ``keep=True`` also return every layer input and the final output."""
        acts = [as_matrix(x)]
        for layer in self.layers:
            acts.append(layer_forward(layer, acts[-1]))
        if keep:
            return acts[-1], acts
        return acts[-1]

    def backward(self, acts: list[np.ndarray], grad_out: np.ndarray):
        """Return ``(grad_input, param_grads)`` with param_grads aligned to ``params()``."""
        grads: list[np.ndarray] = []
        g = grad_out
        for i in range(len(self.layers) - 1, -1, -1):
            g, gw, gb = layer_backward(self.layers[i], acts[i], g, cached_output=acts[i + 1])
            grads = [gw, gb] + grads
        return g, grads

    def copy(self) -> "MLP":
        return MLP([DenseLayer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers])


# ---------------------------------------------------------------------------
# optimizers


@dataclass
class Optimizer:
    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_num: float = 1e-8
    _m: list = field(default_factory=list, repr=False)
    _v: list = field(default_factory=list, repr=False)
    _t: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        return optimizer_step(self, params, grads)


def optimizer_step(opt: Optimizer, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
    """Update ``params`` in place and return them."""
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameter blocks but {len(grads)} gradient blocks")
    for p, g in zip(params, grads):
        if p.shape != np.shape(g):
            raise ShapeError(f"parameter shape {p.shape} does not match gradient shape {np.shape(g)}")
    if opt.kind == "sgd":
        for p, g in zip(params, grads):
            p -= opt.learning_rate * g
        return params
    if not opt._m:
        opt._m = [np.zeros_like(p) for p in params]
        opt._v = [np.zeros_like(p) for p in params]
    opt._t += 1
    b1, b2 = opt.beta1, opt.beta2
    c1 = 1.0 - b1**opt._t
    c2 = 1.0 - b2**opt._t
    for p, g, m, v in zip(params, grads, opt._m, opt._v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= opt.learning_rate * (m / c1) / (np.sqrt(v / c2) + opt.eps_num)
    return params


# ---------------------------------------------------------------------------
# softmax classification helpers shared by the labeler, target and attack nets


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_grad(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy and its gradient w.r.t. the logits."""
    n = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(n), labels]))
    g = np.exp(z - logsum[:, None])
    g[np.arange(n), labels] -= 1.0
    return loss, g / n


def train_softmax_classifier(
    net: MLP,
    x: np.ndarray,
    y: np.ndarray,
    epochs: int,
    batch_size: int,
    learning_rate: float,
    rng: RngStream,
    optimizer: str = "adam",
) -> list[float]:
    """Minibatch training of an MLP whose last layer emits logits.

    Returns the mean training loss per epoch.
    """
    opt = Optimizer(optimizer, learning_rate)
    params = net.params()
    history = []
    n = x.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            logits, acts = net.forward(x[idx], keep=True)
            loss, g = cross_entropy_grad(logits, y[idx])
            if not np.isfinite(loss):
                raise FloatingPointError(f"classifier loss diverged (loss={loss})")
            _, grads = net.backward(acts, g)
            opt.step(params, grads)
            total += loss * len(idx)
        history.append(total / n)
    return history
