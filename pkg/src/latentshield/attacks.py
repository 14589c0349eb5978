"""Membership inference evaluation: target models, shadow attacks.

Both attacks learn a two-class MLP from a single attacker-trained shadow
model (members = shadow training rows, non-members = shadow held-out rows)
and then score the target model on balanced member / non-member rows.
The black-box attacker sees the sorted posterior vector; the white-box
attacker additionally sees the per-sample last-layer weight gradient, the
loss and the one-hot label.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .data import LabeledDataset
from .metrics import AttackReport, compute_metrics
from .numeric import MLP, RngStream, ShapeError, as_matrix, softmax, train_softmax_classifier


class ProtocolError(ValueError):
    """A split plan violates the attack's data-separation rules."""


@dataclass
class TargetHyper:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    hidden: int = 256
    optimizer: str = "adam"


@dataclass
class AttackHyper:
    target: TargetHyper = field(default_factory=TargetHyper)
    epochs: int = 80
    batch_size: int = 128
    learning_rate: float = 1e-3
    hidden: int = 128
    threshold: float = 0.5


@dataclass
class TargetModel:
    net: MLP
    num_classes: int
    recipe: dict = field(default_factory=dict)

    def predict_proba(self, x) -> np.ndarray:
        x = as_matrix(x)
        if x.shape[1] != self.net.n_in:
            raise ShapeError(f"input has {x.shape[1]} features, target expects {self.net.n_in}")
        return softmax(self.net.forward(x))

    def accuracy(self, data: LabeledDataset) -> float:
        if len(data) == 0:
            return float("nan")
        return float(np.mean(np.argmax(self.predict_proba(data.images), axis=1) == data.labels))


def train_target(data: LabeledDataset, hyper: TargetHyper, rng: RngStream, num_classes: int | None = None,
                 init: MLP | None = None) -> TargetModel:
    """Train a d -> hidden -> classes MLP; ``init`` warm-starts from a copy of existing weights."""
    if len(data) == 0:
        raise ValueError("cannot train a target model on an empty dataset")
    classes = num_classes or data.num_classes
    if init is not None:
        net = init.copy()
    else:
        net = MLP.init([data.dim, hyper.hidden, classes], ["relu", "identity"], rng.child(0))
    history = train_softmax_classifier(net, data.images, data.labels, hyper.epochs, hyper.batch_size,
                                       hyper.learning_rate, rng.child(1), hyper.optimizer)
    recipe = asdict(hyper) | {"train_size": len(data), "final_loss": history[-1] if history else None}
    return TargetModel(net, classes, recipe)


# ---------------------------------------------------------------------------
# split plan


@dataclass
class SplitPlan:
    target_train: np.ndarray
    shadow_train: np.ndarray
    shadow_test: np.ndarray
    eval_member: np.ndarray
    eval_nonmember: np.ndarray

    def validate(self) -> None:
        tt = set(self.target_train.tolist())
        if tt & set(self.shadow_train.tolist()):
            raise ProtocolError("shadow training rows overlap the target training set")
        if tt & set(self.shadow_test.tolist()):
            raise ProtocolError("shadow held-out rows overlap the target training set")
        if set(self.shadow_train.tolist()) & set(self.shadow_test.tolist()):
            raise ProtocolError("shadow training and held-out rows overlap")
        if not set(self.eval_member.tolist()) <= tt:
            raise ProtocolError("evaluation members must come from the target training set")
        if tt & set(self.eval_nonmember.tolist()):
            raise ProtocolError("evaluation non-members overlap the target training set")

    def to_dict(self) -> dict:
        return {k: v.tolist() for k, v in asdict(self).items()}


def make_split_plan(pool_size: int, member_count: int, nonmember_count: int, shadow_count: int,
                    rng: RngStream, nonmember_pool=None) -> SplitPlan:
    """Target trains on the first ``member_count`` rows of the pool.

    Non-member evaluation rows come from ``nonmember_pool`` (default: every
    row outside the target set); the shadow's in/out rows are disjoint
    draws from the non-target rows.
    """
    target = np.arange(member_count)
    rest = np.arange(member_count, pool_size)
    if nonmember_pool is None:
        nonmember_pool = rest
    nonmember_pool = np.asarray(nonmember_pool)
    if len(rest) < 2 * shadow_count:
        raise ProtocolError(f"pool has {len(rest)} non-target rows, shadow needs {2 * shadow_count}")
    if len(nonmember_pool) < nonmember_count:
        raise ProtocolError(f"only {len(nonmember_pool)} candidate non-members for {nonmember_count}")
    shadow = rng.child(0).choice(rest, 2 * shadow_count)
    plan = SplitPlan(
        target_train=target,
        shadow_train=np.sort(shadow[:shadow_count]),
        shadow_test=np.sort(shadow[shadow_count:]),
        eval_member=target.copy(),
        eval_nonmember=np.sort(rng.child(1).choice(nonmember_pool, nonmember_count)),
    )
    plan.validate()
    return plan


# ---------------------------------------------------------------------------
# features


def blackbox_features(model: TargetModel, x) -> np.ndarray:
    """Posterior vector sorted in decreasing order, on a log scale."""
    p = model.predict_proba(x)
    return np.log(np.clip(-np.sort(-p, axis=1), 1e-30, None))


def extract_whitebox_features(model: TargetModel, x, y, zero_gradients: bool = False) -> np.ndarray:
    """Per-sample [last-layer weight gradient | softmax | loss | one-hot label]."""
    x = as_matrix(x)
    y = np.asarray(y, dtype=np.int64).ravel()
    n = x.shape[0]
    logits, acts = model.net.forward(x, keep=True)
    p = softmax(logits)
    hidden = acts[-2]
    onehot = np.zeros((n, model.num_classes))
    onehot[np.arange(n), y] = 1.0
    loss = -np.log(np.clip(p[np.arange(n), y], 1e-300, None))
    g_logits = p - onehot
    grad_w = (g_logits[:, :, None] * hidden[:, None, :]).reshape(n, -1)
    if zero_gradients:
        grad_w = np.zeros_like(grad_w)
    return np.hstack([grad_w, p, loss[:, None], onehot])


def _standardize(train: np.ndarray, *others: np.ndarray):
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std[std < 1e-12] = 1.0
    return [(a - mean) / std for a in (train, *others)]


def _fit_and_score(f_in, f_out, e_in, e_out, hyper: AttackHyper, rng: RngStream, kind: str) -> AttackReport:
    feats = np.vstack([f_in, f_out])
    truth = np.concatenate([np.ones(len(f_in), dtype=np.int64), np.zeros(len(f_out), dtype=np.int64)])
    evals = np.vstack([e_in, e_out])
    eval_truth = np.concatenate([np.ones(len(e_in), dtype=np.int64), np.zeros(len(e_out), dtype=np.int64)])
    feats, evals = _standardize(feats, evals)
    net = MLP.init([feats.shape[1], hyper.hidden, 2], ["relu", "identity"], rng.child(0))
    train_softmax_classifier(net, feats, truth, hyper.epochs, hyper.batch_size, hyper.learning_rate, rng.child(1))
    scores = softmax(net.forward(evals))[:, 1]
    return compute_metrics(scores, eval_truth, hyper.threshold, kind)


def _shadow(raw_pool: LabeledDataset, plan: SplitPlan, hyper: AttackHyper, rng: RngStream, num_classes: int,
            init: MLP | None = None):
    plan.validate()
    shadow_in = raw_pool.subset(plan.shadow_train)
    shadow_out = raw_pool.subset(plan.shadow_test)
    model = train_target(shadow_in, hyper.target, rng, num_classes, init=init)
    return model, shadow_in, shadow_out


def blackbox_attack(target: TargetModel, raw_pool: LabeledDataset, plan: SplitPlan, hyper: AttackHyper,
                    rng: RngStream) -> AttackReport:
    shadow, s_in, s_out = _shadow(raw_pool, plan, hyper, rng.child(0), target.num_classes)
    e_in = raw_pool.subset(plan.eval_member)
    e_out = raw_pool.subset(plan.eval_nonmember)
    return _fit_and_score(
        blackbox_features(shadow, s_in.images), blackbox_features(shadow, s_out.images),
        blackbox_features(target, e_in.images), blackbox_features(target, e_out.images),
        hyper, rng.child(1), "blackbox",
    )


def whitebox_attack(target: TargetModel, raw_pool: LabeledDataset, plan: SplitPlan, hyper: AttackHyper,
                    rng: RngStream, zero_gradients: bool = False) -> AttackReport:
    # The shadow starts from the target's own weights so that last-layer
    # gradients live in the same hidden-unit coordinates as the target's.
    shadow, s_in, s_out = _shadow(raw_pool, plan, hyper, rng.child(0), target.num_classes, init=target.net)
    e_in = raw_pool.subset(plan.eval_member)
    e_out = raw_pool.subset(plan.eval_nonmember)

    def feats(model, d):
        return extract_whitebox_features(model, d.images, d.labels, zero_gradients)

    return _fit_and_score(feats(shadow, s_in), feats(shadow, s_out), feats(target, e_in), feats(target, e_out),
                          hyper, rng.child(1), "whitebox")
