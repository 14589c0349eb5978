"""Desk-scale utility and membership-inference experiments."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .attacks import AttackHyper, TargetHyper, blackbox_attack, make_split_plan, train_target, whitebox_attack
from .data import LabeledDataset
from .labels import LabelerHyper, train_latent_classifier
from .mechanism import PrivacyParams
from .numeric import RngStream
from .pipeline import LABELER_STREAM, VAE_STREAM, encode_with_streams, generate_synthetic
from .vae import VaeHyper, train_vae

log = logging.getLogger(__name__)

TARGET_STREAM = 20
ATTACK_STREAM = 30
PLAN_STREAM = 40

PAPER_EPSILON_GRID = (0.02, 0.05, 0.08, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass
class ExperimentConfig:
    vae: VaeHyper = field(default_factory=VaeHyper)
    labeler: LabelerHyper = field(default_factory=LabelerHyper)
    utility_target: TargetHyper = field(default_factory=lambda: TargetHyper(epochs=20))
    attack: AttackHyper = field(default_factory=AttackHyper)
    scaling: str = "3sigma"
    members: int = 2000
    nonmembers: int = 2000
    shadow_size: int | None = None  # default: min(members, half the non-target pool)


class Generator:
    """VAE + labeler trained once on a source set, reused across budgets."""

    def __init__(self, source: LabeledDataset, cfg: ExperimentConfig, seed: int):
        self.source = source
        self.cfg = cfg
        self.rng = RngStream(seed)
        self.model, self.history = train_vae(source.images, cfg.vae, self.rng.child(VAE_STREAM))
        self.latents = encode_with_streams(self.model, source.images, self.rng)
        self.labeler = train_latent_classifier(self.latents[2], source.labels, cfg.labeler,
                                               self.rng.child(LABELER_STREAM), num_classes=source.num_classes)

    def synthesize(self, epsilon: float):
        params = PrivacyParams(epsilon, self.model.k, "none" if math.isinf(epsilon) else self.cfg.scaling)
        synthetic, _, manifest = generate_synthetic(self.model, self.source, params, self.rng, self.labeler,
                                                    latents=self.latents)
        return synthetic, manifest


def utility_experiment(train: LabeledDataset, test: LabeledDataset, epsilons, seed: int,
                       cfg: ExperimentConfig | None = None) -> dict:
    """Test accuracy of targets trained on raw, noiseless-synthetic and private-synthetic data."""
    cfg = cfg or ExperimentConfig()
    rng = RngStream(seed)
    gen = Generator(train, cfg, seed)
    out = {"seed": seed}
    raw = train_target(train, cfg.utility_target, rng.child(TARGET_STREAM), train.num_classes)
    out["raw"] = raw.accuracy(test)
    synth, _ = gen.synthesize(math.inf)
    out["nppgf"] = train_target(synth, cfg.utility_target, rng.child(TARGET_STREAM), train.num_classes).accuracy(test)
    out["ppgf"] = {}
    for eps in epsilons:
        synth, manifest = gen.synthesize(eps)
        tgt = train_target(synth, cfg.utility_target, rng.child(TARGET_STREAM), train.num_classes)
        out["ppgf"][eps] = tgt.accuracy(test)
        log.info("seed %d eps %g: accuracy %.4f (mean eff eps %s)", seed, eps, out["ppgf"][eps],
                 manifest.effective_epsilon["mean"])
    return out


def attack_pool(train: LabeledDataset, test: LabeledDataset, nonmembers: int):
    """Concatenate train and test; non-members come from the test rows when there are enough of them."""
    pool = LabeledDataset.concat([train, test], "pool")
    nonmember_pool = np.arange(len(train), len(pool)) if len(test) >= nonmembers else None
    return pool, nonmember_pool


def privacy_experiment(pool: LabeledDataset, seed: int, epsilons=(0.5,), kinds=("blackbox", "whitebox"),
                       cfg: ExperimentConfig | None = None, nonmember_pool=None) -> list[dict]:
    """Attack a raw-trained target and one PPGF-trained target per budget.

    The target trains on the first ``cfg.members`` rows of ``pool`` (or on
    their synthetic counterparts); attacks use the same split plan and
    attack seeds for every target so rows differ only in the training data.
    """
    cfg = cfg or ExperimentConfig()
    rng = RngStream(seed)
    rest = len(pool) - cfg.members
    shadow = cfg.shadow_size or min(cfg.members, rest // 2)
    plan = make_split_plan(len(pool), cfg.members, cfg.nonmembers, shadow, rng.child(PLAN_STREAM),
                           nonmember_pool=nonmember_pool)
    members = pool.subset(plan.target_train, "members")
    classes = pool.num_classes

    targets = [("raw", None, train_target(members, cfg.attack.target, rng.child(TARGET_STREAM), classes))]
    if epsilons:
        gen = Generator(members, cfg, seed)
        for eps in epsilons:
            synth, _ = gen.synthesize(eps)
            targets.append(("ppgf", eps, train_target(synth, cfg.attack.target, rng.child(TARGET_STREAM), classes)))

    rows = []
    for source, eps, target in targets:
        for kind in kinds:
            attack = blackbox_attack if kind == "blackbox" else whitebox_attack
            report = attack(target, pool, plan, cfg.attack, rng.child(ATTACK_STREAM, 0 if kind == "blackbox" else 1))
            row = {"source": source, "epsilon": eps, "seed": seed} | report.to_dict()
            rows.append(row)
            log.info("seed %d %s eps=%s %s auc %.4f", seed, source, eps, kind, report.auc)
    return rows


def median(values) -> float:
    return float(np.median(np.asarray(values, dtype=np.float64)))


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
