"""Three-stage synthetic data generation.

1. train the VAE on the source images;
2. encode, privatize every latent code, decode;
3. label the decoded images with a classifier trained on clean codes.

Randomness is index-keyed: sample ``i`` draws its reparameterization noise
from stream ``(seed, REPARAM, i)`` and its privacy noise from
``(seed, NOISE, i)``, so outputs do not depend on batching. Nothing random
happens after the privacy noise is added.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import checkpoint
from .data import LabeledDataset, load_split
from .idx import encode_idx_images, encode_idx_labels, quantize, read_idx_images
from .labels import LabelerHyper, LatentClassifier, train_latent_classifier, transfer_labels
from .mechanism import PrivacyParams, add_noise_batch, effective_epsilon
from .numeric import RngStream
from .vae import VaeHyper, VaeModel, decode_chunked, encode_chunked, train_vae

log = logging.getLogger(__name__)

# top-level stream ids
VAE_STREAM = 1
LABELER_STREAM = 2
REPARAM_STREAM = 10
NOISE_STREAM = 11

SYNTH_IMAGES = "synthetic-images-idx3-ubyte"
SYNTH_LABELS = "synthetic-labels-idx1-ubyte"
LATENTS = "latents.npz"
MANIFEST = "manifest.json"
RESOLVED_CONFIG = "config.resolved.json"
VAE_CKPT = "vae.bin"
LABELER_CKPT = "labeler.bin"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def digest64(payload: bytes) -> str:
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


@dataclass
class SyntheticManifest:
    source_name: str
    n: int
    k: int
    requested_epsilon: float | None
    scaling: str
    effective_epsilon: dict
    seed: int
    images_digest: str
    labels_digest: str
    latents_digest: str
    status: str = "complete"
    stage: str = ""
    created_at: str = ""  # UTC; excluded from every digest
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["requested_epsilon"] is not None and math.isinf(d["requested_epsilon"]):
            d["requested_epsilon"] = "inf"
        return d


def _eps_summary(eps: np.ndarray) -> dict:
    if eps.size == 0:
        return {"min": None, "mean": None, "max": None}
    if not np.isfinite(eps).all():
        return {"min": "inf", "mean": "inf", "max": "inf"}
    return {"min": float(eps.min()), "mean": float(eps.mean()), "max": float(eps.max())}


def encode_with_streams(model: VaeModel, images: np.ndarray, rng: RngStream):
    """Posterior statistics and one reparameterized code per row from its index-keyed stream."""
    mu, sigma = encode_chunked(model, images)
    n, k = mu.shape
    eta = np.empty((n, k))
    for i in range(n):
        eta[i] = rng.child(REPARAM_STREAM, i).gaussian(k)
    return mu, sigma, mu + sigma * eta


def latents_bytes(z: np.ndarray, z_prime: np.ndarray) -> bytes:
    return np.ascontiguousarray(z, dtype="<f8").tobytes() + np.ascontiguousarray(z_prime, dtype="<f8").tobytes()


def generate_synthetic(model: VaeModel, data: LabeledDataset, params: PrivacyParams, rng: RngStream,
                       labeler: LatentClassifier, latents=None):
    """Privatize ``data`` through the latent space.

    ``latents`` may pass precomputed ``(mu, sigma, z)`` from
    :func:`encode_with_streams` with the same stream. Returns
    ``(synthetic, (z, z_prime), manifest)``; synthetic pixels are float
    decoder outputs in [0, 1].
    """
    if len(data) and data.dim != model.input_dim:
        raise ValueError(f"data has {data.dim} features, model expects {model.input_dim}")
    if params.k != model.k:
        raise ValueError(f"privacy k={params.k} does not match model latent size {model.k}")
    n = len(data)
    images = data.images if n else np.zeros((0, model.input_dim))
    mu, sigma, z = latents if latents is not None else encode_with_streams(model, images, rng)
    eps = np.array([effective_epsilon(params, s) for s in sigma]) if n else np.zeros(0)
    if n:
        z_prime, radii, _ = add_noise_batch(z, eps, [rng.child(NOISE_STREAM, i) for i in range(n)])
    else:
        z_prime, radii = np.zeros((0, model.k)), np.zeros(0)
    x_prime = decode_chunked(model, z_prime)
    labels = transfer_labels(labeler, z_prime)
    synthetic = LabeledDataset(x_prime, labels, f"{data.name}-synthetic")
    manifest = SyntheticManifest(
        source_name=data.name,
        n=n,
        k=model.k,
        requested_epsilon=params.epsilon,
        scaling=params.scaling,
        effective_epsilon=_eps_summary(eps),
        seed=rng.seed,
        images_digest=digest64(encode_idx_images(quantize(x_prime))),
        labels_digest=digest64(encode_idx_labels(labels)),
        latents_digest=digest64(latents_bytes(z, z_prime)),
        created_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        extra={"mean_radius": float(radii.mean()) if n else None,
               "mean_sigma": float(sigma.mean()) if n else None},
    )
    return synthetic, (z, z_prime), manifest


def regenerate_images(model: VaeModel, z_prime: np.ndarray) -> np.ndarray:
    """Deterministic post-processing: decode stored privatized codes."""
    return decode_chunked(model, z_prime)


# ---------------------------------------------------------------------------
# config-driven run


@dataclass
class PipelineConfig:
    dataset: dict
    vae: VaeHyper = field(default_factory=VaeHyper)
    privacy: dict = field(default_factory=lambda: {"epsilon": 0.5, "scaling": "3sigma"})
    labeler: LabelerHyper = field(default_factory=LabelerHyper)
    seed: int = 0
    out_dir: str = "runs/latest"
    subset: int | None = None
    name: str = "dataset"

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {"dataset", "vae", "privacy", "labeler", "seed", "out_dir", "subset", "name"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        vae = dict(d.get("vae", {}))
        if "batch" in vae:
            vae["batch_size"] = vae.pop("batch")
        if "lr" in vae:
            vae["learning_rate"] = vae.pop("lr")
        lab = dict(d.get("labeler", {}))
        if "lr" in lab:
            lab["learning_rate"] = lab.pop("lr")
        if "batch" in lab:
            lab["batch_size"] = lab.pop("batch")
        privacy = {"epsilon": 0.5, "scaling": "3sigma"} | dict(d.get("privacy", {}))
        privacy["scaling"] = _normalize_scaling(privacy["scaling"])
        return cls(
            dataset=dict(d["dataset"]),
            vae=VaeHyper(**vae),
            privacy=privacy,
            labeler=LabelerHyper(**lab),
            seed=int(d.get("seed", 0)),
            out_dir=str(d.get("out_dir", "runs/latest")),
            subset=d.get("subset"),
            name=str(d.get("name", "dataset")),
        )

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(d["privacy"].get("epsilon"), float) and math.isinf(d["privacy"]["epsilon"]):
            d["privacy"]["epsilon"] = "inf"
        return d

    def privacy_params(self) -> PrivacyParams:
        return PrivacyParams(float(self.privacy["epsilon"]), self.vae.k, self.privacy["scaling"])


def _normalize_scaling(s) -> str:
    s = "none" if s is None else str(s).lower()
    aliases = {"none": "none", "3sigma": "3sigma", "threesigmamean": "3sigma", "three_sigma_mean": "3sigma"}
    if s not in aliases:
        raise ValueError(f"unknown scaling mode {s!r}")
    return aliases[s]


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def train_stage(cfg: PipelineConfig, train: LabeledDataset):
    rng = RngStream(cfg.seed)
    model, history = train_vae(train.images, cfg.vae, rng.child(VAE_STREAM))
    return model, history


def run_full_pipeline(cfg: PipelineConfig, out_dir=None, vae_model: VaeModel | None = None) -> dict:
    """Train the VAE and labeler, generate, and write every artifact.

    A manifest marked ``incomplete`` is written first and replaced when all
    stages finish; on failure it records the failing stage.
    """
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / RESOLVED_CONFIG, cfg.to_dict())
    stub = {"status": "incomplete", "stage": "load", "seed": cfg.seed}
    _write_json(out / MANIFEST, stub)
    stage = "load"
    paths = {"config": out / RESOLVED_CONFIG, "manifest": out / MANIFEST}
    try:
        train, _ = load_split(cfg.dataset, cfg.subset, cfg.name)
        rng = RngStream(cfg.seed)

        stage = "train-vae"
        _write_json(out / MANIFEST, stub | {"stage": stage})
        history = None
        if vae_model is None:
            vae_model, history = train_stage(cfg, train)
        sidecar = {"hyper": asdict(cfg.vae), "seed": cfg.seed}
        if history is not None:
            sidecar["holdout_loss"] = history.holdout_loss
        paths["vae"] = checkpoint.save_vae(out / VAE_CKPT, vae_model, sidecar)

        stage = "train-labeler"
        _write_json(out / MANIFEST, stub | {"stage": stage})
        latents = encode_with_streams(vae_model, train.images, rng)
        labeler = train_latent_classifier(latents[2], train.labels, cfg.labeler, rng.child(LABELER_STREAM),
                                          num_classes=train.num_classes)
        paths["labeler"] = checkpoint.save_classifier(out / LABELER_CKPT, labeler,
                                                      {"hyper": asdict(cfg.labeler), "seed": cfg.seed})

        stage = "generate"
        _write_json(out / MANIFEST, stub | {"stage": stage})
        synthetic, (z, z_prime), manifest = generate_synthetic(
            vae_model, train, cfg.privacy_params(), rng, labeler, latents=latents)
        img_bytes = encode_idx_images(quantize(synthetic.images))
        (out / SYNTH_IMAGES).write_bytes(img_bytes)
        (out / SYNTH_LABELS).write_bytes(encode_idx_labels(synthetic.labels))
        np.savez(out / LATENTS, z=z, z_prime=z_prime)
        paths.update(images=out / SYNTH_IMAGES, labels=out / SYNTH_LABELS, latents=out / LATENTS)
        _write_json(out / MANIFEST, manifest.to_dict())
    except Exception as exc:
        _write_json(out / MANIFEST, stub | {"stage": stage, "error": str(exc)})
        raise StageError(stage, exc) from exc
    return paths


def verify_manifest(out_dir) -> bool:
    """Recompute the stored image and label digests from the emitted files."""
    out = Path(out_dir)
    manifest = json.loads((out / MANIFEST).read_text())
    if manifest.get("status") != "complete":
        return False
    return (digest64((out / SYNTH_IMAGES).read_bytes()) == manifest["images_digest"]
            and digest64((out / SYNTH_LABELS).read_bytes()) == manifest["labels_digest"])


def verify_post_processing(out_dir) -> bool:
    """Decode the stored privatized codes and compare with the emitted images bit for bit."""
    out = Path(out_dir)
    model = checkpoint.load_vae(out / VAE_CKPT)
    z_prime = np.load(out / LATENTS)["z_prime"]
    regenerated = encode_idx_images(quantize(regenerate_images(model, z_prime)))
    return regenerated == (out / SYNTH_IMAGES).read_bytes()


def load_synthetic(out_dir) -> LabeledDataset:
    from .idx import read_idx_labels

    out = Path(out_dir)
    return LabeledDataset(read_idx_images(out / SYNTH_IMAGES), read_idx_labels(out / SYNTH_LABELS), "synthetic")
