"""Differentially private synthetic images through calibrated noise in a VAE latent space.

The hot special-function kernels come from a compiled extension when it is
built; ``latentshield.BACKEND`` reports which implementation is active.
"""

from ._kernels import BACKEND
from .attacks import (
    AttackHyper,
    SplitPlan,
    TargetHyper,
    TargetModel,
    blackbox_attack,
    extract_whitebox_features,
    make_split_plan,
    train_target,
    whitebox_attack,
)
from .data import LabeledDataset, dataset_paths, load_split
from .distributions import GammaParams, gamma_cdf, gamma_inverse_cdf, lambda_coefficient, log_lambda_coefficient
from .labels import LabelerHyper, train_latent_classifier, transfer_labels
from .mechanism import PrivacyParams, add_noise, add_noise_batch, effective_epsilon, sample_radius
from .metrics import AttackReport, compute_metrics, rank_auc
from .numeric import RngStream
from .pipeline import PipelineConfig, generate_synthetic, run_full_pipeline
from .vae import VaeHyper, decode, encode, train_vae

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AttackHyper",
    "AttackReport",
    "GammaParams",
    "LabeledDataset",
    "LabelerHyper",
    "PipelineConfig",
    "PrivacyParams",
    "RngStream",
    "SplitPlan",
    "TargetHyper",
    "TargetModel",
    "VaeHyper",
    "add_noise",
    "add_noise_batch",
    "blackbox_attack",
    "compute_metrics",
    "dataset_paths",
    "decode",
    "effective_epsilon",
    "encode",
    "extract_whitebox_features",
    "gamma_cdf",
    "gamma_inverse_cdf",
    "generate_synthetic",
    "lambda_coefficient",
    "load_split",
    "log_lambda_coefficient",
    "make_split_plan",
    "rank_auc",
    "run_full_pipeline",
    "sample_radius",
    "train_latent_classifier",
    "train_target",
    "train_vae",
    "transfer_labels",
    "whitebox_attack",
]
