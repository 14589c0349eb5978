"""Attack metrics: thresholded accuracy/precision/recall/F-score and rank AUC."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np


class AucUndefinedError(ValueError):
    """Truth vector has a single class. ``report`` still carries the threshold metrics."""

    def __init__(self, message: str, report: "AttackReport"):
        super().__init__(message)
        self.report = report


@dataclass
class AttackReport:
    accuracy: float
    precision: float
    recall: float
    fscore: float
    auc: float | None
    member_count: int
    nonmember_count: int
    attack_kind: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def rank_auc(scores, truth) -> float:
    """Mann-Whitney AUC with tied scores sharing their average rank."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    t = np.asarray(truth).ravel().astype(bool)
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    uniq, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    # 1-based rank of the first element of each tie group, then average over the group
    starts = np.concatenate(([0], np.cumsum(counts)[:-1])) + 1
    avg_rank = starts + (counts - 1) / 2.0
    ranks = avg_rank[inverse]
    u = ranks[t].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def compute_metrics(scores, truth, threshold: float = 0.5, attack_kind: str = "") -> AttackReport:
    """Member class is positive; a score >= threshold predicts member."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    t = np.asarray(truth).ravel().astype(bool)
    if s.shape != t.shape:
        raise ValueError(f"{s.size} scores but {t.size} truth values")
    pred = s >= threshold
    tp = int((pred & t).sum())
    fp = int((pred & ~t).sum())
    fn = int((~pred & t).sum())
    tn = int((~pred & ~t).sum())
    accuracy = (tp + tn) / t.size if t.size else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    fscore = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    report = AttackReport(accuracy, precision, recall, fscore, None, int(t.sum()), int((~t).sum()), attack_kind)
    if report.member_count == 0 or report.nonmember_count == 0:
        raise AucUndefinedError("AUC is undefined for single-class truth", report)
    report.auc = rank_auc(s, t)
    return report
