import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentshield.metrics import AucUndefinedError, compute_metrics, rank_auc


def brute_auc(scores, truth):
    pos = [s for s, t in zip(scores, truth) if t]
    neg = [s for s, t in zip(scores, truth) if not t]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def test_examples():
    r = compute_metrics([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0])
    assert r.auc == 1.0 and r.accuracy == 1.0
    assert rank_auc([0.9, 0.8, 0.3, 0.1], [1, 0, 1, 0]) == 0.75
    assert rank_auc([0.4] * 6, [1, 0, 1, 0, 0, 1]) == 0.5


def test_single_class_truth():
    with pytest.raises(AucUndefinedError) as info:
        compute_metrics([0.9, 0.2], [1, 1])
    assert info.value.report.accuracy == 0.5 and info.value.report.auc is None


def test_threshold_convention():
    r = compute_metrics([0.5, 0.49], [1, 0])
    assert r.accuracy == 1.0 and r.precision == 1.0 and r.recall == 1.0


def test_random_scores_are_chance():
    g = np.random.default_rng(0)
    truth = np.r_[np.ones(2000), np.zeros(2000)]
    assert abs(compute_metrics(g.uniform(size=4000), truth).auc - 0.5) < 0.02


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 1000), st.integers(0, 2**32 - 1), st.integers(2, 50))
def test_rank_auc_equals_brute_force(n, seed, levels):
    g = np.random.default_rng(seed)
    truth = g.integers(0, 2, n)
    truth[0], truth[1] = 0, 1
    scores = g.integers(0, levels, n) / levels  # coarse grid forces ties
    assert rank_auc(scores, truth) == brute_auc(scores, truth)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=200), st.integers(0, 2**32 - 1))
def test_fscore_identity(scores, seed):
    truth = np.random.default_rng(seed).integers(0, 2, len(scores))
    truth[0], truth[1] = 0, 1
    r = compute_metrics(scores, truth)
    if r.precision and r.recall:
        assert abs(r.fscore - 2 * r.precision * r.recall / (r.precision + r.recall)) < 1e-12
    assert 0.0 <= r.auc <= 1.0
    assert r.member_count + r.nonmember_count == len(scores)


def test_report_json_round_trip():
    import json

    r = compute_metrics([0.9, 0.1, 0.7], [1, 0, 0], attack_kind="blackbox")
    assert json.loads(r.to_json()) == r.to_dict()
