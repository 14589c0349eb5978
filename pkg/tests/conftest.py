import os
from pathlib import Path

import numpy as np
import pytest

from latentshield.data import DATA_ENV, LabeledDataset, dataset_paths


def _desk_root(tmp_path_factory) -> Path:
    env = os.environ.get(DATA_ENV)
    if env:
        try:
            dataset_paths("mnist", env)
            return Path(env)
        except FileNotFoundError:
            pass
    pytest.importorskip("mlxtend", reason=f"set {DATA_ENV} or install mlxtend for desk data")
    from latentshield.sample_data import export_sample

    root = tmp_path_factory.mktemp("desk")
    export_sample(root)
    return root


@pytest.fixture(scope="session")
def desk_root(tmp_path_factory) -> Path:
    return _desk_root(tmp_path_factory)


@pytest.fixture
def toy_data():
    """Small blob dataset: 3 separable classes in 16 dims, values in [0, 1]."""
    rng = np.random.default_rng(5)
    centers = rng.uniform(0.1, 0.9, (3, 16))
    labels = np.repeat(np.arange(3), 40)
    images = np.clip(centers[labels] + rng.normal(0, 0.05, (120, 16)), 0, 1)
    return LabeledDataset(images, labels, "toy")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        passed, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
