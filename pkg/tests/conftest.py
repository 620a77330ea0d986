import json
from pathlib import Path

import numpy as np
import pytest

from prunebound.mnist import make_synthetic_mnist
from prunebound.models import Dataset
from prunebound.rng import RngHandle


@pytest.fixture(scope="session")
def synthetic_idx_dir(tmp_path_factory) -> dict:
    """Small synthetic IDX quartet shared across tests."""
    root = tmp_path_factory.mktemp("idx")
    return make_synthetic_mnist(root, n_train=600, n_test=200, seed=7171)


@pytest.fixture(scope="session")
def toy_two_class() -> Dataset:
    """Linearly separable 2-class set: 100 points in R^2."""
    gen = RngHandle(99, 5).generator()
    n = 100
    labels = np.arange(n) % 2
    centers = np.array([[-2.0, -2.0], [2.0, 2.0]])
    samples = centers[labels] + gen.normal(0, 0.4, size=(n, 2))
    return Dataset(samples=samples, labels=labels)


def write_config(path: Path, **overrides) -> Path:
    cfg_path = path / "config.json"
    cfg_path.write_text(json.dumps(overrides, indent=1))
    return cfg_path
