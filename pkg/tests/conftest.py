"""Shared fixtures: small synthetic multi-label problems."""

import numpy as np
import pytest

from swmlda.data import MultiLabelDataset


def random_labels(rng, C, N, p=0.4):
    """Binary (C, N) labels with at least one label per instance and per class."""
    Y = (rng.random((C, N)) < p).astype(np.int8)
    for i in np.flatnonzero(Y.sum(axis=0) == 0):
        Y[rng.integers(C), i] = 1
    for c in np.flatnonzero(Y.sum(axis=1) == 0):
        Y[c, rng.integers(N)] = 1
    return Y


def random_dataset(rng, N=30, C=4, D=6, p=0.4, role="train"):
    Y = random_labels(rng, C, N, p)
    # class-dependent shift so the problem is learnable, plus noise
    centers = rng.normal(scale=3.0, size=(D, C))
    X = centers @ Y / np.maximum(Y.sum(axis=0), 1) + rng.normal(size=(D, N))
    return MultiLabelDataset(X, Y, tuple(f"f{j}" for j in range(D)),
                             tuple(f"c{c}" for c in range(C)), role)


def blob_split(seed=0, n_train=60, n_test=30, C=3, D=5, p=0.35):
    """Train/test pair drawn from the same class centers."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=4.0, size=(D, C))

    def draw(n, role):
        Y = random_labels(rng, C, n, p)
        X = centers @ Y / Y.sum(axis=0) + 0.5 * rng.normal(size=(D, n))
        return MultiLabelDataset(X, Y, tuple(f"f{j}" for j in range(D)),
                                 tuple(f"c{c}" for c in range(C)), role)

    return draw(n_train, "train"), draw(n_test, "test")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_ds(rng):
    return random_dataset(rng)


@pytest.fixture
def split_csv(tmp_path):
    """Train/test CSV files for end-to-end runs."""
    from swmlda.data import write_csv

    train, test = blob_split()
    tr, te = tmp_path / "toy_train.csv", tmp_path / "toy_test.csv"
    write_csv(train, tr)
    write_csv(test, te)
    return tr, te
