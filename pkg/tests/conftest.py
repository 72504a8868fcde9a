"""Shared fixtures: small synthetic datasets and reusable oracles."""

import numpy as np
import pytest

from adrf.dataset import Dataset
from adrf.fda import Grid


@pytest.fixture(scope="session")
def grid21():
    return Grid.uniform(0.0, 1.0, 21)


@pytest.fixture(scope="session")
def grid101():
    return Grid.uniform(0.0, 1.0, 101)


def make_dataset(seed: int, n: int = 20, m: int = 21, p: int = 1) -> Dataset:
    """Small random dataset with smooth curves; quick to fit."""
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(0.0, 1.0, m)
    t = grid.points
    coef = rng.normal(size=(n, 4)) * np.array([2.0, 1.5, 1.0, 0.5])
    basis = np.vstack([
        np.ones_like(t),
        np.sqrt(2.0) * np.sin(2 * np.pi * t),
        np.sqrt(2.0) * np.cos(2 * np.pi * t),
        np.sqrt(2.0) * np.sin(4 * np.pi * t),
    ])
    z = coef @ basis
    x = rng.normal(size=(n, p))
    y = 1.0 + coef[:, 1] + x[:, 0] + rng.normal(size=n) * 0.5
    return Dataset(grid, z, x, y)


@pytest.fixture
def small_dataset():
    return make_dataset(seed=42)
