"""Shared fixtures."""
import numpy as np
import pytest

from app.core.config import settings
from app.models.experiment import ExperimentSpec
from app.models.profiles import BlockProfile


@pytest.fixture(autouse=True)
def serial_quiet_settings(monkeypatch):
    """Run trials in-process and without progress bars."""
    monkeypatch.setattr(settings, "workers", 1)
    monkeypatch.setattr(settings, "show_progress", False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def two_block_profile():
    """Two even blocks, the first 100 times denser, at delta = 0.5."""
    return BlockProfile.from_epsilons([0.1, 0.001], [0.5, 0.5], delta=0.5)


@pytest.fixture
def small_spec():
    """Cheap two-block experiment (n=200, m=100) below the phase transition."""
    return ExperimentSpec(
        n=200,
        m=100,
        block_fractions=[0.5, 0.5],
        epsilon_ratio=5.0,
        rho=0.18,
        noise_var=0.2,
        a_param=0.02,
        trials=3,
        seed=7,
        max_iter=200,
    )
