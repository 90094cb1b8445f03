import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mmpflow.dynamics import MMPParams, MMPState  # noqa: E402
from mmpflow.spectral import Grid, SpectralField, fft, leray_project  # noqa: E402


def random_vector(grid, rng, solenoidal=True, scale=1.0, dealiased=True):
    """Random real vector field; optionally projected and 2/3-truncated."""
    c = fft(rng.standard_normal((3,) + grid.shape)) * scale
    if dealiased:
        c = c * grid.dealias_mask
    F = SpectralField(grid, c)
    return leray_project(F) if solenoidal else F


def random_state(grid, rng, scale=1.0, dealiased=True):
    return MMPState(
        random_vector(grid, rng, True, scale, dealiased),
        random_vector(grid, rng, False, scale, dealiased),
        random_vector(grid, rng, True, scale, dealiased),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20241017)


@pytest.fixture
def params():
    return MMPParams(mu=0.05, chi=0.02, kappa=0.03, gamma=0.04, nu=0.05)


@pytest.fixture
def grid8():
    return Grid(8)


@pytest.fixture
def grid16():
    return Grid(16)
