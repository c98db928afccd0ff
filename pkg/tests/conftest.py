"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from stabl.environments import make_toy2d
from stabl.manifold import arnoldi_unstable_basis


@pytest.fixture
def toy2d():
    return make_toy2d()


@pytest.fixture(scope="session")
def toy2d_basis():
    return arnoldi_unstable_basis(make_toy2d(), rng=np.random.default_rng(4))
