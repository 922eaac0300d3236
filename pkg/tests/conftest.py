"""Shared fixtures and random-channel generators."""
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from covertmac.channel import Dmmac, paper_channel, validate

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_dmmac(rng: np.random.Generator, x3_size=None, y_size=None, z_size=None) -> Dmmac:
    """Rows drawn uniformly from the simplex; admissible with probability 1."""
    x3 = x3_size or int(rng.integers(1, 4))
    ny = y_size or int(rng.integers(2, 5))
    nz = z_size or int(rng.integers(2, 5))
    gy = rng.dirichlet(np.ones(ny), size=(2, 2, x3))
    gz = rng.dirichlet(np.ones(nz), size=(2, 2, x3))
    return Dmmac(gy, gz)


def random_single_user(rng: np.random.Generator) -> Dmmac:
    """X3-inert channel on which only covert user 1 matters."""
    ny, nz, n3 = int(rng.integers(2, 5)), int(rng.integers(2, 5)), int(rng.integers(1, 3))
    gy = rng.dirichlet(np.ones(ny), 2)
    gz = rng.dirichlet(np.ones(nz), 2)
    return Dmmac(np.broadcast_to(gy[:, None, None, :], (2, 2, n3, ny)).copy(),
                 np.broadcast_to(gz[:, None, None, :], (2, 2, n3, nz)).copy())


def admissible(rng, **kw) -> Dmmac:
    while True:
        ch = random_dmmac(rng, **kw)
        if validate(ch).ok:
            return ch


@pytest.fixture(scope="session")
def paper():
    return paper_channel()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
