import numpy as np
import pytest

from lnml.model import LuckinessParams


def random_spd(rng, m, scale=1.0):
    a = rng.standard_normal((m, m))
    return scale * (a @ a.T / m + 0.3 * np.eye(m))


def random_lp(rng, m):
    """Random valid hyperparameters, including nu close to m - 1."""
    nu = (m - 1) + rng.uniform(0.05, 4.0)
    return LuckinessParams(
        nu=nu,
        mu0=rng.normal(0.0, 2.0, m),
        sigma0=random_spd(rng, m, rng.uniform(0.2, 3.0)),
        rho2=rng.uniform(0.05, 5.0),
    )


@pytest.fixture
def lp_unit():
    """nu=1, mu0=0, Sigma0=1, rho2=1 in one dimension."""
    return LuckinessParams(1.0, [0.0], 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
