import math

import numpy as np
import pytest
from scipy.stats import multivariate_t

from lnml import oracle
from lnml.capacity import log_capacity_general
from lnml.codelength import (
    code_length,
    lnml_report,
    log_lnml,
    log_lnml_closed,
    log_lnml_many,
    log_lnml_ratio,
    tilted_regret,
)
from lnml.errors import DomainError
from lnml.mapest import map_batch
from lnml.model import GaussParams, LuckinessParams, SuffStats, log_density_f, log_luckiness_pi

from .conftest import random_lp

LOG_CAUCHY_AT_0 = math.log(math.sqrt(2) / (2 * math.pi))  # t_1(0 | 0, 2)


def test_single_point_at_center(lp_unit):
    got = log_lnml_closed(SuffStats.from_data([[0.0]], [0.0]), lp_unit)
    assert got == pytest.approx(LOG_CAUCHY_AT_0, abs=1e-13)
    assert got == pytest.approx(-1.4913035, abs=1e-7)
    # independent: scipy's t with 1 dof, scale sqrt(2)
    assert got == pytest.approx(multivariate_t(loc=[0.0], shape=[[2.0]], df=1).logpdf([0.0]), abs=1e-12)


def test_single_point_off_center(lp_unit):
    got = log_lnml([[2.0]], lp_unit)
    expected = 0.5 * (0 - math.log(math.pi) - 2 * math.log(2) - math.log(2)) + 0.0 - 0.5 * math.log(math.pi) - math.log(1.5)
    assert got == pytest.approx(expected, abs=1e-13)
    assert log_lnml_ratio([[2.0]], lp_unit) == pytest.approx(got, abs=1e-10)


def test_ratio_numerator(lp_unit):
    # f * pi at the MAP reduces to (2 pi e)^{-1} |sigma_bar|^{-1}, sigma_bar = 1/2
    theta = GaussParams([0.0], 0.5)
    num = log_density_f([[0.0]], theta) + log_luckiness_pi(theta, lp_unit)
    assert num == pytest.approx(-math.log(2 * math.pi * math.e) + math.log(2), abs=1e-13)
    assert num == pytest.approx(-2.1447299, abs=1e-7)
    assert num - log_capacity_general(1, 1, lp_unit) == pytest.approx(LOG_CAUCHY_AT_0, abs=1e-13)


def test_map_maximizes_numerator(rng):
    lp = random_lp(rng, 2)
    x = rng.standard_normal((6, 2))
    est = map_batch(SuffStats.from_data(x, lp.mu0), lp)
    best = log_density_f(x, est.as_gauss()) + log_luckiness_pi(est.as_gauss(), lp)
    for _ in range(50):
        mu = est.mu_bar + rng.normal(0, 0.05, 2)
        sigma = est.sigma_bar * rng.uniform(0.9, 1.1)
        theta = GaussParams(mu, sigma)
        assert log_density_f(x, theta) + log_luckiness_pi(theta, lp) < best


def test_normalization_n1(lp_unit):
    total = oracle.quad_normalization_1d(lambda x: log_lnml(x, lp_unit), 1, lp_unit)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_closed_equals_ratio(m, rng):
    for _ in range(15):
        lp = random_lp(rng, m)
        n = int(rng.integers(1, 101))
        x = rng.standard_normal((n, m)) * rng.uniform(0.3, 3) + lp.mu0
        assert abs(log_lnml(x, lp) - log_lnml_ratio(x, lp)) <= 1e-9


def test_tilted_regret_is_log_capacity(rng):
    for _ in range(50):
        m = int(rng.integers(1, 4))
        lp = random_lp(rng, m)
        n = int(rng.integers(1, 51))
        x = rng.standard_normal((n, m)) * 2 + lp.mu0
        r = tilted_regret(log_lnml(x, lp), x, lp)
        assert abs(r - log_capacity_general(m, n, lp)) <= 1e-9


def test_tilted_regret_grows_for_smaller_q(lp_unit):
    x = [[0.3], [1.2]]
    q = log_lnml(x, lp_unit)
    assert tilted_regret(q - 0.1, x, lp_unit) == pytest.approx(log_capacity_general(1, 2, lp_unit) + 0.1, abs=1e-12)


def test_permutation_invariant(rng):
    lp = random_lp(rng, 3)
    x = rng.standard_normal((40, 3))
    base = log_lnml(x, lp)
    for _ in range(5):
        assert log_lnml(x[rng.permutation(40)], lp) == pytest.approx(base, abs=1e-10)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_affine_equivariance(m, rng):
    for _ in range(10):
        lp = random_lp(rng, m)
        n = int(rng.integers(1, 30))
        x = rng.standard_normal((n, m)) + lp.mu0
        a = rng.standard_normal((m, m)) + 0.5 * np.eye(m)
        b = rng.standard_normal(m)
        lp2 = LuckinessParams(lp.nu, a @ lp.mu0 + b, a @ lp.sigma0 @ a.T, lp.rho2)
        y = x @ a.T + b
        shift = log_lnml(x, lp) - log_lnml(y, lp2)
        assert shift == pytest.approx(n * math.log(abs(np.linalg.det(a))), abs=1e-8)


def test_report(lp_unit):
    rep = lnml_report([[0.0]], lp_unit)
    assert rep.code_length_nats == pytest.approx(-LOG_CAUCHY_AT_0, abs=1e-13)
    assert rep.log_capacity == pytest.approx(0.5 * math.log(2) - 1, abs=1e-14)
    assert (rep.n, rep.m) == (1, 1)
    assert rep.map.sigma_bar[0, 0] == pytest.approx(0.5)
    assert code_length([[0.0]], lp_unit) == rep.code_length_nats


def test_many_matches_single(rng):
    lp = random_lp(rng, 2)
    xs = rng.standard_normal((25, 4, 2))
    np.testing.assert_allclose(log_lnml_many(xs, lp), [log_lnml(x, lp) for x in xs], rtol=1e-12, atol=1e-12)


def test_empty_rejected(lp_unit):
    with pytest.raises(DomainError):
        log_lnml_closed(SuffStats.empty([0.0]), lp_unit)
    with pytest.raises(DomainError):
        log_lnml_ratio(np.empty((0, 1)), lp_unit)
