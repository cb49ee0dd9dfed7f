"""Luckiness-NML log-densities and code lengths.

Two routes to the same number are provided. The closed form depends on the
data only through ``|sigma_bar_n|``; the ratio form evaluates the maximized
luckiness-weighted likelihood ``f(x^n; MAP) pi(MAP)`` and divides by the
capacity. The ratio form is the generic definition and stays in the public
surface; the closed form is the fast path used elsewhere.

The luckiness-NML is the unique minimizer of the worst-case tilted regret
``ln[f(x^n; theta) pi(theta) / q(x^n)]``, and its tilted regret equals the
log-capacity for every data set. :func:`tilted_regret` exposes that check.
With ``rho2 = 1`` the luckiness is proportional to the conjugate prior, which
links this code to the conditional NML; that case is not handled separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import log_capacity_general
from .errors import DimensionError, DomainError, NotPositiveDefiniteError
from .mapest import MapEstimate, map_batch
from .model import (
    SuffStats,
    as_observations,
    cholesky_lower,
    log_density_f,
    log_luckiness_pi,
    logdet_from_chol,
)
from .special import log_multigamma

_LOG_PI = math.log(math.pi)


def _log_lnml_from_logdet(m, n, lp, logdet_sigma_bar):
    nu, rho2 = lp.nu, lp.rho2
    a = n + nu
    const = (
        0.5 * m * (nu * math.log(nu) - n * _LOG_PI - a * math.log(a) - math.log1p(n / (rho2 * nu)))
        + log_multigamma(m, 0.5 * a)
        - log_multigamma(m, 0.5 * nu)
        + 0.5 * nu * lp.logdet_sigma0
    )
    return const - 0.5 * a * logdet_sigma_bar


def log_lnml_closed(stats, lp):
    """Log-density of the luckiness-NML from sufficient statistics.

    Parameters
    ----------
    stats : SuffStats
        Statistics of ``n >= 1`` observations, centered at ``lp.mu0``.
    lp : LuckinessParams

    Returns
    -------
    float
        ``ln p_n(x^n)`` in nats. May be positive.
    """
    if stats.n < 1:
        raise DomainError("the luckiness-NML density needs n >= 1 observations")
    est = map_batch(stats, lp)
    try:
        chol = cholesky_lower(est.sigma_bar, "sigma_bar")
    except NotPositiveDefiniteError as exc:  # pragma: no cover - guarded by nu > m-1, Sigma0 > 0
        raise RuntimeError("internal error: MAP covariance lost positive definiteness") from exc
    return _log_lnml_from_logdet(lp.dim, stats.n, lp, logdet_from_chol(chol))


def log_lnml(x, lp):
    """Closed-form log-density of the rows of ``x``."""
    return log_lnml_closed(SuffStats.from_data(x, lp.mu0), lp)


def code_length(x, lp):
    """Luckiness-NML code length of ``x`` in nats."""
    return -log_lnml(x, lp)


def _log_max_numerator(x, lp):
    x = as_observations(x, lp.dim)
    est = map_batch(SuffStats.from_data(x, lp.mu0), lp)
    theta = est.as_gauss()
    return log_density_f(x, theta) + log_luckiness_pi(theta, lp), est


def log_lnml_ratio(x, lp):
    """Log-density as ``ln f(x^n; MAP) + ln pi(MAP) - ln C``."""
    x = as_observations(x, lp.dim)
    if x.shape[0] < 1:
        raise DomainError("the luckiness-NML density needs n >= 1 observations")
    num, _ = _log_max_numerator(x, lp)
    return num - log_capacity_general(lp.dim, x.shape[0], lp)


def tilted_regret(q_log_density, x, lp):
    """Worst-case tilted regret of a code with log-density ``q_log_density`` at ``x``.

    ``max_theta ln[f(x; theta) pi(theta)] - q_log_density``. The maximum is
    attained at the MAP estimate.
    """
    x = as_observations(x, lp.dim)
    if x.shape[0] < 1:
        raise DomainError("tilted regret needs n >= 1 observations")
    num, _ = _log_max_numerator(x, lp)
    return num - float(q_log_density)


@dataclass(frozen=True)
class LnmlReport:
    """Summary of one batch code-length computation."""

    log_density: float
    code_length_nats: float
    map: MapEstimate
    log_capacity: float
    n: int
    m: int


def lnml_report(x, lp):
    x = as_observations(x, lp.dim)
    n = x.shape[0]
    if n < 1:
        raise DomainError("n must be ≥ 1")
    stats = SuffStats.from_data(x, lp.mu0)
    logp = log_lnml_closed(stats, lp)
    return LnmlReport(
        log_density=logp,
        code_length_nats=-logp,
        map=map_batch(stats, lp),
        log_capacity=log_capacity_general(lp.dim, n, lp),
        n=n,
        m=lp.dim,
    )


def log_lnml_many(xs, lp):
    """Closed-form log-density for a stack of data sets.

    Parameters
    ----------
    xs : array_like, shape (batch, n, m)

    Returns
    -------
    ndarray, shape (batch,)
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 3 or xs.shape[2] != lp.dim:
        raise DimensionError(f"expected shape (batch, n, {lp.dim}), got {xs.shape}")
    n = xs.shape[1]
    if n < 1:
        raise DomainError("the luckiness-NML density needs n >= 1 observations")
    nu, rho2 = lp.nu, lp.rho2
    d = xs - lp.mu0
    t = d.sum(axis=1)
    s = np.einsum("bij,bik->bjk", d, d)
    sigma_bar = (s + nu * lp.sigma0) / (n + nu) - np.einsum("bj,bk->bjk", t, t) / (
        (nu + n) * (rho2 * nu + n)
    )
    chol = np.linalg.cholesky(sigma_bar)
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
    return _log_lnml_from_logdet(lp.dim, n, lp, logdet)
