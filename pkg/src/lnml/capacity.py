"""Closed-form log-capacity (normalizing constant) of the luckiness-NML.

For the isotropic luckiness ``Sigma0 = sigma2 * I``::

    ln C = -(m nu / 2) ln sigma2
           + (m/2) [ (n+nu) ln(n+nu) - (n+nu)(1 + ln 2) - nu ln(pi nu)
                     + ln(1 + n / (rho2 nu)) ]
           + ln Gamma_m(nu/2) - ln Gamma_m((n+nu)/2)

A general ``Sigma0`` enters only through ``|Sigma0|^{1/m}`` in place of
``sigma2``; the location ``mu0`` does not enter at all.
"""

import math

from .errors import DomainError
from .special import log_multigamma

_LOG2 = math.log(2.0)


def _check_n(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"capacity is defined for n >= 1 observations, got n={n!r}")
    return int(n)


def _log_capacity(m, n, nu, log_sigma2, rho2):
    a = n + nu
    bracket = a * math.log(a) - a * (1.0 + _LOG2) - nu * math.log(math.pi * nu) + math.log1p(n / (rho2 * nu))
    return (
        -0.5 * m * nu * log_sigma2
        + 0.5 * m * bracket
        + log_multigamma(m, 0.5 * nu)
        - log_multigamma(m, 0.5 * a)
    )


def log_capacity_simple(m, n, nu, sigma2, rho2):
    """Log-capacity for ``n`` observations under the isotropic luckiness.

    Parameters
    ----------
    m : int
        Dimension.
    n : int
        Number of observations, ``n >= 1``.
    nu : float
        Degrees of freedom, ``nu > m - 1``.
    sigma2, rho2 : float
        Positive scale and mean-shrinkage parameters.
    """
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    m = int(m)
    n = _check_n(n)
    nu, sigma2, rho2 = float(nu), float(sigma2), float(rho2)
    if not math.isfinite(nu) or nu <= m - 1:
        raise DomainError(f"nu must exceed m-1 = {m - 1}, got {nu}")
    if not (math.isfinite(sigma2) and sigma2 > 0):
        raise DomainError(f"sigma2 must be positive, got {sigma2}")
    if not (math.isfinite(rho2) and rho2 > 0):
        raise DomainError(f"rho2 must be positive, got {rho2}")
    return _log_capacity(m, n, nu, math.log(sigma2), rho2)


def log_capacity_general(m, n, lp):
    """Log-capacity under the location/scale luckiness ``lp``.

    Equal to :func:`log_capacity_simple` with ``sigma2 = |Sigma0|^{1/m}``.
    """
    if m != lp.dim:
        raise DomainError(f"m={m} disagrees with luckiness dimension {lp.dim}")
    n = _check_n(n)
    return _log_capacity(lp.dim, n, lp.nu, lp.logdet_sigma0 / lp.dim, lp.rho2)
