"""MAP estimates of (mu, Sigma) under the luckiness prior.

Batch form, from centered sufficient statistics ``t``, ``s``::

    mu_bar    = mu0 + t / (n + rho2 nu)
    sigma_bar = (s + nu Sigma0) / (n + nu) - t t^T / ((nu + n)(rho2 nu + n))

Streaming form, one observation at a time::

    d         = x_n - mu_bar_{n-1}
    mu_bar_n  = mu_bar_{n-1} + d / (n + rho2 nu)
    sigma_bar_n = (nu+n-1)/(nu+n) sigma_bar_{n-1}
                  + (rho2 nu+n-1)/((nu+n)(rho2 nu+n)) d d^T

Both start from ``(mu0, Sigma0)`` at ``n = 0``. The streaming update only adds
a positive multiple of a rank-one term to a positive multiple of an SPD
matrix, so ``sigma_bar`` stays positive definite without any downdating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .model import GaussParams, _as_vector


@dataclass(frozen=True, eq=False)
class MapEstimate:
    """MAP mean ``mu_bar`` and covariance ``sigma_bar`` after ``n`` observations."""

    mu_bar: np.ndarray
    sigma_bar: np.ndarray
    n: int

    def as_gauss(self):
        return GaussParams(self.mu_bar, self.sigma_bar)


def map_initial(lp):
    """The ``n = 0`` estimate: ``(mu0, Sigma0)``."""
    return MapEstimate(lp.mu0.copy(), np.array(lp.sigma0), 0)


def map_batch(stats, lp):
    """MAP estimate from sufficient statistics centered at ``lp.mu0``."""
    if stats.dim != lp.dim:
        raise DimensionError(f"stats have dimension {stats.dim}, luckiness has {lp.dim}")
    if not np.array_equal(stats.center, lp.mu0):
        raise DomainError("sufficient statistics must be centered at lp.mu0")
    n, nu, rho2 = stats.n, lp.nu, lp.rho2
    mu_bar = lp.mu0 + stats.t / (n + rho2 * nu)
    sigma_bar = (stats.s + nu * lp.sigma0) / (n + nu) - np.outer(stats.t, stats.t) / (
        (nu + n) * (rho2 * nu + n)
    )
    # exact symmetry; the outer products are symmetric only up to rounding
    sigma_bar = 0.5 * (sigma_bar + sigma_bar.T)
    return MapEstimate(mu_bar, sigma_bar, n)


def map_stream_update(prev, x, lp):
    """Fold observation number ``prev.n + 1`` into a MAP estimate."""
    m = lp.dim
    if prev.mu_bar.shape != (m,):
        raise DimensionError(f"estimate has dimension {prev.mu_bar.shape[0]}, luckiness has {m}")
    d = _as_vector(x, m, "observation") - prev.mu_bar
    n, nu, rho2 = prev.n + 1, lp.nu, lp.rho2
    mu_bar = prev.mu_bar + d / (n + rho2 * nu)
    sigma_bar = ((nu + n - 1) / (nu + n)) * prev.sigma_bar + (
        (rho2 * nu + n - 1) / ((nu + n) * (rho2 * nu + n))
    ) * np.outer(d, d)
    return MapEstimate(mu_bar, sigma_bar, n)


def map_stream(x, lp):
    """Fold all rows of ``x`` with :func:`map_stream_update`; return the final estimate."""
    est = map_initial(lp)
    for row in np.atleast_2d(np.asarray(x, dtype=float)):
        est = map_stream_update(est, row, lp)
    return est
