"""Gaussian likelihood, luckiness function and the associated value types.

The model is the family of ``m``-variate normal densities with unknown mean
and covariance,

.. math::
    f(x^n;\\mu,\\Sigma) = (2\\pi)^{-mn/2}|\\Sigma|^{-n/2}
    \\exp\\Big(-\\tfrac12\\sum_i (x_i-\\mu)^\\top\\Sigma^{-1}(x_i-\\mu)\\Big),

weighted by a normal-inverse-Wishart shaped luckiness

.. math::
    \\pi(\\mu,\\Sigma) = (2\\pi)^{-m\\nu/2}|\\Sigma|^{-\\nu/2}
    \\exp\\Big(-\\tfrac{\\nu}{2}\\operatorname{tr}\\big[\\Sigma^{-1}
    (\\Sigma_0 + \\rho^2(\\mu-\\mu_0)(\\mu-\\mu_0)^\\top)\\big]\\Big).

With ``mu0 = 0`` and ``sigma0 = sigma2 * I`` this is the simple
(isotropic) luckiness. Densities are with respect to Lebesgue measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionError, DomainError, NotPositiveDefiniteError

_LOG_2PI = math.log(2.0 * math.pi)


def cholesky_lower(a, what="matrix"):
    """Lower Cholesky factor of a symmetric positive definite matrix.

    No jitter is ever added: a failed factorization is an error, because a
    silently regularized covariance would change the code length.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{what} has non-finite entries")
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from exc


def logdet_from_chol(chol):
    return 2.0 * float(np.sum(np.log(np.diagonal(chol))))


def as_observations(x, m=None):
    """Validate data as an ``(n, m)`` float array.

    A one-dimensional input is read as ``n`` scalar observations (``m = 1``).
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"observations must be a 2-D array, got ndim={arr.ndim}")
    if arr.shape[1] < 1:
        raise DimensionError("observations must have at least one column")
    if m is not None and arr.shape[1] != m:
        raise DimensionError(f"expected {m}-dimensional observations, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("observations contain non-finite values")
    return arr


def _as_vector(x, m, what="vector"):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.shape[0] != m:
        raise DimensionError(f"{what} must have shape ({m},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{what} contains non-finite values")
    return v


def _as_square(a, m, what):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return float(a) * np.eye(m)
    a = np.atleast_2d(a)
    if a.shape != (m, m):
        raise DimensionError(f"{what} must have shape ({m}, {m}), got {a.shape}")
    return a


def _check_symmetric(a, what):
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-14 * max(1.0, float(np.max(np.abs(a))))):
        raise DomainError(f"{what} must be symmetric")


@dataclass(frozen=True, eq=False)
class LuckinessParams:
    """Hyperparameters ``(nu, mu0, sigma0, rho2)`` of the luckiness function.

    ``sigma0`` may be passed as a scalar ``sigma2``, meaning ``sigma2 * I``.

    Attributes
    ----------
    nu : float
        Prior strength / degrees of freedom; must exceed ``m - 1``. Real valued.
    mu0 : ndarray, shape (m,)
        Location center.
    sigma0 : ndarray, shape (m, m)
        Symmetric positive definite scale matrix.
    rho2 : float
        Mean shrinkage strength, ``> 0``.
    """

    nu: float
    mu0: np.ndarray
    sigma0: np.ndarray
    rho2: float
    sigma0_chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu0 = np.atleast_1d(np.asarray(self.mu0, dtype=float))
        if mu0.ndim != 1 or mu0.shape[0] < 1:
            raise DimensionError(f"mu0 must be a non-empty vector, got shape {mu0.shape}")
        m = mu0.shape[0]
        mu0 = _as_vector(mu0, m, "mu0")
        nu = float(self.nu)
        rho2 = float(self.rho2)
        if not math.isfinite(nu) or nu <= m - 1:
            raise DomainError(f"nu must exceed m-1 = {m - 1}, got {nu}")
        if not math.isfinite(rho2) or rho2 <= 0:
            raise DomainError(f"rho2 must be positive, got {rho2}")
        sigma0 = _as_square(self.sigma0, m, "sigma0")
        _check_symmetric(sigma0, "sigma0")
        chol = cholesky_lower(sigma0, "sigma0")
        mu0.setflags(write=False)
        sigma0.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "rho2", rho2)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "sigma0", sigma0)
        object.__setattr__(self, "sigma0_chol", chol)

    @classmethod
    def simple(cls, m, nu, sigma2, rho2):
        """Isotropic luckiness centered at the origin: ``sigma0 = sigma2 * I``."""
        if float(sigma2) <= 0:
            raise DomainError(f"sigma2 must be positive, got {sigma2}")
        return cls(nu=nu, mu0=np.zeros(int(m)), sigma0=float(sigma2) * np.eye(int(m)), rho2=rho2)

    @property
    def dim(self):
        return self.mu0.shape[0]

    @property
    def logdet_sigma0(self):
        return logdet_from_chol(self.sigma0_chol)


@dataclass(frozen=True, eq=False)
class GaussParams:
    """Mean vector and covariance matrix of an ``m``-variate normal."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        m = mu.shape[0]
        mu = _as_vector(mu, m, "mu")
        sigma = _as_square(self.sigma, m, "sigma")
        _check_symmetric(sigma, "sigma")
        cholesky_lower(sigma, "sigma")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self):
        return self.mu.shape[0]


@dataclass(frozen=True, eq=False)
class SuffStats:
    """Sufficient statistics of a sample, centered at ``center``.

    ``t = sum_i (x_i - center)`` and ``s = sum_i (x_i - center)(x_i - center)^T``.
    Instances are immutable; :func:`suffstats_update` returns a new one.
    The empty state (``n = 0``) is valid.
    """

    n: int
    t: np.ndarray
    s: np.ndarray
    center: np.ndarray

    @classmethod
    def empty(cls, center):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        m = center.shape[0]
        return cls(0, np.zeros(m), np.zeros((m, m)), center)

    @classmethod
    def from_data(cls, x, center):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        d = as_observations(x, center.shape[0]) - center
        return cls(d.shape[0], d.sum(axis=0), d.T @ d, center)

    @property
    def dim(self):
        return self.center.shape[0]

    def update(self, x):
        return suffstats_update(self, x)


def suffstats_update(stats, x):
    """Return ``stats`` with one more observation ``x`` folded in."""
    d = _as_vector(x, stats.dim, "observation") - stats.center
    return SuffStats(stats.n + 1, stats.t + d, stats.s + np.outer(d, d), stats.center)


def log_density_f(x, theta):
    """Log-likelihood ``ln f(x^n; mu, Sigma)`` of i.i.d. rows of ``x``.

    Parameters
    ----------
    x : array_like, shape (n, m)
    theta : GaussParams

    Returns
    -------
    float
    """
    x = as_observations(x, theta.dim)
    n, m = x.shape
    if n < 1:
        raise DomainError("log_density_f needs n >= 1 observations")
    chol = cholesky_lower(theta.sigma, "sigma")
    z = solve_triangular(chol, (x - theta.mu).T, lower=True)
    return -0.5 * (m * n * _LOG_2PI + n * logdet_from_chol(chol) + float(np.sum(z * z)))


def log_luckiness_pi(theta, lp):
    """Log-luckiness ``ln pi(mu, Sigma; nu, mu0, Sigma0, rho2)``."""
    m = lp.dim
    if theta.dim != m:
        raise DimensionError(f"GaussParams has dimension {theta.dim}, luckiness has {m}")
    chol = cholesky_lower(theta.sigma, "sigma")
    w = solve_triangular(chol, lp.sigma0_chol, lower=True)
    r = solve_triangular(chol, theta.mu - lp.mu0, lower=True)
    trace = float(np.sum(w * w)) + lp.rho2 * float(r @ r)
    return -0.5 * lp.nu * (m * _LOG_2PI + logdet_from_chol(chol) + trace)


def default_luckiness(m, sigma2_floor, radius_R):
    """Default hyperparameters ``(nu=m, mu0=0, Sigma0=sigma2*I, rho2=sigma2/(m R^2))``.

    ``sigma2_floor`` is a rough lower bound on the smallest eigenvalue of the
    data covariance and ``radius_R`` a rough upper bound on the norm of the
    data mean. With these choices the region
    ``(mu - mu0)^T Sigma0^{-1} (mu - mu0) <= 1 / (nu rho2)`` is the ball
    ``||mu|| <= R``.
    """
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    sigma2_floor = float(sigma2_floor)
    radius_R = float(radius_R)
    if not (math.isfinite(sigma2_floor) and sigma2_floor > 0):
        raise DomainError(f"sigma2_floor must be positive, got {sigma2_floor}")
    if not (math.isfinite(radius_R) and radius_R > 0):
        raise DomainError(f"radius_R must be positive, got {radius_R}")
    m = int(m)
    return LuckinessParams.simple(m, nu=m, sigma2=sigma2_floor, rho2=sigma2_floor / (m * radius_R**2))
