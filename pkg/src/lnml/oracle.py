"""Brute-force reference computations.

These exist to check the closed forms and are deliberately written against
the raw definitions: the capacity as an integral of the maximized
luckiness-weighted likelihood, normalization by integration, and the MAP
estimate by numerical optimization. The Gaussian likelihood and luckiness are
transcribed here again rather than imported, so a slip in :mod:`lnml.model`
cannot cancel out.

The maximized integrand reduces to
``(2 pi e)^{-m(nu+n)/2} |sigma_bar_n|^{-(nu+n)/2}`` because at the MAP the
trace term in the exponent equals ``m (n + nu)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import LowLevelCallable, integrate, optimize
from scipy.special import gammaln

from .errors import DimensionError, DomainError


class OracleConvergenceError(RuntimeError):
    """A numerical oracle did not reach its target accuracy."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for nested adaptive quadrature over the real line.

    Every axis is integrated over ``(-inf, inf)`` after centering at ``mu0``
    and scaling by ``sqrt(sigma0)``. QUADPACK maps the infinite range onto a
    finite one, which copes with the algebraic tails of these integrands;
    truncating at a fixed number of scales would not (a Cauchy-like tail
    leaves about 5% of its mass beyond 12 scales).
    """

    epsabs: float = 0.0
    epsrel: float = 1e-10
    limit: int = 200

    def __post_init__(self):
        if self.epsabs < 0 or self.epsrel <= 0 or (self.epsabs == 0 and self.epsrel <= 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.limit < 1:
            raise DomainError("limit must be at least 1")

    def opts(self):
        return {"epsabs": self.epsabs, "epsrel": self.epsrel, "limit": self.limit}


def _check_lp(lp, m=None):
    if m is not None and lp.dim != m:
        raise DimensionError(f"luckiness has dimension {lp.dim}, expected {m}")


# ---------------------------------------------------------------------------
# quadrature (m = 1)

@lru_cache(maxsize=None)
def _capacity_integrand_1d():
    from numba import carray, cfunc, types

    sig = types.double(types.intc, types.CPointer(types.double))

    @cfunc(sig)
    def integrand(k, xx):
        # xx = u_1 .. u_n, n, nu, sqrt(sigma0), rho2
        a = carray(xx, (k,))
        n = int(a[k - 4])
        nu = a[k - 3]
        scale = a[k - 2]
        rho2 = a[k - 1]
        t = 0.0
        s = 0.0
        for i in range(n):
            d = scale * a[i]
            t += d
            s += d * d
        var = (s + nu * scale * scale) / (n + nu) - t * t / ((nu + n) * (rho2 * nu + n))
        return scale**n * (2.0 * np.pi * np.e * var) ** (-0.5 * (nu + n))

    return LowLevelCallable(integrand.ctypes)


@lru_cache(maxsize=None)
def _reduced_integrand_1d():
    from numba import carray, cfunc, types

    sig = types.double(types.intc, types.CPointer(types.double))

    @cfunc(sig)
    def integrand(k, xx):
        # xx = b, q, n, nu, rho2; a = 1.u / sqrt(n) = b / sqrt(w), q = |u - a 1 / sqrt(n)|
        v = carray(xx, (k,))
        q = v[1]
        n = v[2]
        nu = v[3]
        rho2 = v[4]
        a = v[0] / np.sqrt(rho2 * nu / (rho2 * nu + n))
        t2 = n * a * a
        s = a * a + q * q
        var = (s + nu) / (n + nu) - t2 / ((nu + n) * (rho2 * nu + n))
        return q ** (n - 2.0) * (2.0 * np.pi * np.e * var) ** (-0.5 * (nu + n))

    return LowLevelCallable(integrand.ctypes)


def quad_capacity_1d(n, lp, spec=None, method="reduced"):
    """Capacity for ``m = 1`` by adaptive quadrature over ``x^n``.

    Parameters
    ----------
    n : int
        Number of observations. ``method="nested"`` accepts ``1 <= n <= 3``.
    lp : LuckinessParams
        One-dimensional luckiness.
    spec : QuadratureSpec, optional
    method : {"reduced", "nested"}
        ``"nested"`` integrates every coordinate of ``x^n`` separately.
        ``"reduced"`` uses the fact that the integrand sees ``x`` only through
        its sum and sum of squares: after splitting ``u`` into its component
        along the all-ones direction and the length of the orthogonal rest,
        the ``n``-fold integral becomes a 2-D one (weighted by the area of the
        unit ``(n-2)``-sphere). Along the all-ones direction the integrand
        is stretched by ``1 / sqrt(w)`` with ``w = rho2 nu / (rho2 nu + n)``,
        so that axis is integrated in ``b = sqrt(w) a``. It stays fast for
        heavy tails and any ``n``.

    Returns
    -------
    float
        The capacity itself (not its log).
    """
    _check_lp(lp, 1)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    n = int(n)
    if method not in ("reduced", "nested"):
        raise DomainError(f"unknown method {method!r}")
    if method == "nested" and n > 3:
        raise DomainError(f"nested quadrature supports 1 <= n <= 3, got {n}")
    spec = spec or QuadratureSpec()
    scale = math.sqrt(float(lp.sigma0[0, 0]))
    # the integrand depends on x - mu0 only, so integrate in u = (x - mu0) / scale
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if method == "nested" or n == 1:
            args = (float(n), lp.nu, scale, lp.rho2)
            value, _ = integrate.nquad(
                _capacity_integrand_1d(), [(-np.inf, np.inf)] * n, args=args, opts=spec.opts()
            )
            return value
        # in u the volume element carries scale**n, the variance scale**2
        sphere = 2.0 * math.pi ** ((n - 1) / 2) / math.gamma((n - 1) / 2)
        value, _ = integrate.nquad(
            _reduced_integrand_1d(),
            [(-np.inf, np.inf), (0.0, np.inf)],
            args=(float(n), lp.nu, lp.rho2),
            opts=spec.opts(),
        )
    w = lp.rho2 * lp.nu / (lp.rho2 * lp.nu + n)
    return sphere * value * scale ** (-lp.nu) / math.sqrt(w)


def quad_normalization_1d(log_density, n, lp, spec=None):
    """Integrate ``exp(log_density(x))`` over ``x`` in ``R^n`` (``m = 1``).

    ``log_density`` receives an ``(n, 1)`` array. Used to confirm that a code
    is a proper density.
    """
    _check_lp(lp, 1)
    if int(n) != n or not 1 <= n <= 2:
        raise DomainError(f"normalization quadrature supports n in {{1, 2}}, got {n}")
    spec = spec or QuadratureSpec(epsrel=1e-9)
    center = float(lp.mu0[0])
    scale = math.sqrt(float(lp.sigma0[0, 0]))
    buf = np.empty((int(n), 1))

    def integrand(*u):
        buf[:, 0] = center + scale * np.asarray(u)
        return scale**n * math.exp(log_density(buf))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, _ = integrate.nquad(integrand, [(-np.inf, np.inf)] * int(n), opts=spec.opts())
    return value


# ---------------------------------------------------------------------------
# importance sampling

def _map_cov_root(xs, lp):
    """Upper-triangular ``R`` with ``R^T R = sigma_bar`` for each data set in ``xs``.

    ``sigma_bar`` is written as a sum of positive semidefinite pieces,

        [ sum_i (x_i - xbar)(x_i - xbar)^T
          + (k rho2 nu / (rho2 nu + k)) (xbar - mu0)(xbar - mu0)^T
          + nu Sigma0 ] / (k + nu),

    and factored by a QR of the stacked square-root columns. Heavy-tailed
    proposals produce points far out where forming the Gram matrix directly
    would cancel away the ``Sigma0`` part.
    """
    size, k, m = xs.shape
    nu, rho2 = lp.nu, lp.rho2
    root0 = math.sqrt(nu / (k + nu)) * lp.sigma0_chol
    if k == 0:
        return np.broadcast_to(root0.T, (size, m, m)).copy()
    xbar = xs.mean(axis=1)
    cols = [
        (xs - xbar[:, None, :]) / math.sqrt(k + nu),
        (math.sqrt(k * rho2 * nu / ((rho2 * nu + k) * (k + nu))) * (xbar - lp.mu0))[:, None, :],
        np.broadcast_to(root0.T, (size, m, m)),
    ]
    return np.linalg.qr(np.concatenate(cols, axis=1), mode="r")


def _logdet_root(r):
    return 2.0 * np.sum(np.log(np.abs(np.diagonal(r, axis1=1, axis2=2))), axis=1)


def _sample_proposal(m, n, lp, size, rng, inflate):
    """Draw ``size`` data sets from a sequential multivariate-t process.

    Step ``i`` draws from a t with ``nu - m + i`` degrees of freedom centered at
    the running MAP mean with the one-step predictive scale times ``inflate``.
    With ``inflate = 1`` this would be the target code itself and every
    weight would be the same constant; ``inflate > 1`` keeps the estimator
    honest while the weight ratio stays bounded by ``inflate^(m n / 2)``.
    """
    nu, rho2 = lp.nu, lp.rho2
    xs = np.empty((size, n, m))
    log_q = np.zeros(size)
    for i in range(1, n + 1):
        k = i - 1
        prefix = xs[:, :k]
        loc = lp.mu0 + (prefix - lp.mu0).sum(axis=1) / (k + rho2 * nu)
        r = _map_cov_root(prefix, lp)
        dof = nu - m + i
        factor = inflate * (rho2 * nu + i) * (nu + i - 1) / ((rho2 * nu + i - 1) * dof)
        lower = math.sqrt(factor) * np.swapaxes(r, 1, 2)
        z = rng.standard_normal((size, m))
        w = rng.chisquare(dof, size)
        y = np.einsum("bjk,bk->bj", lower, z) * np.sqrt(dof / w)[:, None]
        # multivariate t log-density, written out
        sol = np.linalg.solve(lower, y[..., None])[..., 0]
        maha = np.sum(sol * sol, axis=1)
        log_q += (
            gammaln(0.5 * (dof + m))
            - gammaln(0.5 * dof)
            - 0.5 * m * math.log(dof * math.pi)
            - 0.5 * (m * math.log(factor) + _logdet_root(r))
            - 0.5 * (dof + m) * np.log1p(maha / dof)
        )
        xs[:, k] = loc + y
    return xs, log_q


def _importance_estimate(log_target, m, n, lp, samples, seed, inflate, chunk):
    if int(samples) != samples or samples < 10_000:
        raise DomainError(f"need at least 10^4 samples, got {samples}")
    if inflate < 1:
        raise DomainError("inflate must be >= 1")
    samples = int(samples)
    n_chunks = -(-samples // chunk)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    weights = np.empty(samples)
    for j, child in enumerate(children):
        lo = j * chunk
        size = min(chunk, samples - lo)
        xs, log_q = _sample_proposal(m, n, lp, size, np.random.default_rng(child), inflate)
        weights[lo : lo + size] = np.exp(log_target(xs) - log_q)
    if not np.all(np.isfinite(weights)):
        raise OracleConvergenceError("non-finite importance weights")
    est = float(np.mean(weights))
    se = float(np.std(weights, ddof=1) / math.sqrt(samples))
    return est, se


def _log_max_integrand(xs, lp):
    n, m = xs.shape[1], xs.shape[2]
    a = lp.nu + n
    return -0.5 * m * a * math.log(2.0 * math.pi * math.e) - 0.5 * a * _logdet_root(_map_cov_root(xs, lp))


def mc_capacity(m, n, lp, samples=10**6, seed=0, inflate=2.0, chunk=1 << 17):
    """Importance-sampling estimate of the capacity.

    Returns
    -------
    (float, float)
        Estimate of the capacity (not its log) and its standard error.
        Bit-identical across runs for a fixed ``seed``.
    """
    _check_lp(lp, m)
    if int(n) != n or n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return _importance_estimate(
        lambda xs: _log_max_integrand(xs, lp), m, int(n), lp, samples, seed, inflate, chunk
    )


def mc_normalization(log_density_many, m, n, lp, samples=10**6, seed=0, inflate=2.0, chunk=1 << 17):
    """Importance-sampling estimate of ``integral exp(log_density)``.

    ``log_density_many`` maps a ``(batch, n, m)`` array to ``(batch,)`` log-densities.
    """
    _check_lp(lp, m)
    return _importance_estimate(log_density_many, m, int(n), lp, samples, seed, inflate, chunk)


# ---------------------------------------------------------------------------
# numerical maximization of f * pi

def _log_f_pi(x, mu, sigma, lp):
    n, m = x.shape
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        return -math.inf
    prec = np.linalg.inv(sigma)
    r = x - mu
    log_f = -0.5 * (m * n * math.log(2 * math.pi) + n * logdet + np.einsum("ij,jk,ik->", r, prec, r))
    dm = mu - lp.mu0
    tr = np.trace(prec @ (lp.sigma0 + lp.rho2 * np.outer(dm, dm)))
    log_pi = -0.5 * lp.nu * (m * math.log(2 * math.pi) + logdet + tr)
    return float(log_f + log_pi)


def _unpack(theta, m):
    mu = theta[:m]
    chol = np.zeros((m, m))
    chol[np.diag_indices(m)] = np.exp(theta[m : 2 * m])
    chol[np.tril_indices(m, -1)] = theta[2 * m :]
    return mu, chol @ chol.T


def _pack(mu, sigma):
    m = mu.shape[0]
    chol = np.linalg.cholesky(sigma)
    return np.concatenate([mu, np.log(np.diag(chol)), chol[np.tril_indices(m, -1)]])


def log_f_pi_objective(x, lp):
    """``theta -> ln f + ln pi`` with ``Sigma`` given by its log-diagonal Cholesky factor."""
    x = np.asarray(x, dtype=float)
    m = lp.dim
    return lambda theta: _log_f_pi(x, *_unpack(np.asarray(theta, dtype=float), m), lp)


def maximize_f_pi(x, lp, max_rounds=50, tol=1e-12):
    """Maximize ``ln f(x; mu, Sigma) + ln pi(mu, Sigma)`` numerically.

    Powell's direction-set search over ``(mu, log diag L, offdiag L)`` with
    ``Sigma = L L^T``, restarted from its own optimum until a round improves
    the objective by less than ``tol``. The start is the sample mean and the
    scatter matrix padded with ``Sigma0`` just enough to be positive definite.

    Returns
    -------
    (ndarray, ndarray, float)
        ``mu``, ``Sigma`` and the maximized objective.

    Raises
    ------
    OracleConvergenceError
        If the objective is still moving after ``max_rounds`` restarts.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, m = x.shape
    if m != lp.dim:
        raise DimensionError(f"data have dimension {m}, luckiness has {lp.dim}")
    if m > 3 or n > 50 or n < 1:
        raise DomainError("maximize_f_pi is meant for m <= 3 and 1 <= n <= 50")
    objective = log_f_pi_objective(x, lp)

    def neg(theta):
        return -objective(theta)

    mean = x.mean(axis=0)
    r = x - mean
    theta = _pack(mean, (r.T @ r + lp.sigma0) / (n + 1))
    value = neg(theta)
    opts = {"xtol": 1e-10, "ftol": 1e-15, "maxfev": 100_000}
    for _ in range(max_rounds):
        res = optimize.minimize(neg, theta, method="Powell", options=opts)
        improved = value - res.fun
        theta, value = res.x, min(value, res.fun)
        if 0 <= improved < tol:
            break
    else:
        raise OracleConvergenceError(f"objective still improving after {max_rounds} rounds")
    mu, sigma = _unpack(theta, m)
    return mu, sigma, -value


# ---------------------------------------------------------------------------
# exhaustive segmentation

def exhaustive_segmentation(n, cost, min_seg, max_splits):
    """Enumerate every segmentation of ``range(n)``; return the shortest.

    ``cost(a, b)`` gives the code length of rows ``a .. b-1``. Totals are
    accumulated left to right and ties are broken toward fewer splits and
    then lexicographically smaller boundaries.

    Returns
    -------
    (tuple, float)
        Boundaries and total code length.
    """
    count_code = math.log(max_splits + 1)
    split_code = math.log(n - 1) if n > 1 else math.inf
    best = None
    for k in range(max_splits + 1):
        for bounds in itertools.combinations(range(1, n), k):
            edges = (0,) + bounds + (n,)
            if any(b - a < min_seg for a, b in zip(edges[:-1], edges[1:])):
                continue
            v = cost(edges[0], edges[1])
            for a, b in zip(edges[1:-1], edges[2:]):
                v = v + cost(a, b)
            total = v + k * split_code + count_code if k else v + count_code
            if best is None or (total, k, bounds) < best:
                best = (total, k, bounds)
    if best is None:
        raise DomainError("no admissible segmentation")
    return best[2], best[0]
