"""Sequential (prequential) form of the luckiness-NML code.

The batch density factorizes into one-step multivariate t predictives,

    p_n(x^n) = prod_i t_{nu-m+i}(x_i | mu_bar_{i-1}, c_i sigma_bar_{i-1}),
    c_i = (rho2 nu + i)(nu + i - 1) / ((rho2 nu + i - 1)(nu - m + i)),

where ``(mu_bar_{i-1}, sigma_bar_{i-1})`` is the MAP estimate after the first
``i - 1`` observations. The factors do not depend on the horizon ``n``, so the
code is a streaming one and the joint law is exchangeable.

Degrees of freedom below 1 occur when ``nu`` is close to ``m - 1``; the t
density is still proper, only its moments may not exist. Per-point code
lengths are differential and can be negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from .errors import DomainError
from .mapest import MapEstimate, map_initial, map_stream_update
from .model import LuckinessParams, _as_vector, as_observations, cholesky_lower, logdet_from_chol


@dataclass(frozen=True, eq=False)
class PredictiveT:
    """Multivariate t distribution with ``dof`` degrees of freedom."""

    dof: float
    location: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.dof) and self.dof > 0):
            raise DomainError(f"dof must be positive, got {self.dof}")

    @property
    def dim(self):
        return self.location.shape[0]


@dataclass(frozen=True, eq=False)
class CoderState:
    """State of a streaming coder before observation number ``step`` (1-based).

    ``map`` summarizes the first ``step - 1`` observations and
    ``accumulated_nats`` is their total code length.
    """

    step: int
    map: MapEstimate
    lp: LuckinessParams
    accumulated_nats: float = 0.0


def init_coder(lp):
    return CoderState(step=1, map=map_initial(lp), lp=lp, accumulated_nats=0.0)


def predictive_params(state):
    """Predictive t distribution for the next observation."""
    lp, i = state.lp, state.step
    if state.map.n != i - 1:
        raise DomainError(f"coder state at step {i} carries a MAP estimate for n={state.map.n}")
    nu, rho2, m = lp.nu, lp.rho2, lp.dim
    dof = nu - m + i
    factor = (rho2 * nu + i) * (nu + i - 1) / ((rho2 * nu + i - 1) * dof)
    return PredictiveT(dof=dof, location=state.map.mu_bar, scale=factor * state.map.sigma_bar)


def log_mvt_pdf(x, p):
    """Log-density of a multivariate t at ``x``.

    ``ln G((d+m)/2) - ln G(d/2) - (m/2) ln(d pi) - (1/2) ln|S|
    - ((d+m)/2) ln(1 + (x-mu)^T S^{-1} (x-mu) / d)``
    """
    m, d = p.dim, p.dof
    x = _as_vector(x, m, "x")
    chol = cholesky_lower(p.scale, "scale")
    z = solve_triangular(chol, x - p.location, lower=True)
    maha = float(z @ z)
    return (
        gammaln(0.5 * (d + m))
        - gammaln(0.5 * d)
        - 0.5 * m * math.log(d * math.pi)
        - 0.5 * logdet_from_chol(chol)
        - 0.5 * (d + m) * math.log1p(maha / d)
    )


def coder_step(state, x):
    """Encode one observation.

    The predictive is taken from the current state first, then ``x`` is folded
    into the MAP estimate, so ``x_i`` is always scored against the prefix
    ``x_1 .. x_{i-1}``.

    Returns
    -------
    (CoderState, float)
        New state and the code length of ``x`` in nats.
    """
    nats = -log_mvt_pdf(x, predictive_params(state))
    new = replace(
        state,
        step=state.step + 1,
        map=map_stream_update(state.map, x, state.lp),
        accumulated_nats=state.accumulated_nats + nats,
    )
    return new, nats


def sequential_code_lengths(x, lp):
    """Per-observation code lengths (nats) of the rows of ``x``."""
    x = as_observations(x, lp.dim)
    state = init_coder(lp)
    out = np.empty(x.shape[0])
    for i, row in enumerate(x):
        state, out[i] = coder_step(state, row)
    return out


def iter_predictions(x, lp):
    """Yield ``(index, predictive, nats)`` for each row of ``x``."""
    x = as_observations(x, lp.dim)
    state = init_coder(lp)
    for i, row in enumerate(x):
        pred = predictive_params(state)
        state, nats = coder_step(state, row)
        yield i, pred, nats
