"""MDL change-point detection with luckiness-NML segment costs.

A segmentation of ``x_0 .. x_{n-1}`` into contiguous blocks is encoded as

* the number of splits, uniformly over ``0 .. max_splits``: ``ln(max_splits + 1)``
* each split position, uniformly over the ``n - 1`` gaps: ``ln(n - 1)`` per split
* each block with the luckiness-NML code under one shared luckiness.

The luckiness is not refit per block, so the total stays a valid code length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codelength import _log_lnml_from_logdet, code_length
from .errors import DomainError
from .model import as_observations


@dataclass(frozen=True)
class Segmentation:
    """Result of a change-point search.

    Attributes
    ----------
    boundaries : tuple of int
        Split indices, strictly increasing, each in ``(0, n)``. A boundary
        ``k`` starts a new block at row ``k``.
    total_nats : float
        Segment costs plus split-position and split-count codes.
    segment_nats : tuple of float
        Code length of each block.
    baseline_nats : float
        Total of the unsplit description, including the split-count code.
    """

    boundaries: tuple
    total_nats: float
    segment_nats: tuple
    baseline_nats: float

    @property
    def n_segments(self):
        return len(self.boundaries) + 1


class SegmentCoster:
    """Segment code lengths from cached prefix sums of centered statistics.

    ``cost(a, b)`` is the code length of rows ``a .. b-1`` and costs O(m^3).
    """

    def __init__(self, x, lp):
        x = as_observations(x, lp.dim)
        self.lp = lp
        self.n, self.m = x.shape
        d = x - lp.mu0
        self._t = np.zeros((self.n + 1, self.m))
        self._s = np.zeros((self.n + 1, self.m, self.m))
        np.cumsum(d, axis=0, out=self._t[1:])
        np.cumsum(np.einsum("ij,ik->ijk", d, d), axis=0, out=self._s[1:])
        self._const = {}

    def _offset(self, length):
        # data-independent part of the log-density for a block of this length
        c = self._const.get(length)
        if c is None:
            c = self._const[length] = _log_lnml_from_logdet(self.m, length, self.lp, 0.0)
        return c

    def costs(self, a, b):
        """Vectorized code lengths for blocks ``[a[i], b[i])``."""
        a = np.asarray(a, dtype=np.intp)
        b = np.asarray(b, dtype=np.intp)
        length = b - a
        if np.any(length < 1) or np.any(a < 0) or np.any(b > self.n):
            raise DomainError("segments must be non-empty ranges inside [0, n)")
        lp = self.lp
        nu, rho2 = lp.nu, lp.rho2
        t = self._t[b] - self._t[a]
        s = self._s[b] - self._s[a]
        k = length[:, None, None].astype(float)
        sigma_bar = (s + nu * lp.sigma0) / (k + nu) - np.einsum("bj,bk->bjk", t, t) / (
            (nu + k) * (rho2 * nu + k)
        )
        chol = np.linalg.cholesky(sigma_bar)
        logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
        offsets = np.array([self._offset(int(L)) for L in length])
        return -(offsets - 0.5 * (length + nu) * logdet)

    def cost(self, a, b):
        return float(self.costs([a], [b])[0])


def segment_cost(x, segment, lp):
    """Code length (nats) of rows ``segment[0] .. segment[1]-1`` of ``x``."""
    x = as_observations(x, lp.dim)
    a, b = segment
    if not 0 <= a < b <= x.shape[0]:
        raise DomainError(f"segment [{a}, {b}) is empty or out of range for n={x.shape[0]}")
    return code_length(x[a:b], lp)


def _min_seg(min_seg, m):
    if min_seg is None:
        return m + 1
    if int(min_seg) != min_seg or min_seg < 1:
        raise DomainError(f"min_seg must be a positive integer, got {min_seg!r}")
    return int(min_seg)


def detect_single_change(x, lp, min_seg=None):
    """Best single split, or ``None`` if no split shortens the code.

    Every admissible ``k`` (both blocks at least ``min_seg`` long) is scored as
    ``ln(n-1) + cost([0,k)) + cost([k,n))`` and compared with ``cost([0,n))``.
    Ties go to the smallest ``k``. ``min_seg`` defaults to ``m + 1``.
    """
    x = as_observations(x, lp.dim)
    n = x.shape[0]
    min_seg = _min_seg(min_seg, lp.dim)
    if n < 2 * min_seg:
        raise DomainError(f"need n >= 2*min_seg = {2 * min_seg} observations, got {n}")
    coster = SegmentCoster(x, lp)
    ks = np.arange(min_seg, n - min_seg + 1)
    scores = math.log(n - 1) + coster.costs(np.zeros_like(ks), ks) + coster.costs(ks, np.full_like(ks, n))
    best = int(np.argmin(scores))
    if scores[best] < coster.cost(0, n):
        return int(ks[best])
    return None


def detect_multi_change(x, lp, min_seg=None, max_splits=5):
    """Exact dynamic program for the shortest two-part segmentation code.

    Among segmentations with at most ``max_splits`` splits and blocks of at
    least ``min_seg`` rows, returns the one minimizing the total code length.
    Ties go to fewer splits, then to the lexicographically smallest boundaries.
    """
    x = as_observations(x, lp.dim)
    n = x.shape[0]
    min_seg = _min_seg(min_seg, lp.dim)
    if int(max_splits) != max_splits or max_splits < 0:
        raise DomainError(f"max_splits must be a non-negative integer, got {max_splits!r}")
    max_splits = int(max_splits)
    if n < min_seg:
        raise DomainError(f"need n >= min_seg = {min_seg} observations, got {n}")
    coster = SegmentCoster(x, lp)
    return _dp_segmentation(n, coster, min_seg, max_splits)


def _cost_table(n, coster, min_seg):
    aa, bb = np.triu_indices(n + 1, k=min_seg)
    table = np.full((n + 1, n + 1), np.inf)
    if aa.size:
        table[aa, bb] = coster.costs(aa, bb)
    return table


def _dp_segmentation(n, coster, min_seg, max_splits):
    table = _cost_table(n, coster, min_seg)
    count_code = math.log(max_splits + 1)
    split_code = math.log(n - 1) if n > 1 else math.inf
    kmax = min(max_splits, n // min_seg - 1)

    # best[k][b]: (value, boundaries) for rows [0, b) cut into k+1 blocks
    best = [[(math.inf, ()) for _ in range(n + 1)]]
    for b in range(min_seg, n + 1):
        best[0][b] = (table[0, b], ())
    for k in range(1, kmax + 1):
        prev = best[k - 1]
        prev_vals = np.array([v for v, _ in prev])
        row = [(math.inf, ()) for _ in range(n + 1)]
        for b in range((k + 1) * min_seg, n + 1):
            cand = prev_vals[: b - min_seg + 1] + table[: b - min_seg + 1, b]
            v = cand.min()
            if not math.isfinite(v):
                continue
            ties = np.flatnonzero(cand == v)
            row[b] = min((v, prev[a][1] + (int(a),)) for a in ties)
        best.append(row)

    choice = None
    for k in range(kmax + 1):
        v, bounds = best[k][n]
        if not math.isfinite(v):
            continue
        total = v + k * split_code + count_code if k else v + count_code
        if choice is None or total < choice[0]:
            choice = (total, bounds)
    total, bounds = choice
    edges = (0,) + bounds + (n,)
    segs = tuple(float(table[a, b]) for a, b in zip(edges[:-1], edges[1:]))
    return Segmentation(
        boundaries=bounds,
        total_nats=float(total),
        segment_nats=segs,
        baseline_nats=float(table[0, n] + count_code),
    )
