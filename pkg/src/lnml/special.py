"""Log-domain gamma and multivariate gamma functions.

Everything here returns natural logarithms. Nothing is exponentiated, since
terms such as ``(n + nu) ** (n + nu)`` overflow long before the code lengths
built from them become large.
"""

import math

import numpy as np
from scipy import special

from .errors import DomainError

_LOG_PI = math.log(math.pi)


def log_gamma(z):
    """Natural log of the gamma function for ``z > 0``.

    Backed by ``scipy.special.gammaln`` (Cephes), which is accurate to a few
    ulps on the positive axis, including near the roots at 1 and 2.

    Parameters
    ----------
    z : float or array_like
        Positive argument(s).

    Returns
    -------
    float or ndarray
    """
    if isinstance(z, (float, int)) and not isinstance(z, bool):
        # scalar fast path; the code-length routines call this per evaluation
        if not (math.isfinite(z) and z > 0):
            raise DomainError(f"log_gamma requires finite z > 0, got {z!r}")
        return float(special.gammaln(z))
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"log_gamma requires finite z > 0, got {z!r}")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def log_multigamma(m, z):
    r"""Natural log of the multivariate gamma function :math:`\Gamma_m(z)`.

    .. math::
        \ln\Gamma_m(z) = \frac{m(m-1)}{4}\ln\pi + \sum_{j=0}^{m-1}\ln\Gamma(z - j/2)

    Parameters
    ----------
    m : int
        Dimension, ``m >= 1``.
    z : float
        Argument, must satisfy ``z > (m - 1) / 2``.
    """
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    m = int(m)
    z = float(z)
    if not math.isfinite(z) or z <= (m - 1) / 2:
        raise DomainError(f"log_multigamma requires z > (m-1)/2 = {(m - 1) / 2}, got {z}")
    if m == 1:
        return log_gamma(z)
    terms = log_gamma(z - 0.5 * np.arange(m))
    return 0.25 * m * (m - 1) * _LOG_PI + math.fsum(terms)
