"""Log-domain volumes and radial densities in R^n.

All quantities are returned as natural logarithms so that dimensions in
the hundreds do not overflow. ``-inf`` stands for a zero volume or a
zero density.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

LN2 = np.log(2.0)
LNPI = np.log(np.pi)


def _check_dim(n):
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def log_ball_volume(n, r, norm="L2"):
    """Log volume of the ball of radius ``r`` in R^n.

    Parameters
    ----------
    n : int
        Dimension.
    r : float or array_like
        Radius. A zero radius gives ``-inf``.
    norm : {"L2", "L1"}
        Euclidean ball or cross-polytope.

    Returns
    -------
    float or ndarray
    """
    n = _check_dim(n)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    with np.errstate(divide="ignore"):
        logr = np.log(r)
    if norm == "L2":
        out = n * logr + 0.5 * n * LNPI - gammaln(0.5 * n + 1.0)
    elif norm == "L1":
        out = n * (LN2 + logr) - gammaln(n + 1.0)
    else:
        raise DomainError(f"unknown norm {norm!r}")
    return out[()] if out.ndim == 0 else out


def log_ellipsoid_volume(n, r, scales):
    """Log volume of ``{x : sum (x_i / s_i)^2 < r^2}``.

    ``scales`` are the semi-axis factors. For a Gaussian with covariance
    ``C`` pass the square roots of the eigenvalues of ``C``.
    """
    n = _check_dim(n)
    scales = np.asarray(scales, dtype=float)
    if scales.shape != (n,):
        raise DomainError(f"expected {n} scales, got shape {scales.shape}")
    if np.any(scales <= 0):
        raise DomainError("ellipsoid scales must be positive")
    return log_ball_volume(n, r) + float(np.sum(np.log(scales)))


def chi_density_log(n, sigma, r):
    """Log density of ``|X|`` for ``X ~ N(0, sigma^2 I_n)``.

    Returns ``-inf`` for ``r <= 0``.
    """
    n = _check_dim(n)
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = r / sigma
        out = (-0.5 * t * t + (n - 1) * np.log(t) - np.log(sigma)
               - 0.5 * n * LN2 + LN2 - gammaln(0.5 * n))
    out = np.where(r > 0, out, -np.inf)
    return out[()] if out.ndim == 0 else out


def gamma_l1_density_log(n, sigma, r):
    """Log density of ``sum |X_i|`` for i.i.d. Laplace coordinates.

    Each coordinate has standard deviation ``sigma``, so the L1 norm is
    Gamma distributed with shape ``n`` and rate ``sqrt(2) / sigma``.
    """
    n = _check_dim(n)
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    theta = np.sqrt(2.0) / sigma
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = n * np.log(theta) + (n - 1) * np.log(r) - theta * r - gammaln(n)
    out = np.where(r > 0, out, -np.inf)
    return out[()] if out.ndim == 0 else out


def matern_lune_radius(v, alpha_tilde):
    """Radius ``c(v)`` of the largest ball inside the Matérn lune.

    The lune is the part of ``B(x, |x|)`` lying outside
    ``B(0, alpha_tilde)`` with ``|x| = v`` (everything scaled by
    ``sigma sqrt(n)``). Breakpoints take the right-hand branch.
    """
    v = np.asarray(v, dtype=float)
    at = float(alpha_tilde)
    if at <= 0:
        raise DomainError("alpha_tilde must be positive")
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = v - at * at / (2.0 * v)
        middle = np.sqrt(np.clip(v * v - shift * shift, 0.0, None))
    out = np.where(v < at / 2.0, 0.0, np.where(v < at / np.sqrt(2.0), middle, v))
    return out[()] if out.ndim == 0 else out


def _log_diff_exp(a, b):
    # log(e^a - e^b) for a >= b
    if b == -np.inf:
        return a
    if b >= a:
        return -np.inf
    return a + np.log(-np.expm1(b - a))


def l1_lune_log_volume_bounds(n, v, alpha_tilde, sigma):
    """Log lower and upper bounds on the L1 Matérn lune volume.

    The lune is the set of interferer positions ``y`` with
    ``|x - y|_1 < |x|_1`` and ``|y|_1 > alpha_tilde * n * sigma / sqrt(2)``
    where ``|x|_1 = v * n * sigma / sqrt(2)``.

    Returns
    -------
    (lower, upper) : tuple of float
        Both ``-inf`` when ``v <= alpha_tilde / 2``.
    """
    n = _check_dim(n)
    if v <= alpha_tilde / 2.0:
        return -np.inf, -np.inf
    scale = n * sigma / np.sqrt(2.0)
    upper = float(log_ball_volume(n, v * scale, norm="L1"))
    inner_r = max(alpha_tilde - v, 0.0) * scale
    inner = float(log_ball_volume(n, inner_r, norm="L1")) if inner_r > 0 else -np.inf
    # 2^(n-1) orthant copies of the slab between the two L1 spheres
    lower = _log_diff_exp(upper, inner) - LN2
    return lower, upper
