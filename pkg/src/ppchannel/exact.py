"""Error probabilities by one-dimensional quadrature.

The integrands are formed in log scale and rescaled by their maximum
before being handed to adaptive quadrature, which keeps relative
accuracy even when the probability is ``exp(-200)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import ParameterError, UnsupportedOperation
from .geometry import (chi_density_log, gamma_l1_density_log, l1_lune_log_volume_bounds,
                       log_ball_volume, matern_lune_radius)
from .noise import WhiteGaussian, WhiteSymExp, WhiteUniform, _StationaryGaussian

QUAD_EPSREL = 1e-12
# log-integrand values this far below the peak are dropped from the range
LOG_CUTOFF = 60.0
MAX_ZOOM = 6
MIN_LIVE_POINTS = 40


@dataclass(frozen=True)
class LogProbability:
    log_pe: float
    log_ps: float
    n: int
    params: dict = field(default_factory=dict)

    @property
    def pe(self):
        return float(np.exp(self.log_pe))

    @property
    def ps(self):
        return float(np.exp(self.log_ps))

    @property
    def exponent(self):
        """``-(1/n) ln p_e``."""
        return -self.log_pe / self.n


def log1mexp_of_exp(lx):
    """``log(1 - exp(-exp(lx)))`` without cancellation."""
    lx = np.asarray(lx, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        x = np.exp(lx)
        out = np.where(lx < -30.0, lx - 0.5 * x, np.log(-np.expm1(-x)))
    return out[()] if out.ndim == 0 else out


def _log_integrate(logf, lo, hi, points=(), grid=4001):
    """``log`` of the integral of ``exp(logf)`` over ``[lo, hi]``."""
    # zoom in while the mass sits on too few grid points to locate it
    for _ in range(MAX_ZOOM):
        xs = np.linspace(lo, hi, grid)
        with np.errstate(all="ignore"):
            vals = np.asarray(logf(xs), dtype=float)
        vals = np.where(np.isnan(vals), -np.inf, vals)
        k = int(np.argmax(vals))
        peak = vals[k]
        if peak == -np.inf:
            return -np.inf
        live = np.flatnonzero(vals > peak - LOG_CUTOFF)
        a = xs[max(live[0] - 1, 0)]
        b = xs[min(live[-1] + 1, grid - 1)]
        if live[-1] - live[0] >= MIN_LIVE_POINTS:
            break
        lo, hi = a, b
    brk = sorted({float(p) for p in (*points, xs[k]) if a < p < b})

    def f(x):
        with np.errstate(all="ignore"):
            val = float(np.exp(logf(x) - peak))
        return 0.0 if np.isnan(val) else val

    total, _ = integrate.quad(f, a, b, points=brk or None, epsabs=0.0,
                              epsrel=QUAD_EPSREL, limit=500)
    if total <= 0:
        return -np.inf
    return float(peak + np.log(total))


def _complement(log_small):
    return float(np.log1p(-np.exp(log_small)))


def _pair_from_quadratures(log_pe, log_ps):
    # the smaller probability carries the relative accuracy
    if log_pe < log_ps:
        return log_pe, _complement(log_pe)
    return _complement(log_ps), log_ps


def _log_rate(model, alpha):
    return -model.entropy_rate() - np.log(alpha)


def _gaussian_log_volume_shift(model, n):
    """``ln |V(r)| - ln V_B(r)`` for the decoding region of a Gaussian model."""
    if isinstance(model, WhiteGaussian):
        return n * np.log(model.sigma)
    if isinstance(model, _StationaryGaussian):
        return 0.5 * model.logdet(n)
    raise UnsupportedOperation(f"{model.kind}: exact Poisson error needs a Gaussian model")


def _poisson_gaussian(n, log_lam, shift, rmax):
    """``(log p_e, log p_s)`` when the decoding region of Mahalanobis radius r
    has log volume ``shift + ln V_B(r)`` and the radius is chi distributed."""

    def log_mass(r):
        return log_lam + shift + log_ball_volume(n, r)

    def lpe(r):
        return log1mexp_of_exp(log_mass(r)) + chi_density_log(n, 1.0, r)

    def lps(r):
        with np.errstate(over="ignore"):
            return -np.exp(log_mass(r)) + chi_density_log(n, 1.0, r)

    # where the expected number of points in the ball crosses one
    r_kink = np.exp((-log_lam - shift - log_ball_volume(n, 1.0)) / n)
    pts = (r_kink,) if 0 < r_kink < rmax else ()
    return _pair_from_quadratures(_log_integrate(lpe, 0.0, rmax, pts),
                                  _log_integrate(lps, 0.0, rmax, pts))


def poisson_mle_log_pe(model, n, alpha):
    """Exact MLE error probability of the Poisson codebook under Gaussian noise.

    With ``r`` the Mahalanobis norm of the noise (chi distributed), the
    origin survives iff the decoding ellipsoid of radius ``r`` holds no
    Poisson point, so ``p_s = E exp(-lambda |V(r)|)``.

    Parameters
    ----------
    model : WhiteGaussian or ColoredGaussian
    n : int
        Block length.
    alpha : float
        Distance to capacity; the rate is ``-h - ln(alpha)``.

    Returns
    -------
    LogProbability
    """
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    shift = _gaussian_log_volume_shift(model, n)
    log_lam = n * _log_rate(model, alpha)
    rmax = np.sqrt(n) * max(1.0, alpha) + 14.0
    log_pe, log_ps = _poisson_gaussian(n, log_lam, shift, rmax)
    return LogProbability(log_pe, log_ps, n, {"model": model.kind, "alpha": alpha,
                                              "method": "poisson-mle-quadrature"})


def poisson_wgn_log_ps_at_intensity(n, lam, sigma):
    """Log MLE success probability for white Gaussian noise at intensity ``lam``."""
    if lam <= 0:
        return 0.0
    return _poisson_gaussian(n, np.log(lam), n * np.log(sigma), np.sqrt(n) + 14.0 + 1.0)[1]


def matern_bound_integrand(model, n, alpha, epsilon):
    """Log integrand of the Matérn bound in ``v`` with its integration range."""
    if not 0 <= epsilon < alpha:
        raise ParameterError("need 0 <= epsilon < alpha")
    return _matern_setup(model, n, alpha, epsilon)


def _matern_setup(model, n, alpha, epsilon):
    at = alpha - epsilon
    log_lam = n * _log_rate(model, alpha)
    if isinstance(model, WhiteGaussian):
        scale = model.sigma * np.sqrt(n)

        def logf(v):
            c = matern_lune_radius(v, at)
            with np.errstate(divide="ignore"):
                lm = log_lam + log_ball_volume(n, c * scale)
            return np.minimum(0.0, lm) + chi_density_log(n, 1.0, v * np.sqrt(n)) + 0.5 * np.log(n)

        hi = max(1.0, alpha) + 14.0 / np.sqrt(n)
        brk = (at / np.sqrt(2.0),)
    elif isinstance(model, WhiteSymExp):
        scale = n * model.sigma / np.sqrt(2.0)
        log_jac = np.log(scale)

        def upper(v):
            v = np.asarray(v, dtype=float)
            with np.errstate(divide="ignore"):
                up = log_ball_volume(n, np.abs(v) * scale, norm="L1")
            return np.where(v > at / 2.0, up, -np.inf)

        def logf(v):
            return (np.minimum(0.0, log_lam + upper(v))
                    + gamma_l1_density_log(n, model.sigma, v * scale) + log_jac)

        hi = max(1.0, alpha) + 40.0 / np.sqrt(n) + 40.0 / n
        brk = ()
    else:
        raise UnsupportedOperation(f"{model.kind}: Matérn bound needs wgn or symexp noise")
    return logf, at / 2.0, hi, brk


def matern_mle_log_pe_bound(model, n, alpha, epsilon):
    """Upper bound on the MLE error probability of a Matérn I codebook.

    The bound integrates ``min(1, lambda * |lune|)`` against the law of the
    noise norm, where the lune is the part of the decoding region not
    covered by the exclusion ball. The Gaussian case uses the largest
    inscribed ball of the lune; the Laplace case the L1 ball covering it.
    Noise norms below half the exclusion radius contribute nothing.
    """
    logf, lo, hi, brk = matern_bound_integrand(model, n, alpha, epsilon)
    params = {"model": model.kind, "alpha": alpha, "epsilon": epsilon,
              "method": "matern-bound-quadrature"}
    if lo >= hi:
        return LogProbability(-np.inf, 0.0, n, params)
    log_pe = min(_log_integrate(logf, lo, hi, brk), 0.0)
    return LogProbability(log_pe, _complement(log_pe) if log_pe < 0 else -np.inf, n, params)


def matern_lune_lower_log_volume(n, v, alpha_tilde, sigma):
    """Lower bound of the Laplace lune volume; exposed for bound sandwich checks."""
    return l1_lune_log_volume_bounds(n, v, alpha_tilde, sigma)[0]


def _log_prob_atypical(model, n, delta):
    h = model.entropy_rate()
    if isinstance(model, WhiteUniform):
        return -np.inf
    if isinstance(model, (WhiteGaussian, _StationaryGaussian)):
        if isinstance(model, WhiteGaussian):
            logdet = n * np.log(model.sigma ** 2)
        else:
            logdet = model.logdet(n)
        # chi-square bounds for the Mahalanobis norm
        lo = 2.0 * n * (h - delta) - n * np.log(2.0 * np.pi) - logdet
        hi = 2.0 * n * (h + delta) - n * np.log(2.0 * np.pi) - logdet
        p_lo = special.gammainc(0.5 * n, 0.5 * lo) if lo > 0 else 0.0
        p_hi = special.gammaincc(0.5 * n, 0.5 * hi)
    elif isinstance(model, WhiteSymExp):
        t = model.stun_threshold()
        lo = n * (h - delta - t)
        hi = n * (h + delta - t)
        p_lo = special.gammainc(n, lo) if lo > 0 else 0.0
        p_hi = special.gammaincc(n, hi)
    else:
        raise UnsupportedOperation(f"{model.kind}: no typicality bound")
    with np.errstate(divide="ignore"):
        return float(np.logaddexp(np.log(p_lo), np.log(p_hi)))


def typicality_log_pe_bound(model, n, rate, delta):
    """Log of ``P(D not typical) + 1 - exp(-lambda |typical set|)``."""
    if delta <= 0:
        raise ParameterError("delta must be positive")
    log_out = _log_prob_atypical(model, n, delta)
    log_cover = float(log1mexp_of_exp(n * rate + model.typicality_log_volume(n, delta)))
    log_pe = min(float(np.logaddexp(log_out, log_cover)), 0.0)
    ps = _complement(log_pe) if log_pe < 0 else -np.inf
    return LogProbability(log_pe, ps, n, {"model": model.kind, "rate": rate, "delta": delta,
                                          "method": "typicality-bound"})


def mismatched_pe_bound(design, actual, n, alpha, trials, seed=0):
    """Monte Carlo value of the mismatched decoding bound.

    Averages ``1 - exp(-lambda * W_design(U))`` with ``U`` the design stun of
    noise drawn from ``actual``. The rate is set from the design model,
    ``-h(design) - ln(alpha)``, so the codebook is the one built for the
    channel the decoder assumes.
    """
    from .montecarlo import estimate_from_samples, trial_uniforms

    if trials <= 0:
        raise ParameterError("trials must be positive")
    log_lam = n * _log_rate(design, alpha)
    u = trial_uniforms(seed, 0, trials, n)
    d = actual.from_uniforms(u)
    stuns = -design.log_density(d) / n
    vals = np.empty(trials)
    for i, s in enumerate(stuns):
        if not np.isfinite(s):
            vals[i] = 1.0
        else:
            vals[i] = -np.expm1(-np.exp(log_lam + design.stun_level_log_volume(n, s)))
    return estimate_from_samples(vals, seed)


def grid_log_ps(n, rate, sigma):
    """Log success probability of the cubic grid with spacing ``exp(-rate)``."""
    half = np.exp(-rate) / (2.0 * sigma)
    z = half / np.sqrt(2.0)
    per_coord = np.log(special.erf(z)) if z < 1.0 else np.log1p(-special.erfc(z))
    return float(n * per_coord)


def dps_dlambda(n, lam, sigma):
    """Derivative of the Poisson MLE success probability in the intensity."""
    if lam < 0:
        raise ParameterError("intensity must be nonnegative")

    def logf(r):
        lv = log_ball_volume(n, r * sigma)
        with np.errstate(over="ignore"):
            return lv - lam * np.exp(lv) + chi_density_log(n, 1.0, r)

    return -float(np.exp(_log_integrate(logf, 0.0, np.sqrt(n) + 14.0)))


def coverage_prob_typ_in_voronoi(n, alpha, delta, sigma):
    """Probability that the typical shell around 0 lies inside the Voronoi cell of 0."""
    log_lam = n * (-0.5 * np.log(2.0 * np.pi * np.e * alpha ** 2 * sigma ** 2))
    radius = 2.0 * np.sqrt(n) * sigma * np.sqrt(1.0 + 2.0 * delta)
    return float(np.exp(-np.exp(log_lam + log_ball_volume(n, radius))))
