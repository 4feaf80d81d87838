"""Stationary additive noise models.

Every model exposes the joint log density of an n-block, the entropy
rate, the stun discrepancy ``-(1/n) ln f(s - t)``, the volume of stun
sublevel sets and, where it has a closed form, the large deviation rate
function of the normalised log likelihood.

Dimensions are not part of a model: the same object serves every block
length ``n``. Colored Gaussian models precompute their covariance lags up
to ``max_dim`` when built.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, linalg
from scipy.special import ndtri

from .errors import DomainError, ModelError, UnsupportedOperation
from .geometry import log_ball_volume, log_ellipsoid_volume

LN2PI = np.log(2.0 * np.pi)
SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)

# shell volumes closer than this in log scale are treated as empty
_LOG_VOLUME_TIE = 1e-14


def log_diff_exp(a, b):
    """``log(exp(a) - exp(b))``; ``-inf`` when the gap is below 1e-14."""
    if b == -np.inf:
        return float(a)
    if a - b < _LOG_VOLUME_TIE:
        return -np.inf
    return float(a + np.log(-np.expm1(b - a)))


def _as_block(x, n=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if n is not None and x.shape[-1] != n:
        raise DomainError(f"expected last axis of length {n}, got {x.shape}")
    return x


class NoiseModel:
    """Base class. Subclasses fill in the model specific pieces."""

    kind = "abstract"
    symmetric = True

    # --- sampling -----------------------------------------------------
    def sample(self, n, rng, size=None):
        """Draw noise blocks of length ``n``; shape ``(size, n)`` or ``(n,)``."""
        shape = (n,) if size is None else (size, n)
        u = rng.random(shape)
        # rng.random can return exactly 0
        u = np.where(u == 0.0, 0.5 ** 54, u)
        return self.from_uniforms(u)

    def from_uniforms(self, u):
        """Map uniforms in (0, 1) with last axis ``n`` to noise blocks."""
        raise NotImplementedError

    # --- densities ----------------------------------------------------
    def log_density(self, x):
        raise NotImplementedError

    def stun(self, s, t):
        """``-(1/n) ln f(s - t)`` for points of R^n."""
        d = _as_block(s) - _as_block(t)
        return -self.log_density(d) / d.shape[-1]

    def entropy_rate(self):
        raise NotImplementedError

    def variance(self):
        """Per-coordinate marginal variance."""
        raise NotImplementedError

    # --- level sets ---------------------------------------------------
    def stun_threshold(self):
        """Essential infimum of the stun of a noise block.

        The sublevel volume is zero at or below this value.
        """
        raise UnsupportedOperation(f"{self.kind}: no stun threshold")

    def stun_level_log_volume(self, n, u):
        """Log volume of ``{y : -(1/n) ln f(y) <= u}``."""
        raise UnsupportedOperation(f"{self.kind}: no closed form sublevel volume")

    def level_set_radius(self, n, u):
        """Euclidean radius of a ball around 0 containing the stun sublevel set."""
        raise UnsupportedOperation(f"{self.kind}: no level set radius")

    def typicality_log_volume(self, n, delta):
        """Log volume of the weakly typical set with tolerance ``delta``."""
        if delta <= 0:
            raise DomainError("delta must be positive")
        h = self.entropy_rate()
        outer = self.stun_level_log_volume(n, h + delta)
        inner = self.stun_level_log_volume(n, h - delta)
        return log_diff_exp(outer, inner)

    def in_typical_set(self, x, delta):
        """Boolean mask of blocks whose normalised log likelihood is within delta of h."""
        x = _as_block(x)
        n = x.shape[-1]
        with np.errstate(invalid="ignore"):
            u = -self.log_density(x) / n
            return np.abs(u - self.entropy_rate()) < delta

    def entropy_spectrum_sample(self, n, rng, size=1):
        """Samples of ``-(1/n) ln f(D)`` with ``D`` drawn from the model."""
        d = self.sample(n, rng, size=size)
        return -self.log_density(d) / n

    def rate_function(self, u):
        """Large deviation rate of the normalised log likelihood."""
        raise UnsupportedOperation(f"{self.kind}: no closed form rate function")

    def describe(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class WhiteGaussian(NoiseModel):
    sigma: float = 1.0
    kind = "wgn"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ModelError("sigma must be positive")

    def from_uniforms(self, u):
        return self.sigma * ndtri(u)

    def log_density(self, x):
        x = _as_block(x)
        n = x.shape[-1]
        s2 = self.sigma ** 2
        return -0.5 * n * (LN2PI + np.log(s2)) - np.sum(x * x, axis=-1) / (2.0 * s2)

    def entropy_rate(self):
        return 0.5 * np.log(2.0 * np.pi * np.e * self.sigma ** 2)

    def variance(self):
        return self.sigma ** 2

    def stun_threshold(self):
        return 0.5 * np.log(2.0 * np.pi * self.sigma ** 2)

    def _radius(self, n, u):
        return np.sqrt(2.0 * n * self.sigma ** 2 * max(u - self.stun_threshold(), 0.0))

    def stun_level_log_volume(self, n, u):
        if u <= self.stun_threshold():
            return -np.inf
        return float(log_ball_volume(n, self._radius(n, u)))

    def level_set_radius(self, n, u):
        return float(self._radius(n, u))

    def rate_function(self, u):
        u = np.asarray(u, dtype=float)
        t = self.stun_threshold()
        with np.errstate(divide="ignore", invalid="ignore"):
            val = u - self.entropy_rate() - 0.5 * np.log(2.0 * (u - t))
        out = np.where(u > t, val, np.inf)
        return out[()] if out.ndim == 0 else out

    def describe(self):
        return {"kind": self.kind, "sigma": self.sigma}


@dataclass(frozen=True)
class WhiteSymExp(NoiseModel):
    """Laplace noise with per-coordinate standard deviation ``sigma``."""

    sigma: float = 1.0
    kind = "symexp"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ModelError("sigma must be positive")

    @property
    def scale(self):
        return self.sigma / SQRT2

    def from_uniforms(self, u):
        c = u - 0.5
        return -self.scale * np.sign(c) * np.log1p(-2.0 * np.abs(c))

    def log_density(self, x):
        x = _as_block(x)
        n = x.shape[-1]
        return -n * np.log(SQRT2 * self.sigma) - SQRT2 * np.sum(np.abs(x), axis=-1) / self.sigma

    def entropy_rate(self):
        return np.log(SQRT2 * np.e * self.sigma)

    def variance(self):
        return self.sigma ** 2

    def stun_threshold(self):
        return np.log(SQRT2 * self.sigma)

    def _l1_radius(self, n, u):
        return n * self.sigma * max(u - self.stun_threshold(), 0.0) / SQRT2

    def stun_level_log_volume(self, n, u):
        if u <= self.stun_threshold():
            return -np.inf
        return float(log_ball_volume(n, self._l1_radius(n, u), norm="L1"))

    def level_set_radius(self, n, u):
        # an L1 ball sits inside the L2 ball of the same radius
        return float(self._l1_radius(n, u))

    def rate_function(self, u):
        u = np.asarray(u, dtype=float)
        t = self.stun_threshold()
        with np.errstate(divide="ignore", invalid="ignore"):
            val = u - self.entropy_rate() - np.log(u - t)
        out = np.where(u > t, val, np.inf)
        return out[()] if out.ndim == 0 else out

    def describe(self):
        return {"kind": self.kind, "sigma": self.sigma}


@dataclass(frozen=True)
class WhiteUniform(NoiseModel):
    """Uniform noise on ``[-sqrt(3) sigma, sqrt(3) sigma]`` per coordinate."""

    sigma: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ModelError("sigma must be positive")

    @property
    def half_width(self):
        return SQRT3 * self.sigma

    def from_uniforms(self, u):
        return self.half_width * (2.0 * u - 1.0)

    def log_density(self, x):
        x = _as_block(x)
        n = x.shape[-1]
        inside = np.all(np.abs(x) <= self.half_width, axis=-1)
        return np.where(inside, -n * np.log(2.0 * self.half_width), -np.inf)

    def entropy_rate(self):
        return np.log(2.0 * self.half_width)

    def variance(self):
        return self.sigma ** 2

    def stun_threshold(self):
        return self.entropy_rate()

    def stun_level_log_volume(self, n, u):
        h = self.entropy_rate()
        return n * h if u >= h else -np.inf

    def level_set_radius(self, n, u):
        return float(self.half_width * np.sqrt(n))

    def rate_function(self, u):
        u = np.asarray(u, dtype=float)
        h = self.entropy_rate()
        out = np.where(np.isclose(u, h, rtol=1e-12, atol=1e-12), 0.0, np.inf)
        return out[()] if out.ndim == 0 else out

    def describe(self):
        return {"kind": self.kind, "sigma": self.sigma}


def ar1_spectral_density(a, sigma_eps):
    """Spectral density ``sigma_eps^2 / |1 - a e^{i beta}|^2`` of an AR(1) process."""
    a = float(a)
    s2 = float(sigma_eps) ** 2

    def g(beta):
        return s2 / (1.0 - 2.0 * a * np.cos(beta) + a * a)

    return g


class _FactorCache:
    """Thread-safe memo of per-dimension matrix factorisations."""

    def __init__(self, build):
        self._build = build
        self._store = {}
        self._lock = threading.Lock()

    def __call__(self, n):
        with self._lock:
            if n not in self._store:
                self._store[n] = self._build(n)
            return self._store[n]


@dataclass(frozen=True)
class _GaussianFactor:
    chol: np.ndarray
    logdet: float
    scales: np.ndarray  # square roots of covariance eigenvalues

    @property
    def max_scale(self):
        return float(self.scales.max())


class _StationaryGaussian(NoiseModel):
    """Shared code for Gaussian models defined by an autocovariance."""

    def _factor(self, n) -> _GaussianFactor:
        raise NotImplementedError

    def from_uniforms(self, u):
        n = u.shape[-1]
        z = ndtri(u)
        return z @ self._factor(n).chol.T

    def whiten(self, x):
        """Solve ``L w = x`` along the last axis, so ``|w|^2`` is the Mahalanobis norm."""
        x = _as_block(x)
        n = x.shape[-1]
        L = self._factor(n).chol
        flat = x.reshape(-1, n).T
        w = linalg.solve_triangular(L, flat, lower=True, check_finite=False)
        return w.T.reshape(x.shape)

    def log_density(self, x):
        x = _as_block(x)
        n = x.shape[-1]
        w = self.whiten(x)
        return -0.5 * (n * LN2PI + self._factor(n).logdet) - 0.5 * np.sum(w * w, axis=-1)

    def log_spectral_mean(self):
        raise NotImplementedError

    def entropy_rate(self):
        return 0.5 * np.log(2.0 * np.pi * np.e) + 0.5 * self.log_spectral_mean()

    def logdet(self, n):
        return self._factor(n).logdet

    def axis_scales(self, n):
        return self._factor(n).scales

    def _mahalanobis_radius(self, n, u):
        rho2 = 2.0 * n * u - n * LN2PI - self._factor(n).logdet
        return np.sqrt(max(rho2, 0.0))


class ColoredGaussian(_StationaryGaussian):
    """Stationary Gaussian noise given by its spectral density on ``[-pi, pi]``.

    Parameters
    ----------
    spectral_density : callable
        Even, positive function ``g(beta)``. The covariance of lag ``k`` is
        ``(1 / 2 pi) * integral of e^{i k beta} g(beta)``.
    max_dim : int
        Largest block length that will be requested. Lags ``0..max_dim-1``
        are integrated when the model is built and the Toeplitz matrix of
        that size is checked for positive definiteness.
    label : str, optional
        Name used in reports.
    params : dict, optional
        Parameters echoed by :meth:`describe`.
    """

    kind = "cgn"

    def __init__(self, spectral_density: Callable, max_dim=256, label=None, params=None):
        self.spectral_density = spectral_density
        self.max_dim = int(max_dim)
        self.label = label or "cgn"
        self._params = dict(params or {})
        if self.max_dim < 1:
            raise ModelError("max_dim must be positive")
        probe = np.linspace(0.05, np.pi - 0.05, 7)
        gp, gm = spectral_density(probe), spectral_density(-probe)
        if not np.allclose(gp, gm, rtol=1e-12, atol=0.0):
            raise ModelError("spectral density must be even")
        if np.any(~np.isfinite(gp)) or np.any(gp <= 0):
            raise ModelError("spectral density must be finite and positive")
        self.lags = self._integrate_lags(self.max_dim)
        self._log_g_mean = self._integrate_log()
        toeplitz = linalg.toeplitz(self.lags)
        try:
            self._chol_full = np.linalg.cholesky(toeplitz)
        except np.linalg.LinAlgError as exc:
            raise ModelError("covariance matrix is not positive definite") from exc
        self._factor = _FactorCache(self._build_factor)

    def _integrate_lags(self, count):
        g = self.spectral_density
        lags = np.empty(count)
        for k in range(count):
            if k == 0:
                val, _ = integrate.quad(g, 0.0, np.pi, epsabs=1e-13, epsrel=1e-12, limit=200)
            else:
                val, _ = integrate.quad(g, 0.0, np.pi, weight="cos", wvar=k,
                                        epsabs=1e-13, epsrel=1e-12, limit=200)
            lags[k] = val / np.pi
        return lags

    def _integrate_log(self):
        def logg(beta):
            return np.log(self.spectral_density(beta))

        val, _ = integrate.quad(logg, 0.0, np.pi, epsabs=1e-13, epsrel=1e-12, limit=200)
        if not np.isfinite(val):
            raise ModelError("log spectral density is not integrable")
        return val / np.pi

    def _build_factor(self, n):
        if n > self.max_dim:
            raise ModelError(f"dimension {n} exceeds max_dim={self.max_dim}")
        L = np.ascontiguousarray(self._chol_full[:n, :n])
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        eig = linalg.eigvalsh(linalg.toeplitz(self.lags[:n]))
        if eig.min() <= 0:
            raise ModelError("covariance matrix is not positive definite")
        return _GaussianFactor(L, logdet, np.sqrt(eig))

    def log_spectral_mean(self):
        """``(1 / 2 pi) * integral of ln g`` over ``[-pi, pi]``."""
        return self._log_g_mean

    def variance(self):
        return float(self.lags[0])

    def stun_threshold(self):
        return 0.5 * LN2PI + 0.5 * self._log_g_mean

    def stun_level_log_volume(self, n, u):
        rho = self._mahalanobis_radius(n, u)
        if rho == 0.0:
            return -np.inf
        return float(log_ellipsoid_volume(n, rho, self.axis_scales(n)))

    def level_set_radius(self, n, u):
        return float(self._mahalanobis_radius(n, u) * self._factor(n).max_scale)

    def rate_function(self, u):
        u = np.asarray(u, dtype=float)
        t = self.stun_threshold()
        with np.errstate(divide="ignore", invalid="ignore"):
            val = u - self.entropy_rate() - 0.5 * np.log(2.0 * (u - t))
        out = np.where(u > t, val, np.inf)
        return out[()] if out.ndim == 0 else out

    def describe(self):
        return {"kind": self.label, **self._params, "max_dim": self.max_dim}


class MarkovGaussianAR1(_StationaryGaussian):
    """Gaussian AR(1) noise ``D_{i+1} = a D_i + eps_i`` started in stationarity."""

    kind = "markov-ar1"

    def __init__(self, a, sigma_eps=1.0):
        if not abs(a) < 1:
            raise ModelError("AR(1) coefficient must satisfy |a| < 1")
        if not sigma_eps > 0:
            raise ModelError("sigma_eps must be positive")
        self.a = float(a)
        self.sigma_eps = float(sigma_eps)
        self._factor = _FactorCache(self._build_factor)

    def _stationary_var(self):
        return self.sigma_eps ** 2 / (1.0 - self.a ** 2)

    def _build_factor(self, n):
        lags = self._stationary_var() * self.a ** np.arange(n)
        cov = linalg.toeplitz(lags)
        L = np.linalg.cholesky(cov)
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        return _GaussianFactor(L, logdet, np.sqrt(linalg.eigvalsh(cov)))

    def from_uniforms(self, u):
        z = ndtri(u)
        x = np.empty_like(z)
        x[..., 0] = np.sqrt(self._stationary_var()) * z[..., 0]
        for i in range(1, z.shape[-1]):
            x[..., i] = self.a * x[..., i - 1] + self.sigma_eps * z[..., i]
        return x

    def log_density(self, x):
        x = _as_block(x)
        n = x.shape[-1]
        v0 = self._stationary_var()
        out = -0.5 * (LN2PI + np.log(v0)) - x[..., 0] ** 2 / (2.0 * v0)
        if n > 1:
            innov = x[..., 1:] - self.a * x[..., :-1]
            s2 = self.sigma_eps ** 2
            out = out - 0.5 * (n - 1) * (LN2PI + np.log(s2)) - np.sum(innov ** 2, axis=-1) / (2.0 * s2)
        return out

    def log_spectral_mean(self):
        return 2.0 * np.log(self.sigma_eps)

    def variance(self):
        return self._stationary_var()

    def level_set_radius(self, n, u):
        return float(self._mahalanobis_radius(n, u) * self._factor(n).max_scale)

    def describe(self):
        return {"kind": self.kind, "a": self.a, "sigma_eps": self.sigma_eps}


# --- module level API -------------------------------------------------------

def sample(model, n, rng, size=None):
    return model.sample(n, rng, size=size)


def log_density(model, x):
    return model.log_density(x)


def stun(model, s, t):
    return model.stun(s, t)


def entropy_rate(model):
    return model.entropy_rate()


def stun_level_log_volume(model, n, u):
    return model.stun_level_log_volume(n, u)


def typicality_log_volume(model, n, delta):
    return model.typicality_log_volume(n, delta)


def entropy_spectrum_sample(model, n, rng, size=1):
    return model.entropy_spectrum_sample(n, rng, size=size)


def rate_function(model, u):
    return model.rate_function(u)


def colored_ar1(a, sigma_eps=1.0, max_dim=256):
    """Colored Gaussian model with an AR(1) spectrum; ``a = 0`` gives a flat one."""
    if not abs(a) < 1:
        raise ModelError("AR(1) coefficient must satisfy |a| < 1")
    return ColoredGaussian(ar1_spectral_density(a, sigma_eps), max_dim=max_dim,
                           label="cgn-ar1", params={"a": float(a), "sigma_eps": float(sigma_eps)})


_KINDS = ("wgn", "symexp", "uniform", "cgn-ar1", "markov-ar1")


def from_config(cfg):
    """Build a model from a dict such as ``{"kind": "wgn", "sigma": 1.0}``."""
    kind = cfg.get("kind")
    if kind == "wgn":
        return WhiteGaussian(float(cfg.get("sigma", 1.0)))
    if kind == "symexp":
        return WhiteSymExp(float(cfg.get("sigma", 1.0)))
    if kind == "uniform":
        return WhiteUniform(float(cfg.get("sigma", 1.0)))
    if kind == "cgn-ar1":
        return colored_ar1(float(cfg.get("a", 0.0)), float(cfg.get("sigma_eps", 1.0)),
                           max_dim=int(cfg.get("max_dim", 256)))
    if kind == "markov-ar1":
        return MarkovGaussianAR1(float(cfg.get("a", 0.0)), float(cfg.get("sigma_eps", 1.0)))
    raise ModelError(f"unknown noise kind {kind!r}; expected one of {_KINDS}")
