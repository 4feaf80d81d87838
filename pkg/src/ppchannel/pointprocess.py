"""Random codebooks: Poisson, Matérn hard-core thinnings and shifted grids.

Configurations live in a Euclidean ball (the observation window) centred
at the origin. Palm versions put a codeword at the origin and return the
other codewords, which act as interferers for the origin.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ScenarioError, UnsupportedOperation
from .geometry import log_ball_volume

MAX_EXPECTED_POINTS = 1e8
MIN_PALM_ACCEPTANCE = 1e-6


@dataclass(frozen=True)
class WindowSpec:
    n: int
    radius: float

    def __post_init__(self):
        if self.n < 1 or not self.radius > 0:
            raise ConfigurationError("window needs n >= 1 and a positive radius")

    def log_volume(self):
        return float(log_ball_volume(self.n, self.radius))


@dataclass(frozen=True)
class Provenance:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PointConfiguration:
    n: int
    points: np.ndarray
    log_intensity: float
    provenance: Provenance

    def __len__(self):
        return len(self.points)


def default_window_radius(n, sigma=1.0, r_excl=0.0, rate=None):
    """Window radius large enough that decoding regions rarely touch the edge."""
    radius = max(6.0 * sigma * np.sqrt(n), 3.0 * r_excl)
    if rate is not None:
        radius = max(radius, 3.0 * np.exp(-rate) * np.sqrt(n))
    return float(radius)


class GridIndex:
    """Uniform grid hash over the first few coordinates.

    Cells have side ``cell`` and are keyed on at most ``max_key_dims``
    coordinates, so the number of neighbour cells stays at ``3^k`` even in
    high dimension. Projected distances never exceed true distances, so a
    neighbour-cell search never misses a pair closer than ``cell``.
    """

    def __init__(self, points, cell, max_key_dims=3):
        self.points = np.asarray(points, dtype=float)
        if self.points.ndim != 2:
            raise ConfigurationError("points must be a 2-d array")
        if not cell > 0:
            raise ConfigurationError("cell side must be positive")
        self.cell = float(cell)
        m, n = self.points.shape
        self.k = min(n, max_key_dims)
        if m == 0:
            self._codes = np.empty(0, dtype=np.int64)
            self._order = np.empty(0, dtype=np.int64)
            return
        cells = np.floor(self.points[:, :self.k] / self.cell).astype(np.int64)
        self._lo = cells.min(axis=0) - 1
        span = cells.max(axis=0) - self._lo + 2
        self._strides = np.cumprod(np.concatenate(([1], span[:-1]))).astype(np.int64)
        codes = (cells - self._lo) @ self._strides
        self._order = np.argsort(codes, kind="stable")
        self._codes = codes[self._order]
        self._point_codes = codes

    def _offset_codes(self):
        offs = np.array(list(itertools.product((-1, 0, 1), repeat=self.k)), dtype=np.int64)
        return offs @ self._strides

    def candidate_pairs(self):
        """All index pairs ``i < j`` in the same or adjacent cells."""
        if len(self._codes) < 2:
            return np.empty((0, 2), dtype=np.int64)
        firsts, seconds = [], []
        for oc in self._offset_codes():
            target = self._point_codes + oc
            lo = np.searchsorted(self._codes, target, side="left")
            hi = np.searchsorted(self._codes, target, side="right")
            cnt = hi - lo
            if not cnt.any():
                continue
            src = np.repeat(np.arange(len(target)), cnt)
            starts = np.repeat(lo - np.cumsum(cnt) + cnt, cnt)
            dst = self._order[np.arange(cnt.sum()) + starts]
            keep = src < dst
            firsts.append(src[keep])
            seconds.append(dst[keep])
        if not firsts:
            return np.empty((0, 2), dtype=np.int64)
        return np.stack([np.concatenate(firsts), np.concatenate(seconds)], axis=1)

    def pairs_within(self, r):
        """Pairs at Euclidean distance strictly below ``r`` (requires ``r <= cell``)."""
        if r > self.cell * (1 + 1e-12):
            raise ConfigurationError("query radius exceeds the cell side")
        pairs = self.candidate_pairs()
        if len(pairs) == 0:
            return pairs
        diff = self.points[pairs[:, 0]] - self.points[pairs[:, 1]]
        d2 = np.einsum("ij,ij->i", diff, diff)
        return pairs[d2 < r * r]

    def query_ball(self, x, r):
        """Indices of points with ``|p - x| < r``."""
        if len(self.points) == 0:
            return np.empty(0, dtype=np.int64)
        x = np.asarray(x, dtype=float)
        if r > self.cell:
            idx = np.arange(len(self.points))
        else:
            c = np.floor(x[:self.k] / self.cell).astype(np.int64) - self._lo
            idx = []
            for oc in self._offset_codes():
                target = c @ self._strides + oc
                lo = np.searchsorted(self._codes, target, side="left")
                hi = np.searchsorted(self._codes, target, side="right")
                idx.append(self._order[lo:hi])
            idx = np.concatenate(idx)
        diff = self.points[idx] - x
        return np.sort(idx[np.einsum("ij,ij->i", diff, diff) < r * r])


def sample_poisson(window, log_lambda, rng, provenance=None):
    """Homogeneous Poisson configuration of intensity ``exp(log_lambda)`` in the window."""
    log_mean = log_lambda + window.log_volume()
    if log_mean > np.log(MAX_EXPECTED_POINTS):
        raise ConfigurationError(
            f"expected point count exp({log_mean:.3g}) exceeds {MAX_EXPECTED_POINTS:.0e}")
    count = rng.poisson(np.exp(log_mean))
    n = window.n
    g = rng.standard_normal((count, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = window.radius * rng.random((count, 1)) ** (1.0 / n)
    pts = g / norms * radii
    prov = provenance or Provenance("poisson", {"window_radius": window.radius})
    return PointConfiguration(n, pts, float(log_lambda), prov)


def matern1_keep_mask(points, r_excl):
    """Mask of points whose nearest neighbour is at distance ``>= r_excl``."""
    points = np.asarray(points, dtype=float)
    keep = np.ones(len(points), dtype=bool)
    if r_excl <= 0 or len(points) < 2:
        return keep
    pairs = GridIndex(points, r_excl).pairs_within(r_excl)
    keep[pairs.ravel()] = False
    return keep


def matern1_thin(config, r_excl):
    """Matérn type I thinning: delete every point with a neighbour closer than ``r_excl``."""
    keep = matern1_keep_mask(config.points, r_excl)
    prov = Provenance("matern1", {"r_excl": float(r_excl), "parent": config.provenance.kind})
    return PointConfiguration(config.n, config.points[keep], config.log_intensity, prov)


def matern_stun_thin(config, model, xi):
    """Delete every point ``T`` having another point ``S`` with ``stun(T, S) < xi``."""
    if not getattr(model, "symmetric", False):
        raise UnsupportedOperation("stun thinning needs a symmetric noise density")
    pts = config.points
    n = config.n
    keep = np.ones(len(pts), dtype=bool)
    if len(pts) >= 2:
        try:
            reach = model.level_set_radius(n, xi)
        except UnsupportedOperation:
            reach = None
        if reach is None:
            i, j = np.triu_indices(len(pts), k=1)
        elif reach > 0:
            pairs = GridIndex(pts, reach * (1 + 1e-9)).candidate_pairs()
            i, j = pairs[:, 0], pairs[:, 1]
        else:
            i = j = np.empty(0, dtype=np.int64)
        if len(i):
            s = model.stun(pts[i], pts[j])
            hit = s < xi
            keep[i[hit]] = False
            keep[j[hit]] = False
    prov = Provenance("matern-stun", {"xi": float(xi), "model": model.kind})
    return PointConfiguration(n, pts[keep], config.log_intensity, prov)


def wgn_exclusion_radius(n, sigma, xi):
    """Euclidean radius equivalent to stun threshold ``xi`` under white Gaussian noise."""
    excess = xi - 0.5 * np.log(2.0 * np.pi * sigma ** 2)
    return float(np.sqrt(2.0 * n * sigma ** 2 * max(excess, 0.0)))


def grid_codebook(n, rate, shift, window):
    """Points ``shift + k * exp(-rate)`` for integer vectors ``k`` inside the window."""
    step = np.exp(-rate)
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (n,))
    lo = np.ceil((-window.radius - shift) / step).astype(int)
    hi = np.floor((window.radius - shift) / step).astype(int)
    per_axis = hi - lo + 1
    if np.prod(per_axis.astype(float)) > MAX_EXPECTED_POINTS:
        raise ConfigurationError("grid has too many points inside the window")
    axes = [shift[i] + step * np.arange(lo[i], hi[i] + 1) for i in range(n)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    inside = np.einsum("ij,ij->i", mesh, mesh) <= window.radius ** 2
    prov = Provenance("grid", {"step": float(step)})
    return PointConfiguration(n, mesh[inside], float(n * rate), prov)


PALM_KINDS = ("poisson", "matern1", "grid")


@dataclass(frozen=True)
class PalmScenario:
    """What the origin codeword sees: the law of the other codewords.

    ``kind`` is ``"poisson"`` (Slivnyak: the others are plain Poisson),
    ``"matern1"`` (Matérn I conditioned on keeping the origin) or
    ``"grid"`` (lattice through the origin).
    """

    kind: str
    n: int
    log_lambda: float
    window: WindowSpec
    r_excl: float = 0.0

    def __post_init__(self):
        if self.kind not in PALM_KINDS:
            raise ScenarioError(f"unknown Palm kind {self.kind!r}")
        if self.window.n != self.n:
            raise ScenarioError("window dimension does not match scenario")

    def matern_acceptance(self):
        """Probability that a Poisson draw leaves the exclusion ball of the origin empty."""
        if self.r_excl <= 0:
            return 1.0
        return float(np.exp(-np.exp(self.log_lambda + log_ball_volume(self.n, self.r_excl))))


def sample_palm_interferers(scenario, rng, max_attempts=100_000):
    """Codewords other than the origin under the Palm distribution."""
    kind = scenario.kind
    if kind == "poisson":
        return sample_poisson(scenario.window, scenario.log_lambda, rng).points
    if kind == "grid":
        rate = scenario.log_lambda / scenario.n
        pts = grid_codebook(scenario.n, rate, np.zeros(scenario.n), scenario.window).points
        return pts[np.einsum("ij,ij->i", pts, pts) > 0]
    if scenario.matern_acceptance() < MIN_PALM_ACCEPTANCE:
        raise ScenarioError("Matérn Palm rejection sampler acceptance is below 1e-6")
    r2 = scenario.r_excl ** 2
    for _ in range(max_attempts):
        pts = sample_poisson(scenario.window, scenario.log_lambda, rng).points
        if np.any(np.einsum("ij,ij->i", pts, pts) < r2):
            continue
        return pts[matern1_keep_mask(pts, scenario.r_excl)]
    raise ScenarioError("Matérn Palm rejection sampler exhausted its attempts")


CODEBOOKS = ("poisson", "matern1", "matern-stun", "grid")


@dataclass(frozen=True)
class CodebookSpec:
    """Codebook choice as read from a config file."""

    codebook: str = "poisson"
    epsilon: float = 0.0
    window_scale: float = 1.0


def palm_scenario_for(codebook, model, n, alpha, epsilon=0.0, window_scale=1.0):
    """Palm scenario at normalised rate ``-h - ln(alpha)`` for a noise model.

    Matérn codebooks use the Euclidean exclusion radius
    ``(alpha - epsilon) * sqrt(n * var)``; for white Gaussian noise this is
    also what stun thinning at the matching threshold produces.
    """
    rate = -model.entropy_rate() - np.log(alpha)
    sigma = np.sqrt(model.variance())
    r_excl = 0.0
    if codebook in ("matern1", "matern-stun"):
        r_excl = (alpha - epsilon) * sigma * np.sqrt(n)
        kind = "matern1"
    elif codebook == "grid":
        kind = "grid"
    elif codebook == "poisson":
        kind = "poisson"
    else:
        raise ScenarioError(f"unknown codebook {codebook!r}")
    radius = window_scale * default_window_radius(
        n, sigma, r_excl, rate if codebook == "grid" else None)
    return PalmScenario(kind, n, n * rate, WindowSpec(n, radius), r_excl)
