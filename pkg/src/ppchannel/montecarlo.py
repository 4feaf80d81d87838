"""Monte Carlo estimators of decoding error probabilities.

Every trial draws its randomness from its own Philox substream keyed on
``(seed, trial index)``, and per-trial results are reduced in index order.
Estimates are therefore identical for any batch size and thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .decoding import Decoder, mle_success
from .errors import ParameterError, ScenarioError
from .geometry import log_ball_volume
from .noise import WhiteGaussian, _StationaryGaussian
from .pointprocess import PalmScenario, WindowSpec, sample_palm_interferers, sample_poisson

EDGE_FRACTION_LIMIT = 1e-3
DEFAULT_BATCH = 512

# separate key spaces so that estimators never share random blocks
_TAG_NOISE_BLOCK = 1
_TAG_TRIAL = 2
_TAG_PERTURB = 3


@dataclass(frozen=True)
class Estimate:
    """Sample mean with its standard error and a normal 95% interval.

    ``flagged`` is set when more than 0.1% of trials were edge events,
    meaning the window was too small for the result to be trusted.
    """

    mean: float
    std_error: float
    ci95: tuple
    trials: int
    seed: int
    edge_events: int = 0
    flagged: bool = False
    ambiguous: int = 0
    mode: str = ""

    def within(self, value, k=3.0):
        return abs(self.mean - value) <= k * self.std_error


def estimate_from_samples(values, seed, edge_events=0, ambiguous=0, mode=""):
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        raise ParameterError("need at least one trial")
    mean = float(np.sum(values) / n)
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    flagged = edge_events > EDGE_FRACTION_LIMIT * n
    return Estimate(mean, se, (mean - 1.96 * se, mean + 1.96 * se), n, int(seed),
                    int(edge_events), bool(flagged), int(ambiguous), mode)


def _key(seed, tag):
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ParameterError("seed must fit in 64 unsigned bits")
    return seed + (tag << 64)


def trial_uniforms(seed, start, count, width, tag=_TAG_NOISE_BLOCK):
    """Uniforms in (0, 1) for trials ``start .. start+count-1``, ``width`` each.

    Trial ``i`` always reads the Philox blocks at counters
    ``i*k .. i*k+k-1`` with ``k = ceil(width / 4)``.
    """
    k = -(-width // 4)
    bitgen = np.random.Philox(key=_key(seed, tag), counter=start * k)
    raw = bitgen.random_raw(count * k * 4).reshape(count, 4 * k)[:, :width]
    return ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53


def trial_generator(seed, trial, tag=_TAG_TRIAL):
    """Independent generator for one trial (the trial index sits in the high counter words)."""
    return np.random.Generator(np.random.Philox(key=_key(seed, tag), counter=int(trial) << 128))


def _run_batched(fn, trials, batch_size, threads):
    """Apply ``fn(start, stop)`` over fixed batches; outputs are kept in order."""
    if trials <= 0:
        raise ParameterError("trials must be positive")
    bounds = [(s, min(s + batch_size, trials)) for s in range(0, trials, batch_size)]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: fn(*b), bounds))
    else:
        parts = [fn(*b) for b in bounds]
    return [np.concatenate(col) for col in zip(*parts)]


def _log_decoding_volume(model, d, decoder):
    """Log volume of the region where an interferer beats the origin."""
    n = d.shape[-1]
    if decoder.rule == "typicality":
        return np.full(len(d), model.typicality_log_volume(n, decoder.delta))
    rule_model = model if decoder.rule == "mle" else decoder.design
    if isinstance(rule_model, WhiteGaussian):
        return log_ball_volume(n, np.linalg.norm(d, axis=1))
    if isinstance(rule_model, _StationaryGaussian):
        w = np.linalg.norm(rule_model.whiten(d), axis=1)
        return log_ball_volume(n, w) + np.sum(np.log(rule_model.axis_scales(n)))
    stuns = -rule_model.log_density(d) / n
    return np.array([rule_model.stun_level_log_volume(n, s) if np.isfinite(s) else np.inf
                     for s in stuns])


def estimate_pe(scenario: PalmScenario, decoder: Decoder, model, n, trials, seed,
                mode="explicit", batch_size=DEFAULT_BATCH, threads=1):
    """Estimate the error probability of the origin codeword.

    Parameters
    ----------
    scenario : PalmScenario
        Law of the other codewords.
    decoder : Decoder
    model : NoiseModel
        Noise actually added to the origin.
    n, trials, seed : int
    mode : {"explicit", "reduced"}
        ``explicit`` samples the interferers; ``reduced`` (Poisson only)
        integrates them out and averages ``1 - exp(-lambda |region|)``.

    Returns
    -------
    Estimate
    """
    if scenario.n != n:
        raise ScenarioError("scenario dimension does not match n")
    if mode == "reduced":
        if scenario.kind != "poisson":
            raise ScenarioError("the reduced estimator needs a Poisson scenario")

        def batch(start, stop):
            d = model.from_uniforms(trial_uniforms(seed, start, stop - start, n))
            if decoder.rule == "typicality":
                typ = model.in_typical_set(d, decoder.delta)
            else:
                typ = np.ones(len(d), dtype=bool)
            lv = _log_decoding_volume(model, d, decoder)
            with np.errstate(over="ignore"):
                vals = -np.expm1(-np.exp(scenario.log_lambda + lv))
            return (np.where(typ, vals, 1.0),)

        (vals,) = _run_batched(batch, trials, batch_size, threads)
        return estimate_from_samples(vals, seed, mode="reduced")
    if mode != "explicit":
        raise ParameterError(f"unknown mode {mode!r}")

    radius = scenario.window.radius

    def batch(start, stop):
        fail = np.zeros(stop - start)
        edge = np.zeros(stop - start, dtype=bool)
        amb = np.zeros(stop - start, dtype=bool)
        for j, i in enumerate(range(start, stop)):
            rng = trial_generator(seed, i)
            pts = sample_palm_interferers(scenario, rng)
            d = model.sample(n, rng)
            out = decoder.decide(model, pts, d)
            fail[j] = 0.0 if out.success else 1.0
            amb[j] = out.status == "ambiguous"
            edge[j] = out.success and decoder.region_radius(model, d) > radius
        return fail, edge, amb

    fail, edge, amb = _run_batched(batch, trials, batch_size, threads)
    return estimate_from_samples(fail, seed, int(edge.sum()), int(amb.sum()), mode="explicit")


def _landed_in_origin_cell(model, pts, y):
    """Mask of rows of ``y`` that MLE decoding would send to the origin."""
    if isinstance(model, WhiteGaussian):
        y2 = np.einsum("ij,ij->i", y, y)
        d2 = (np.einsum("ij,ij->i", y, y)[:, None] - 2.0 * y @ pts.T
              + np.einsum("ij,ij->i", pts, pts)[None, :])
        # recompute the borderline cases exactly
        out = np.all(d2 > y2[:, None] * (1 + 1e-9), axis=1)
        close = ~out & np.all(d2 > y2[:, None] * (1 - 1e-9), axis=1)
        for k in np.flatnonzero(close):
            diff = y[k] - pts
            out[k] = bool(np.all(np.einsum("ij,ij->i", diff, diff) > y2[k]))
        return out
    return np.array([mle_success(model, pts, yk).success for yk in y], dtype=bool)


def estimate_pe_mass_transport(scenario: PalmScenario, model, n, trials, seed,
                               batch_size=DEFAULT_BATCH, threads=1, return_counts=False):
    """Estimate the error probability by counting interferers that land in the origin's cell.

    Each other codeword ``T`` is moved by its own noise; the count of
    ``T + D_T`` falling in the MLE decoding region of the origin has the
    error probability as its mean. A single trial can count several.
    With ``return_counts`` the per-trial counts are returned as well.
    """
    radius = scenario.window.radius
    decoder = Decoder("mle")

    def batch(start, stop):
        counts = np.zeros(stop - start)
        edge = np.zeros(stop - start, dtype=bool)
        for j, i in enumerate(range(start, stop)):
            rng = trial_generator(seed, i)
            pts = sample_palm_interferers(scenario, rng)
            if len(pts) == 0:
                continue
            y = pts + model.sample(n, rng, size=len(pts))
            # the point must at least beat the codeword it came from
            own = model.stun(y, pts) > model.stun(y, np.zeros(n))
            idx = np.flatnonzero(own)
            if len(idx) == 0:
                continue
            hit = idx[_landed_in_origin_cell(model, pts, y[idx])]
            counts[j] = len(hit)
            edge[j] = any(decoder.region_radius(model, y[k]) > radius for k in hit)
        return counts, edge

    counts, edge = _run_batched(batch, trials, batch_size, threads)
    est = estimate_from_samples(counts, seed, int(edge.sum()), mode="mass-transport")
    return (est, counts) if return_counts else est


def estimate_perturbation_integral(n, lam, sigma, trials, seed, window_radius=None,
                                   hits_per_trial=4, batch_size=DEFAULT_BATCH, threads=1):
    """Monte Carlo value of ``E[Vol(H_x)]`` where ``x`` is the noise.

    ``H_x`` is the set of extra points ``y`` whose insertion into the
    Poisson configuration takes ``x`` out of the origin's decoding cell,
    counted only when ``x`` was in that cell to begin with. Its volume is
    estimated by hit-or-miss sampling of ``y`` in ``B(x, |x|)``, outside of
    which an extra point cannot change the decision.
    """
    model = WhiteGaussian(sigma)
    radius = window_radius or 6.0 * sigma * np.sqrt(n) + 1.0
    window = WindowSpec(n, radius)

    def batch(start, stop):
        vals = np.zeros(stop - start)
        edge = np.zeros(stop - start, dtype=bool)
        for j, i in enumerate(range(start, stop)):
            rng = trial_generator(seed, i, tag=_TAG_PERTURB)
            x = model.sample(n, rng)
            if lam > 0:
                mu = sample_poisson(window, np.log(lam), rng).points
            else:
                mu = np.empty((0, n))
            r = float(np.linalg.norm(x))
            edge[j] = 2.0 * r > radius
            # x must start inside the cell of 0: no point of mu closer to x than 0
            closest_mu = np.min(np.sum((mu - x) ** 2, axis=1), initial=np.inf)
            if closest_mu < r * r:
                continue
            g = rng.standard_normal((hits_per_trial, n))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            ys = x + g * r * rng.random((hits_per_trial, 1)) ** (1.0 / n)
            # and leaves it once the extra point y is closer to x than 0
            closest = np.sum((ys - x) ** 2, axis=1)
            hits = int(np.count_nonzero(closest < r * r))
            vals[j] = np.exp(log_ball_volume(n, r)) * hits / hits_per_trial
        return vals, edge

    vals, edge = _run_batched(batch, trials, batch_size, threads)
    return estimate_from_samples(vals, seed, int(edge.sum()), mode="perturbation")
