"""Error exponents of random codebooks and their Shannon-rate transfer.

Exponents are functions of ``alpha``, the factor by which the codeword
density sits below the noise entropy: the normalised log intensity is
``-h - ln(alpha)``. Each exponent is computed numerically from its
variational form and checked against the closed form of the regime it
falls in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ParameterError, UnsupportedOperation
from .noise import (ColoredGaussian, NoiseModel, WhiteGaussian, WhiteSymExp, WhiteUniform,
                    _StationaryGaussian)

log = logging.getLogger(__name__)

LN2 = np.log(2.0)
SQRT2 = np.sqrt(2.0)
U_SPAN = 20.0
GRID_POINTS = 200
POISSON_CHECK_TOL = 1e-6
MATERN_CHECK_TOL = 1e-4


@dataclass(frozen=True)
class ExponentResult:
    alpha: float
    exponent: float
    minimizer: float
    branch: str
    method: str


@dataclass
class ExponentCurve:
    """Rows of an exponent sweep; ``x_axis`` names what ``x`` holds."""

    rows: list
    x_axis: str = "alpha"
    dropped: int = 0


def _gaussian_like(model):
    return isinstance(model, (WhiteGaussian, ColoredGaussian))


def _check_alpha(alpha):
    if not alpha >= 1.0:
        raise ParameterError(f"alpha must be at least 1, got {alpha}")


# --- volume exponent ---------------------------------------------------------

def volume_exponent_J(model: NoiseModel, u):
    """Growth rate ``lim (1/n) ln W_n(u)`` of the stun sublevel volume."""
    u = np.asarray(u, dtype=float)
    h = model.entropy_rate()
    t = model.stun_threshold()
    with np.errstate(divide="ignore", invalid="ignore"):
        if _gaussian_like(model):
            out = np.where(u > t, h + 0.5 * np.log(2.0 * (u - t)), -np.inf)
        elif isinstance(model, WhiteSymExp):
            out = np.where(u > t, h + np.log(u - t), -np.inf)
        elif isinstance(model, WhiteUniform):
            out = np.where(u >= h, h, -np.inf)
        else:
            return volume_exponent_numeric(model, u)
    return out[()] if out.ndim == 0 else out


def volume_exponent_numeric(model: NoiseModel, u):
    """``sup_{s <= u} (s - I(s))`` by bounded scalar search."""
    u = float(u)
    t = model.stun_threshold()
    if u <= t:
        return -np.inf
    res = minimize_scalar(lambda s: -(s - float(model.rate_function(s))),
                          bounds=(t, u), method="bounded", options={"xatol": 1e-12})
    return max(-res.fun, u - float(model.rate_function(u)))


# --- Poisson codebook ----------------------------------------------------------

def poisson_objective(model, alpha, u):
    """``(ln alpha + h - J(u))^+ + I(u)``."""
    gap = np.log(alpha) + model.entropy_rate() - volume_exponent_J(model, u)
    return np.maximum(gap, 0.0) + model.rate_function(u)


def _family(model):
    if _gaussian_like(model):
        return "gaussian"
    if isinstance(model, WhiteSymExp):
        return "symexp"
    if isinstance(model, WhiteUniform):
        return "uniform"
    raise UnsupportedOperation(f"{model.kind}: no closed form exponent")


# (upper end of alpha range, branch name, formula); ranges start at alpha = 1
POISSON_BRANCHES = {
    "gaussian": [(SQRT2, "low", lambda a: 0.5 * a * a - 0.5 - np.log(a)),
                 (np.inf, "high", lambda a: 0.5 - LN2 + np.log(a))],
    "symexp": [(2.0, "low", lambda a: a - 1.0 - np.log(a)),
               (np.inf, "high", lambda a: 1.0 - 2.0 * LN2 + np.log(a))],
    "uniform": [(np.inf, "single", lambda a: np.log(a))],
}

MATERN_BRANCHES = {
    "gaussian": [(SQRT2, "low", POISSON_BRANCHES["gaussian"][0][2]),
                 (2.0, "high", POISSON_BRANCHES["gaussian"][1][2]),
                 (np.inf, "matern", lambda a: a * a / 8.0)],
    "symexp": [(2.0, "low", lambda a: a - np.log(a) - 1.0),
               (4.0, "middle", lambda a: np.log(a) + 1.0 - 2.0 * LN2),
               (np.inf, "matern", lambda a: a / 2.0 - np.log(a) - 1.0 + 2.0 * LN2)],
}

POLTYREV_BRANCHES = MATERN_BRANCHES["gaussian"]


def _pick(branches, alpha):
    for upper, name, fn in branches:
        if alpha < upper:
            return float(fn(alpha)), name
    upper, name, fn = branches[-1]
    return float(fn(alpha)), name


def branch_gaps(branches):
    """Differences between neighbouring branch formulas at each breakpoint."""
    return [(upper, abs(fn(upper) - nxt(upper)))
            for (upper, _, fn), (_, _, nxt) in zip(branches[:-1], branches[1:])]


def poisson_closed_form(model, alpha):
    """Closed form Poisson exponent and the name of its regime."""
    _check_alpha(alpha)
    return _pick(POISSON_BRANCHES[_family(model)], alpha)


def _grid_then_refine(f, lo, hi, points=GRID_POINTS):
    xs = np.linspace(lo, hi, points + 1)[1:]
    vals = np.array([f(x) for x in xs])
    k = int(np.argmin(vals))
    a = xs[k - 1] if k > 0 else lo
    b = xs[k + 1] if k < points - 1 else hi
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    if res.fun <= vals[k]:
        return float(res.x), float(res.fun)
    return float(xs[k]), float(vals[k])


def poisson_exponent(model: NoiseModel, alpha, check=True):
    """Error exponent of Poisson codebooks with MLE decoding.

    Minimises the objective over ``u`` in ``(u_min, u_min + 20]`` with a
    200 point grid followed by bounded refinement, then compares with the
    closed form to 1e-6.
    """
    _check_alpha(alpha)
    if isinstance(model, WhiteUniform):
        # the rate function is finite only at u = h
        h = model.entropy_rate()
        val, u_star = float(poisson_objective(model, alpha, h)), h
    else:
        t = model.stun_threshold()
        u_star, val = _grid_then_refine(lambda u: float(poisson_objective(model, alpha, u)),
                                        t, t + U_SPAN)
    try:
        closed, branch = poisson_closed_form(model, alpha)
    except UnsupportedOperation:
        return ExponentResult(float(alpha), val, u_star, "numeric", "numeric")
    if check and abs(val - closed) > POISSON_CHECK_TOL:
        raise ArithmeticError(
            f"numeric Poisson exponent {val!r} disagrees with closed form {closed!r} at alpha={alpha}")
    return ExponentResult(float(alpha), val, u_star, branch, "numeric")


# --- Matérn codebook -----------------------------------------------------------

def matern_terms(model, alpha_tilde, alpha=None):
    """Return ``(a, b)``: noise cost and lune cost as functions of ``v``."""
    alpha = alpha_tilde if alpha is None else alpha
    at = float(alpha_tilde)
    la = np.log(alpha)
    if isinstance(model, WhiteGaussian):
        def a(v):
            return 0.5 * v * v - 0.5 - np.log(v)

        def b(v):
            if v < at / 2.0:
                return np.inf
            if v < at / SQRT2:
                c2 = v * v - (v - at * at / (2.0 * v)) ** 2
                return la - 0.5 * np.log(c2) if c2 > 0 else np.inf
            return max(la - np.log(v), 0.0)
    elif isinstance(model, WhiteSymExp):
        lat = np.log(at)

        def a(v):
            return v - np.log(v) - 1.0

        def b(v):
            if v < at / 2.0:
                return np.inf
            return max(lat - np.log(v), 0.0)
    else:
        raise UnsupportedOperation(f"{model.kind}: Matérn exponent needs wgn or symexp noise")
    return a, b


def matern_closed_form(model, alpha):
    _check_alpha(alpha)
    fam = _family(model)
    if fam not in MATERN_BRANCHES or (fam == "gaussian" and not isinstance(model, WhiteGaussian)):
        raise UnsupportedOperation(f"{model.kind}: no closed form Matérn exponent")
    return _pick(MATERN_BRANCHES[fam], alpha)


def matern_exponent(model: NoiseModel, alpha, check=True):
    """Error exponent of Matérn I codebooks: ``min_v a(v) + b(v)``."""
    _check_alpha(alpha)
    a, b = matern_terms(model, alpha)
    lo = alpha / 2.0
    hi = max(alpha, 2.0) + 5.0
    v_star, val = _grid_then_refine(lambda v: a(v) + b(v), lo, hi, points=4 * GRID_POINTS)
    closed, branch = matern_closed_form(model, alpha)
    if check and abs(val - closed) > MATERN_CHECK_TOL:
        raise ArithmeticError(
            f"numeric Matérn exponent {val!r} disagrees with closed form {closed!r} at alpha={alpha}")
    return ExponentResult(float(alpha), val, v_star, branch, "numeric")


def poltyrev_exponent(alpha):
    """Best of the Poisson and Matérn exponents for white Gaussian noise."""
    _check_alpha(alpha)
    val, branch = _pick(POLTYREV_BRANCHES, alpha)
    return ExponentResult(float(alpha), val, float("nan"), branch, "closed-form")


# --- Shannon transfer ------------------------------------------------------------

def shannon_capacity_bounds(model: NoiseModel, power):
    """Lower and upper bounds on the power constrained capacity (nats)."""
    if not power > 0:
        raise ParameterError("power must be positive")
    h = model.entropy_rate()
    lo = 0.5 * np.log(2.0 * np.pi * np.e * power) - h
    hi = 0.5 * np.log(2.0 * np.pi * np.e * (power + model.variance())) - h
    return float(lo), float(hi)


def shannon_rate(model, p_or_a, alpha, form):
    """Shannon rate obtained from an unconstrained code at distance ``alpha``.

    ``form="awgn"`` takes the amplitude ratio ``A`` (SNR ``A^2``) and gives
    ``ln(sqrt(1 + A^2) / alpha)``; ``form="power"`` takes the power ``P``
    and gives ``ln(sqrt(2 pi e P)) - h - ln(alpha)``.
    """
    if form == "awgn":
        return 0.5 * np.log((1.0 + p_or_a ** 2) / alpha ** 2)
    if form == "power":
        return 0.5 * np.log(2.0 * np.pi * np.e * p_or_a) - model.entropy_rate() - np.log(alpha)
    raise ParameterError(f"unknown rate form {form!r}")


@dataclass(frozen=True)
class ShannonRow:
    rate: float
    exponent_lower_bound: float
    alpha: float
    p_or_a: float


def shannon_exponent_curve(model, p_or_a, alpha_grid, codebook="poisson", form=None):
    """Exponent lower bounds for power constrained codes, indexed by rate.

    Rows with a nonpositive rate are dropped and counted in ``dropped``.
    Rows are returned in order of decreasing rate.
    """
    if form is None:
        form = "awgn" if isinstance(model, WhiteGaussian) else "power"
    rows, dropped = [], 0
    for alpha in sorted(float(a) for a in alpha_grid):
        rate = float(shannon_rate(model, p_or_a, alpha, form))
        if rate <= 0:
            dropped += 1
            continue
        if codebook == "matern":
            e = matern_exponent(model, alpha).exponent
        elif codebook == "poisson":
            e = poisson_exponent(model, alpha).exponent
        else:
            raise ParameterError(f"unknown codebook {codebook!r}")
        rows.append(ShannonRow(rate, float(e), alpha, float(p_or_a)))
    if dropped:
        log.warning("dropped %d rows with nonpositive rate", dropped)
    return ExponentCurve(rows, x_axis="rate", dropped=dropped)


def exponent_curve(model, alpha_grid, codebook="poisson"):
    fn = {"poisson": poisson_exponent, "matern": matern_exponent}.get(codebook)
    if fn is None:
        raise ParameterError(f"unknown codebook {codebook!r}")
    return ExponentCurve([fn(model, float(a)) for a in alpha_grid], x_axis="alpha")
