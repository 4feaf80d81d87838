"""Decoding rules for the origin codeword.

A decoder receives the displaced origin ``d`` (which is just the noise)
and the other codewords, and says whether the origin is recovered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecodingError, UnsupportedOperation
from .noise import NoiseModel, WhiteGaussian, _StationaryGaussian, from_config
from .pointprocess import GridIndex

SUCCESS, FAILURE, AMBIGUOUS = "success", "failure", "ambiguous"


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of one decoding attempt.

    ``status`` is ``"ambiguous"`` when the decoding rule had an exact tie;
    ``success`` then carries the nearest-neighbour resolution of that tie.
    ``cause`` is the index of an interferer responsible for a failure.
    """

    status: str
    success: bool
    cause: int | None = None


def _candidates(interferers, d, reach):
    """Interferer coordinates and their original indices near ``d``."""
    if isinstance(interferers, GridIndex):
        if reach is None or not np.isfinite(reach):
            idx = np.arange(len(interferers.points))
        else:
            idx = interferers.query_ball(d, reach * (1 + 1e-9) + 1e-300)
        return interferers.points[idx], idx
    pts = np.asarray(interferers, dtype=float)
    if pts.size == 0:
        pts = pts.reshape(0, len(d))
    if pts.ndim != 2 or pts.shape[1] != len(d):
        raise DecodingError(f"interferers of shape {pts.shape} do not match d of length {len(d)}")
    return pts, np.arange(len(pts))


def _sq(x):
    return np.einsum("...i,...i->...", x, x)


def _resolve(d, pts, idx, score_others, score_origin):
    """Shared logic once per-interferer scores (lower wins) are known."""
    better = score_others < score_origin
    if better.any():
        return DecodeOutcome(FAILURE, False, int(idx[np.argmax(better)]))
    ties = score_others == score_origin
    if ties.any():
        tied = pts[ties]
        ok = bool(np.all(_sq(d) < _sq(d - tied)))
        cause = None if ok else int(idx[np.flatnonzero(ties)[0]])
        return DecodeOutcome(AMBIGUOUS, ok, cause)
    return DecodeOutcome(SUCCESS, True)


def mle_success(model: NoiseModel, interferers, d):
    """Maximum likelihood decoding of the origin.

    White Gaussian noise reduces to the ball test ``no T in B(d, |d|)``;
    Gaussian models with memory use the Mahalanobis version of that test;
    anything else compares stun values ``-(1/n) ln f(d - T)`` directly.
    """
    d = np.asarray(d, dtype=float)
    n = len(d)
    if isinstance(model, WhiteGaussian):
        pts, idx = _candidates(interferers, d, np.sqrt(_sq(d)))
        return _resolve(d, pts, idx, _sq(d - pts), _sq(d))
    if isinstance(model, _StationaryGaussian):
        pts, idx = _candidates(interferers, d, None)
        w0 = model.whiten(d)
        w = model.whiten(d - pts) if len(pts) else np.empty((0, n))
        return _resolve(d, pts, idx, _sq(w), _sq(w0))
    s0 = float(model.stun(d, np.zeros(n)))
    reach = None
    if np.isfinite(s0):
        try:
            reach = model.level_set_radius(n, s0)
        except UnsupportedOperation:
            reach = None
    pts, idx = _candidates(interferers, d, reach)
    scores = model.stun(d, pts) if len(pts) else np.empty(0)
    return _resolve(d, pts, idx, scores, s0)


def typicality_success(model: NoiseModel, delta, interferers, d):
    """Typicality decoding: ``d`` is typical and no ``d - T`` is."""
    d = np.asarray(d, dtype=float)
    if not bool(model.in_typical_set(d, delta)):
        return DecodeOutcome(FAILURE, False, None)
    n = len(d)
    try:
        reach = np.sqrt(_sq(d)) + model.level_set_radius(n, model.entropy_rate() + delta)
    except UnsupportedOperation:
        reach = None
    pts, idx = _candidates(interferers, np.zeros(n) if reach is not None else d, reach)
    if len(pts) == 0:
        return DecodeOutcome(SUCCESS, True)
    bad = model.in_typical_set(d - pts, delta)
    if bad.any():
        return DecodeOutcome(FAILURE, False, int(idx[np.argmax(bad)]))
    return DecodeOutcome(SUCCESS, True)


def mismatched_success(design: NoiseModel, interferers, d):
    """MLE decoding built for ``design`` applied to noise from some other model."""
    return mle_success(design, interferers, d)


DECODERS = ("mle", "typicality", "mismatched")


@dataclass(frozen=True)
class Decoder:
    """Decoder choice with its parameters."""

    rule: str = "mle"
    delta: float = 0.1
    design: NoiseModel | None = None

    def __post_init__(self):
        if self.rule not in DECODERS:
            raise DecodingError(f"unknown decoder {self.rule!r}")
        if self.rule == "mismatched" and self.design is None:
            raise DecodingError("mismatched decoding needs a design model")

    def decide(self, model, interferers, d):
        if self.rule == "mle":
            return mle_success(model, interferers, d)
        if self.rule == "typicality":
            return typicality_success(model, self.delta, interferers, d)
        return mismatched_success(self.design, interferers, d)

    def region_radius(self, model, d):
        """Radius of a ball around 0 holding every interferer that could matter.

        Used to flag trials whose decision depends on points outside the
        simulation window.
        """
        d = np.asarray(d, dtype=float)
        n = len(d)
        norm = float(np.sqrt(_sq(d)))
        if self.rule == "typicality":
            return norm + model.level_set_radius(n, model.entropy_rate() + self.delta)
        rule_model = model if self.rule == "mle" else self.design
        if isinstance(rule_model, WhiteGaussian):
            return 2.0 * norm
        s0 = float(rule_model.stun(d, np.zeros(n)))
        if not np.isfinite(s0):
            return 2.0 * norm
        return norm + rule_model.level_set_radius(n, s0)


def decoder_from_config(cfg):
    """``{"decoder": "mle" | "typicality" | "mismatched", "delta": .., "design": {..}}``."""
    rule = cfg.get("decoder", "mle")
    design = cfg.get("design")
    return Decoder(rule, float(cfg.get("delta", 0.1)),
                   from_config(design) if design is not None else None)
