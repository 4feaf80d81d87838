import numpy as np
import pytest

from ppchannel import noise
from ppchannel.decoding import (Decoder, decoder_from_config, mismatched_success, mle_success,
                                typicality_success)
from ppchannel.errors import DecodingError
from ppchannel.pointprocess import GridIndex

WGN = noise.WhiteGaussian(1.0)
SYM = noise.WhiteSymExp(1.0)
UNI = noise.WhiteUniform(1.0)


def test_mle_examples():
    assert mle_success(WGN, [[3.0, 0.0]], np.array([1.0, 0.0])).success
    out = mle_success(WGN, [[3.0, 0.0]], np.array([2.0, 0.0]))
    assert not out.success and out.cause == 0
    for m in (WGN, SYM, UNI, noise.colored_ar1(0.3, 1.0, max_dim=4)):
        assert mle_success(m, np.empty((0, 4)), np.full(4, 0.1)).success


def test_mle_tie_is_ambiguous():
    out = mle_success(WGN, [[2.0, 0.0]], np.array([1.0, 0.0]))
    assert out.status == "ambiguous"


def test_mle_shape_mismatch():
    with pytest.raises(DecodingError):
        mle_success(WGN, [[1.0, 2.0, 3.0]], np.zeros(2))


def test_typicality_examples(rng):
    n, delta = 6, 0.1
    # variance far from one puts d outside the typical shell
    assert not typicality_success(WGN, delta, np.empty((0, n)), np.full(n, 3.0)).success
    d = rng.normal(size=n)
    d *= np.sqrt(n) / np.linalg.norm(d)
    assert typicality_success(WGN, delta, np.empty((0, n)), d).success
    assert typicality_success(WGN, delta, [np.full(n, 50.0)], d).success
    du = np.full(3, 0.2)
    assert not typicality_success(UNI, delta, [du + 1.0], du).success


def test_mismatched_examples(rng):
    for _ in range(200):
        d = rng.normal(size=3)
        pts = rng.normal(scale=2.0, size=(5, 3))
        assert mismatched_success(WGN, pts, d) == mle_success(WGN, pts, d)
        ball = np.all(np.linalg.norm(pts - d, axis=1) > np.linalg.norm(d))
        assert mismatched_success(noise.WhiteGaussian(3.0), pts, d).success == ball
    assert mismatched_success(SYM, np.empty((0, 3)), np.ones(3)).success


def test_wgn_ball_equals_stun_rule(rng):
    for _ in range(2000):
        n = rng.integers(1, 9)
        d = rng.normal(size=n)
        pts = rng.normal(scale=1.5, size=(rng.integers(0, 6), n))
        stun_rule = all(WGN.stun(d, np.zeros(n)) < WGN.stun(d, t) for t in pts)
        assert mle_success(WGN, pts, d).success == stun_rule


def test_flat_colored_equals_euclidean(rng):
    m = noise.ColoredGaussian(lambda b: 1.0 + 0 * b, max_dim=8)
    for _ in range(2000):
        n = rng.integers(1, 9)
        d = rng.normal(size=n)
        pts = rng.normal(scale=1.5, size=(rng.integers(0, 6), n))
        assert mle_success(m, pts, d).success == mle_success(WGN, pts, d).success


def test_removing_interferers_never_hurts(rng):
    for m in (WGN, SYM, UNI):
        for _ in range(300):
            d = m.sample(4, rng)
            pts = rng.normal(scale=2.0, size=(6, 4))
            if mle_success(m, pts, d).success:
                for k in range(len(pts)):
                    assert mle_success(m, np.delete(pts, k, axis=0), d).success


def test_index_and_array_agree(rng):
    pts = rng.normal(scale=3.0, size=(300, 3))
    idx = GridIndex(pts, 2.0)
    for _ in range(100):
        d = rng.normal(size=3)
        assert mle_success(WGN, pts, d).success == mle_success(WGN, idx, d).success


def test_decoder_config():
    dec = decoder_from_config({"decoder": "mismatched", "design": {"kind": "wgn", "sigma": 1.0}})
    assert dec.rule == "mismatched" and dec.design == WGN
    with pytest.raises(DecodingError):
        Decoder("mismatched")
    with pytest.raises(DecodingError):
        Decoder("closest")
