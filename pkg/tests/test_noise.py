import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppchannel import noise
from ppchannel.errors import ModelError, UnsupportedOperation

WGN = noise.WhiteGaussian(1.0)
SYM = noise.WhiteSymExp(1.0)
UNI = noise.WhiteUniform(1.0)


def test_uniform_support(rng):
    x = UNI.sample(7, rng, size=2000)
    assert np.all(np.abs(x) <= np.sqrt(3))


def test_gaussian_sample_variance(rng):
    x = noise.WhiteGaussian(2.0).sample(1, rng, size=1_000_000)
    assert np.var(x) == pytest.approx(4.0, rel=0.01)


def test_white_colored_lag1_uncorrelated(rng):
    m = noise.ColoredGaussian(lambda b: 1.0 + 0 * b, max_dim=16)
    x = m.sample(16, rng, size=20_000)
    prod = x[:, :-1] * x[:, 1:]
    z = prod.mean() / (prod.std() / np.sqrt(prod.size))
    assert abs(z) < 3


def test_ar1_covariance_matches_theory(rng):
    a = 0.6
    for m in (noise.colored_ar1(a, 1.0, max_dim=8), noise.MarkovGaussianAR1(a, 1.0)):
        x = m.sample(8, rng, size=50_000)
        lag1 = np.mean(x[:, 3] * x[:, 4])
        assert lag1 == pytest.approx(a / (1 - a ** 2), abs=0.03)


def test_log_density_examples():
    assert WGN.log_density(np.zeros(2)) == pytest.approx(-np.log(2 * np.pi))
    for n in (1, 4, 9):
        assert UNI.log_density(np.zeros(n)) == pytest.approx(-n * np.log(2 * np.sqrt(3)))
    assert SYM.log_density(np.array([1.0])) == pytest.approx(np.log(np.sqrt(2) / 2) - np.sqrt(2))
    assert UNI.log_density(np.array([0.0, 2.0])) == -np.inf


def test_stun_examples():
    x = np.array([0.3, -1.2, 0.4])
    for m in (WGN, SYM, UNI):
        assert m.stun(x, x) == pytest.approx(-m.log_density(np.zeros(3)) / 3)
    s, t, sigma = np.array([1.0, 2.0]), np.array([0.0, -1.0]), 1.3
    expected = 0.5 * np.log(2 * np.pi * sigma ** 2) + 10.0 / (2 * 2 * sigma ** 2)
    assert noise.WhiteGaussian(sigma).stun(s, t) == pytest.approx(expected)
    assert UNI.stun(np.array([0.0, 1.8]), np.zeros(2)) == np.inf
    assert np.isfinite(UNI.stun(np.array([0.0, 1.7]), np.zeros(2)))


def test_entropy_rates():
    assert SYM.entropy_rate() == pytest.approx(1 + 0.5 * np.log(2), abs=1e-12)
    assert WGN.entropy_rate() == pytest.approx(0.5 * np.log(2 * np.pi * np.e))
    assert UNI.entropy_rate() == pytest.approx(np.log(2 * np.sqrt(3)))
    flat = noise.ColoredGaussian(lambda b: 2.25 + 0 * b, max_dim=8)
    assert flat.entropy_rate() == pytest.approx(0.5 * np.log(2 * np.pi * np.e * 2.25), abs=1e-8)
    for a in (-0.5, 0.3, 0.8):
        assert noise.colored_ar1(a, 1.5, max_dim=8).entropy_rate() == \
            pytest.approx(0.5 * np.log(2 * np.pi * np.e * 2.25), abs=1e-6)
        assert noise.MarkovGaussianAR1(a, 1.5).entropy_rate() == \
            pytest.approx(0.5 * np.log(2 * np.pi * np.e * 2.25), abs=1e-12)


def test_stun_level_volume_examples():
    assert WGN.stun_level_log_volume(3, 0.5 * np.log(2 * np.pi)) == -np.inf
    assert WGN.stun_level_log_volume(2, 0.5 * np.log(2 * np.pi) + 0.5) == pytest.approx(np.log(2 * np.pi))
    assert UNI.stun_level_log_volume(5, np.log(2 * np.sqrt(3)) + 0.1) == pytest.approx(5 * np.log(2 * np.sqrt(3)))


def test_typicality_volume_examples():
    for d in (0.05, 0.5):
        assert UNI.typicality_log_volume(6, d) == pytest.approx(6 * np.log(2 * np.sqrt(3)))
    assert np.exp(WGN.typicality_log_volume(2, 0.25)) == pytest.approx(2 * np.pi)
    for m in (WGN, SYM, UNI):
        for n in (2, 10, 50):
            assert m.typicality_log_volume(n, 0.2) <= n * (m.entropy_rate() + 0.2) + 1e-9


def test_entropy_spectrum_examples(rng):
    u = UNI.entropy_spectrum_sample(9, rng, size=100)
    assert np.allclose(u, np.log(2 * np.sqrt(3)))
    w = WGN.entropy_spectrum_sample(50, rng, size=100_000)
    se = w.std() / np.sqrt(w.size)
    assert abs(w.mean() - WGN.entropy_rate()) < 3 * se
    assert -WGN.log_density(np.zeros(1)) == pytest.approx(0.5 * np.log(2 * np.pi))


def test_rate_function_examples():
    assert WGN.rate_function(WGN.entropy_rate()) == pytest.approx(0.0, abs=1e-14)
    assert WGN.rate_function(0.5 * np.log(2 * np.pi) + 1) == pytest.approx(0.5 - 0.5 * np.log(2))
    assert UNI.rate_function(UNI.entropy_rate() + 0.01) == np.inf
    assert WGN.rate_function(0.5 * np.log(2 * np.pi) - 0.1) == np.inf


@settings(max_examples=40)
@given(st.floats(-0.5, 3.0), st.floats(-0.5, 3.0))
def test_rate_function_convex_nonnegative(u1, u2):
    for m in (WGN, SYM):
        i1, i2, im = m.rate_function(u1), m.rate_function(u2), m.rate_function((u1 + u2) / 2)
        assert i1 >= 0 and i2 >= 0
        if np.isfinite(i1) and np.isfinite(i2):
            assert im <= (i1 + i2) / 2 + 1e-9


def test_markov_unsupported_operations():
    m = noise.MarkovGaussianAR1(0.5, 1.0)
    with pytest.raises(UnsupportedOperation):
        m.rate_function(1.0)
    with pytest.raises(UnsupportedOperation):
        m.stun_level_log_volume(4, 2.0)


def test_colored_rejects_bad_spectrum():
    with pytest.raises(ModelError):
        noise.ColoredGaussian(lambda b: -1.0 + 0 * b, max_dim=4)


def test_colored_dimension_limit(rng):
    m = noise.colored_ar1(0.5, 1.0, max_dim=8)
    with pytest.raises((ModelError, ValueError)):
        m.sample(9, rng)


def test_colored_log_density_matches_scipy(rng):
    from scipy.linalg import toeplitz
    from scipy.stats import multivariate_normal

    a, n = 0.4, 6
    m = noise.colored_ar1(a, 1.0, max_dim=n)
    cov = toeplitz(a ** np.arange(n) / (1 - a ** 2))
    x = rng.normal(size=n)
    assert m.log_density(x) == pytest.approx(multivariate_normal(np.zeros(n), cov).logpdf(x), abs=1e-8)
    assert noise.MarkovGaussianAR1(a, 1.0).log_density(x) == \
        pytest.approx(multivariate_normal(np.zeros(n), cov).logpdf(x), abs=1e-10)


def test_from_config():
    assert noise.from_config({"kind": "wgn", "sigma": 2.0}) == noise.WhiteGaussian(2.0)
    assert isinstance(noise.from_config({"kind": "cgn-ar1", "a": 0.2}), noise.ColoredGaussian)
    with pytest.raises(ModelError):
        noise.from_config({"kind": "pink"})
