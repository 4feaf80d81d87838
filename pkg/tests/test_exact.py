import numpy as np
import pytest
from scipy.stats import norm

from ppchannel import exact, noise
from ppchannel.errors import ParameterError, UnsupportedOperation

WGN = noise.WhiteGaussian(1.0)


def _lam(model, n, alpha):
    return np.exp(n * (-model.entropy_rate() - np.log(alpha)))


@pytest.mark.parametrize("alpha", [1.1, 1.5, 2.0, 3.0])
@pytest.mark.parametrize("sigma", [1.0, 0.4])
def test_n2_closed_form(alpha, sigma):
    m = noise.WhiteGaussian(sigma)
    lam = _lam(m, 2, alpha)
    expected = np.log(1 - 1 / (1 + 2 * np.pi * lam * sigma ** 2))
    assert exact.poisson_mle_log_pe(m, 2, alpha).log_pe == pytest.approx(expected, abs=1e-10)


def test_pe_and_ps_complement():
    for n in (2, 10, 100):
        r = exact.poisson_mle_log_pe(WGN, n, 1.4)
        assert r.pe + r.ps == pytest.approx(1.0, abs=1e-12)


def test_pe_vanishes_for_large_alpha():
    assert exact.poisson_mle_log_pe(WGN, 10, 1e6).pe < 1e-30


def test_flat_colored_equals_wgn():
    m = noise.ColoredGaussian(lambda b: 1.0 + 0 * b, max_dim=16)
    a = exact.poisson_mle_log_pe(m, 10, 1.5).log_pe
    b = exact.poisson_mle_log_pe(WGN, 10, 1.5).log_pe
    assert a == pytest.approx(b, abs=1e-10)


def test_dichotomy():
    assert exact.poisson_mle_log_pe(WGN, 200, 0.8).pe > 0.99
    assert exact.poisson_mle_log_pe(WGN, 200, 2.0).pe < 0.01


def test_pe_increases_towards_capacity():
    pes = [exact.poisson_mle_log_pe(WGN, 20, a).log_pe for a in (3.0, 2.0, 1.5, 1.1)]
    assert np.all(np.diff(pes) > 0)


def test_quadrature_needs_gaussian_noise():
    for m in (noise.WhiteSymExp(1.0), noise.WhiteUniform(1.0)):
        with pytest.raises(UnsupportedOperation):
            exact.poisson_mle_log_pe(m, 20, 2.0)


def test_matern_bound_n400():
    r = exact.matern_mle_log_pe_bound(WGN, 400, 3.0, 0.01)
    assert -r.log_pe / 400 == pytest.approx(9 / 8, abs=0.05)


def test_matern_bound_monotone_in_alpha():
    vals = [exact.matern_mle_log_pe_bound(WGN, 50, a, 0.01).log_pe for a in (1.5, 2.0, 3.0)]
    assert vals[0] > vals[1] > vals[2]


def test_matern_symexp_bound_finite():
    r = exact.matern_mle_log_pe_bound(noise.WhiteSymExp(1.0), 50, 3.0, 0.01)
    assert np.isfinite(r.log_pe) and r.log_pe < 0


def test_typicality_uniform_closed_form():
    u = noise.WhiteUniform(1.0)
    n, alpha = 10, 2.0
    rate = -u.entropy_rate() - np.log(alpha)
    r = exact.typicality_log_pe_bound(u, n, rate, 0.1)
    assert r.pe == pytest.approx(-np.expm1(-alpha ** -n), rel=1e-10)
    assert r.pe == pytest.approx(9.761e-4, rel=1e-3)


def test_typicality_no_decay_above_capacity():
    rate = -WGN.entropy_rate() + 0.1
    pes = [exact.typicality_log_pe_bound(WGN, n, rate, 0.05).pe for n in (10, 50, 200)]
    assert pes[-1] > 0.99 and pes[-1] >= pes[0]


def test_typicality_bound_dominates_exact():
    rate = -WGN.entropy_rate() - np.log(2.0)
    for n in (20, 100):
        assert exact.typicality_log_pe_bound(WGN, n, rate, 0.2).log_pe >= \
            exact.poisson_mle_log_pe(WGN, n, 2.0).log_pe


def test_mismatched_bound_matched_case():
    est = exact.mismatched_pe_bound(WGN, WGN, 8, 1.5, 100_000, seed=3)
    q = exact.poisson_mle_log_pe(WGN, 8, 1.5).pe
    assert est.within(q, 3)


def test_mismatched_bound_decreases_with_quieter_noise():
    loud = exact.mismatched_pe_bound(WGN, WGN, 8, 1.5, 20_000, seed=4).mean
    quiet = exact.mismatched_pe_bound(WGN, noise.WhiteGaussian(0.7), 8, 1.5, 20_000, seed=4).mean
    assert quiet < loud


def test_mismatched_bound_needs_trials():
    with pytest.raises(ParameterError):
        exact.mismatched_pe_bound(WGN, WGN, 8, 1.5, 0)


def test_grid_examples():
    assert exact.grid_log_ps(1, 0.0, 1.0) == pytest.approx(np.log(norm.cdf(0.5) - norm.cdf(-0.5)))
    assert np.exp(exact.grid_log_ps(1, 0.0, 1.0)) == pytest.approx(0.38292, abs=1e-5)
    per = [exact.grid_log_ps(n, 0.2, 0.7) / n for n in (1, 5, 30)]
    assert np.allclose(per, per[0])
    ps = [exact.grid_log_ps(n, 0.2, 0.7) for n in (1, 2, 3, 10)]
    assert np.all(np.diff(ps) < 0)


def test_dps_dlambda_examples():
    for lam in (0.0, 0.05, 0.7):
        assert exact.dps_dlambda(2, lam, 1.0) == pytest.approx(-2 * np.pi / (1 + 2 * np.pi * lam) ** 2,
                                                               rel=1e-9)
    assert exact.dps_dlambda(7, 0.3, 1.2) < 0


def test_dps_dlambda_matches_finite_difference():
    n, alpha = 6, 1.4
    lam = _lam(WGN, n, alpha)

    def ps(lam_):
        a = np.exp(-WGN.entropy_rate() - np.log(lam_) / n)
        return exact.poisson_mle_log_pe(WGN, n, a).ps

    h = 1e-3 * lam
    fd = (8 * (ps(lam + h) - ps(lam - h)) - (ps(lam + 2 * h) - ps(lam - 2 * h))) / (12 * h)
    assert fd == pytest.approx(exact.dps_dlambda(n, lam, 1.0), rel=1e-6)


def test_coverage_limits():
    delta = 0.1
    thr = 2 * np.sqrt(1 + 2 * delta)
    hi = [exact.coverage_prob_typ_in_voronoi(n, thr + 0.3, delta, 1.0) for n in (10, 100, 400)]
    lo = [exact.coverage_prob_typ_in_voronoi(n, thr - 0.3, delta, 1.0) for n in (10, 100, 400)]
    assert hi[-1] > 0.99 and hi[-1] >= hi[0]
    assert lo[-1] < 0.01 and lo[-1] <= lo[0]
    assert exact.coverage_prob_typ_in_voronoi(5, 1e12, delta, 1.0) == pytest.approx(1.0)
