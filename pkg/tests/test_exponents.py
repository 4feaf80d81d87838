import numpy as np
import pytest

from ppchannel import exponents as ex, noise
from ppchannel.errors import ParameterError

WGN = noise.WhiteGaussian(1.0)
SYM = noise.WhiteSymExp(1.0)
UNI = noise.WhiteUniform(1.0)


def test_volume_exponent_examples():
    for m in (WGN, SYM, UNI, noise.colored_ar1(0.3, 1.0, max_dim=16)):
        assert ex.volume_exponent_J(m, m.entropy_rate()) == pytest.approx(m.entropy_rate(), abs=1e-9)
    assert ex.volume_exponent_J(WGN, 0.5 * np.log(2 * np.pi) - 0.01) == -np.inf
    assert ex.volume_exponent_J(UNI, UNI.entropy_rate() + 0.3) == pytest.approx(UNI.entropy_rate())


@pytest.mark.parametrize("model, alpha, expected", [
    (WGN, 1.0, 0.0),
    (WGN, np.sqrt(2), 0.5 - 0.5 * np.log(2)),
    (SYM, 2.0, 1 - np.log(2)),
    (UNI, 3.0, np.log(3.0)),
])
def test_poisson_exponent_examples(model, alpha, expected):
    assert ex.poisson_exponent(model, alpha).exponent == pytest.approx(expected, abs=1e-9)


def test_poisson_exponent_near_one():
    assert ex.poisson_exponent(WGN, 1.0 + 1e-6).exponent < 1e-6


@pytest.mark.parametrize("model, alpha, expected", [
    (WGN, 3.0, 9 / 8),
    (SYM, 4.0, 1.0),
    (SYM, 8.0, 3 - np.log(2)),
])
def test_matern_exponent_examples(model, alpha, expected):
    assert ex.matern_exponent(model, alpha).exponent == pytest.approx(expected, abs=1e-6)


def test_matern_minimizer_wgn():
    assert ex.matern_exponent(WGN, 3.0).minimizer == pytest.approx(np.sqrt(3.25), abs=1e-4)


@pytest.mark.parametrize("alpha, expected", [(1.0, 0.0), (2.0, 0.5), (4.0, 2.0)])
def test_poltyrev_examples(alpha, expected):
    assert ex.poltyrev_exponent(alpha).exponent == pytest.approx(expected, abs=1e-12)


def test_exponents_need_alpha_at_least_one():
    with pytest.raises(ParameterError):
        ex.poisson_exponent(WGN, 0.9)
    with pytest.raises(ParameterError):
        ex.poltyrev_exponent(0.5)


@pytest.mark.parametrize("table", [*ex.POISSON_BRANCHES.values(), *ex.MATERN_BRANCHES.values(),
                                   ex.POLTYREV_BRANCHES])
def test_branch_continuity(table):
    for _, gap in ex.branch_gaps(table):
        assert gap < 1e-12


@pytest.mark.parametrize("alpha", [1.05, 1.2, np.sqrt(2), 1.8, 2.5, 4.0])
@pytest.mark.parametrize("model", [WGN, SYM, noise.WhiteGaussian(2.5), noise.WhiteSymExp(0.3)])
def test_numeric_matches_closed_form(model, alpha):
    num = ex.poisson_exponent(model, alpha, check=False).exponent
    assert num == pytest.approx(ex.poisson_closed_form(model, alpha)[0], abs=1e-6)


@pytest.mark.parametrize("alpha", [1.3, 2.0, 3.0])
def test_colored_exponent_equals_wgn(alpha):
    cgn = noise.colored_ar1(0.5, 1.0, max_dim=16)
    assert ex.poisson_exponent(cgn, alpha).exponent == \
        pytest.approx(ex.poisson_exponent(WGN, alpha).exponent, abs=1e-6)


def test_exponent_curve_increasing():
    alphas = np.linspace(1.05, 4, 25)
    for fn in (ex.poisson_exponent, ex.matern_exponent):
        vals = [fn(WGN, a).exponent for a in alphas]
        assert np.all(np.diff(vals) > 0)


def test_matern_beats_poisson_at_large_alpha():
    for a in (2.5, 3.0, 5.0):
        assert ex.matern_exponent(WGN, a).exponent > ex.poisson_exponent(WGN, a).exponent


def test_capacity_bounds():
    lo, hi = ex.shannon_capacity_bounds(WGN, 3.0)
    assert lo == pytest.approx(0.5 * np.log(3)) and hi == pytest.approx(0.5 * np.log(4))
    for p in (0.1, 1.0, 1e3):
        lo, hi = ex.shannon_capacity_bounds(SYM, p)
        assert lo < hi
        assert hi - lo == pytest.approx(0.5 * np.log1p(SYM.variance() / p))


def test_shannon_curve():
    curve = ex.shannon_exponent_curve(WGN, 10.0, [1.0, 1.5, 2.0, 4.0])
    assert curve.rows[0].rate == pytest.approx(0.5 * np.log(101), abs=1e-5)
    assert curve.rows[0].exponent_lower_bound == pytest.approx(0.0, abs=1e-12)
    rates = [r.rate for r in curve.rows]
    exps = [r.exponent_lower_bound for r in curve.rows]
    assert np.all(np.diff(rates) < 0) and np.all(np.diff(exps) > 0)


def test_shannon_curve_drops_nonpositive_rates(caplog):
    curve = ex.shannon_exponent_curve(WGN, 10.0, [1.5, 50.0])
    assert curve.dropped == 1 and len(curve.rows) == 1
    assert "dropped" in caplog.text
