import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kslab import localization as loc
from kslab import potentials as pot
from kslab.errors import FitRangeError, ValidationError


def test_rho_diagonal_is_one():
    p = loc.rho_estimate(pot.KSSpec(), 8, 3, 60, 1)
    assert p.row(3)[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(p.mean <= 1.0 + 1e-12)


def test_block_size_does_not_change_result():
    a = loc.rho_estimate(pot.KSSpec(), 6, 0, 70, 5, block=50)
    b = loc.rho_estimate(pot.KSSpec(), 6, 0, 70, 5, block=7)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.stderr, b.stderr)


def test_workers_do_not_change_result():
    a = loc.rho_estimate(pot.KSSpec(), 6, 0, 120, 5, workers=1)
    b = loc.rho_estimate(pot.KSSpec(), 6, 0, 120, 5, workers=2)
    assert np.array_equal(a.mean, b.mean)


def test_rho_symmetric_for_symmetric_law():
    p = loc.rho_estimate(pot.KSSpec(), 5, 0, 4000, 2)
    assert np.allclose(p.mean, p.mean[::-1], atol=5 * p.stderr.max())


def test_rho_matches_direct_average():
    from kslab.rng import TRIAL, derive_seed
    from kslab.spectra import TridiagonalOperator, correlator, eigen

    p = loc.rho_estimate(pot.KSSpec(), 4, 1, 30, 8)
    direct = np.mean([
        correlator(eigen(TridiagonalOperator(pot.sample_ks_potential(pot.KSSpec(), 4, derive_seed(8, TRIAL, t)).values, -4)), -2, 1)
        for t in range(30)
    ])
    assert p.row(-2)[0] == pytest.approx(direct, rel=1e-12)


def test_validation():
    with pytest.raises(ValidationError):
        loc.rho_estimate(pot.KSSpec(), 4, 9, 10, 0)
    with pytest.raises(ValidationError):
        loc.rho_estimate(pot.KSSpec(), 4, 0, 1, 0)


def test_dynamical_bound_small():
    rep = loc.dynamical_check(pot.KSSpec(), 10, 5, np.linspace(0, 20, 41), 3)
    assert rep.max_violation <= 1e-10 and not rep.vacuous


def test_dynamical_empty_grid_is_vacuous():
    assert loc.dynamical_check(pot.KSSpec(), 4, 2, [], 0).vacuous


@given(st.floats(0.01, 2.0), st.floats(-3, 3))
@settings(max_examples=30)
def test_fit_recovers_exact_exponential(rate, c0):
    n = np.arange(-10, 11)
    mean = np.exp(c0 - rate * np.abs(n))
    p = loc.DecayProfile(10, 0, n, mean, np.zeros_like(mean), 1, 0, "", 0)
    f = loc.fit_rate(p, (2, 10))
    assert f.rate == pytest.approx(rate, rel=1e-9)
    assert f.r_squared == pytest.approx(1.0)


def test_fit_rejects_nonpositive():
    n = np.arange(-3, 4)
    p = loc.DecayProfile(3, 0, n, np.array([1, 1, 1, 1, 0.0, 1, 1]), np.zeros(7), 1, 0, "", 0)
    with pytest.raises(FitRangeError):
        loc.fit_rate(p, (0, 3))


def test_bound_monotone_for_constant_scale():
    params = loc.BoundParams(6.0, 1.0, 0.1, 1.0, 1.0, 1.0)
    b = loc.theoretical_bound(params, np.arange(1, 30))
    assert np.all(np.diff(b) <= 0)
    assert b[0] == pytest.approx(6.0)
    assert b[-1] == pytest.approx(6.0 * np.exp(-0.1 * 14))


def test_bound_hier_uses_levels():
    part = pot.Partition.symmetric([2, 7, 30])
    params = loc.BoundParams(6.0, 1.0, 0.1, 1.0, 1.0)
    b = loc.theoretical_bound_hier(params, [1.0, 0.5, 0.25], part, np.array([1, 5, 20]))
    assert b[0] > b[1] * 0 and np.all(np.isfinite(b))


def test_constant_profile_has_zero_rate():
    n = np.arange(-6, 7)
    p = loc.DecayProfile(6, 0, n, np.full(13, 0.3), np.zeros(13), 1, 0, "", 0)
    assert abs(loc.fit_rate(p, (1, 6)).rate) < 1e-12
