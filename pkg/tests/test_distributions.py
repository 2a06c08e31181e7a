import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from kslab import distributions as dist
from kslab.errors import ValidationError

scales = st.floats(0.05, 20.0)


def bump():
    xs = np.linspace(-1.0, 2.0, 7)
    ys = np.array([0.0, 0.5, 1.0, 0.2, 0.7, 0.3, 0.0])
    ys = ys / np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs))
    return dist.tabulated(xs, ys)


@pytest.mark.parametrize("make", [dist.uniform, bump])
def test_density_integrates_to_one(make):
    d = make()
    val, _ = integrate.quad(lambda x: float(dist.evaluate(d, x)), d.lo, d.hi, limit=200, points=np.linspace(d.lo, d.hi, 7)[1:-1])
    assert val == pytest.approx(1.0, abs=1e-10)


@given(scales)
def test_rescaled_mass_and_sup(a):
    d = dist.rescale(dist.uniform(), a)
    assert float(dist.cdf(d, d.hi)) == pytest.approx(1.0)
    assert d.sup_bound == pytest.approx(1.0 / a)


@given(st.floats(0.0, 1.0), scales)
def test_inverse_cdf_roundtrip(u, a):
    d = dist.rescale(bump(), a)
    x = dist.inverse_cdf(d, u)
    assert float(dist.cdf(d, x)) == pytest.approx(u, abs=1e-12)


def test_cdf_monotone_and_clipped():
    d = bump()
    x = np.linspace(-3, 4, 501)
    c = dist.cdf(d, x)
    assert np.all(np.diff(c) >= -1e-15)
    assert c[0] == 0.0 and c[-1] == pytest.approx(1.0)


def test_uniform_pieces_reconstruct_cdf():
    d = dist.rescale(bump(), 0.7)
    lo, hi, w = dist.uniform_pieces(d)
    x = np.linspace(d.lo - 0.1, d.hi + 0.1, 301)
    ramp = sum(wp * np.clip((x - s) / (t - s), 0, 1) for s, t, wp in zip(lo, hi, w))
    assert np.max(np.abs(ramp - dist.cdf(d, x))) < 0.05
    u = dist.rescale(dist.uniform(), 0.7)
    lo, hi, w = dist.uniform_pieces(u)
    ramp = sum(wp * np.clip((x - s) / (t - s), 0, 1) for s, t, wp in zip(lo, hi, w))
    assert np.max(np.abs(ramp - dist.cdf(u, x))) < 1e-14


def test_sampling_matches_cdf():
    rng = np.random.default_rng(1)
    d = bump()
    xs = dist.sample(d, rng, 20000)
    grid = np.linspace(d.lo, d.hi, 11)
    emp = np.searchsorted(np.sort(xs), grid) / xs.size
    assert np.max(np.abs(emp - dist.cdf(d, grid))) < 0.02


def test_fourier_sq_uniform_closed_form():
    k = np.array([0.3, 1.0, 5.0])
    exact = (np.sin(k / 2) / (k / 2)) ** 2
    assert np.allclose(dist.fourier_sq(dist.uniform(), k), exact, atol=1e-12)


def test_decay_constant_positive():
    assert dist.decay_constant(dist.uniform(), 1.0, 10.0) > 0


@pytest.mark.parametrize("xs,ys", [([0, 1], [1, -1]), ([1, 0], [1, 1]), ([0], [1])])
def test_bad_tables_rejected(xs, ys):
    with pytest.raises(ValidationError):
        dist.tabulated(np.array(xs, float), np.array(ys, float))


def test_nonpositive_scale_rejected():
    with pytest.raises(ValidationError):
        dist.rescale(dist.uniform(), 0.0)
