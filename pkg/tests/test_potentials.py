import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kslab import diophantine as dio
from kslab import potentials as pot
from kslab.errors import CoverageError, OrbitDegeneracyError, SpecViolationError, ValidationError

seeds = st.integers(0, 2**64 - 1)


# --- KS potentials -----------------------------------------------------------


@given(seeds)
def test_ks_window_independent(seed):
    spec = pot.KSSpec(functionals={3: pot.LinearFunctional({-2: 0.5, 1: -0.25})})
    big = pot.sample_ks_potential(spec, 10, seed)
    small = pot.sample_ks_potential(spec, 4, seed)
    assert np.array_equal(big.values[6:15], small.values)


@given(seeds)
def test_ks_functional_applied(seed):
    f = pot.LinearFunctional({0: 0.5, -1: 2.0})
    spec = pot.KSSpec(functionals={2: f})
    w = pot.sample_ks_potential(spec, 3, seed)
    plain = pot.sample_ks_potential(pot.KSSpec(), 3, seed)
    xi = plain.values
    assert w.at(2) == pytest.approx(xi[5] + 0.5 * xi[3] + 2.0 * xi[2])
    assert np.array_equal(np.delete(w.values, 5), np.delete(xi, 5))


def test_functional_must_look_inward():
    spec = pot.KSSpec(functionals={2: pot.LinearFunctional({2: 1.0})})
    with pytest.raises(SpecViolationError):
        pot.sample_ks_potential(spec, 3, 0)
    with pytest.raises(SpecViolationError):
        pot.sample_ks_potential(pot.KSSpec(functionals={0: pot.LinearFunctional({0: 1.0})}), 3, 0)


def test_plus_norm():
    assert pot.LinearFunctional({0: -1.5, 3: 2.0}).plus_norm == 3.5


def test_batch_sampler_matches_law():
    spec = pot.KSSpec(scale=0.5, background=1.0, functionals={1: pot.LinearFunctional({0: 1.0})})
    V, xi = pot.ks_batch(spec, 1, np.random.default_rng(0), 50000)
    assert np.allclose(V[:, 2], xi[:, 2] + 1.0 + xi[:, 1])
    assert 0.0 <= xi.min() and xi.max() <= 0.5
    assert V[:, 0].mean() == pytest.approx(1.25, abs=0.01)


def test_scales_must_be_positive():
    with pytest.raises(ValidationError):
        pot.sample_ks_potential(pot.KSSpec(scale=lambda n: n * 1.0), 2, 0)


# --- partitions --------------------------------------------------------------


def test_symmetric_partition_levels():
    p = pot.Partition.symmetric([2, 7, 20])
    n = np.arange(-20, 21)
    m = p.m_of(n)
    assert np.all(m[np.abs(n) <= 2] == 0)
    assert np.all(m[(n > 2) & (n <= 7)] == 1) and np.all(m[(n < -2) & (n >= -7)] == -1)
    assert np.array_equal(m, -m[::-1])


# --- limit-periodic construction ---------------------------------------------


@pytest.mark.parametrize("eps,gamma", [(0.1, 0.04), (1.0, 200.0), (2.0, 50.0)])
def test_sequences_properties(eps, gamma):
    s = pot.gen_sequences(eps, gamma, 3)
    assert math.fsum(s.eps) < eps
    assert all((2 * b + 1) % (2 * a + 1) == 0 and b > a for a, b in zip(s.ns, s.ns[1:]))
    for k in range(1, len(s.ns)):
        lhs = s.eps[k] ** -2.5 * math.exp(-gamma * s.ns[k - 1] * s.eps[k] ** 2)
        assert lhs < 2.0**-k


def test_sequences_known_values():
    assert pot.gen_sequences(0.1, 0.04, 3).ns == (1863715, 9318577, 46592887, 232964437)


@given(st.integers(-500, 500), st.integers(0, 40))
def test_periodic_copy_lands_in_base_block(n, nk):
    c = int(pot.periodic_copy(n, nk))
    assert -nk <= c <= nk and (c - n) % (2 * nk + 1) == 0


@given(seeds)
def test_lp_approximants_periodic_and_close(seed):
    lp = pot.limit_periodic_potential(1.0, 200.0, 400, 4, seed)
    assert lp.norm < 1.0
    for k, (p, w) in enumerate(lp.approximants):
        v = np.asarray(w.values)
        if p < len(v):
            assert np.array_equal(v[p:], v[:-p])
        assert np.max(np.abs(lp.lp - v)) <= lp.tail[k] + 1e-12


def test_lp_matches_generic_hierarchical_sampler():
    seq = pot.gen_sequences(1.0, 200.0, 4)
    spec = pot.lp_hier_spec(seq)
    lp = pot.limit_periodic_potential(1.0, 200.0, 300, 4, 9)
    w = pot.sample_hier_potential(spec, 300, 9)
    assert np.max(np.abs(lp.window.values - w.values)) < 1e-12


def test_lp_coverage():
    with pytest.raises(CoverageError):
        pot.limit_periodic_potential(1.0, 200.0, 10_000, 2, 0)


# --- quasi-periodic bumps ----------------------------------------------------


def test_qp_bumps_structure():
    q = pot.qp_bump_potential(dio.GOLDEN, "0.1", 1.0, 0.3, 60, 5)
    sites = np.arange(-60, 61)
    i, j = np.nonzero(q.coupling)
    assert np.all(np.abs(sites[j]) < np.abs(sites[i]))
    assert np.max(np.abs(q.window.values)) <= 1.0
    for (lo, hi), k in zip(q.blocks, range(len(q.blocks))):
        assert lo <= hi


def test_qp_rational_orbit_repeats():
    with pytest.raises(OrbitDegeneracyError):
        pot.qp_bump_potential(Fraction(1, 5), Fraction(0), 1.0, 0.3, 10, 0)


def test_greedy_blocks_amplitude_budget():
    eps, p = 1.0, 0.3
    blocks = pot.greedy_blocks(eps, p, 5000)
    right = [b for b in blocks if b[0] >= 0]
    for i, (lo, hi) in enumerate(right):
        assert (eps / 100) * (1 + lo) ** -p <= eps * 2.0 ** -(i + 2) + 1e-15


# --- Hoelder tents -----------------------------------------------------------


@given(st.floats(0, 1), st.floats(1e-4, 0.4), st.floats(0.05, 0.45))
def test_tent_shape(z, eps, g):
    assert pot.holder_tent(z, eps, g, z) == pytest.approx(eps**g)
    assert pot.holder_tent(z, eps, g, (z + 0.5) % 1) == 0.0 or eps >= 0.5


def test_holder_G_bounded_by_level_sum():
    c = dio.continued_fraction(dio.GOLDEN, 40)
    x = np.linspace(0, 1, 20001)
    G = pot.holder_G(c, 0.4, 1.0, x, 3000)
    assert G.max() <= pot.holder_sup_bound(c, 0.4)


@pytest.mark.parametrize("eps,p", [(1.0, 0.3), (0.5, 0.1), (2.0, 0.45)])
def test_one_per_block_sum_below_eps(eps, p):
    blocks = pot.greedy_blocks(eps, p, 20000)
    total = sum((eps / 100) * (1 + min(abs(lo), abs(hi)) if lo * hi > 0 else 1.0) ** -p for lo, hi in blocks)
    assert total < eps
