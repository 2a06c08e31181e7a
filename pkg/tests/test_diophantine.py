import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kslab import diophantine as dio
from kslab.errors import PrecisionError, ValidationError, OutOfRangeError

fractions01 = st.fractions(min_value=Fraction(1, 10**6), max_value=Fraction(10**6 - 1, 10**6)).filter(lambda f: 0 < f < 1)


def test_golden_denominators_are_fibonacci():
    c = dio.continued_fraction(dio.GOLDEN, 20)
    fib = [1, 1]
    while len(fib) < 21:
        fib.append(fib[-1] + fib[-2])
    assert list(c.q) == fib
    assert set(c.a[1:]) == {1}


def test_pi_minus_3_known_expansion():
    c = dio.continued_fraction(dio.PI_MINUS_3, 6)
    assert list(c.a) == [0, 7, 15, 1, 292, 1, 1]
    assert list(c.q) == [1, 7, 106, 113, 33102, 33215, 66317]


def test_rational_terminates():
    c = dio.continued_fraction(Fraction(5, 7), 10)
    assert c.terminated
    assert c.rows() == [(0, 0, 0, 1), (1, 1, 1, 1), (2, 2, 2, 3), (3, 2, 5, 7)] or c.entries[-1][1:] == (5, 7)


@given(fractions01)
def test_recurrence_and_determinant(x):
    c = dio.continued_fraction(x, 60)
    for k in range(1, c.K + 1):
        assert c.p[k] * c.q[k - 1] - c.p[k - 1] * c.q[k] == (-1) ** (k + 1)
    assert Fraction(c.p[-1], c.q[-1]) == x


@given(fractions01)
def test_convergents_alternate_around_alpha(x):
    c = dio.continued_fraction(x, 60)
    for k in range(c.K):
        err = Fraction(c.p[k], c.q[k]) - x
        assert err == 0 or (err > 0) == (k % 2 == 1)
        assert abs(err) <= Fraction(1, c.q[k] * c.q[k + 1])


def test_floats_rejected():
    with pytest.raises(ValidationError):
        dio.continued_fraction(0.618, 5)


def test_short_decimals_rejected():
    with pytest.raises(ValidationError):
        dio.continued_fraction("0.6180339887", 5)


def test_precision_limit_reported():
    digits = "0.14159265358979323846264338327950288419716939937510"
    with pytest.raises(PrecisionError) as exc:
        dio.continued_fraction(digits, 80)
    k = exc.value.last_safe_k
    assert k >= 30
    c = dio.continued_fraction(digits, k)
    assert c.K == k


def test_from_rows_checks_recurrence():
    good = [(0, 0, 0, 1), (1, 2, 1, 2), (2, 3, 3, 7)]
    c = dio.from_rows(good)
    assert c.q[-1] == 7
    with pytest.raises(ValidationError):
        dio.from_rows([(0, 0, 0, 1), (1, 2, 1, 3)])


def test_circle_distance():
    assert np.allclose(dio.circle_distance(np.array([0.1, 0.9, 1.5, -0.2])), [0.1, 0.1, 0.5, 0.2])


@pytest.mark.parametrize("alpha", [dio.GOLDEN, dio.PI_MINUS_3])
def test_gap_bound_through_k12(alpha):
    c = dio.continued_fraction(alpha, 14)
    reps = dio.gap_profile(c, 12)
    assert all(r.holds for r in reps)
    assert all(r.min_gap >= r.bound for r in reps)


@pytest.mark.parametrize("alpha", [dio.GOLDEN, dio.PI_MINUS_3])
def test_gap_profile_matches_pairwise_oracle(alpha):
    c = dio.continued_fraction(alpha, 8)
    for r in dio.gap_profile(c, 6):
        if r.n_max > 3000:
            continue
        brute = dio.pairwise_min_gap(float(c.alpha), r.n_max)
        assert float(r.min_gap) == pytest.approx(brute, rel=1e-9)


def test_gap_check_single_level():
    c = dio.continued_fraction(dio.GOLDEN, 10)
    g, ok = dio.gap_check(c, 5)
    assert ok and g > 0


def test_condkappa_golden_converges_with_enough_terms():
    c = dio.continued_fraction(dio.GOLDEN, 45)
    assert dio.condkappa_partial(c, 1.0, 0.4, 40).converged
    assert np.all(np.diff(dio.condkappa_partial(c, 1.0, 0.4, 40).sums) >= 0)


def test_condkappa_needs_represented_levels():
    c = dio.continued_fraction(dio.GOLDEN, 10)
    with pytest.raises(OutOfRangeError):
        dio.condkappa_partial(c, 1.0, 0.4, 10)


def test_constant_scale_series_closed_form():
    a, d, lam, N = 0.5, 1.0, 1.0, 300
    ps = dio.summability_partial("thm-bs", {"a": a, "d": d, "lam": lam}, N)
    r = math.exp(-d * min(a * a, lam))
    closed = a**-0.5 * (1 + 4 * (1 - r ** (N // 2)) / (1 - r))
    assert ps.sums[-1] == pytest.approx(closed, rel=1e-12)


@pytest.mark.parametrize("exponent,converges", [(0.2, True), (0.25, True), (1.0, False)])
def test_power_law_scales(exponent, converges):
    ps = dio.summability_partial("thm-bs", {"a": dio.power_rule(1.0, exponent), "d": 1.0, "lam": 1.0}, 20_000)
    assert ps.converged == converges


def test_block_sums_track_reference_shape():
    c = dio.continued_fraction(dio.GOLDEN, 30)
    for k, s, ref in dio.block_square_sums(c, 0.4, 28):
        if k >= 3:
            assert ref / 4 <= s <= 4 * ref


def test_block_level_definition():
    c = dio.continued_fraction(dio.GOLDEN, 20)
    n = np.arange(1, 500)
    k = dio.block_level(c, n)
    q = np.array(c.q)
    assert np.all(q[k] <= 2 * n) and np.all(2 * n < q[k + 1])
