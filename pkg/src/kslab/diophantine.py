"""Continued fractions, orbit gaps on the circle, and the series checkers.

Convention: ``a_0 = floor(alpha) = 0`` for alpha in (0, 1), ``p_0/q_0 = 0/1``,
``p_{-1}/q_{-1} = 1/0``.  For the golden mean this gives q = 1, 1, 2, 3, 5, ...

Partial-sum checkers return a ``PartialSums`` whose ``converged`` flag is a
heuristic (last term / partial sum < ``CONVERGENCE_RTOL``); nothing here decides
convergence of an infinite series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import OutOfRangeError, PrecisionError, ValidationError

CONVERGENCE_RTOL = 1e-12
MIN_DECIMAL_DIGITS = 50

# 60-digit decimal frequencies used by the default configs
GOLDEN = "0.618033988749894848204586834365638117720309179805762862135448"
PI_MINUS_3 = "0.141592653589793238462643383279502884197169399375105820974944"


# --- continued fractions --------------------------------------------------


@dataclass(frozen=True)
class Convergents:
    alpha: Fraction  # exact value, or midpoint of the decimal input interval
    entries: tuple  # ((a_k, p_k, q_k), ...) for k = 0 .. K
    terminated: bool = False  # alpha is rational and the expansion is complete
    radius: Fraction = Fraction(0)  # half-width of the input interval

    @property
    def K(self) -> int:
        return len(self.entries) - 1

    @property
    def a(self) -> list[int]:
        return [e[0] for e in self.entries]

    @property
    def p(self) -> list[int]:
        return [e[1] for e in self.entries]

    @property
    def q(self) -> list[int]:
        return [e[2] for e in self.entries]

    def rows(self):
        return [(k, a, p, q) for k, (a, p, q) in enumerate(self.entries)]


def _partial_quotients(x: Fraction, limit: int) -> tuple[list[int], bool]:
    out = []
    num, den = x.numerator, x.denominator
    while len(out) < limit:
        a, r = divmod(num, den)
        out.append(a)
        if r == 0:
            return out, True
        num, den = den, r
    return out, False


def _build(quotients) -> tuple:
    entries = []
    p2, q2, p1, q1 = 0, 1, 1, 0  # (p_{k-2}, q_{k-2}), (p_{k-1}, q_{k-1})
    for a in quotients:
        p, q = a * p1 + p2, a * q1 + q2
        entries.append((a, p, q))
        p2, q2, p1, q1 = p1, q1, p, q
    return tuple(entries)


def parse_alpha(alpha) -> tuple[Fraction, Fraction]:
    """``(value, radius)``: exact rationals have radius 0; a decimal with D
    fractional digits is taken to be known to within one unit of its last digit."""
    if isinstance(alpha, Fraction):
        return alpha, Fraction(0)
    if isinstance(alpha, tuple) and len(alpha) == 2:
        return Fraction(int(alpha[0]), int(alpha[1])), Fraction(0)
    if isinstance(alpha, float):
        raise ValidationError("pass frequencies as exact rationals or decimal strings, not floats")
    text = str(alpha).strip()
    if "/" in text:
        return Fraction(text), Fraction(0)
    dec = Decimal(text)
    if not dec.is_finite():
        raise ValidationError(f"bad frequency {alpha!r}")
    exp = dec.as_tuple().exponent
    digits = max(-exp, 0)
    if len(dec.as_tuple().digits) < MIN_DECIMAL_DIGITS:
        raise ValidationError(
            f"decimal frequency needs >= {MIN_DECIMAL_DIGITS} significant digits, got {len(dec.as_tuple().digits)}"
        )
    return Fraction(dec), Fraction(1, 10**digits)


def continued_fraction(alpha, k_max: int) -> Convergents:
    """Exact convergents ``k = 0 .. k_max`` of alpha in (0, 1).

    For decimal input both ends of the uncertainty interval are expanded and
    only the common prefix of partial quotients is trusted.
    """
    value, radius = parse_alpha(alpha)
    if not 0 < value < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {float(value)}")
    need = k_max + 1
    if radius == 0:
        quotients, done = _partial_quotients(value, need)
        return Convergents(value, _build(quotients), done, radius)
    lo, _ = _partial_quotients(value - radius, need + 1)
    hi, _ = _partial_quotients(value + radius, need + 1)
    common = []
    for x, y in zip(lo, hi):
        if x != y:
            break
        common.append(x)
    # the last shared quotient of a truncated expansion is not yet certain
    safe = common[: max(len(common) - 1, 0)] if len(common) < min(len(lo), len(hi)) else common
    if len(safe) < need:
        raise PrecisionError(
            f"input precision supports only k <= {len(safe) - 1} (requested {k_max})",
            last_safe_k=len(safe) - 1,
        )
    return Convergents(value, _build(safe[:need]), False, radius)


def from_rows(rows) -> Convergents:
    """Synthetic or imported table ``(k, a_k, p_k, q_k)``; recurrences are checked."""
    rows = sorted((int(k), int(a), int(p), int(q)) for k, a, p, q in rows)
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ValidationError("table must list k = 0, 1, 2, ... without gaps")
    entries = _build([r[1] for r in rows])
    for (k, a, p, q), (_, pe, qe) in zip(rows, entries):
        if (p, q) != (pe, qe):
            raise ValidationError(f"row k={k}: (p, q) = ({p}, {q}) breaks the recurrence, expected ({pe}, {qe})")
    alpha = Fraction(entries[-1][1], entries[-1][2])
    return Convergents(alpha, entries, False, Fraction(0))


def circle_distance(x):
    x = np.asarray(x, dtype=float) % 1.0
    return np.minimum(x, 1.0 - x)


# --- orbit gaps -----------------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    k: int
    n_max: int  # orbit indices |n| <= n_max, i.e. |2n| < q_{k+1}
    min_gap: float
    argmin: int  # difference n1 - n2 attaining the minimum
    bound: float  # 1 / (q_k + q_{k+1})
    half: float  # 1 / (2 q_{k+1})
    holds: bool
    chain: bool  # 1/(2 q_{k+1}) < 1/(q_k + q_{k+1}), checked in integers


def _exact_gap(alpha: Fraction, d: int) -> Fraction:
    f = (d * alpha) % 1
    return min(f, 1 - f)


def gap_profile(c: Convergents, k_max: int, chunk: int = 1 << 20) -> list[GapReport]:
    """Gap reports for ``k = 0 .. k_max`` in one pass over differences.

    Points ``z_n = n alpha mod 1`` with ``|n| <= M`` have pairwise differences
    ``d = 1 .. 2M``, so the minimal distance is ``min_d ||d alpha||``.  The scan
    uses 64-bit fixed point; candidates within the rounding bound of the running
    minimum are re-evaluated in exact rational arithmetic.
    """
    if k_max + 1 > c.K:
        raise OutOfRangeError(f"k + 1 = {k_max + 1} exceeds represented K = {c.K}")
    q = c.q
    limits = [2 * ((q[k + 1] - 1) // 2) for k in range(k_max + 1)]
    d_top = max(limits)
    scale = 1 << 64
    A = (c.alpha.numerator * scale) // c.alpha.denominator
    a64 = np.uint64(A % scale)
    best_d = np.zeros(d_top + 1, dtype=np.int64)
    best_v = np.full(d_top + 1, np.inf)
    run_v, run_d = np.inf, 0
    for start in range(1, d_top + 1, chunk):
        d = np.arange(start, min(start + chunk, d_top + 1), dtype=np.uint64)
        with np.errstate(over="ignore"):
            frac = (d * a64).astype(float) / float(scale)
        dist = np.minimum(frac, 1.0 - frac)
        cm = np.minimum.accumulate(dist)
        # argmin of the running minimum inside this chunk
        arg = np.maximum.accumulate(np.where(dist == cm, np.arange(len(d)), 0))
        cd = d[arg].astype(np.int64)
        better = cm < run_v
        best_v[start : start + len(d)] = np.where(better, cm, run_v)
        best_d[start : start + len(d)] = np.where(better, cd, run_d)
        run_v, run_d = best_v[start + len(d) - 1], best_d[start + len(d) - 1]
    reports = []
    for k in range(k_max + 1):
        D = limits[k]
        bound = Fraction(1, q[k] + q[k + 1])
        half = Fraction(1, 2 * q[k + 1])
        chain = 2 * q[k + 1] > q[k] + q[k + 1]
        if D == 0:
            reports.append(GapReport(k, 0, math.inf, 0, float(bound), float(half), True, chain))
            continue
        err = (D + 2) / scale + 4e-16
        cand = [int(best_d[D])]
        # every d whose fixed-point value is within err of the minimum is a candidate
        lo_v = best_v[D]
        for start in range(1, D + 1, chunk):
            d = np.arange(start, min(start + chunk, D + 1), dtype=np.uint64)
            with np.errstate(over="ignore"):
                frac = (d * a64).astype(float) / float(scale)
            dist = np.minimum(frac, 1.0 - frac)
            cand.extend(int(x) for x in d[dist <= lo_v + 2 * err])
        exact = min((_exact_gap(c.alpha, dd), dd) for dd in set(cand))
        # for decimal input the gap of the true alpha may differ by at most D * radius
        holds = exact[0] - D * c.radius > bound
        reports.append(
            GapReport(k, D // 2, float(exact[0]), exact[1], float(bound), float(half), bool(holds), chain)
        )
    return reports


def gap_check(c: Convergents, k: int) -> tuple[float, bool]:
    r = gap_profile(c, k)[k]
    return r.min_gap, r.holds


def pairwise_min_gap(alpha: float, n_max: int) -> float:
    """Literal O(n^2) minimum over distinct orbit indices in [-n_max, n_max]."""
    n = np.arange(-n_max, n_max + 1)
    z = (n * alpha) % 1.0
    diff = circle_distance(z[:, None] - z[None, :])
    np.fill_diagonal(diff, np.inf)
    return float(diff.min())


# --- series ---------------------------------------------------------------


@dataclass(frozen=True)
class PartialSums:
    terms: np.ndarray
    sums: np.ndarray

    @property
    def converged(self) -> bool:
        """Heuristic: the last increment is negligible relative to the sum."""
        s = self.sums[-1]
        return bool(s > 0 and np.isfinite(s) and self.terms[-1] / s < CONVERGENCE_RTOL)


def _partial(terms) -> PartialSums:
    terms = np.asarray(terms, dtype=float)
    sums = np.array([math.fsum(terms[: i + 1]) for i in range(len(terms))]) if len(terms) < 64 else _fsum_prefix(terms)
    return PartialSums(terms, sums)


def _fsum_prefix(terms):
    # Neumaier running sum: each prefix is compensated, order fixed
    out = np.empty(len(terms))
    s = 0.0
    comp = 0.0
    for i, t in enumerate(terms.tolist()):
        u = s + t
        if abs(s) >= abs(t):
            comp += (s - u) + t
        else:
            comp += (t - u) + s
        s = u
        out[i] = s + comp
    return out


def condkappa_partial(c: Convergents, kappa: float, gammatilde: float, K: int) -> PartialSums:
    """Partial sums of ``sum_{k>=1} exp(-kappa q_k^{1-2g}) q_{k+1}^{g/2}``."""
    if not kappa > 0:
        raise ValidationError("kappa must be positive")
    if not 0 < gammatilde < 0.5:
        raise ValidationError("gammatilde must lie in (0, 1/2)")
    if K + 1 > c.K:
        raise OutOfRangeError(f"K + 1 = {K + 1} exceeds represented K = {c.K}")
    q = c.q
    terms = []
    for k in range(1, K + 1):
        log_t = -kappa * float(q[k]) ** (1 - 2 * gammatilde) + 0.5 * gammatilde * math.log(q[k + 1])
        terms.append(math.exp(log_t))
    return _partial(terms)


def as_sequence(rule) -> Callable:
    """Turn a constant, a callable ``n -> value`` or a table ``{n: value}`` into a
    vectorized function of integer arrays."""
    if callable(rule):
        return lambda n: np.asarray(rule(np.asarray(n)), dtype=float) * np.ones(np.shape(n))
    if isinstance(rule, dict):
        return lambda n: np.array([float(rule[int(i)]) for i in np.ravel(n)]).reshape(np.shape(n))
    value = float(rule)
    return lambda n: np.full(np.shape(n), value)


def power_rule(C: float, exponent: float):
    """``a_n = C (1 + |n|)^{-exponent}``."""
    return lambda n: C * (1.0 + np.abs(n)) ** (-exponent)


def _half_exponents(vals_pos, vals_neg, N, lam):
    """For n = 1..N: sum_{j=1}^{floor((n-1)/2)} min(v(2j)^2, v(2j-1)^2, lam) on each side."""
    out = []
    for v in (vals_pos, vals_neg):  # v[i] = value at signed site i (index 0 = site 0)
        j = np.arange(1, N // 2 + 1)
        pair = np.minimum(v[np.minimum(2 * j, N)] ** 2, v[2 * j - 1] ** 2)
        if lam is not None:
            pair = np.minimum(pair, lam)
        csum = np.concatenate([[0.0], np.cumsum(pair)])
        n = np.arange(1, N + 1)
        out.append(csum[(n - 1) // 2])
    return out


def _two_sided(lead_pos, lead_neg, lead0, expo_pos, expo_neg, d) -> PartialSums:
    """Partial sums over |n| <= N' for N' = 0..N of lead_n * exp(-d * expo_n)."""
    inc = lead_pos * np.exp(-d * expo_pos) + lead_neg * np.exp(-d * expo_neg)
    return _partial(np.concatenate([[lead0], inc]))


def summability_partial(kind: str, params: dict, N: int) -> PartialSums:
    """Exact partial sums (through |n| <= N) of the localization summability series.

    kinds and params:
      ``thm-bs``     scales ``a`` (rule), ``d``, ``lam``
      ``general``    ``eps`` (array over levels), ``partition``, ``d``
      ``condi``      ``eps``, ``partition``, ``d`` (one-sided, n >= 0)
      ``e111-e222``  scales ``a`` (rule), ``delta``
    """
    N = int(N)
    if N < 1:
        raise ValidationError("N must be >= 1")
    if kind == "thm-bs":
        a = as_sequence(params["a"])
        n = np.arange(0, N + 1)
        ap, an = a(n), a(-n)
        if np.any(ap <= 0) or np.any(an <= 0):
            raise ValidationError("scales must be positive")
        ep, en = _half_exponents(ap, an, N, float(params["lam"]))
        return _two_sided(ap[1:] ** -0.5, an[1:] ** -0.5, ap[0] ** -0.5, ep, en, float(params["d"]))
    if kind in ("general", "condi"):
        eps = np.asarray(params["eps"], dtype=float)
        part = params["partition"]
        n = np.arange(0, N + 1)
        lev_p = np.abs(part.m_of(n))
        lev_n = np.abs(part.m_of(-n))
        if max(lev_p.max(), lev_n.max()) >= len(eps):
            raise OutOfRangeError("partition levels exceed the supplied eps sequence")
        vp, vn = eps[lev_p], eps[lev_n]
        d = float(params["d"])
        if kind == "general":
            ep, en = _half_exponents(vp, vn, N, None)
            return _two_sided(vp[1:] ** -0.5, vn[1:] ** -0.5, vp[0] ** -0.5, ep, en, d)
        j = np.arange(1, N // 2 + 1)
        csum = np.concatenate([[0.0], np.cumsum(vp[np.minimum(2 * j, N)] ** 2)])
        expo = csum[np.maximum((n - 1) // 2, 0)]
        return _partial(vp ** -0.5 * np.exp(-d * expo))
    if kind == "e111-e222":
        a = as_sequence(params["a"])
        delta = float(params["delta"])
        n = np.arange(0, N + 1)
        ap, an = a(n), a(-n)
        if np.any(ap <= 0) or np.any(an <= 0):
            raise ValidationError("scales must be positive")
        # right: sum_{s=1}^n a_s^2 for n >= 1; left: sum_{s=-n}^{0} a_s^2 for n <= 0
        right = np.cumsum(ap[1:] ** 2)
        left = np.cumsum(an**2)
        t0 = an[0] ** -0.5 * math.exp(-delta * left[0])
        inc = ap[1:] ** -0.5 * np.exp(-delta * right) + an[1:] ** -0.5 * np.exp(-delta * left[1:])
        return _partial(np.concatenate([[t0], inc]))
    raise ValidationError(f"unknown series kind {kind!r}")


def block_level(c: Convergents, n) -> np.ndarray:
    """Largest ``k`` with ``q_k <= |2n|`` (``k = 0`` for ``n = 0``)."""
    q = np.array([float(x) for x in c.q])
    two_n = 2.0 * np.abs(np.asarray(n, dtype=float))
    k = np.searchsorted(q, two_n, side="right") - 1
    k = np.maximum(k, 0)
    if np.any(k + 1 > c.K):
        raise OutOfRangeError("orbit index beyond the represented convergents")
    return k


def qp_amplitudes(c: Convergents, gammatilde: float):
    """``a_n = (100 q_{k+1})^{-g}`` for ``|2n|`` in ``[q_k, q_{k+1})``."""
    q = np.array([float(x) for x in c.q])

    def rule(n):
        return (100.0 * q[block_level(c, n) + 1]) ** (-gammatilde)

    return rule


def block_square_sums(c: Convergents, gammatilde: float, K: int):
    """Per-block ``sum a_s^2`` over ``s >= 1`` with ``|2s|`` in ``[q_k, q_{k+1})``, and
    the reference shape ``100^{-2g} q_{k+1}^{1-2g} / 2``."""
    q = c.q
    out = []
    for k in range(K + 1):
        s_lo = max(1, -(-q[k] // 2))
        s_hi = (q[k + 1] - 1) // 2
        count = max(0, s_hi - s_lo + 1)
        a2 = (100.0 * q[k + 1]) ** (-2 * gammatilde)
        out.append((k, count * a2, 100.0 ** (-2 * gammatilde) * float(q[k + 1]) ** (1 - 2 * gammatilde) / 2))
    return out
