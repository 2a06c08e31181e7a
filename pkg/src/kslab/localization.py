"""Monte Carlo eigenfunction correlators, the dynamical bound, decay fits and
the theoretical bound evaluator.

Trials are processed in fixed blocks of ``BLOCK`` consecutive indices; the
potential of trial ``t`` is drawn from ``derive_seed(seed, TRIAL, t)``, so the
result of a block does not depend on which worker ran it, and reductions run
over trials in index order.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import potentials as pot
from .diophantine import as_sequence
from .errors import FitRangeError, NumericalFailure, ValidationError
from .rng import RETRY, TRIAL, check_seed, derive_seed
from .spectra import ORTHO_TOL, RESIDUAL_RTOL, eigen_batch

BLOCK = 50
MAX_RETRIES = 5


@dataclass(frozen=True, eq=False)
class DecayProfile:
    L: int
    m: int
    sites: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    trials: int
    failures: int
    digest: str
    seed: int
    bound: np.ndarray | None = field(default=None, repr=False)

    def row(self, n: int) -> tuple[float, float]:
        i = int(n) - int(self.sites[0])
        return float(self.mean[i]), float(self.stderr[i])


def sampler(spec) -> Callable[[int, int], np.ndarray]:
    """``(L, seed) -> potential values on [-L, L]`` for any supported spec."""
    if isinstance(spec, pot.KSSpec):
        return lambda L, s: pot.sample_ks_potential(spec, L, s).values
    if isinstance(spec, pot.HierSpec):
        return lambda L, s: pot.sample_hier_potential(spec, L, s).values
    if callable(spec):
        return lambda L, s: _values(spec(L, s))
    raise ValidationError(f"unsupported spec {type(spec).__name__}")


def _values(w):
    return np.asarray(w.values if hasattr(w, "values") else w, dtype=float)


def spec_digest(spec, L: int) -> str:
    return hashlib.sha256(f"{type(spec).__name__}|{spec!r}|L={L}".encode()).hexdigest()[:16]


def _ok(res, ortho, d):
    bound = np.max(np.abs(d), axis=1)
    return (res <= RESIDUAL_RTOL * (1 + bound)) & (ortho <= ORTHO_TOL) & np.isfinite(res)


def _block_rows(args):
    """Correlator rows for trials ``start .. stop-1``; failed trials are redrawn
    from retry substreams and reported."""
    spec, L, m_idx, seed, start, stop = args
    draw = sampler(spec)
    diags = np.array([draw(L, derive_seed(seed, TRIAL, t)) for t in range(start, stop)])
    _, vecs, res, ortho = eigen_batch(diags, check=False)
    good = _ok(res, ortho, diags)
    failures = int((~good).sum())
    for i in np.flatnonzero(~good):
        t = start + int(i)
        for attempt in range(1, MAX_RETRIES + 1):
            d = draw(L, derive_seed(seed, RETRY, t, attempt))[None, :]
            _, v, r, o = eigen_batch(d, check=False)
            if _ok(r, o, d)[0]:
                vecs[i] = v[0]
                break
            failures += 1
        else:
            raise NumericalFailure("trial failed after retries", {"trial": t, "retries": MAX_RETRIES})
    a = np.abs(vecs)  # (b, n, k)
    rows = (a * a[:, m_idx : m_idx + 1, :]).sum(axis=2)
    return rows, failures


def _reduce(rows):
    """Mean and standard error per column with compensated sums in trial order."""
    T = rows.shape[0]
    mean = np.array([math.fsum(col) / T for col in rows.T])
    dev = rows - mean[None, :]
    var = np.array([math.fsum(col * col) / (T - 1) for col in dev.T])
    return mean, np.sqrt(var / T)


def rho_estimate(spec, L: int, m: int, trials: int, seed: int, workers: int = 1, block: int = BLOCK) -> DecayProfile:
    """``rho_L(n, m)`` for every ``n`` in ``[-L, L]`` by Monte Carlo."""
    if trials < 2:
        raise ValidationError("need at least 2 trials")
    if not -L <= m <= L:
        raise ValidationError(f"m = {m} outside [-{L}, {L}]")
    seed = check_seed(seed)
    jobs = [(spec, L, m + L, seed, s, min(s + block, trials)) for s in range(0, trials, block)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(_block_rows, jobs))
    else:
        out = [_block_rows(j) for j in jobs]
    rows = np.concatenate([o[0] for o in out])
    failures = sum(o[1] for o in out)
    mean, se = _reduce(rows)
    return DecayProfile(L, m, np.arange(-L, L + 1), mean, se, trials, failures, spec_digest(spec, L), seed)


# --- dynamical bound ---------------------------------------------------------


@dataclass(frozen=True)
class DynamicalReport:
    max_violation: float  # max of |amplitude| - correlator; -inf if vacuous
    where: tuple  # (trial, n, m, t) of the maximum
    vacuous: bool
    trials: int
    t_points: int


def dynamical_check(spec, L: int, trials: int, t_grid, seed: int, chunk: int = 128) -> DynamicalReport:
    """Check ``|<d_n, exp(-itH) d_m>| <= sum_k |phi_k(n)||phi_k(m)|`` on a t-grid."""
    seed = check_seed(seed)
    t_grid = np.asarray(t_grid, dtype=float).ravel()
    if t_grid.size == 0:
        return DynamicalReport(-math.inf, (), True, trials, 0)
    draw = sampler(spec)
    best, where = -math.inf, ()
    for t in range(trials):
        d = draw(L, derive_seed(seed, TRIAL, t))
        lam, vecs, _, _ = eigen_batch(d[None, :])
        lam, v = lam[0], vecs[0]
        a = np.abs(v)
        rho = a @ a.T
        for s in range(0, len(t_grid), chunk):
            ts = t_grid[s : s + chunk]
            c = np.cos(np.multiply.outer(ts, lam))[:, None, :]
            sn = np.sin(np.multiply.outer(ts, lam))[:, None, :]
            re = (v[None] * c) @ v.T
            im = (v[None] * sn) @ v.T
            gap = np.hypot(re, im) - rho[None]
            i = int(np.argmax(gap))
            if gap.flat[i] > best:
                ti, ni, mi = np.unravel_index(i, gap.shape)
                best = float(gap.flat[i])
                where = (t, int(ni) - L, int(mi) - L, float(ts[ti]))
    return DynamicalReport(best, where, False, trials, int(t_grid.size))


# --- fits --------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    rate: float
    intercept: float
    r_squared: float
    rate_stderr: float
    ci95: tuple


def fit_rate(p: DecayProfile, n_range) -> RateFit:
    """Least squares of ``log mean`` against ``|n - m|`` over ``n`` in ``n_range``."""
    lo, hi = n_range
    sel = (p.sites >= lo) & (p.sites <= hi)
    y_raw = p.mean[sel]
    if np.any(~(y_raw > 0)):
        raise FitRangeError("nonpositive mean inside the fit range")
    x = np.abs(p.sites[sel] - p.m).astype(float)
    return _fit(x, np.log(y_raw))


def _fit(x, y) -> RateFit:
    n = len(x)
    if n < 2 or np.ptp(x) == 0:
        raise FitRangeError("need at least two distinct distances")
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    if n > 2:
        se = math.sqrt(ss_res / (n - 2) / sxx)
        half = float(stats.t.ppf(0.975, n - 2)) * se
    else:
        se, half = math.nan, math.nan
    rate = -slope
    return RateFit(rate, float(intercept), r2, se, (rate - half, rate + half))


# --- theoretical bound -------------------------------------------------------


@dataclass(frozen=True)
class BoundParams:
    leb: float  # Lebesgue measure of the energy interval
    r_sup: float
    c: float
    K0: float
    lam: float
    scale: object = 1.0  # rule for a_n


def theoretical_bound(params: BoundParams, n, m: int = 0):
    """``Leb a_n^{-1/2} ||r||^{1/2} exp(-c K0^2 sum_{j<=k} min(a_{2j}^2, a_{2j-1}^2, lam)) a_0^{-1/2} ||r||^{1/2}``
    with ``k = floor((|n|-1)/2)``, sites taken on the side of ``n``; only m = 0."""
    if m != 0:
        raise ValidationError("the bound is stated for m = 0")
    a = as_sequence(params.scale)
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    out = np.empty(len(n))
    for i, nn in enumerate(n):
        s = 1 if nn >= 0 else -1
        k = (abs(int(nn)) - 1) // 2
        j = np.arange(1, k + 1)
        pair = np.minimum(np.minimum(a(s * 2 * j) ** 2, a(s * (2 * j - 1)) ** 2), params.lam) if k > 0 else np.zeros(0)
        expo = math.fsum(pair.tolist())
        out[i] = (
            params.leb
            * float(a(np.array(nn))) ** -0.5
            * math.exp(-params.c * params.K0**2 * expo)
            * float(a(np.array(0))) ** -0.5
            * params.r_sup
        )
    return out if out.size > 1 else float(out[0])


def theoretical_bound_hier(params: BoundParams, eps, partition, n):
    """The same bound with ``a_n`` replaced by ``eps_{|m(n)|}``."""
    eps = np.asarray(eps, dtype=float)

    def rule(x):
        return eps[np.abs(partition.m_of(np.asarray(x)))]

    return theoretical_bound(
        BoundParams(params.leb, params.r_sup, params.c, params.K0, params.lam, rule), n
    )
