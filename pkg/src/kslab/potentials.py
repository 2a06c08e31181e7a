"""Sampled potential windows for every construction.

Random inputs are drawn per (seed, level) stream in zigzag site order (see
``rng``), so the value at a site never depends on the window that was asked for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from . import distributions as dist
from .diophantine import Convergents, block_level, circle_distance
from .errors import (
    CapError,
    CoverageError,
    OrbitDegeneracyError,
    OutOfRangeError,
    SpecViolationError,
    TruncationError,
    ValidationError,
)
from .rng import check_seed, site_uniforms

DEFAULT_CAP = 2**62


@dataclass(frozen=True, eq=False)
class PotentialWindow:
    lo: int
    values: np.ndarray
    construction: str
    params: dict
    seed: int
    bound: float  # declared bound on |V| over the window
    draws: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.values.setflags(write=False)
        if np.any(np.abs(self.values) > self.bound * (1 + 1e-12) + 1e-300):
            raise ValidationError("potential exceeds its declared bound")

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def at(self, n):
        return self.values[np.asarray(n) - self.lo]


@dataclass(frozen=True)
class LinearFunctional:
    coefficients: Mapping[int, float]  # site -> b_i

    @property
    def plus_norm(self) -> float:
        return math.fsum(abs(b) for b in self.coefficients.values())

    def __call__(self, xi: Callable[[int], float]) -> float:
        return math.fsum(b * xi(s) for s, b in sorted(self.coefficients.items()))


ZERO = LinearFunctional({})


@dataclass(frozen=True)
class Partition:
    """Intervals ``I_m = (l_{m-1}, l_m]``; ``breaks[i]`` is ``l_{m_first + i}``."""

    breaks: tuple
    m_first: int

    def __post_init__(self):
        b = np.asarray(self.breaks)
        if len(b) < 2 or np.any(np.diff(b) <= 0):
            raise ValidationError("breakpoints must be strictly increasing")
        i0 = -1 - self.m_first  # index of l_{-1}
        if not (0 <= i0 < len(b) - 1 and b[i0] < 0 <= b[i0 + 1]):
            raise ValidationError("need l_{-1} < 0 <= l_0")

    @classmethod
    def symmetric(cls, ns) -> "Partition":
        """``I_0 = [-n_0, n_0]``, ``I_m = (n_{m-1}, n_m]``, ``I_{-m} = -I_m``."""
        ns = [int(x) for x in ns]
        neg = [-x - 1 for x in reversed(ns)]
        return cls(tuple(neg + ns), -len(ns))

    @property
    def span(self) -> tuple[int, int]:
        return (self.breaks[0] + 1, self.breaks[-1])

    def m_of(self, n):
        n = np.asarray(n, dtype=np.int64)
        lo, hi = self.span
        if np.any((n < lo) | (n > hi)):
            raise OutOfRangeError(f"site outside represented range [{lo}, {hi}]")
        out = np.searchsorted(np.asarray(self.breaks), n, side="left") + self.m_first
        return int(out) if out.ndim == 0 else out


def _rule(value) -> Callable:
    if value is None:
        return lambda n: np.zeros(np.shape(n))
    if callable(value):
        return lambda n: np.asarray(value(np.asarray(n)), dtype=float) * np.ones(np.shape(n))
    if isinstance(value, PotentialWindow):
        return lambda n: np.asarray(value.at(n), dtype=float)
    v = float(value)
    return lambda n: np.full(np.shape(n), v)


def _draw(density, scales, seed, level, sites):
    u = site_uniforms(seed, level, sites)
    return np.asarray(scales, dtype=float) * dist.inverse_cdf(density, u)


def _abs_support(density) -> float:
    return max(abs(density.lo), abs(density.hi))


# --- independent couplings with correlation functionals ---------------------


@dataclass(frozen=True, eq=False)
class KSSpec:
    """``V(n) = xi_n + chi_n + L_n(xi_{-|n|+1} .. xi_{|n|-1})`` with ``xi_n ~ r_{a_n}``."""

    density: object = field(default_factory=dist.uniform)
    scale: object = 1.0  # constant or callable n -> a_n
    background: object = None  # constant, callable n -> chi_n, or PotentialWindow
    functionals: Mapping[int, LinearFunctional] = field(default_factory=dict)

    def validate(self):
        if 0 in self.functionals and self.functionals[0].coefficients:
            raise SpecViolationError("L_0 must vanish")
        for n, f in self.functionals.items():
            bad = [s for s in f.coefficients if abs(s) >= abs(n)]
            if bad:
                raise SpecViolationError(f"L_{n} references xi at sites {bad}, need |s| < {abs(n)}")

    def scales(self, sites) -> np.ndarray:
        a = _rule(self.scale)(sites)
        if np.any(a <= 0):
            raise ValidationError("scales a_n must be positive")
        return a


def sample_ks_potential(spec: KSSpec, L: int, seed: int, lo: int | None = None, hi: int | None = None) -> PotentialWindow:
    spec.validate()
    seed = check_seed(seed)
    lo = -L if lo is None else lo
    hi = L if hi is None else hi
    sites = np.arange(lo, hi + 1)
    # functionals may reach any site with |s| < |n|
    reach = int(np.max(np.abs(sites)))
    all_sites = np.arange(-reach, reach + 1)
    a_all = spec.scales(all_sites)
    xi_all = _draw(spec.density, a_all, seed, 0, all_sites)
    xi = xi_all[sites + reach]
    chi = _rule(spec.background)(sites)
    corr = np.zeros(len(sites))
    norms = np.zeros(len(sites))
    for i, n in enumerate(sites):
        f = spec.functionals.get(int(n))
        if f is not None and n != 0:
            corr[i] = f(lambda s: xi_all[s + reach])
            norms[i] = f.plus_norm
    values = xi + chi + corr
    r = _abs_support(spec.density)
    bound = float(np.max(a_all * r + np.abs(chi).max() + norms.max() * (a_all.max() * r))) if len(sites) else 0.0
    return PotentialWindow(
        lo,
        values,
        "ks",
        {"L": L, "scale": repr(spec.scale), "functionals": len(spec.functionals)},
        seed,
        bound,
        {"xi": xi, "chi": chi, "functional": corr},
    )


def functional_matrix(spec: KSSpec, L: int) -> np.ndarray:
    """Row ``n + L`` holds the coefficients of ``L_n`` over sites ``-L .. L``."""
    spec.validate()
    C = np.zeros((2 * L + 1, 2 * L + 1))
    for n, f in spec.functionals.items():
        if -L <= n <= L:
            for s, b in f.coefficients.items():
                C[n + L, s + L] = b
    return C


def ks_batch(spec: KSSpec, L: int, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """``size`` independent potentials on ``[-L, L]`` from one stream.

    Returns ``(V, xi)``, both of shape ``(size, 2L+1)``.  Meant for large
    Monte Carlo batches; per-window reproducibility goes through
    ``sample_ks_potential`` instead.
    """
    sites = np.arange(-L, L + 1)
    a = spec.scales(sites)
    xi = a[None, :] * dist.inverse_cdf(spec.density, rng.random((size, len(sites))))
    chi = _rule(spec.background)(sites)
    V = xi + chi[None, :]
    C = functional_matrix(spec, L)
    if np.any(C):
        V = V + xi @ C.T
    return V, xi


# --- hierarchical construction ---------------------------------------------


@dataclass(frozen=True, eq=False)
class HierSpec:
    """``V(n) = sum_{k >= |m(n)|} xi_{n,k} + chi_n + sum_{k < |m(n)|} L_{n,k}(xi_{.,k})``.

    ``eps`` lists eps_0 .. eps_D; ``tail`` bounds sum over levels beyond D.
    ``functional(n, k)`` returns a LinearFunctional over level-k sites, or None.
    """

    partition: Partition
    eps: tuple
    density: object = field(default_factory=dist.uniform)
    functional: Callable | None = None
    background: object = None
    tail: float = 0.0

    def tail_after(self, K: int) -> float:
        return math.fsum(self.eps[K + 1 :]) + self.tail


def sample_hier_potential(spec: HierSpec, L: int, seed: int, depth: int | None = None, tail_tol: float | None = None) -> PotentialWindow:
    seed = check_seed(seed)
    D = len(spec.eps) - 1 if depth is None else depth
    if D >= len(spec.eps):
        raise TruncationError(f"depth {D} exceeds the {len(spec.eps)} represented levels")
    tail = spec.tail_after(D)
    if tail_tol is not None and tail > tail_tol:
        raise TruncationError(f"tail bound {tail:.3e} above tolerance {tail_tol:.3e} at depth {D}")
    sites = np.arange(-L, L + 1)
    levels = np.abs(spec.partition.m_of(sites))
    total = np.zeros(len(sites))
    corr = np.zeros(len(sites))
    draws = {}
    r = _abs_support(spec.density)
    norm_max = 0.0
    for k in range(D + 1):
        own = sites[levels <= k]
        refs = {}
        if spec.functional is not None:
            for n in sites[levels > k]:
                f = spec.functional(int(n), k)
                if f is None:
                    continue
                bad = [s for s in f.coefficients if abs(spec.partition.m_of(s)) >= abs(spec.partition.m_of(n))]
                if bad:
                    raise SpecViolationError(f"L_({n},{k}) references sites {bad} outside lower levels")
                refs[int(n)] = f
                norm_max = max(norm_max, f.plus_norm)
        need = sorted(set(own.tolist()) | {s for f in refs.values() for s in f.coefficients})
        if not need:
            continue
        need = np.array(need)
        if np.any(np.abs(spec.partition.m_of(need)) > k):
            raise SpecViolationError(f"level {k} variables exist only on sites with |m| <= {k}")
        xi = dict(zip(need.tolist(), _draw(spec.density, spec.eps[k], seed, k, need).tolist()))
        draws[k] = xi
        for i, n in enumerate(sites):
            if levels[i] <= k:
                total[i] += xi[int(n)]
            elif int(n) in refs:
                corr[i] += refs[int(n)](xi.__getitem__)
    chi = _rule(spec.background)(sites)
    values = total + chi + corr
    bound = (1 + norm_max) * r * math.fsum(spec.eps[: D + 1]) + float(np.abs(chi).max())
    return PotentialWindow(-L, values, "hier", {"L": L, "depth": D, "tail": tail}, seed, bound, draws)


# --- limit-periodic construction -------------------------------------------


@dataclass(frozen=True)
class Sequences:
    eps: tuple  # eps_0 .. eps_K
    ns: tuple  # n_0 .. n_K
    eps_total: float
    gamma: float


def _condition(eps_k: float, n_prev: int, gamma: float, k: int) -> bool:
    """``eps_k^{-5/2} exp(-gamma n_{k-1} eps_k^2) < 2^{-k}`` in log form."""
    return -2.5 * math.log(eps_k) - gamma * n_prev * eps_k * eps_k < -k * math.log(2.0)


def _min_n(eps_k: float, gamma: float, k: int) -> int:
    guess = (2.5 * math.log(1.0 / eps_k) + k * math.log(2.0)) / (gamma * eps_k * eps_k)
    n = max(0, int(math.floor(guess)) - 2)
    while not _condition(eps_k, n, gamma, k):
        n += 1
    while n > 0 and _condition(eps_k, n - 1, gamma, k):
        n -= 1
    return n


def geometric_eps(eps: float, K: int) -> tuple:
    return tuple(eps * 2.0 ** (-(k + 2)) for k in range(K + 1))


def gen_sequences(eps: float, gamma: float, K: int, eps_seq=None, cap: int = DEFAULT_CAP) -> Sequences:
    """``eps_k`` (default ``eps 2^{-(k+2)}``) and the minimal admissible ``n_k``.

    ``n_{k-1}`` is the least integer (for k-1 = 0) or least odd multiple
    ``(2 n_k + 1) = m (2 n_{k-1} + 1)``, ``m >= 3``, making the level-k term
    ``eps_k^{-5/2} exp(-gamma n_{k-1} eps_k^2)`` smaller than ``2^{-k}``.
    Computing ``n_K`` needs ``eps_{K+1}``.
    """
    if not (eps > 0 and gamma > 0):
        raise ValidationError("eps and gamma must be positive")
    levels = geometric_eps(eps, K + 1) if eps_seq is None else tuple(float(x) for x in eps_seq)
    if len(levels) < K + 2:
        raise ValidationError(f"need eps_0 .. eps_{K + 1}")
    if any(b >= a for a, b in zip(levels, levels[1:])) or math.fsum(levels) >= eps:
        raise ValidationError("eps_k must decrease and sum below eps")
    ns = []
    for k in range(K + 1):
        need = _min_n(levels[k + 1], gamma, k + 1)
        if k == 0:
            n = need
        else:
            base = 2 * ns[-1] + 1
            m = max(3, -(-(2 * need + 1) // base))
            if m % 2 == 0:
                m += 1
            n = (m * base - 1) // 2
        if n > cap:
            raise CapError(f"n_{k} = {n} exceeds cap {cap}", Sequences(levels[:k], tuple(ns), eps, gamma))
        ns.append(n)
    return Sequences(levels[: K + 1], tuple(ns), eps, gamma)


def periodic_copy(n, n_k: int):
    """Site ``((n + n_k) mod (2 n_k + 1)) - n_k`` inside ``[-n_k, n_k]``."""
    return np.mod(np.asarray(n) + n_k, 2 * n_k + 1) - n_k


def lp_hier_spec(seq: Sequences, density=None, background=None, extra_levels: int = 30) -> HierSpec:
    """The hierarchical spec of the limit-periodic construction."""
    density = dist.uniform() if density is None else density
    K = len(seq.ns) - 1
    eps = seq.eps + geometric_eps(seq.eps_total, K + extra_levels)[K + 1 :] if extra_levels else seq.eps
    tail = eps[-1]  # geometric: sum_{k > D} eps 2^{-(k+2)} = eps_D

    def functional(n, k):
        return LinearFunctional({int(periodic_copy(n, seq.ns[k])): 1.0})

    return HierSpec(Partition.symmetric(seq.ns), tuple(eps), density, functional, background, tail)


@dataclass(frozen=True, eq=False)
class LimitPeriodic:
    window: PotentialWindow  # background + V_lp
    lp: np.ndarray  # V_lp on the window
    approximants: list  # [(period, PotentialWindow)] level-K truncations of V_lp
    sequences: Sequences
    tail: list  # tail[K] = sum_{k > K} eps_k bound for approximant K
    norm: float  # max |V_lp| on the window


def limit_periodic_potential(
    eps: float,
    gamma: float,
    L: int,
    K_levels: int,
    seed: int,
    background=None,
    extra_levels: int = 30,
    density=None,
    eps_seq=None,
) -> LimitPeriodic:
    seed = check_seed(seed)
    density = dist.uniform() if density is None else density
    seq = gen_sequences(eps, gamma, K_levels, eps_seq)
    if L > seq.ns[-1]:
        raise CoverageError(f"L = {L} exceeds n_{K_levels} = {seq.ns[-1]}; raise K_levels")
    spec = lp_hier_spec(seq, density, None, extra_levels)
    sites = np.arange(-L, L + 1)
    D = len(spec.eps) - 1
    running = np.zeros(len(sites))
    approximants = []
    tails = []
    for k in range(D + 1):
        if k <= K_levels:
            src = periodic_copy(sites, seq.ns[k])
        else:
            src = sites  # |n| <= n_K < n_k, the copy is the site itself
        uniq, inv = np.unique(src, return_inverse=True)
        running = running + _draw(density, spec.eps[k], seed, k, uniq)[inv]
        if k <= K_levels:
            period = 2 * seq.ns[k] + 1
            tails.append(spec.tail_after(k))
            w = PotentialWindow(
                -L, running.copy(), "lp-approximant", {"level": k, "period": period}, seed, math.fsum(spec.eps[: k + 1]) * _abs_support(density)
            )
            approximants.append((period, w))
    chi = _rule(background)(sites)
    values = running + chi
    r = _abs_support(density)
    window = PotentialWindow(
        -L,
        values,
        "limit-periodic",
        {"eps": eps, "gamma": gamma, "L": L, "K_levels": K_levels, "depth": D, "tail": spec.tail},
        seed,
        r * math.fsum(spec.eps) + float(np.abs(chi).max()),
        {"ns": seq.ns, "eps": spec.eps},
    )
    return LimitPeriodic(window, running, approximants, seq, tails, float(np.abs(running).max()))


# --- quasi-periodic bumps ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class QPBumps:
    window: PotentialWindow
    amplitudes: np.ndarray  # a_n on the window
    blocks: list  # [(lo, hi)] blocks of the partition, clipped to the window
    centers: np.ndarray  # z_n
    radii: np.ndarray  # support radius of g_n
    coupling: np.ndarray  # coupling[i, j] = g_{n_j}(z_{n_i}), zero diagonal


def _orbit(alpha, omega, sites):
    if isinstance(alpha, Fraction) or isinstance(omega, Fraction):
        a, w = Fraction(alpha), Fraction(omega)
        exact = [(w + int(n) * a) % 1 for n in sites]
        if len(set(exact)) < len(exact):
            raise OrbitDegeneracyError(f"orbit of rational alpha = {a} repeats on the window")
        return np.array([float(x) for x in exact])
    z = np.mod(float(omega) + sites * float(alpha), 1.0)
    if len(np.unique(z)) < len(z):
        raise OrbitDegeneracyError("orbit points coincide on the window")
    return z


def greedy_blocks(eps: float, alpha_exp: float, L: int):
    """Blocks ``[-b_0, b_0]``, ``[b_{i-1}+1, b_i]`` (mirrored for i < 0) such that
    block i's largest amplitude is at most ``eps 2^{-(|i|+2)}``."""
    a0 = eps / 100.0
    bounds = []
    b = -1
    i = 0
    while b < L:
        # smallest n with a_{n+1} <= eps 2^{-(i+3)}, i.e. the next block can start at n+1
        target = eps * 2.0 ** (-(i + 3))
        n = max(0, math.ceil((a0 / target) ** (1.0 / alpha_exp)) - 2)
        while a0 * (2.0 + n) ** (-alpha_exp) > target:
            n += 1
        while n > 0 and a0 * (1.0 + n) ** (-alpha_exp) <= target:
            n -= 1
        b = max(b + 1, n)
        bounds.append(b)
        i += 1
    blocks = [(-bounds[0], bounds[0])]
    for j in range(1, len(bounds)):
        blocks.append((bounds[j - 1] + 1, bounds[j]))
        blocks.insert(0, (-bounds[j], -bounds[j - 1] - 1))
    return [(max(lo, -L), min(hi, L)) for lo, hi in blocks if hi >= -L and lo <= L]


def qp_bump_potential(alpha, omega, eps: float, alpha_exp: float, L: int, seed: int, background=None, width: float = 0.25) -> QPBumps:
    """Bumps ``g_n`` of height ``a_n`` at the orbit points ``z_n = omega + n alpha``.

    ``V(n) = chi_n + sum_j xi_j g_j(z_n)``; since ``g_j(z_n) = 0`` whenever
    ``|n| <= |j|`` and ``n != j``, this is ``chi_n + xi_n a_n`` plus a
    functional of the ``xi_j`` with ``|j| < |n|``.
    """
    if not 0 < alpha_exp < 0.5:
        raise ValidationError("alpha_exp must lie in (0, 1/2)")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    seed = check_seed(seed)
    sites = np.arange(-L, L + 1)
    z = _orbit(alpha, omega, sites)
    amp = (eps / 100.0) * (1.0 + np.abs(sites)) ** (-alpha_exp)
    blocks = greedy_blocks(eps, alpha_exp, L)
    block_id = np.empty(len(sites), dtype=np.int64)
    for b, (lo, hi) in enumerate(blocks):
        block_id[lo + L : hi + L + 1] = b
    absn = np.abs(sites)
    radii = np.full(len(sites), width)
    for start in range(0, len(sites), 512):
        rows = slice(start, min(start + 512, len(sites)))
        d = circle_distance(z[rows, None] - z[None, :])
        mask = (absn[None, :] <= absn[rows, None]) | (block_id[None, :] == block_id[rows, None])
        mask &= sites[None, :] != sites[rows, None]
        near = np.where(mask, d, np.inf).min(axis=1)
        radii[rows] = np.minimum(width, 0.5 * near)
    # g_j(z_i) = a_j max(0, 1 - |z_i - z_j| / radius_j)
    dist_ij = circle_distance(z[:, None] - z[None, :])
    coupling = amp[None, :] * np.maximum(0.0, 1.0 - dist_ij / radii[None, :])
    np.fill_diagonal(coupling, 0.0)
    xi = site_uniforms(seed, 0, sites)
    chi = _rule(background)(sites)
    own = xi * amp
    corr = coupling @ xi
    values = chi + own + corr
    bound = float(np.abs(chi).max()) + eps
    window = PotentialWindow(
        -L,
        values,
        "qp-bump",
        {"alpha": str(alpha), "omega": str(omega), "eps": eps, "alpha_exp": alpha_exp, "L": L, "width": width},
        seed,
        bound,
        {"xi": xi, "chi": chi, "functional": corr},
    )
    return QPBumps(window, amp, blocks, z, radii, coupling)


# --- Hoelder tents -----------------------------------------------------------


def holder_tent(z, eps, gammatilde, x):
    """Tent of height ``eps^g`` and half-width ``eps`` centred at ``z`` on the circle."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps >= 0.5) or np.any(eps <= 0):
        raise ValidationError("tent half-width must lie in (0, 1/2)")
    d = circle_distance(np.asarray(x, dtype=float) - z)
    out = eps ** (gammatilde - 1.0) * np.maximum(eps - d, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def tent_widths(c: Convergents, n):
    """``1 / (100 q_{k+1})`` with ``q_k <= |2n| < q_{k+1}``."""
    q = np.array([float(v) for v in c.q])
    return 1.0 / (100.0 * q[block_level(c, n) + 1])


def holder_G(c: Convergents, gammatilde: float, mu, x, N_terms: int, chunk: int = 1 << 22):
    """``sum_{|n| <= N_terms} mu_n g_n(x)`` with tents at ``z_n = n alpha``.

    ``mu`` has length ``2 N_terms + 1`` (index 0 is n = -N_terms) or is a scalar.
    """
    if 2 * N_terms >= c.q[-1]:
        raise OutOfRangeError(f"N_terms = {N_terms} needs convergents with q > {2 * N_terms}")
    n = np.arange(-N_terms, N_terms + 1)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), n.shape)
    alpha = float(c.alpha)
    z = np.mod(n * alpha, 1.0)
    w = tent_widths(c, n)
    keep = mu != 0
    n, mu, z, w = n[keep], mu[keep], z[keep], w[keep]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape)
    if len(n) == 0:
        return out
    # tents overlap only across levels; sort centres so each x touches a short range
    order = np.argsort(z)
    z, w, mu = z[order], w[order], mu[order]
    wmax = float(w.max())
    zz = np.concatenate([z - 1.0, z, z + 1.0])
    ww = np.tile(w, 3)
    mm = np.tile(mu, 3)
    lo = np.searchsorted(zz, x - wmax, side="left")
    hi = np.searchsorted(zz, x + wmax, side="right")
    span = int((hi - lo).max()) if len(x) else 0
    step = max(1, chunk // max(span, 1))
    for s in range(0, len(x), step):
        xs = x[s : s + step]
        idx = lo[s : s + step, None] + np.arange(span)[None, :]
        valid = idx < hi[s : s + step, None]
        idx = np.minimum(idx, len(zz) - 1)
        d = np.abs(xs[:, None] - zz[idx])
        wi = ww[idx]
        g = wi ** (gammatilde - 1.0) * np.maximum(wi - d, 0.0)
        out[s : s + step] = np.where(valid, mm[idx] * g, 0.0).sum(axis=1)
    return out


def holder_tail_bound(c: Convergents, gammatilde: float, N_terms: int) -> float:
    """``sum 2 / (100 q_{k+1})^g`` over represented levels not fully inside ``|n| <= N_terms``."""
    q = c.q
    k_last = int(block_level(c, N_terms))
    return math.fsum(2.0 / (100.0 * q[k + 1]) ** gammatilde for k in range(k_last, c.K))


def holder_sup_bound(c: Convergents, gammatilde: float) -> float:
    """``sum_k 2 / (100 q_{k+1})^g`` over represented k."""
    return math.fsum(2.0 / (100.0 * q) ** gammatilde for q in c.q[1:])
