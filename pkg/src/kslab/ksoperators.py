"""Discretized integral operators

    (S f)(x) = int r_a(c - x - 1/y) f(y) dy,   (T f)(x) = same with |y|^{-1} f(y),

their norms, and two brute-force oracles for the change of variables behind the
operator formula for the eigenfunction correlator.

Discretization is Galerkin with piecewise constants: ``K[i, j]`` is the kernel
integrated over the cell ``X_i x Y_j``.  In the orthonormal cell bases the
discrete operator is the compression ``P_X S P_Y``, so its 2,2 norm can only
underestimate the continuum norm.  The y-cells are images of uniform cells in
``u = 1/y``, which keeps the kernel equally resolved near ``y = 0`` and at
large ``|y|``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .errors import DegenerateSampleError, NumericalError, ResolutionError, ValidationError
from .potentials import KSSpec, ks_batch, _rule
from .rng import TRIAL, check_seed, generator
from .spectra import TridiagonalOperator, eigen, eigen_batch

GAUSS_NODES = 4
POWER_TOL = 1e-8
POWER_MAX_ITER = 10_000


# --- grids and matrices ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridSpec:
    x_edges: np.ndarray
    u_lo: np.ndarray  # y-cells given as intervals in u = 1/y
    u_hi: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.x_edges) <= 0) or np.any(self.u_hi <= self.u_lo):
            raise ValidationError("grid cells must have positive length")
        if np.any((self.u_lo < 0) & (self.u_hi > 0)) or np.any((self.u_lo == 0) | (self.u_hi == 0)):
            raise ValidationError("a u-cell touches u = 0 (y = infinity)")

    @property
    def eta(self) -> float:
        """Smallest |y| represented."""
        return 1.0 / float(np.max(np.abs(np.concatenate([self.u_lo, self.u_hi]))))

    @property
    def Y(self) -> float:
        """Largest |y| represented."""
        return 1.0 / float(np.min(np.abs(np.concatenate([self.u_lo, self.u_hi]))))

    @property
    def x_len(self) -> np.ndarray:
        return np.diff(self.x_edges)

    @property
    def y_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell ``(y_lo, y_hi)``."""
        return 1.0 / self.u_hi, 1.0 / self.u_lo

    @property
    def y_len(self) -> np.ndarray:
        lo, hi = self.y_edges
        return hi - lo


def make_grid(d, E_range, h: float | None = None, pad: float = 1.0) -> GridSpec:
    """Grid good for every ``c`` in ``E_range``.

    u-cells of width ``h`` cover ``[-U, U]`` except ``(-h, h)``; x-cells of the
    same width cover every ``c - u - v`` that can occur.
    """
    lo_v, hi_v = d.support
    h = (hi_v - lo_v) / 10.0 if h is None else h
    c_lo, c_hi = E_range
    U = max(abs(c_lo), abs(c_hi)) + max(abs(lo_v), abs(hi_v)) + pad
    nu = int(math.ceil(U / h))
    k = np.arange(1, nu)
    u_lo = np.concatenate([-h * (k[::-1] + 1), h * k])
    u_hi = np.concatenate([-h * k[::-1], h * (k + 1)])
    x_lo = c_lo - U - hi_v
    x_hi = c_hi + U - lo_v
    nx = int(math.ceil((x_hi - x_lo) / h))
    return GridSpec(x_lo + h * np.arange(nx + 1), u_lo, u_hi)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    K: np.ndarray  # K[i, j] = int_{X_i} int_{Y_j} kernel dy dx
    grid: GridSpec
    kind: str  # "S" or "T"
    c: float
    density: object = field(repr=False, default=None)

    def orthonormal(self) -> np.ndarray:
        xl = self.grid.x_len
        yl = self.grid.y_len
        return self.K / np.sqrt(xl[:, None] * yl[None, :])


def _build(d, c: float, g: GridSpec, kind: str) -> OperatorMatrix:
    ylo, yhi = g.y_edges
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_NODES)
    # Gauss in y on each cell: y_q, w_q
    mid = 0.5 * (ylo + yhi)
    half = 0.5 * (yhi - ylo)
    yq = mid[:, None] + half[:, None] * nodes[None, :]
    wq = half[:, None] * weights[None, :]
    if kind == "T":
        wq = wq / np.abs(yq)
    uq = 1.0 / yq  # (ny, Q)
    # int_{X_i} r(c - x - u) dx = F(c - u - x_lo) - F(c - u - x_hi)
    F = dist.cdf(d, (c - uq)[None, :, :] - g.x_edges[:, None, None])  # (nx+1, ny, Q)
    inner = F[:-1] - F[1:]
    K = np.einsum("ijq,jq->ij", inner, wq)
    return OperatorMatrix(K, g, kind, c, d)


def build_S(d, E: float, g: GridSpec) -> OperatorMatrix:
    return _build(d, E, g, "S")


def build_T(d, E: float, g: GridSpec) -> OperatorMatrix:
    return _build(d, E, g, "T")


def op_norm(M: OperatorMatrix, p: int, q: int) -> float:
    """Norm of the discretized operator from L^p to L^q on the grid."""
    K, xl, yl = M.K, M.grid.x_len, M.grid.y_len
    if (p, q) == (1, 1):
        return float(np.max(K.sum(axis=0) / yl))
    if (p, q) == (1, 2):
        return float(np.sqrt(np.max(((K / yl[None, :]) ** 2 / xl[:, None]).sum(axis=0))))
    if (p, q) == (2, 2):
        return power_norm(M.orthonormal())
    raise ValidationError(f"unsupported norm ({p},{q})")


def power_norm(B: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest singular value by power iteration on ``B^T B``."""
    v = np.ones(B.shape[1]) / math.sqrt(B.shape[1])
    prev = 0.0
    for _ in range(max_iter):
        w = B.T @ (B @ v)
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        sigma = math.sqrt(nrm)
        if abs(sigma - prev) <= tol * sigma:
            return sigma
        prev = sigma
    raise NumericalError(f"power iteration did not reach {tol} in {max_iter} steps")


def overlap(a_edges, b_lo, b_hi) -> np.ndarray:
    """``O[j, k] = |A_j ∩ B_k| / sqrt(|A_j| |B_k|)`` for cells A (edges) and B (lo/hi)."""
    a0, a1 = a_edges[:-1], a_edges[1:]
    inter = np.clip(np.minimum(a1[:, None], b_hi[None, :]) - np.maximum(a0[:, None], b_lo[None, :]), 0.0, None)
    return inter / np.sqrt((a1 - a0)[:, None] * (b_hi - b_lo)[None, :])


@dataclass(frozen=True)
class ProductCheck:
    lhs: float
    rhs: float
    holds: bool
    norm1: float
    norm2: float


def product_bound_check(d, a1, a2, E1, E2, g1: GridSpec, g2: GridSpec, c, K0, lam, tol=1e-3) -> ProductCheck:
    """Compare ``||T_{E1}^{a1} T_{E2}^{a2}||_{2,2}`` on the grids with
    ``exp(-c K0^2 min(a1^2, a2^2, lam))``.  A spot check only."""
    if min(a1, a2, c, K0, lam) <= 0:
        raise ValidationError("parameters must be positive")
    T1 = build_T(dist.rescale(d, a1), E1, g1)
    T2 = build_T(dist.rescale(d, a2), E2, g2)
    ylo, yhi = g1.y_edges
    O = overlap(g2.x_edges, ylo, yhi)  # rows: T2 output x-cells, cols: T1 input y-cells
    B = T1.orthonormal() @ O.T @ T2.orthonormal()
    lhs = power_norm(B)
    rhs = math.exp(-c * K0**2 * min(a1**2, a2**2, lam))
    return ProductCheck(lhs, rhs, lhs <= rhs + tol, power_norm(T1.orthonormal()), power_norm(T2.orthonormal()))


def apply_U0(f, x):
    """``(U0 f)(x) = |x|^{-1} f(1/|x|)`` by linear interpolation on the nodes ``x``.

    Returns ``(values, outside)``; points whose ``1/|x|`` falls off the grid get 0."""
    return _apply_inversion(f, x, signed=False)


def apply_U(f, x):
    """Signed variant ``|x|^{-1} f(1/x)``, unitary on L^2(R)."""
    return _apply_inversion(f, x, signed=True)


def _apply_inversion(f, x, signed):
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = 1.0 / x if signed else 1.0 / np.abs(x)
        inside = (arg >= x[0]) & (arg <= x[-1]) & np.isfinite(arg)
        vals = np.where(inside, np.interp(arg, x, f) / np.abs(x), 0.0)
    return vals, int((~inside).sum())


def l2_norm(f, x) -> float:
    return math.sqrt(float(np.trapezoid(np.asarray(f) ** 2, x)))


# --- change of variables: Jacobian oracle -------------------------------------


@dataclass(frozen=True)
class JacobianReport:
    jac_res: float  # |det J phi(0)^2 - 1|
    nested_res: float  # |nested expansion * phi(0)^2 - 1|
    ratio_res: float  # max_n | |phi(n)/phi(0)| - |x_1^-1 ... x_n^-1| |
    fd_discrepancy: float  # analytic vs finite-difference J, relative to max(1, |entry|)
    map_residual: float  # max |F(x, E) - V|
    phi0: float
    E: float


def change_of_variables(phi, E):
    """``x_n = phi(n+1)/phi(n)`` for n < 0 and ``phi(n-1)/phi(n)`` for n > 0."""
    N = len(phi)
    L = (N - 1) // 2
    x = np.empty(2 * L)
    for i, n in enumerate(list(range(-L, 0)) + list(range(1, L + 1))):
        j = n + L
        x[i] = phi[j + 1] / phi[j] if n < 0 else phi[j - 1] / phi[j]
    return x


def coordinate_map(x, E, L, chi=None):
    """``v = F(x, E)`` with ``x_{-L-1}^{-1} = x_{L+1}^{-1} = 0``."""
    chi = np.zeros(2 * L + 1) if chi is None else chi
    xm = {n: x[n + L] for n in range(-L, 0)}
    xp = {n: x[n + L - 1] for n in range(1, L + 1)}
    inv = {**{n: 1.0 / v for n, v in xm.items()}, **{n: 1.0 / v for n, v in xp.items()}}
    inv[-L - 1] = 0.0
    inv[L + 1] = 0.0
    v = np.empty(2 * L + 1)
    for n in range(-L, L + 1):
        if n < 0:
            v[n + L] = E - chi[n + L] - inv[n - 1] - xm[n]
        elif n == 0:
            v[L] = E - chi[L] - inv.get(-1, 0.0) - inv.get(1, 0.0)
        else:
            v[n + L] = E - chi[n + L] - inv[n + 1] - xp[n]
    return v


def analytic_jacobian(x, L, fault: str | None = None):
    """Rows ``x_{-L} .. x_{-1}, E, x_1 .. x_L``; columns ``v_{-L} .. v_L``."""
    N = 2 * L + 1
    J = np.zeros((N, N))
    sign = -1.0 if fault == "sign" else 1.0
    for n in range(-L, 0):
        r = n + L
        J[r, n + L] = -1.0
        J[r, n + L + 1] = sign * x[n + L] ** -2
    J[L, :] = 1.0
    for n in range(1, L + 1):
        r = n + L
        J[r, n + L] = -1.0
        J[r, n + L - 1] = sign * x[n + L - 1] ** -2
    return J


def nested_determinant(x, L) -> float:
    """``1 + x_1^-2 {1 + x_2^-2 {...}} + x_{-1}^-2 {1 + ...}``."""
    right = 0.0
    for n in range(L, 0, -1):
        right = x[n + L - 1] ** -2 * (1.0 + right)
    left = 0.0
    for n in range(-L, 0):
        left = x[n + L] ** -2 * (1.0 + left)
    return 1.0 + right + left


def fd_jacobian(x, E, L, rel_step=1e-6):
    z = np.concatenate([x[:L], [E], x[L:]])

    def F(zz):
        return coordinate_map(np.concatenate([zz[:L], zz[L + 1 :]]), zz[L], L)

    J = np.empty((2 * L + 1, 2 * L + 1))
    for i in range(2 * L + 1):
        h = rel_step * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        J[i] = (F(zp) - F(zm)) / (2 * h)
    return J


def jacobian_oracle(w, k: int, fault: str | None = None) -> JacobianReport:
    """Check the Jacobian and ratio identities on eigenvector ``k`` of window ``w``."""
    values = np.asarray(w.values, dtype=float)
    N = len(values)
    if N % 2 == 0:
        raise ValidationError("window must be symmetric, [-L, L]")
    L = (N - 1) // 2
    e = eigen(TridiagonalOperator(values, -L))
    phi = e.eigenvectors[:, k]
    E = float(e.eigenvalues[k])
    if abs(phi[L]) < 1e-12:
        raise DegenerateSampleError(f"|phi(0)| = {abs(phi[L]):.3e} too small; resample")
    x = change_of_variables(phi, E)
    J = analytic_jacobian(x, L, fault)
    det = float(np.linalg.det(J))
    nested = float(nested_determinant(x, L))
    phi0 = float(phi[L])
    ratio = 0.0
    for n in range(1, L + 1):
        prod_r = np.prod(1.0 / x[L : L + n])
        prod_l = np.prod(1.0 / x[L - n : L])
        ratio = max(ratio, abs(abs(phi[L + n] / phi0) - abs(prod_r)), abs(abs(phi[L - n] / phi0) - abs(prod_l)))
    J_fd = fd_jacobian(x, E, L)
    J_ref = analytic_jacobian(x, L)
    fd = float(np.max(np.abs(J_ref - J_fd) / np.maximum(1.0, np.abs(J_ref))))
    if fault == "sign":
        fd = float(np.max(np.abs(J - J_fd) / np.maximum(1.0, np.abs(J))))
    map_res = float(np.max(np.abs(coordinate_map(x, E, L) - values)))
    return JacobianReport(
        abs(det * phi0**2 - 1.0), abs(nested * phi0**2 - 1.0), float(ratio), fd, map_res, phi0, E
    )


# --- factorization oracle ----------------------------------------------------


class ThetaGrid:
    """Cells of equal width in ``theta`` with ``x = tan(theta)``.

    The inversion ``x -> 1/x`` maps cells onto cells, so measures can be moved
    between ``x`` and ``1/x`` exactly; inside a cell mass is spread evenly in
    ``theta`` over ``Q`` sub-points.

    A measure is stored either plain or tilted by ``rho(x) = min(1, 1/|x|)``.
    Tilting is needed whenever the next step weights by ``1/|x|``: the weighted
    image decays only like ``1/|x|`` and has infinite mass in the end cells.
    """

    def __init__(self, N: int, Q: int = 8):
        if N % 4 or N < 4:
            raise ValidationError("N must be a positive multiple of 4")
        self.N, self.Q = N, Q
        self.dtheta = math.pi / N
        th = -math.pi / 2 + self.dtheta * np.arange(N + 1)
        edges = np.tan(th)
        edges[0], edges[-1] = -np.inf, np.inf
        edges[N // 2] = 0.0
        edges[N // 4], edges[3 * N // 4] = -1.0, 1.0
        self.edges = edges
        self.mid = -math.pi / 2 + self.dtheta * (np.arange(N) + 0.5)
        sub = (np.arange(Q) + 0.5) / Q
        self.sub = np.tan(-math.pi / 2 + self.dtheta * (np.arange(N)[:, None] + sub[None, :])).ravel()
        i = np.arange(N)
        self.refl = np.where(i >= N // 2, 3 * N // 2 - 1 - i, N // 2 - 1 - i)

    def point(self, b: float, d, tilt: bool = False) -> np.ndarray:
        """Cell masses of ``x = b - v``, ``v ~ d``."""
        return self._spread(np.array([b]), np.array([1.0]), d, tilt)

    def push(self, masses, c, d, weighted: bool, tilt_in: bool = False, tilt_out: bool = False) -> np.ndarray:
        """Masses of ``x = c - 1/y - v`` for y distributed by ``masses``;
        with ``weighted`` each unit of mass at y carries ``1/|y|``."""
        y = self.sub
        m = np.repeat(masses / self.Q, self.Q)
        ay = np.abs(y)
        if tilt_in:
            m = m * np.maximum(1.0, ay)
        if weighted:
            m = m / ay
        return self._spread(c - 1.0 / y, m, d, tilt_out)

    def _spread(self, beta, m, d, tilt):
        lo, hi, w = dist.uniform_pieces(d)
        e = self.edges[1:-1]
        R = _tilted_antiderivative if tilt else None
        cdf = np.zeros(len(e))
        for s, t, wp in zip(lo, hi, w):
            # mass of {beta - v <= e}, v uniform on [s, t]
            cdf += wp * (_ramp_sum(beta - t, m, e, R) - _ramp_sum(beta - s, m, e, R)) / (t - s)
        if tilt:
            total = cdf[-1] + _tail_mass(beta, m, lo, hi, w, e[-1])
        else:
            total = float(m.sum())
        full = np.concatenate([[0.0], cdf, [total]])
        return np.diff(full)

    def pair(self, F, H, weighted: bool, tilt: bool = False) -> float:
        """``int f(x) |x|^{-w} h(1/x) dx`` from cell masses of f (in x) and h (in 1/x)."""
        s, c = np.sin(self.mid), np.cos(self.mid)
        kern = np.abs(s * c) if weighted else s * s
        if tilt:
            kern = kern * np.maximum(1.0, np.abs(np.tan(self.mid)))
        return float(np.sum(F * H[self.refl] * kern) / self.dtheta)


def _tilted_antiderivative(z):
    """``int_0^z min(1, 1/|x|) dx``."""
    az = np.abs(z)
    return np.where(az <= 1.0, z, np.sign(z) * (1.0 + np.log(np.maximum(az, 1.0))))


def _ramp_sum(gamma, m, e, R=None):
    """``sum_{gamma_q <= e} m_q (R(e) - R(gamma_q))`` for every e; ``R(z) = z`` by default."""
    order = np.argsort(gamma)
    g, mm = gamma[order], m[order]
    Rg = g if R is None else R(g)
    Re = e if R is None else R(e)
    cm = np.concatenate([[0.0], np.cumsum(mm)])
    cg = np.concatenate([[0.0], np.cumsum(mm * Rg)])
    k = np.searchsorted(g, e, side="right")
    return Re * cm[k] - cg[k]


def _tail_mass(beta, m, lo, hi, w, e_last):
    """Tilted mass beyond ``e_last`` (> 1); finite because the tilt is 1/x."""
    R = _tilted_antiderivative
    out = 0.0
    for s, t, wp in zip(lo, hi, w):
        a = np.maximum(beta - t, e_last)
        b = np.maximum(beta - s, e_last)
        out += wp * float(np.sum(m * (R(b) - R(a)))) / (t - s)
    return out


@dataclass(frozen=True)
class FactorizationReport:
    mc_value: float
    mc_stderr: float
    integral_value: float
    rel_err: float
    L: int
    n: int
    trials: int
    resolution: tuple  # (theta cells, sub-points, energy points)
    coarse_value: float  # integral side at half resolution
    seconds: float


def correlator_integral(spec: KSSpec, L: int, n: int, N: int = 400, Q: int = 8, n_E: int = 400) -> float:
    """Nested quadrature of the operator formula for ``rho_L(n, 0; chi)``, ``0 <= n <= L``.

    The functionals of ``spec`` do not enter: the formula has no place for them.
    """
    if not 0 <= n <= L:
        raise ValidationError("need 0 <= n <= L")
    sites = np.arange(-L, L + 1)
    a = spec.scales(sites)
    chi = _rule(spec.background)(sites)
    dens = [dist.rescale(spec.density, float(s)) for s in a]
    g = ThetaGrid(N, Q)
    v_lo = float(np.min(chi + a * spec.density.lo))
    v_hi = float(np.max(chi + a * spec.density.hi))
    E_lo, E_hi = v_lo - 2.0, v_hi + 2.0
    Es, dE = np.linspace(E_lo, E_hi, n_E, retstep=True)
    vals = np.empty(n_E)
    for i, E in enumerate(Es):
        # the measure of x_k is tilted when its consumer weights by 1/|x_k|, i.e. k <= n
        F = g.point(E - chi[2 * L], dens[2 * L], tilt=L <= n)  # phi_r in x_L
        for j in range(L - 1, 0, -1):
            F = g.push(F, E - chi[j + L], dens[j + L], weighted=j <= n - 1, tilt_in=j + 1 <= n, tilt_out=j <= n)
        G = g.point(E - chi[0], dens[0])  # phi_l in x_{-L}
        for j in range(-L + 1, 0):
            G = g.push(G, E - chi[j + L], dens[j + L], weighted=False)
        H = g.push(G, E - chi[L], dens[L], weighted=False)
        vals[i] = g.pair(F, H, weighted=n >= 1, tilt=n >= 1)
    return float(np.trapezoid(vals, dx=dE))


def correlator_mc(spec: KSSpec, L: int, n: int, trials: int, seed: int, chunk: int = 100_000) -> tuple[float, float]:
    """Monte Carlo ``rho_L(n, 0)`` with the full potential, functionals included."""
    seed = check_seed(seed)
    rng = generator(seed, TRIAL, 0)
    total, total_sq, done = [], [], 0
    while done < trials:
        b = min(chunk, trials - done)
        V, _ = ks_batch(spec, L, rng, b)
        _, vecs, _, _ = eigen_batch(V)
        s = (np.abs(vecs[:, n + L, :]) * np.abs(vecs[:, L, :])).sum(axis=1)
        total.append(math.fsum(s))
        total_sq.append(math.fsum(s * s))
        done += b
    mean = math.fsum(total) / trials
    var = max(math.fsum(total_sq) / trials - mean * mean, 0.0) * trials / (trials - 1)
    return mean, math.sqrt(var / trials)


def factorization_oracle(spec: KSSpec, L: int, n: int, trials: int = 1_000_000, seed: int = 0, N: int = 400, Q: int = 8, n_E: int = 400, budget: float = 600.0) -> FactorizationReport:
    if L > 2:
        raise ValidationError("brute force is limited to L <= 2")
    t0 = time.perf_counter()
    integral = correlator_integral(spec, L, n, N, Q, n_E)
    coarse = correlator_integral(spec, L, n, N // 2, Q, n_E // 2)
    if time.perf_counter() - t0 > budget:
        raise ResolutionError(f"quadrature exceeded the {budget} s budget")
    mc, se = correlator_mc(spec, L, n, trials, seed)
    rel = abs(mc - integral) / abs(mc)
    return FactorizationReport(mc, se, integral, rel, L, n, trials, (N, Q, n_E), coarse, time.perf_counter() - t0)
