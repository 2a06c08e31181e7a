"""Finite-volume Dirichlet Hamiltonians and a symmetric tridiagonal eigensolver.

Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
iteration with a partially pivoted tridiagonal LU.  Eigenvalues whose gap is
below ``CLUSTER_RTOL * ||T||`` are grouped and their vectors are computed
one rank at a time, each orthogonalized against the cluster members already
finished.  Every routine is vectorized over a leading batch axis so many
small operators can be handled per Python loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure

EPS = np.finfo(float).eps
PIVMIN = 1e-290
CLUSTER_RTOL = 1e-4
RESIDUAL_RTOL = 1e-10
ORTHO_TOL = 1e-10
NORM_TOL = 1e-12
N_INVERSE_ITERATIONS = 3

_START = np.random.default_rng(20160526).uniform(-1.0, 1.0, 4096)


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """``psi(n+1) + psi(n-1) + V(n) psi(n)`` on sites ``lo .. lo+N-1``, Dirichlet ends."""

    diag: np.ndarray
    lo: int = 0

    @property
    def size(self) -> int:
        return len(self.diag)

    @property
    def hi(self) -> int:
        return self.lo + self.size - 1

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.diag))) if self.size else 0.0

    @property
    def sigma0(self) -> tuple[float, float]:
        return (-2.0 - self.bound, 2.0 + self.bound)

    def dense(self) -> np.ndarray:
        n = self.size
        h = np.diag(np.asarray(self.diag, dtype=float))
        idx = np.arange(n - 1)
        h[idx, idx + 1] = 1.0
        h[idx + 1, idx] = 1.0
        return h

    def index(self, n: int) -> int:
        if not self.lo <= n <= self.hi:
            raise IndexError(f"site {n} outside [{self.lo}, {self.hi}]")
        return n - self.lo


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    lo: int
    residual: float
    orthogonality: float
    simple: bool

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def index(self, n: int) -> int:
        i = n - self.lo
        if not 0 <= i < self.size:
            raise IndexError(f"site {n} outside [{self.lo}, {self.lo + self.size - 1}]")
        return i


def build(window) -> TridiagonalOperator:
    """Operator for a PotentialWindow (anything with ``values`` and ``lo``)."""
    return TridiagonalOperator(np.asarray(window.values, dtype=float).copy(), int(window.lo))


# --- batched kernels ------------------------------------------------------


def _sturm_count(d, e2, x):
    """Number of eigenvalues below each shift.  d: (B,N), e2: (B,N-1), x: (B,K)."""
    q = d[:, :1] - x
    q = np.where(np.abs(q) < PIVMIN, -PIVMIN, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, d.shape[1]):
        q = (d[:, i : i + 1] - x) - e2[:, i - 1 : i] / q
        q = np.where(np.abs(q) < PIVMIN, -PIVMIN, q)
        count += q < 0
    return count


def _bisect(d, e):
    b, n = d.shape
    ae = np.abs(e)
    left = np.zeros((b, n))
    right = np.zeros((b, n))
    left[:, 1:] = ae
    right[:, :-1] = ae
    gl = np.min(d - left - right, axis=1, keepdims=True)
    gu = np.max(d + left + right, axis=1, keepdims=True)
    pad = 2 * EPS * np.maximum(np.abs(gl), np.abs(gu)) * n + 2 * PIVMIN
    lo = np.broadcast_to(gl - pad, (b, n)).copy()
    hi = np.broadcast_to(gu + pad, (b, n)).copy()
    target = np.arange(1, n + 1)[None, :]
    e2 = e * e
    for _ in range(200):
        width = hi - lo
        tol = 2 * EPS * np.maximum(np.abs(lo), np.abs(hi)) + 4 * PIVMIN
        open_ = width > tol
        if not np.any(open_):
            break
        mid = 0.5 * (lo + hi)
        above = _sturm_count(d, e2, mid) >= target
        # converged intervals are frozen so a result never depends on its batch
        hi = np.where(open_ & above, mid, hi)
        lo = np.where(open_ & ~above, mid, lo)
    return 0.5 * (lo + hi)


def _factor(d, e, lam, pivtol):
    """Pivoted LU of T - lam for every shift.  Returns arrays indexed [i, b, k]."""
    b, n = d.shape
    k = lam.shape[1]
    u1 = np.empty((n, b, k))
    u2 = np.zeros((n, b, k))
    u3 = np.zeros((n, b, k))
    mult = np.zeros((max(n - 1, 0), b, k))
    swap = np.zeros((max(n - 1, 0), b, k), dtype=bool)
    alpha = d[:, :1] - lam
    beta = np.broadcast_to(e[:, :1], (b, k)) if n > 1 else np.zeros((b, k))
    for i in range(n - 1):
        c = e[:, i : i + 1]
        a_next = d[:, i + 1 : i + 2] - lam
        b_next = e[:, i + 1 : i + 2] if i + 1 < n - 1 else np.zeros((b, 1))
        s = np.abs(c) > np.abs(alpha)
        p = np.where(s, c, alpha)
        p = np.where(np.abs(p) < pivtol, np.where(p < 0, -pivtol, pivtol), p)
        m = np.where(s, alpha, c) / p
        u1[i] = p
        u2[i] = np.where(s, a_next, beta)
        u3[i] = np.where(s, b_next, 0.0)
        mult[i] = m
        swap[i] = s
        alpha, beta = (
            np.where(s, beta - m * a_next, a_next - m * beta),
            np.where(s, -m * b_next, b_next),
        )
    alpha = np.where(np.abs(alpha) < pivtol, np.where(alpha < 0, -pivtol, pivtol), alpha)
    u1[n - 1] = alpha
    return u1, u2, u3, mult, swap


def _solve(fac, rhs):
    u1, u2, u3, mult, swap = fac
    r = rhs.copy()
    n = r.shape[0]
    for i in range(n - 1):
        top = np.where(swap[i], r[i + 1], r[i])
        r[i + 1] = np.where(swap[i], r[i], r[i + 1]) - mult[i] * top
        r[i] = top
    x = np.empty_like(r)
    x[n - 1] = r[n - 1] / u1[n - 1]
    if n > 1:
        x[n - 2] = (r[n - 2] - u2[n - 2] * x[n - 1]) / u1[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (r[i] - u2[i] * x[i + 1] - u3[i] * x[i + 2]) / u1[i]
    return x


def _clusters(lam, scale):
    """Rank of each eigenvalue inside its cluster, and the cluster start index."""
    b, n = lam.shape
    close = np.diff(lam, axis=1) < CLUSTER_RTOL * scale
    rank = np.zeros((b, n), dtype=np.int64)
    for i in range(1, n):
        rank[:, i] = np.where(close[:, i - 1], rank[:, i - 1] + 1, 0)
    return rank


def _normalize(x):
    nrm = np.sqrt((x * x).sum(axis=0))
    return x / nrm


def _eigvecs(d, e, lam):
    b, n = d.shape
    scale = np.maximum(1.0, np.max(np.abs(d), axis=1, keepdims=True) + 2 * np.max(np.abs(e), axis=1, keepdims=True, initial=0.0))
    fac = _factor(d, e, lam, EPS * scale)
    rank = _clusters(lam, scale)
    start = np.broadcast_to(_START[:n, None, None], (n, b, n)) if n <= len(_START) else None
    if start is None:
        start = np.broadcast_to(np.random.default_rng(20160526).uniform(-1, 1, n)[:, None, None], (n, b, n))
    vecs = np.zeros((n, b, n))
    cols = np.arange(n)
    for r in range(int(rank.max()) + 1):
        active = rank == r
        x = start.copy()
        for _ in range(N_INVERSE_ITERATIONS):
            x = _orthogonalize(x, vecs, rank, r, cols)
            x = _normalize(_solve(fac, x))
            x = _orthogonalize(x, vecs, rank, r, cols)
            x = _normalize(x)
        vecs = np.where(active[None], x, vecs)
    return vecs


def _orthogonalize(x, vecs, rank, r, cols):
    # member with rank p < r sits at column k - (r - p) of the same cluster
    for p in range(r):
        src = cols[None, :] - (r - p)
        ok = (rank >= r) & (src >= 0)
        src = np.clip(src, 0, None)
        v = np.take_along_axis(vecs, np.broadcast_to(src[None], vecs.shape), axis=2)
        dot = (x * v).sum(axis=0)
        x = x - np.where(ok, dot, 0.0)[None] * v
    return x


def eigen_batch(diags, offdiag=None, check=True):
    """Eigen-decompose a batch of tridiagonal matrices.

    ``diags`` has shape (B, N).  ``offdiag`` defaults to all ones.  Returns
    eigenvalues (B, N) ascending, eigenvectors (B, N, N) with eigenvectors
    in columns and first component positive, residuals (B,), orthogonality
    errors (B,).
    """
    d = np.atleast_2d(np.asarray(diags, dtype=float))
    b, n = d.shape
    if n < 1:
        raise ValueError("need at least one site")
    e = np.ones((b, n - 1)) if offdiag is None else np.broadcast_to(np.asarray(offdiag, float), (b, n - 1)).copy()
    lam = _bisect(d, e) if n > 1 else d.copy()
    if n == 1:
        vecs = np.ones((b, 1, 1))
    else:
        v = _eigvecs(d, e, lam)  # (i, b, k)
        vecs = v.transpose(1, 0, 2)
        # Jacobi eigenvectors never vanish at the first site; fix the sign there
        sign = np.where(vecs[:, :1, :] < 0, -1.0, 1.0)
        vecs = vecs * sign
    # residual max_k ||T phi - lam phi||_inf
    tv = d[:, :, None] * vecs
    if n > 1:
        tv[:, :-1, :] += e[:, :, None] * vecs[:, 1:, :]
        tv[:, 1:, :] += e[:, :, None] * vecs[:, :-1, :]
    res = np.max(np.abs(tv - lam[:, None, :] * vecs), axis=(1, 2))
    gram = np.einsum("bik,bil->bkl", vecs, vecs)
    ortho = np.max(np.abs(gram - np.eye(n)[None]), axis=(1, 2))
    if check:
        bound = np.max(np.abs(d), axis=1)
        bad = (res > RESIDUAL_RTOL * (1 + bound)) | (ortho > ORTHO_TOL) | ~np.isfinite(res)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise NumericalFailure(
                "eigensolver missed its tolerance",
                {"batch_index": i, "residual": float(res[i]), "orthogonality": float(ortho[i]), "size": n},
            )
    return lam, vecs, res, ortho


def eigen(op: TridiagonalOperator) -> EigenDecomposition:
    lam, vecs, res, ortho = eigen_batch(op.diag[None, :])
    w = lam[0]
    return EigenDecomposition(
        eigenvalues=w,
        eigenvectors=vecs[0],
        lo=op.lo,
        residual=float(res[0]),
        orthogonality=float(ortho[0]),
        simple=bool(np.all(np.diff(w) > 0)),
    )


def amplitude(e: EigenDecomposition, n: int, m: int, t):
    """``<delta_n, exp(-itH) delta_m>``; ``t`` may be an array."""
    phi_n = e.eigenvectors[e.index(n)]
    phi_m = e.eigenvectors[e.index(m)]
    t = np.asarray(t, dtype=float)
    phase = np.exp(-1j * np.multiply.outer(t, e.eigenvalues))
    out = phase @ (phi_n * phi_m)
    return complex(out) if out.ndim == 0 else out


def correlator(e: EigenDecomposition, n: int, m: int) -> float:
    """``sum_k |phi_k(n)| |phi_k(m)|``."""
    return float(np.abs(e.eigenvectors[e.index(n)]) @ np.abs(e.eigenvectors[e.index(m)]))


def correlator_row(e: EigenDecomposition, m: int) -> np.ndarray:
    """Correlator against a fixed site ``m`` for every site of the window."""
    a = np.abs(e.eigenvectors)
    return a @ a[e.index(m)]


def spectrum_csv(e: EigenDecomposition) -> str:
    lines = ["k,E"]
    lines += [f"{k},{v:.17g}" for k, v in enumerate(e.eigenvalues, start=1)]
    return "\n".join(lines) + "\n"
