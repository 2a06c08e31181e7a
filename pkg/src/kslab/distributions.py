"""Single-site densities, rescalings, sampling and Fourier decay.

Two kinds are supported: the uniform density on [0, 1] and tabulated
densities, which are the piecewise-linear interpolant of a table of
``(abscissa, value)`` pairs and vanish outside the tabulated range.

Fourier convention: ``rhat(k) = int exp(i k x) r(x) dx``.  Only ``|rhat|^2``
is ever used, so the sign of the phase does not matter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BoundViolationError, InvalidScaleError, ValidationError

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Density:
    kind: str
    lo: float
    hi: float
    sup_bound: float
    xs: np.ndarray | None = field(default=None, repr=False)
    ys: np.ndarray | None = field(default=None, repr=False)

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def scale(self) -> float:
        return 1.0

    @property
    def base(self) -> "Density":
        return self


@dataclass(frozen=True, eq=False)
class ScaledDensity:
    """``r_a(x) = r(x / a) / a``."""

    base: Density
    scale: float

    @property
    def support(self) -> tuple[float, float]:
        return (self.scale * self.base.lo, self.scale * self.base.hi)

    @property
    def lo(self) -> float:
        return self.support[0]

    @property
    def hi(self) -> float:
        return self.support[1]

    @property
    def sup_bound(self) -> float:
        return self.base.sup_bound / self.scale

    @property
    def kind(self) -> str:
        return self.base.kind


def uniform() -> Density:
    return Density("uniform", 0.0, 1.0, 1.0)


def tabulated(xs, ys) -> Density:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValidationError("table needs two equal-length columns with >= 2 rows")
    if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
        raise ValidationError("table entries must be finite")
    if np.any(np.diff(xs) <= 0):
        raise ValidationError("abscissae must be strictly increasing")
    if np.any(ys < 0):
        raise ValidationError("density values must be nonnegative")
    total = float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValidationError(f"density integrates to {total!r}, not 1 (tol {NORMALIZATION_TOL})")
    xs.setflags(write=False)
    ys.setflags(write=False)
    return Density("tabulated", float(xs[0]), float(xs[-1]), float(ys.max()), xs, ys)


def load_table(path) -> Density:
    """Read a two-column whitespace- or comma-separated ``abscissa value`` file."""
    text = Path(path).read_text()
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValidationError(f"expected two columns, got {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    if not rows:
        raise ValidationError(f"{path}: empty table")
    xs, ys = zip(*rows)
    return tabulated(xs, ys)


def rescale(d: Density, a: float) -> ScaledDensity:
    a = float(a)
    if not (a > 0 and np.isfinite(a)):
        raise InvalidScaleError(f"scale must be positive and finite, got {a}")
    if isinstance(d, ScaledDensity):
        return ScaledDensity(d.base, d.scale * a)
    return ScaledDensity(d, a)


def _split(d):
    if isinstance(d, ScaledDensity):
        return d.base, d.scale
    return d, 1.0


def _base_pdf(d: Density, x):
    x = np.asarray(x, dtype=float)
    if d.kind == "uniform":
        return np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)
    inside = (x >= d.lo) & (x <= d.hi)
    return np.where(inside, np.interp(x, d.xs, d.ys), 0.0)


def _base_cdf(d: Density, x):
    x = np.asarray(x, dtype=float)
    if d.kind == "uniform":
        return np.clip(x, 0.0, 1.0)
    xs, ys = d.xs, d.ys
    h = np.diff(xs)
    seg_mass = 0.5 * (ys[1:] + ys[:-1]) * h
    cum = np.concatenate([[0.0], np.cumsum(seg_mass)])
    cum /= cum[-1]
    xc = np.clip(x, xs[0], xs[-1])
    i = np.clip(np.searchsorted(xs, xc, side="right") - 1, 0, len(h) - 1)
    t = xc - xs[i]
    slope = (ys[i + 1] - ys[i]) / h[i]
    return cum[i] + ys[i] * t + 0.5 * slope * t * t


def evaluate(d, x):
    """Density value(s) at ``x``; exactly zero outside the support."""
    base, a = _split(d)
    out = _base_pdf(base, np.asarray(x, dtype=float) / a) / a
    return float(out) if np.ndim(out) == 0 else out


def cdf(d, x):
    base, a = _split(d)
    out = _base_cdf(base, np.asarray(x, dtype=float) / a)
    return float(out) if np.ndim(out) == 0 else out


def inverse_cdf(d, u):
    """Quantile function; exact for both kinds (quadratic pieces for tables)."""
    base, a = _split(d)
    u = np.asarray(u, dtype=float)
    if base.kind == "uniform":
        return a * u
    xs, ys = base.xs, base.ys
    h = np.diff(xs)
    seg_mass = 0.5 * (ys[1:] + ys[:-1]) * h
    cum = np.concatenate([[0.0], np.cumsum(seg_mass)])
    cum /= cum[-1]
    # skip zero-mass segments so a flat zero stretch is never selected
    i = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(h) - 1)
    while True:
        empty = seg_mass[i] <= 0
        if not np.any(empty):
            break
        i = np.where(empty, np.minimum(i + 1, len(h) - 1), i)
    rem = u - cum[i]
    y0 = ys[i]
    slope = (ys[i + 1] - y0) / h[i]
    # solve y0 t + slope t^2 / 2 = rem for t in [0, h]
    disc = np.sqrt(np.maximum(y0 * y0 + 2.0 * slope * rem, 0.0))
    denom = y0 + disc
    t = np.where(denom > 0, 2.0 * rem / np.where(denom > 0, denom, 1.0), 0.0)
    return a * (xs[i] + np.clip(t, 0.0, h[i]))


def sample(d, rng: np.random.Generator, size=None):
    """Draw from ``d`` by inverse CDF using ``rng``."""
    u = rng.random(size)
    out = inverse_cdf(d, u)
    return float(out) if size is None else out


def uniform_pieces(d):
    """Piecewise-constant view of ``d`` as a mixture of uniforms.

    Returns arrays ``(lo, hi, weight)``.  Exact for the uniform kind; for
    tables each segment carries its trapezoid mass spread uniformly.
    """
    base, a = _split(d)
    if base.kind == "uniform":
        return np.array([0.0]), np.array([a]), np.array([1.0])
    xs, ys = base.xs, base.ys
    w = 0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)
    keep = w > 0
    return a * xs[:-1][keep], a * xs[1:][keep], w[keep] / w.sum()


def _segment_moments(k, h):
    """I0 = int_0^h e^{ikt} dt and I1 = int_0^h t e^{ikt} dt, stable for small kh."""
    k = np.asarray(k, dtype=float)
    z = 1j * k * h
    small = np.abs(k * h) < 1e-2
    zs = np.where(small, z, 0.0)
    i0_series = np.zeros_like(zs)
    i1_series = np.zeros_like(zs)
    term = np.ones_like(zs)
    fact = 1.0
    for j in range(10):
        if j > 0:
            term = term * zs
            fact *= j
        i0_series = i0_series + term / (fact * (j + 1))
        i1_series = i1_series + term / (fact * (j + 2))
    kk = np.where(small, 1.0, k)
    e = np.exp(1j * kk * h)
    i0 = (e - 1.0) / (1j * kk)
    i1 = h * e / (1j * kk) + (e - 1.0) / (kk * kk)
    return np.where(small, h * i0_series, i0), np.where(small, h * h * i1_series, i1)


def _base_fourier(d: Density, k):
    k = np.asarray(k, dtype=float)
    if d.kind == "uniform":
        # |(e^{ik} - 1)/(ik)| = |sinc(k / 2pi)| in numpy's normalized sinc
        return np.sinc(k / (2.0 * np.pi)) ** 2
    xs, ys = d.xs, d.ys
    total = np.zeros(k.shape, dtype=complex)
    for x0, x1, y0, y1 in zip(xs[:-1], xs[1:], ys[:-1], ys[1:]):
        h = x1 - x0
        i0, i1 = _segment_moments(k, h)
        total += np.exp(1j * k * x0) * (y0 * i0 + (y1 - y0) / h * i1)
    return np.minimum(np.abs(total) ** 2, 1.0)


def fourier_sq(d, k):
    """``|rhat(k)|^2``; closed form for the uniform kind, exact piecewise-linear
    integration for tables."""
    base, a = _split(d)
    out = _base_fourier(base, a * np.asarray(k, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def decay_constant(d, lam: float, k_max: float, n_grid: int = 10_000) -> float:
    """Largest ``c`` with ``sup_{lam' <= |k| <= k_max} |rhat(k)|^2 <= exp(-c lam'^2)``
    at every point ``lam'`` of a log-spaced grid on ``[lam, k_max]``.

    The supremum over ``k`` is taken on the union of that grid and a uniform
    grid of ``n_grid`` points, so features narrower than
    ``(k_max - lam) / n_grid`` can be missed.
    """
    if not (0 < lam < k_max):
        raise ValidationError(f"need 0 < lambda < k_max, got lambda={lam}, k_max={k_max}")
    lams = np.geomspace(lam, k_max, n_grid)
    ks = np.union1d(lams, np.linspace(lam, k_max, n_grid))
    vals = np.asarray(fourier_sq(d, ks))
    suffix_max = np.maximum.accumulate(vals[::-1])[::-1]
    sup_at = suffix_max[np.searchsorted(ks, lams)]
    if np.any(sup_at >= 1.0):
        raise BoundViolationError("|rhat|^2 reaches 1 away from k = 0; no positive c exists")
    c = float(np.min(-np.log(sup_at) / lams**2))
    if not c > 0:
        raise BoundViolationError(f"no positive decay constant (got {c})")
    return c
