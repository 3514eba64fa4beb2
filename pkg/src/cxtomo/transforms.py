"""Forward operators: ray, beam and attenuated transforms and the Hilbert filters."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ._parallel import pmap
from .errors import GridMismatch, SupportViolation, ValidationError
from .geometry.family import PolarizedFamily, as_complex

DEFAULT_INTERVALS = 1024
HILBERT_PAD = 4
DECAY_TOL = 1e-9


@dataclass(frozen=True)
class SGrid:
    """Sampling of the (theta, s) data domain.

    Attributes
    ----------
    thetas : ndarray
        ``ntheta`` uniform angles on ``[0, 2 pi)``.
    s_nodes : ndarray
        ``ns`` uniform transverse labels spanning the family's ``s_range``.
    t_step : float or None
        Maximum step of the trapezoid rule along each curve.  ``None`` uses
        ``DEFAULT_INTERVALS`` intervals on every curve.
    """

    thetas: np.ndarray
    s_nodes: np.ndarray
    t_step: Optional[float] = None

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float)
        s = np.asarray(self.s_nodes, dtype=float)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "s_nodes", s)
        if th.ndim != 1 or th.size < 4 or th.size % 2:
            raise ValidationError("ntheta must be an even integer >= 4")
        if s.ndim != 1 or s.size < 9 or s.size % 2 == 0:
            raise ValidationError("ns must be an odd integer >= 9")
        if np.any(np.diff(s) <= 0):
            raise ValidationError("s_nodes must be strictly increasing")
        if self.t_step is not None and not (self.t_step > 0):
            raise ValidationError("t_step must be positive")

    @classmethod
    def uniform(cls, family: PolarizedFamily, ntheta: int, ns: int, t_step: Optional[float] = None) -> "SGrid":
        lo, hi = family.s_range
        return cls(2 * np.pi * np.arange(ntheta) / ntheta, np.linspace(lo, hi, ns), t_step)

    @property
    def ntheta(self) -> int:
        return self.thetas.size

    @property
    def ns(self) -> int:
        return self.s_nodes.size

    @property
    def ds(self) -> float:
        return float(self.s_nodes[1] - self.s_nodes[0])

    def same_as(self, other: "SGrid") -> bool:
        return (self.thetas.shape == other.thetas.shape and self.s_nodes.shape == other.s_nodes.shape
                and np.array_equal(self.thetas, other.thetas) and np.array_equal(self.s_nodes, other.s_nodes)
                and self.t_step == other.t_step)

    def t_intervals(self, family: PolarizedFamily) -> int:
        if self.t_step is None:
            return DEFAULT_INTERVALS
        lo, hi = family.t_limits(self.s_nodes)
        return max(2, int(math.ceil(float(np.max(hi - lo)) / self.t_step)))


@dataclass(frozen=True)
class Sinogram:
    """Samples of ``I_theta f`` (``kind='plain'``) or ``I_{a,theta} f`` (``'attenuated'``)."""

    grid: SGrid
    values: np.ndarray
    kind: str = "plain"
    family_name: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.grid.ntheta, self.grid.ns):
            raise GridMismatch(f"values shape {v.shape} does not match grid {(self.grid.ntheta, self.grid.ns)}")
        if self.kind not in ("plain", "attenuated"):
            raise ValidationError(f"unknown sinogram kind {self.kind!r}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("sinogram contains non-finite values")

    def with_values(self, values) -> "Sinogram":
        return Sinogram(self.grid, values, self.kind, self.family_name)


@dataclass(frozen=True)
class FilteredSinogram:
    grid: SGrid
    values: np.ndarray
    filter_kind: str = "hilbert"
    family_name: str = ""


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _as_field(f) -> Callable:
    if f is None:
        return lambda z: np.zeros(np.shape(z))
    return f


def check_support(f, delta: Optional[float] = None) -> None:
    """Raise SupportViolation if ``f`` is nonzero within ``delta / 2`` of the circle.

    Objects with a ``support_radius`` attribute are checked from metadata,
    plain callables by sampling a boundary annulus.
    """
    if delta is None:
        delta = getattr(f, "delta", 0.05)
    limit = 1 - delta / 2
    radius = getattr(f, "support_radius", None)
    if radius is not None:
        if radius > limit + 1e-12:
            raise SupportViolation(f"support radius {radius} exceeds {limit}")
        return
    r = np.linspace(limit, 1.0, 9)[:, None]
    phi = 2 * np.pi * np.arange(256) / 256
    vals = np.asarray(f(r * np.exp(1j * phi)))
    if np.any(np.abs(vals) > 1e-12):
        raise SupportViolation(f"field is nonzero within {delta / 2} of the boundary")


def _curve_nodes(family: PolarizedFamily, grid: SGrid):
    """Unrotated quadrature nodes ``curve(T, s_j)`` and the parameters ``T``."""
    n = grid.t_intervals(family)
    u = np.linspace(0.0, 1.0, n + 1)
    lo, hi = family.t_limits(grid.s_nodes)
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    T = lo[:, None] + (hi - lo)[:, None] * u[None, :]
    with np.errstate(all="ignore"):
        Z = np.asarray(family.curve(T, grid.s_nodes[:, None]), dtype=complex)
    Z = np.where(np.isfinite(Z), Z, 0)
    return T, Z, u


def _trap(vals, T):
    return np.trapezoid(vals, T, axis=-1)


def _running_beam(av, T):
    """``D a`` at every node: running integral minus half the total."""
    A = cumulative_trapezoid(av, T, axis=-1, initial=0)
    return A - 0.5 * A[..., -1:]


# --------------------------------------------------------------------------
# forward transforms
# --------------------------------------------------------------------------

def ray_transform(f, family: PolarizedFamily, grid: SGrid, threads=None, check: bool = True) -> Sinogram:
    """``(I_theta f)(s) = int f(e^{i theta} curve(t, s)) dt`` on the grid.

    Composite trapezoid along each curve; rows are computed in parallel.
    """
    f = _as_field(f)
    if check:
        check_support(f)
    T, Z, _ = _curve_nodes(family, grid)

    def row(th):
        return _trap(np.asarray(f(np.exp(1j * th) * Z), dtype=float), T)

    vals = np.array(pmap(row, grid.thetas, threads))
    return Sinogram(grid, vals, "plain", family.name)


def attenuated_ray_transform(f, a, family: PolarizedFamily, grid: SGrid, threads=None, check: bool = True) -> Sinogram:
    """``(I_{a,theta} f)(s) = int f exp(D_theta a) dt`` along each curve.

    ``D_theta a`` comes from a single cumulative sweep over the same nodes.
    """
    f = _as_field(f)
    a = _as_field(a)
    if check:
        check_support(f)
        check_support(a)
    T, Z, _ = _curve_nodes(family, grid)

    def row(th):
        ZZ = np.exp(1j * th) * Z
        Da = _running_beam(np.asarray(a(ZZ), dtype=float), T)
        return _trap(np.asarray(f(ZZ), dtype=float) * np.exp(Da), T)

    vals = np.array(pmap(row, grid.thetas, threads))
    return Sinogram(grid, vals, "attenuated", family.name)


def beam_tables(a, family: PolarizedFamily, grid: SGrid, theta: float):
    """``D_theta a`` on the curve nodes of one angle.

    Returns ``(u, table)`` where ``table[j, k]`` is the value at normalized
    parameter ``u[k] = (t - t_lo) / (t_hi - t_lo)`` on curve ``s_j``.
    """
    T, Z, u = _curve_nodes(family, grid)
    av = np.asarray(_as_field(a)(np.exp(1j * theta) * Z), dtype=float)
    return u, _running_beam(av, T)


def beam_transform(psi, family: PolarizedFamily, z, theta: float, nodes: int = 256, check: bool = True):
    """Symmetrized beam transform ``(D_theta psi)(z)``.

    Half the difference of the integrals of ``psi`` before and after ``z``
    along the rotated curve through ``z``; Gauss-Legendre on each piece.
    """
    psi = _as_field(psi)
    if check:
        check_support(psi)
    z = np.asarray(as_complex(z), dtype=complex)
    e = np.exp(1j * theta)
    w = z / e
    s0 = family.s_of(w)
    t0 = family.t_of(w)
    lo, hi = family.t_limits(s0)
    x, wt = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (x + 1)

    def piece(a, b):
        T = a[..., None] + (b - a)[..., None] * x
        vals = np.asarray(psi(e * family.curve(T, s0[..., None])), dtype=float)
        return 0.5 * (b - a) * np.sum(vals * wt, axis=-1)

    out = 0.5 * (piece(np.asarray(lo, float), t0) - piece(t0, np.asarray(hi, float)))
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Hilbert filters
# --------------------------------------------------------------------------

def hilbert_periodic(rows, pad: int = HILBERT_PAD) -> np.ndarray:
    """Multiplier ``-i sign(k)`` on rows zero padded to ``pad`` times their length.

    Returns the full padded periodic buffer (real part).
    """
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[-1] * pad
    k = np.fft.fftfreq(n)
    mult = -1j * np.sign(k)
    mult[n // 2] = 0.0
    return np.fft.ifft(np.fft.fft(rows, n=n, axis=-1) * mult, axis=-1).real


def _correction_kernel(ns: int, h: float, pad: int) -> np.ndarray:
    """Difference between the line kernel ``1/(pi u)`` and its periodization."""
    L = pad * ns * h
    d = h * (np.arange(ns)[:, None] - np.arange(ns)[None, :])
    K = np.zeros_like(d)
    nz = d != 0
    K[nz] = 1 / (np.pi * d[nz]) - 1 / (L * np.tan(np.pi * d[nz] / L))
    return K


def hilbert_fft(rows, h: float, pad: int = HILBERT_PAD, check: bool = True) -> np.ndarray:
    """Hilbert transform ``(1/pi) p.v. int g(y) / (x - y) dy`` of each row.

    Rows are samples with spacing ``h`` of functions supported inside the
    grid.  The padded FFT computes the periodic transform; a smooth kernel
    correction removes the periodization so the result is the transform on
    the whole line.
    """
    rows = np.asarray(rows, dtype=float)
    if check:
        edge = np.maximum(np.abs(rows[..., 0]), np.abs(rows[..., -1]))
        scale = np.maximum(1.0, np.max(np.abs(rows), axis=-1))
        if np.any(edge > DECAY_TOL * scale):
            raise SupportViolation("sinogram rows do not decay at the ends of the s grid")
    ns = rows.shape[-1]
    out = hilbert_periodic(rows, pad)[..., :ns]
    return out + h * rows @ _correction_kernel(ns, h, pad).T


def hilbert_s(sino: Sinogram) -> FilteredSinogram:
    """Row-wise Hilbert transform of a sinogram in ``s``."""
    vals = hilbert_fft(sino.values, sino.grid.ds)
    return FilteredSinogram(sino.grid, vals, "hilbert", sino.family_name)


def attenuation_phases(a_sino: Sinogram):
    """``C = cos(H(I a) / 2)`` and ``S = sin(H(I a) / 2)``."""
    ha = hilbert_fft(a_sino.values, a_sino.grid.ds)
    return np.cos(ha / 2), np.sin(ha / 2)


def build_Ha(sino_a: Sinogram, a_sino: Sinogram) -> FilteredSinogram:
    """``H_a g = C H(C g) + S H(S g)`` row by row."""
    if not sino_a.grid.same_as(a_sino.grid) or sino_a.family_name != a_sino.family_name:
        raise GridMismatch("attenuated data and attenuation sinogram use different grids or families")
    h = sino_a.grid.ds
    C, S = attenuation_phases(a_sino)
    g = sino_a.values
    vals = C * hilbert_fft(C * g, h) + S * hilbert_fft(S * g, h)
    return FilteredSinogram(sino_a.grid, vals, "H_a", sino_a.family_name)
