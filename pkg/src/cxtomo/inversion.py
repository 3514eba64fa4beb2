"""Reconstruction by Poisson-weighted backprojection at the Blaschke zeros."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.interpolate import CubicSpline

from ._parallel import chunks, pmap
from .errors import DomainError, GridMismatch, SupportViolation, TypeHViolation, ValidationError
from .geometry.family import PolarizedFamily, as_complex
from .geometry.fields import directional_derivative, eval_coeffs
from .geometry.typeh import check_type_h
from .geometry.zeros import find_zeros_batch
from .transforms import Sinogram, beam_tables, build_Ha, hilbert_s, ray_transform

DEFAULT_DELTA = 0.05
PIXEL_CHUNK = 2048
THETA_CHUNK = 8
FD_STEP = 1e-3


@dataclass(frozen=True)
class ReconImage:
    """Reconstruction on the ``n x n`` grid over ``[-1, 1]^2``.

    ``values[iy, ix]`` belongs to ``x[ix] + 1j * x[iy]`` with
    ``x = linspace(-1, 1, n)``; pixels outside ``|z| <= 1 - delta`` are 0.
    """

    n: int
    values: np.ndarray
    mask: np.ndarray
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if self.values.shape != (self.n, self.n) or self.mask.shape != (self.n, self.n):
            raise ValidationError("image and mask must be n x n")
        if not np.all(np.isfinite(self.values[self.mask])):
            raise ValidationError("reconstruction is not finite inside the mask")
        if np.any(self.values[~self.mask] != 0):
            raise ValidationError("reconstruction must vanish outside the mask")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.n)

    @property
    def z(self) -> np.ndarray:
        return pixel_grid(self.n)


def pixel_grid(n: int) -> np.ndarray:
    x = np.linspace(-1.0, 1.0, n)
    return x[None, :] + 1j * x[:, None]


def disc_mask(n: int, delta: float = DEFAULT_DELTA) -> np.ndarray:
    return np.abs(pixel_grid(n)) <= 1 - delta


def poisson_kernel(lam, theta):
    """``P(lam, theta) = (1 - |lam|^2) / |1 - e^{-i theta} lam|^2``."""
    lam = np.asarray(lam, dtype=complex)
    if np.any(np.abs(lam) >= 1):
        raise DomainError("Poisson kernel needs |lambda| < 1")
    out = (1 - np.abs(lam) ** 2) / np.abs(1 - np.exp(-1j * np.asarray(theta)) * lam) ** 2
    return float(out) if np.ndim(out) == 0 else out


def select_zeros(family: PolarizedFamily, zs, lambda_index: Optional[int] = None, threads=None) -> np.ndarray:
    """Zero ``lam_i(z)`` used at every point (default rule or explicit index)."""
    zs = np.asarray(zs, dtype=complex).ravel()

    def work(sl):
        sets = find_zeros_batch(family, zs[sl])
        try:
            return np.array([zset.select(lambda_index) for zset in sets], dtype=complex)
        except IndexError as exc:
            raise ValidationError(str(exc)) from None

    parts = pmap(work, chunks(zs.size, PIXEL_CHUNK), threads)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def _require_type_h(family: PolarizedFamily):
    report = check_type_h(family)
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed and not c.advisory]
        raise TypeHViolation(f"family {family.name!r} fails type-H checks: {', '.join(failed)}")


def _check_family(sino: Sinogram, family: PolarizedFamily):
    if sino.family_name and sino.family_name != family.name:
        raise GridMismatch(f"sinogram was generated for {sino.family_name!r}, not {family.name!r}")


def _spline_derivative_table(s_nodes, rows):
    """Piecewise coefficients of ``d/ds`` of the natural cubic spline of each row."""
    pp = CubicSpline(s_nodes, rows, axis=1, bc_type="natural").derivative()
    return pp.c  # (3, ns - 1, ntheta)


def _eval_pp(c, s_nodes, k, sv):
    """Evaluate piecewise-quadratic coefficients ``c[:, :, k]`` at ``sv``."""
    idx = np.clip(np.searchsorted(s_nodes, sv, side="right") - 1, 0, s_nodes.size - 2)
    dx = sv - s_nodes[idx]
    return (c[0, idx, k] * dx + c[1, idx, k]) * dx + c[2, idx, k]


def reconstruct(sino: Sinogram, family: PolarizedFamily, n: int, delta: float = DEFAULT_DELTA,
                lambda_index: Optional[int] = None, threads=None, check: bool = True) -> ReconImage:
    """Invert plain ray-transform data.

    At each masked pixel ``z`` the filtered data are differentiated along
    ``X_perp`` by the chain rule, ``g_s(s(z, e^{i theta})) * X_perp s``, and
    averaged over theta with Poisson weights at the selected zero
    ``lam_i(z)``.
    """
    if sino.kind != "plain":
        raise ValidationError("reconstruct needs a plain sinogram; use reconstruct_attenuated")
    _check_family(sino, family)
    if check:
        _require_type_h(family)
    grid = sino.grid
    g = hilbert_s(sino).values
    coef = _spline_derivative_table(grid.s_nodes, g)
    mask = disc_mask(n, delta)
    zs = pixel_grid(n)[mask]
    lam = select_zeros(family, zs, lambda_index, threads)
    e = np.exp(1j * grid.thetas)
    s_lo, s_hi = grid.s_nodes[0], grid.s_nodes[-1]
    kk = np.arange(grid.ntheta)[None, :]

    def work(sl):
        z = zs[sl][:, None]
        c = eval_coeffs(family, z, e[None, :])
        sv = np.real(c.s_lambda)
        if np.any(sv < s_lo) or np.any(sv > s_hi):
            raise SupportViolation("curve label outside the sampled s range")
        w = poisson_kernel(lam[sl][:, None], grid.thetas[None, :]) * np.real(c.xperp_s)
        gs = _eval_pp(coef, grid.s_nodes, kk, sv)
        return np.sum(w * gs, axis=1) / (2 * grid.ntheta)

    vals = np.concatenate(pmap(work, chunks(zs.size, PIXEL_CHUNK), threads)) if zs.size else np.zeros(0)
    img = np.zeros((n, n))
    img[mask] = vals
    return ReconImage(n, img, mask, delta)


def _normalized_param(family, w, s):
    lo, hi = family.t_limits(s)
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (family.t_of(w) - lo) / span


def reconstruct_attenuated(sino_a: Sinogram, a, family: PolarizedFamily, n: int, delta: float = DEFAULT_DELTA,
                           lambda_index: Optional[int] = None, threads=None, check: bool = True,
                           h: float = FD_STEP) -> ReconImage:
    """Invert attenuated ray-transform data for a known attenuation ``a``.

    The integrating factor ``exp(-D_theta a)`` varies across curves, so
    ``X_perp`` is applied to the full field by a 4th-order directional
    difference with step ``h``.
    """
    if sino_a.kind != "attenuated":
        raise ValidationError("reconstruct_attenuated needs an attenuated sinogram")
    _check_family(sino_a, family)
    if check:
        _require_type_h(family)
    grid = sino_a.grid
    a_sino = ray_transform(a, family, grid, threads=threads)
    filt = build_Ha(sino_a, a_sino).values
    mask = disc_mask(n, delta)
    zs = pixel_grid(n)[mask]
    lam = select_zeros(family, zs, lambda_index, threads)
    s_nodes = grid.s_nodes

    def angle(k):
        th = grid.thetas[k]
        e = np.exp(1j * th)
        u, table = beam_tables(a, family, grid, th)
        # cubic B-spline of the uniform (s, u) table
        coef = ndimage.spline_filter(table, order=3, mode="mirror")
        ds, du = s_nodes[1] - s_nodes[0], u[1] - u[0]
        G = CubicSpline(s_nodes, filt[k], bc_type="natural")

        def phi(zz):
            w = zz / e
            s = family.s_of(w)
            if np.any(s < s_nodes[0]) or np.any(s > s_nodes[-1]):
                raise SupportViolation("curve label outside the sampled s range")
            pos = np.stack([(s - s_nodes[0]) / ds, _normalized_param(family, w, s) / du])
            Da = ndimage.map_coordinates(coef, pos, order=3, mode="mirror", prefilter=False)
            return np.exp(-Da) * G(s)

        xi = eval_coeffs(family, zs, e).xi
        val = directional_derivative(phi, zs, -1j * xi, h)
        return poisson_kernel(lam, th) * np.real(val)

    def block(sl):
        acc = np.zeros(zs.size)
        for k in range(sl.start, sl.stop):
            acc += angle(k)
        return acc

    acc = np.zeros(zs.size)
    for part in pmap(block, chunks(grid.ntheta, THETA_CHUNK), threads):
        acc += part
    img = np.zeros((n, n))
    img[mask] = acc / (2 * grid.ntheta)
    return ReconImage(n, img, mask, delta)


def jump_field(sino: Sinogram, family: PolarizedFamily, z, theta: float) -> complex:
    """``phi(z, e^{i theta}) = i H(I_theta f)(s(z e^{-i theta}))``.

    ``theta`` must be one of the sinogram angles.
    """
    grid = sino.grid
    k = np.flatnonzero(np.abs(np.angle(np.exp(1j * (grid.thetas - theta)))) < 1e-9)
    if k.size == 0:
        raise ValidationError("theta is not a sinogram angle")
    row = hilbert_s(sino).values[k[0]]
    s = family.s_of(as_complex(z) * np.exp(-1j * theta))
    if np.any(s < grid.s_nodes[0]) or np.any(s > grid.s_nodes[-1]):
        raise SupportViolation("curve label outside the sampled s range")
    val = 1j * CubicSpline(grid.s_nodes, row, bc_type="natural")(s)
    return complex(val) if np.ndim(val) == 0 else val
