"""Complexified transport fields ``X_lam = xi d/dz + rho d/dzbar``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateField, DomainError, GridBoundary, SingularLambda
from .family import PolarizedFamily, as_complex


@dataclass(frozen=True)
class ComplexifiedCoeffs:
    """Coefficients of the complexified field at ``(z, lam)``.

    Every field may be a scalar or an array broadcast over ``z`` and ``lam``.
    """

    xi: complex
    rho: complex
    s_lambda: complex
    ds_dz: complex
    ds_dzbar: complex

    @property
    def transport_residual(self):
        """``xi s_z + rho s_zbar``; vanishes because s is a first integral."""
        return self.xi * self.ds_dz + self.rho * self.ds_dzbar

    @property
    def xperp_s(self):
        """``X_perp s = i (-xi s_z + rho s_zbar)``."""
        return 1j * (-self.xi * self.ds_dz + self.rho * self.ds_dzbar)


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=complex)
    if np.any(np.abs(lam) < 1e-14):
        raise SingularLambda("|lambda| < 1e-14")
    return lam


def _check_z(z):
    z = as_complex(z)
    if np.any(np.abs(z) >= 1.0):
        raise DomainError("z must lie inside the unit disc")
    return z


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DomainError("polarized evaluation left the family's domain")


def eval_coeffs(family: PolarizedFamily, z, lam) -> ComplexifiedCoeffs:
    """Evaluate ``xi, rho, s`` and the partials of ``s`` at ``(z, lam)``.

    ``z`` and ``lam`` broadcast against each other.
    """
    z = _check_z(z)
    lam = _check_lambda(lam)
    w1 = z / lam
    w2 = lam * np.conj(z)
    with np.errstate(all="ignore"):
        xi = lam * family.A(w1, w2)
        rho = family.B(w1, w2) / lam
        s = family.s_pol(w1, w2)
        d1, d2 = family.s_partials(w1, w2)
    ds_dz = d1 / lam
    ds_dzbar = lam * d2
    _finite(xi, rho, s, ds_dz, ds_dzbar)
    scalar = np.ndim(z) == 0 and np.ndim(lam) == 0
    if scalar:
        xi, rho, s, ds_dz, ds_dzbar = (complex(v) for v in (xi, rho, s, ds_dz, ds_dzbar))
    return ComplexifiedCoeffs(xi, rho, s, ds_dz, ds_dzbar)


def mu_ratio(family: PolarizedFamily, z, lam):
    """Beltrami coefficient ``xi / rho`` of the complexified field."""
    z = _check_z(z)
    lam = _check_lambda(lam)
    w1 = z / lam
    w2 = lam * np.conj(z)
    with np.errstate(all="ignore"):
        xi = lam * family.A(w1, w2)
        rho = family.B(w1, w2) / lam
    _finite(xi, rho)
    if np.any(np.abs(rho) < 1e-14):
        raise DegenerateField("|rho| < 1e-14")
    out = xi / rho
    return complex(out) if np.ndim(out) == 0 else out


def jacobian_ds(family: PolarizedFamily, z, lam):
    """``|s_z|^2 - |s_zbar|^2``, positive inside the unit lambda-disc."""
    c = eval_coeffs(family, z, lam)
    out = np.abs(c.ds_dz) ** 2 - np.abs(c.ds_dzbar) ** 2
    return float(out) if np.ndim(out) == 0 else out


def xperp_s(family: PolarizedFamily, z, theta):
    """``X_perp s`` on the unit circle ``lam = exp(i theta)`` (real valued)."""
    c = eval_coeffs(family, z, np.exp(1j * np.asarray(theta)))
    return np.real(c.xperp_s)


# --------------------------------------------------------------------------
# applying the fields to sampled scalar functions
# --------------------------------------------------------------------------

_STENCIL = {2: (np.array([-1, 1]), np.array([-0.5, 0.5])),
            4: (np.array([-2, -1, 1, 2]), np.array([1.0, -8.0, 8.0, -1.0]) / 12)}


@dataclass(frozen=True)
class GridField:
    """Scalar field sampled on a uniform Cartesian grid.

    ``values[iy, ix]`` is the sample at ``x0 + ix h + 1j (y0 + iy h)``.
    """

    values: np.ndarray
    x0: float
    y0: float
    h: float

    def _index(self, z):
        fx = (np.real(z) - self.x0) / self.h
        fy = (np.imag(z) - self.y0) / self.h
        ix, iy = np.rint(fx).astype(int), np.rint(fy).astype(int)
        if np.any(np.abs(fx - ix) > 1e-6) or np.any(np.abs(fy - iy) > 1e-6):
            raise DomainError("evaluation point is not a grid node")
        return ix, iy

    def partials(self, z, order: int = 4):
        """Centered differences ``(u_x, u_y)`` at grid nodes ``z``."""
        offs, wts = _STENCIL[order]
        ix, iy = self._index(np.asarray(z))
        ny, nx = self.values.shape
        r = offs.max()
        if np.any(ix - r < 0) or np.any(ix + r >= nx) or np.any(iy - r < 0) or np.any(iy + r >= ny):
            raise GridBoundary("finite-difference stencil leaves the sampled grid")
        ux = sum(w * self.values[iy, ix + o] for o, w in zip(offs, wts)) / self.h
        uy = sum(w * self.values[iy + o, ix] for o, w in zip(offs, wts)) / self.h
        return ux, uy


def _wirtinger(field, z, h, order):
    """``(u_z, u_zbar)`` of a GridField or a callable field."""
    if isinstance(field, GridField):
        ux, uy = field.partials(z, order)
    else:
        offs, wts = _STENCIL[order]
        ux = sum(w * field(z + o * h) for o, w in zip(offs, wts)) / h
        uy = sum(w * field(z + 1j * o * h) for o, w in zip(offs, wts)) / h
    return (ux - 1j * uy) / 2, (ux + 1j * uy) / 2


def apply_X(family, field, z, theta, h: float = 1e-3, order: int = 4, lam=None):
    """``xi u_z + rho u_zbar`` at ``lam = exp(i theta)`` (or an explicit ``lam``).

    ``field`` is a :class:`GridField` or a callable ``z -> u(z)`` accepting
    arrays; ``h`` is the step used for callables.
    """
    z = as_complex(z)
    lam = np.exp(1j * np.asarray(theta)) if lam is None else lam
    c = eval_coeffs(family, z, lam)
    uz, uzb = _wirtinger(field, z, h, order)
    return c.xi * uz + c.rho * uzb


def apply_X_perp(family, field, z, theta, h: float = 1e-3, order: int = 4, lam=None):
    """``i (-xi u_z + rho u_zbar)`` at ``lam = exp(i theta)`` (or an explicit ``lam``)."""
    z = as_complex(z)
    lam = np.exp(1j * np.asarray(theta)) if lam is None else lam
    c = eval_coeffs(family, z, lam)
    uz, uzb = _wirtinger(field, z, h, order)
    return 1j * (-c.xi * uz + c.rho * uzb)


def directional_derivative(field, z, direction, h: float = 1e-3):
    """4th-order derivative of ``field`` along the complex vector ``direction``.

    On the unit circle ``X_perp`` is the derivative along ``-1j * xi`` and
    ``X`` the derivative along ``xi``; this needs four field evaluations
    instead of eight.
    """
    d = h * np.asarray(direction)
    return (-field(z + 2 * d) + 8 * field(z + d) - 8 * field(z - d) + field(z - 2 * d)) / (12 * h)
