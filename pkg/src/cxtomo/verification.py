"""Numerical oracles for the complexified transport problem.

``u(z, lam) = int G_lam(z; z0) f(z0) dA(z0)`` solves ``X_lam u = f`` off the
unit circle.  The checks here certify its holomorphy in ``lam``, its
boundary values on ``|lam| = 1`` and the transport equation itself.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CxTomoError, DomainError, NonConvergent, OnCharacteristic
from .geometry.family import PolarizedFamily, as_complex, euclidean_lines
from .geometry.fields import apply_X, eval_coeffs, jacobian_ds
from .geometry.typeh import check_type_h
from .transforms import _curve_nodes, beam_transform, hilbert_fft, SGrid

# closest approach to the circle stays at 0.02; the two extra points allow a
# 4th-degree extrapolant
EPSILONS = (0.08, 0.06, 0.04, 0.03, 0.02)


@dataclass(frozen=True)
class GreensEval:
    z: complex
    z0: complex
    lam: complex
    value: complex


@dataclass(frozen=True)
class BoundaryPair:
    """Extrapolated ``u_+`` (inner) and ``u_-`` (outer) limits and their predictions."""

    u_plus: complex
    u_minus: complex
    epsilon_used: float
    gap_plus: float = 0.0
    gap_minus: float = 0.0
    hilbert: float = 0.0
    beam: float = 0.0

    @property
    def predicted_plus(self) -> complex:
        return -self.hilbert / 2j + self.beam

    @property
    def predicted_minus(self) -> complex:
        return self.hilbert / 2j + self.beam

    @property
    def jump(self) -> complex:
        return self.u_plus - self.u_minus


# --------------------------------------------------------------------------
# Green's function and the complexified solution
# --------------------------------------------------------------------------

def _greens(family, z, z0, lam):
    c0 = eval_coeffs(family, z0, lam)
    s = eval_coeffs(family, z, lam).s_lambda
    diff = s - c0.s_lambda
    with np.errstate(divide="ignore", invalid="ignore"):
        # callers reject diff ~ 0 themselves
        return np.sign(1 - np.abs(lam)) * c0.ds_dz / (c0.rho * np.pi * diff), diff


def greens_eval(family: PolarizedFamily, z, z0, lam) -> complex:
    """``G_lam(z; z0) = sign(1 - |lam|) s_z(z0) / (rho(z0) pi (s(z) - s(z0)))``."""
    lam = complex(lam)
    if lam == 0 or abs(abs(lam) - 1) < 1e-14:
        raise DomainError("Green's function needs 0 < |lambda| != 1")
    val, diff = _greens(family, as_complex(z), as_complex(z0), lam)
    if abs(diff) < 1e-13:
        raise OnCharacteristic("z and z0 share a complexified characteristic")
    return complex(val)


def _support_radius(f) -> float:
    r = getattr(f, "support_radius", None)
    return 1.0 if r is None else float(r)


def solve_u(f, family: PolarizedFamily, z, lam, nr: int = 128, nphi: int = 2048) -> complex:
    """``u(z, lam)`` by polar quadrature centred at ``z``.

    Gauss-Legendre in the radius and the trapezoid rule in the angle; the
    area element ``r dr`` cancels the simple pole of the kernel at ``z0 = z``.
    ``lam`` may be an array, in which case an array is returned.
    """
    z = complex(as_complex(z))
    lams = np.atleast_1d(np.asarray(lam, dtype=complex))
    if np.any(lams == 0) or np.any(np.abs(np.abs(lams) - 1) < 1e-14):
        raise DomainError("solve_u needs 0 < |lambda| != 1")
    R = abs(z) + _support_radius(f)
    x, w = np.polynomial.legendre.leggauss(nr)
    r = 0.5 * R * (x + 1)
    wr = 0.5 * R * w * r

    def attempt(shift):
        phi = 2 * np.pi * (np.arange(nphi) + shift) / nphi
        Z0 = z + r[:, None] * np.exp(1j * phi)[None, :]
        inside = np.abs(Z0) < 1
        fv = np.zeros(Z0.shape)
        fv[inside] = f(Z0[inside])
        live = fv != 0
        z0, wts = Z0[live], (wr[:, None] * fv * (2 * np.pi / nphi) * np.ones_like(fv))[live]
        out = np.empty(lams.size, dtype=complex)
        for i, lm in enumerate(lams):
            G, diff = _greens(family, z, z0, lm)
            if np.any(np.abs(diff) < 1e-13):
                raise OnCharacteristic("quadrature node on a complexified characteristic")
            out[i] = np.sum(G * wts)
        return out

    try:
        out = attempt(0.0)
    except OnCharacteristic:
        out = attempt(0.5)
    return complex(out[0]) if np.ndim(lam) == 0 else out.reshape(np.shape(lam))


def transport_residual(f, family: PolarizedFamily, z, lam, h: float = 1e-3, **quad) -> float:
    """``|X_lam u - f(z)|`` with ``X_lam`` applied by finite differences."""
    z = complex(as_complex(z))
    Xu = apply_X(family, lambda zz: solve_u(f, family, complex(zz), lam, **quad), z, None, h=h, lam=lam)
    return float(abs(Xu - f(np.array([z]))[0]))


def holomorphy_residual(f, family: PolarizedFamily, z, lambda0, radius: float, nodes: int = 64,
                        return_value: bool = False, **quad):
    """``|u(lam0) - (1 / 2 pi i) oint u(lam) / (lam - lam0) dlam|``.

    The contour is the circle of the given radius about ``lambda0``; it must
    avoid the origin and the unit circle.
    """
    lam0 = complex(lambda0)
    if not (radius > 0 and abs(lam0) - radius > 0 and (abs(lam0) + radius < 1 or abs(lam0) - radius > 1)):
        raise DomainError("holomorphy contour must avoid 0 and the unit circle")
    ring = lam0 + radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    vals = solve_u(f, family, z, np.concatenate([[lam0], ring]), **quad)
    resid = float(abs(vals[0] - vals[1:].mean()))
    return (resid, abs(vals[0])) if return_value else resid


def _broken_b(w1, w2):
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    d = np.conj(w1)
    q = np.ones(np.broadcast(w1, w2).shape, dtype=complex)
    np.divide(w2, d, out=q, where=np.abs(d) > 0)
    return q**2


def broken_lines_family() -> PolarizedFamily:
    """Negative control: the lines field with a conjugated coefficient in ``B``.

    ``B(w1, w2) = (w2 / conj(w1))**2`` equals 1 on the real slice, so the
    real field is unchanged, but it complexifies to ``|lam|**4`` and
    ``1 / rho = 1 / (lam conj(lam)**2)`` is not even harmonic in ``lam``.
    """
    base = euclidean_lines()
    return PolarizedFamily(
        name="broken-lines",
        A=base.A,
        B=_broken_b,
        s_pol=base.s_pol,
        t_pol=base.t_pol,
        curve=base.curve,
        s_range=base.s_range,
        t_limits=base.t_limits,
        s_pol_d1=base.s_pol_d1,
        s_pol_d2=base.s_pol_d2,
        description="lines with a deliberately non-holomorphic B",
    )


# --------------------------------------------------------------------------
# boundary values
# --------------------------------------------------------------------------

def richardson(vals):
    """Extrapolate values at eps, eps/2, eps/4 to eps = 0.

    Two first-order steps followed by one second-order step; the gap is the
    difference between the two first-order extrapolants.
    """
    u1, u2, u3 = vals
    r12 = 2 * u2 - u1
    r23 = 2 * u3 - u2
    return (4 * r23 - r12) / 3, abs(r23 - r12)


def extrapolate(eps, vals):
    """Value at 0 of the polynomial through ``(eps_j, vals_j)``.

    Returns the extrapolant and the gap to the extrapolant that omits the
    point closest to 0.  With ``eps = (e, e/2, e/4)`` the value equals
    :func:`richardson`.
    """
    eps = np.asarray(eps, dtype=float)
    vals = np.asarray(vals)
    order = np.argsort(-eps)
    eps, vals = eps[order], vals[order]

    def neville(x, y):
        p = np.array(y, dtype=complex)
        n = x.size
        for k in range(1, n):
            p[: n - k] = (x[k:] * p[: n - k] - x[: n - k] * p[1: n - k + 1]) / (x[k:] - x[: n - k])
        return p[0]

    full = neville(eps, vals)
    return full, float(abs(full - neville(eps[:-1], vals[:-1])))


def hilbert_of_row(f, family: PolarizedFamily, theta: float, s, ns: int = 1025) -> float:
    """``H(I_theta f)`` at the labels ``s`` from one finely sampled row."""
    grid = SGrid(np.array([theta, theta + 1, theta + 2, theta + 3]), np.linspace(*family.s_range, ns))
    T, Z, _ = _curve_nodes(family, grid)
    row = np.trapezoid(np.asarray(f(np.exp(1j * theta) * Z), dtype=float), T, axis=-1)
    Hrow = hilbert_fft(row[None, :], grid.ds)[0]
    return CubicSpline(grid.s_nodes, Hrow, bc_type="natural")(s)


def boundary_limits(f, family: PolarizedFamily, z, theta: float, epsilons: Sequence[float] = EPSILONS,
                    tol: Optional[float] = None, nr: int = 128, nphi: int = 4096) -> BoundaryPair:
    """Limits of ``u(z, lam)`` as ``lam -> e^{i theta}`` from inside and outside.

    ``u`` is evaluated at ``(1 -+ eps) e^{i theta}`` and extrapolated to
    ``eps = 0`` by polynomial interpolation.  ``tol`` is the quadrature tolerance (default
    ``1e-3 * max|f|``); gaps above ten times it raise NonConvergent.
    """
    z = complex(as_complex(z))
    e = np.exp(1j * theta)
    eps = np.asarray(epsilons, dtype=float)
    up = solve_u(f, family, z, (1 - eps) * e, nr=nr, nphi=nphi)
    um = solve_u(f, family, z, (1 + eps) * e, nr=nr, nphi=nphi)
    Up, gp = extrapolate(eps, up)
    Um, gm = extrapolate(eps, um)
    if tol is None:
        rr = np.linspace(0, 1, 64)[:, None] * np.exp(2j * np.pi * np.arange(64) / 64)
        tol = 1e-3 * max(float(np.max(np.abs(f(rr)))), 1e-300)
    if max(gp, gm) > 10 * tol:
        raise NonConvergent(f"extrapolation gap {max(gp, gm):.3e} exceeds {10 * tol:.3e}")
    s = family.s_of(z / e)
    Hv = float(hilbert_of_row(f, family, theta, s))
    Dv = float(beam_transform(f, family, z, theta, check=False))
    return BoundaryPair(complex(Up), complex(Um), float(eps.min()), float(gp), float(gm), Hv, Dv)


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    residual: float
    threshold: float
    passed: bool
    advisory: bool = False


@dataclass
class VerificationReport:
    family: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.advisory)

    def add(self, name, residual, threshold, advisory=False):
        residual = float(residual)
        self.checks.append(Check(name, residual, threshold, bool(np.isfinite(residual) and residual < threshold), advisory))

    def to_dict(self) -> dict:
        return {"family": self.family, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_verification(family: PolarizedFamily, f=None, seed: int = 0, n_probes: int = 3) -> VerificationReport:
    """Type-H checks plus transport, holomorphy and Jacobian probes."""
    from .phantoms import load_phantom

    f = load_phantom("gaussian") if f is None else f
    rng = np.random.default_rng(seed)
    rep = VerificationReport(family.name)
    th = check_type_h(family)
    for c in th.checks:
        rep.checks.append(Check(f"typeh.{c.name}", c.residual, c.threshold, c.passed, c.advisory))

    zs = 0.5 * np.sqrt(rng.random(n_probes)) * np.exp(2j * np.pi * rng.random(n_probes))
    lam_dir = np.exp(2j * np.pi * rng.random(n_probes))
    fmax = float(np.max(np.abs(f(np.linspace(-1, 1, 201)[:, None] + 1j * np.linspace(-1, 1, 201)[None, :]))))

    worst_h, worst_t = 0.0, 0.0
    try:
        for z, d in zip(zs, lam_dir):
            r, u = holomorphy_residual(f, family, z, 0.45 * d, 0.2, return_value=True)
            worst_h = max(worst_h, r / max(u, 1e-300))
            worst_t = max(worst_t, transport_residual(f, family, z, 0.5 * d) / fmax)
    except CxTomoError:
        worst_h = worst_t = float("inf")
    rep.add("holomorphy_relative", worst_h, 1e-6)
    rep.add("transport_relative", worst_t, 1e-3)

    jz = 0.9 * np.sqrt(rng.random(200)) * np.exp(2j * np.pi * rng.random(200))
    ja = np.exp(2j * np.pi * rng.random(200))
    try:
        inner = float(np.min(jacobian_ds(family, jz, 0.5 * ja)))
        outer = float(np.max(jacobian_ds(family, jz, 2.0 * ja)))
    except CxTomoError:
        inner, outer = -np.inf, np.inf
    rep.add("jacobian_positive_inside", 0.0 if inner > 0 else 1.0, 0.5)
    rep.add("jacobian_negative_outside", 0.0 if outer < 0 else 1.0, 0.5, advisory=True)
    return rep
