"""Curve families on the unit disc and their polarized coefficient functions.

A family is described by the transport field ``X = mu d/dz + conj(mu) d/dzbar``
whose integral curves are ``t -> curve(t, s)``.  Every real-analytic
coefficient is supplied in *polarized* form, i.e. as a function of two
independent complex arguments ``(w1, w2)`` that reduces to the original
function on the real slice ``w2 = conj(w1)``.  Complexification is then the
substitution ``(w1, w2) = (z / lam, lam * conj(z))``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import DomainError, ValidationError

PolFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class DiscPoint:
    """A point of the closed unit disc.

    Interior points satisfy ``re**2 + im**2 < 1``; points on the unit circle
    must be flagged with ``boundary=True``.
    """

    re: float
    im: float
    boundary: bool = False

    def __post_init__(self):
        r2 = self.re**2 + self.im**2
        if self.boundary:
            if abs(r2 - 1.0) > BOUNDARY_TOL:
                raise DomainError(f"boundary point has |z|^2 = {r2!r}")
        elif r2 >= 1.0:
            raise DomainError(f"interior point has |z|^2 = {r2!r} >= 1")

    @classmethod
    def from_complex(cls, z: complex) -> "DiscPoint":
        z = complex(z)
        on_circle = abs(abs(z) ** 2 - 1.0) <= BOUNDARY_TOL
        return cls(z.real, z.imag, boundary=on_circle)

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    def __complex__(self) -> complex:
        return self.z


def as_complex(z):
    """Coerce a DiscPoint, a number or an array of numbers to complex."""
    if isinstance(z, DiscPoint):
        return z.z
    if np.isscalar(z):
        return complex(z)
    return np.asarray(z, dtype=complex)


def cauchy_derivative(fn: Callable[[np.ndarray], np.ndarray], w, radius: float = 1e-3, nodes: int = 16):
    """Derivative of a holomorphic function by a small Cauchy contour.

    Uses ``f'(w) = 1/(n r) sum_k f(w + r q^k) q^-k`` with ``q`` the n-th root
    of unity; no subtractive cancellation beyond ``eps / r``.
    """
    w = np.asarray(w, dtype=complex)
    q = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    vals = fn(w[..., None] + radius * q)
    return np.sum(vals * np.conj(q), axis=-1) / (nodes * radius)


@dataclass(frozen=True)
class PolarizedFamily:
    """A rotation-indexed curve family with polarized coefficients.

    Attributes
    ----------
    name : str
    A, B : callable
        Polarized ``mu`` and ``conj(mu)``.
    s_pol, t_pol : callable
        Polarized transverse label ``s(z)`` and curve parameter ``t(z)``.
    curve : callable
        ``(t, s) -> z``, inverse of ``z -> (t(z), s(z))``.
    s_range : (float, float)
        Transverse labels of curves that meet the disc.
    t_limits : callable
        ``s -> (t_lo, t_hi)``, the parameter interval inside the disc.
    s_pol_d1, s_pol_d2 : callable, optional
        Partials of ``s_pol`` in ``w1`` and ``w2``.  When absent they are
        obtained by contour differentiation.
    """

    name: str
    A: PolFn
    B: PolFn
    s_pol: PolFn
    t_pol: PolFn
    curve: Callable[[np.ndarray, np.ndarray], np.ndarray]
    s_range: tuple
    t_limits: Callable[[np.ndarray], tuple]
    s_pol_d1: Optional[PolFn] = None
    s_pol_d2: Optional[PolFn] = None
    description: str = field(default="", compare=False)

    def s_partials(self, w1, w2):
        if self.s_pol_d1 is not None and self.s_pol_d2 is not None:
            return self.s_pol_d1(w1, w2), self.s_pol_d2(w1, w2)
        w1 = np.asarray(w1, dtype=complex)
        w2 = np.asarray(w2, dtype=complex)
        w1, w2 = np.broadcast_arrays(w1, w2)
        d1 = cauchy_derivative(lambda u: self.s_pol(u, w2[..., None]), w1)
        d2 = cauchy_derivative(lambda u: self.s_pol(w1[..., None], u), w2)
        return d1, d2

    def s_of(self, z):
        """Real transverse label of interior points."""
        z = as_complex(z)
        return np.real(self.s_pol(z, np.conj(z)))

    def t_of(self, z):
        z = as_complex(z)
        return np.real(self.t_pol(z, np.conj(z)))

    def mu(self, z):
        z = as_complex(z)
        return self.A(z, np.conj(z))


# --------------------------------------------------------------------------
# built-in families
# --------------------------------------------------------------------------

def _lines_limits(s):
    half = np.sqrt(np.clip(1.0 - np.asarray(s, dtype=float) ** 2, 0.0, None))
    return -half, half


def euclidean_lines() -> PolarizedFamily:
    """Parallel lines ``z(t, s) = t - i s``.

    ``mu = 1``, ``s(z) = -Im z`` and ``t(z) = Re z``; the sign of ``s`` makes
    the perpendicular field satisfy ``X_perp s = +1``.
    """
    one = lambda w1, w2: np.ones(np.broadcast(w1, w2).shape, dtype=complex)
    return PolarizedFamily(
        name="euclidean-lines",
        A=one,
        B=one,
        s_pol=lambda w1, w2: (w2 - w1) / 2j,
        t_pol=lambda w1, w2: (w1 + w2) / 2,
        curve=lambda t, s: np.asarray(t) - 1j * np.asarray(s),
        s_range=(-1.0, 1.0),
        t_limits=_lines_limits,
        s_pol_d1=lambda w1, w2: np.full(np.broadcast(w1, w2).shape, 0.5j),
        s_pol_d2=lambda w1, w2: np.full(np.broadcast(w1, w2).shape, -0.5j),
        description="straight lines; classical parallel-beam geometry",
    )


def _hyp_curve(t, s):
    s = np.clip(np.asarray(s, dtype=float), -1.0 + 1e-16, 1.0 - 1e-16)
    return np.tanh((np.arctanh(s) + 1j * np.asarray(t)) / 2)


def _hyp_limits(s):
    s = np.asarray(s, dtype=float)
    return np.full(s.shape, -np.pi / 2), np.full(s.shape, np.pi / 2)


def hyperbolic_geodesics() -> PolarizedFamily:
    """Poincare-disc geodesics orthogonal to the real diameter.

    The curves are ``u = const`` lines of the band map ``u = 2 artanh z``:
    the curve parameter is ``t = Im u`` in ``(-pi/2, pi/2)`` and the label is
    ``s = tanh(Re u) = 2 Re z / (1 + |z|^2)``.  With this parametrization
    every polarized coefficient is rational, ``mu = i (1 - z^2) / 2`` and
    ``xi / rho = -(lam^2 - z^2) / (1 - lam^2 conj(z)^2)`` with zeros ``+-z``.
    Hyperbolic arclength would be ``artanh(sin t)``.
    """
    return PolarizedFamily(
        name="hyperbolic-geodesics",
        A=lambda w1, w2: 0.5j * (1 - np.asarray(w1) ** 2) + 0 * np.asarray(w2),
        B=lambda w1, w2: -0.5j * (1 - np.asarray(w2) ** 2) + 0 * np.asarray(w1),
        s_pol=lambda w1, w2: (w1 + w2) / (1 + w1 * w2),
        t_pol=lambda w1, w2: (np.arctanh(w1) - np.arctanh(w2)) / 1j,
        curve=_hyp_curve,
        s_range=(-1.0, 1.0),
        t_limits=_hyp_limits,
        s_pol_d1=lambda w1, w2: (1 - w2 * w2) / (1 + w1 * w2) ** 2,
        s_pol_d2=lambda w1, w2: (1 - w1 * w1) / (1 + w1 * w2) ** 2,
        description="hyperbolic geodesics, band-model parametrization",
    )


BUILTIN_FAMILIES = {
    "euclidean-lines": euclidean_lines,
    "lines": euclidean_lines,
    "hyperbolic-geodesics": hyperbolic_geodesics,
    "hyperbolic": hyperbolic_geodesics,
}


def get_family(name: str) -> PolarizedFamily:
    """Resolve a builtin family name or a path to a JSON family definition."""
    if isinstance(name, PolarizedFamily):
        return name
    if name in BUILTIN_FAMILIES:
        return BUILTIN_FAMILIES[name]()
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        return load_family(path)
    known = ", ".join(sorted(BUILTIN_FAMILIES))
    raise ValidationError(f"unknown family {name!r} (builtins: {known}, or a .json file)")


# --------------------------------------------------------------------------
# rational families from JSON
# --------------------------------------------------------------------------

class Polynomial2:
    """Polynomial in two complex variables, ``sum c * w1**p * w2**q``."""

    def __init__(self, terms: Sequence[Sequence[float]]):
        if not terms:
            raise ValidationError("polynomial needs at least one term")
        coef, p, q = [], [], []
        for term in terms:
            if len(term) != 4:
                raise ValidationError(f"term {term!r} must be [re, im, p, q]")
            re, im, pp, qq = term
            if int(pp) != pp or int(qq) != qq or pp < 0 or qq < 0:
                raise ValidationError(f"exponents must be non-negative integers: {term!r}")
            coef.append(complex(re, im))
            p.append(int(pp))
            q.append(int(qq))
        self.coef = np.array(coef)
        self.p = np.array(p)
        self.q = np.array(q)

    def __call__(self, w1, w2):
        w1 = np.asarray(w1, dtype=complex)[..., None]
        w2 = np.asarray(w2, dtype=complex)[..., None]
        return np.sum(self.coef * w1**self.p * w2**self.q, axis=-1)

    def d1(self) -> "Polynomial2":
        return self._derived(self.coef * self.p, self.p - 1, self.q)

    def d2(self) -> "Polynomial2":
        return self._derived(self.coef * self.q, self.p, self.q - 1)

    @staticmethod
    def _derived(coef, p, q):
        keep = coef != 0
        if not np.any(keep):
            return Polynomial2([[0.0, 0.0, 0, 0]])
        return Polynomial2([[c.real, c.imag, a, b] for c, a, b in zip(coef[keep], p[keep], q[keep])])


class Rational2:
    def __init__(self, spec):
        if isinstance(spec, dict):
            self.num = Polynomial2(spec["num"])
            self.den = Polynomial2(spec.get("den", [[1.0, 0.0, 0, 0]]))
        else:
            self.num = Polynomial2(spec)
            self.den = Polynomial2([[1.0, 0.0, 0, 0]])

    def __call__(self, w1, w2):
        return self.num(w1, w2) / self.den(w1, w2)

    def partials(self):
        n, d = self.num, self.den
        n1, n2, d1, d2 = n.d1(), n.d2(), d.d1(), d.d2()

        def p1(w1, w2):
            dv = d(w1, w2)
            return (n1(w1, w2) * dv - n(w1, w2) * d1(w1, w2)) / dv**2

        def p2(w1, w2):
            dv = d(w1, w2)
            return (n2(w1, w2) * dv - n(w1, w2) * d2(w1, w2)) / dv**2

        return p1, p2


def _newton_curve(s_fn: Rational2, t_fn: Rational2, iters: int = 60):
    """Build ``curve(t, s)`` by Newton inversion of the real map z -> (t, s)."""
    s1, s2 = s_fn.partials()
    t1, t2 = t_fn.partials()

    def curve(t, s):
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        z = np.zeros(t.shape, dtype=complex)
        for _ in range(iters):
            zb = np.conj(z)
            ft = np.real(t_fn(z, zb)) - t
            fs = np.real(s_fn(z, zb)) - s
            # real Jacobian: d/dx = d1 + d2, d/dy = i (d1 - d2)
            a1, a2 = t1(z, zb), t2(z, zb)
            b1, b2 = s1(z, zb), s2(z, zb)
            jtx, jty = np.real(a1 + a2), np.real(1j * (a1 - a2))
            jsx, jsy = np.real(b1 + b2), np.real(1j * (b1 - b2))
            det = jtx * jsy - jty * jsx
            dx = (jsy * ft - jty * fs) / det
            dy = (-jsx * ft + jtx * fs) / det
            z = z - (dx + 1j * dy)
            if np.all(np.abs(dx) + np.abs(dy) < 1e-14):
                break
        resid = np.abs(np.real(t_fn(z, np.conj(z))) - t) + np.abs(np.real(s_fn(z, np.conj(z))) - s)
        bad = ~np.isfinite(resid) | (resid > 1e-9)
        if np.any(bad):
            raise DomainError("curve inversion did not converge for some (t, s)")
        return z

    return curve


def load_family(path) -> PolarizedFamily:
    """Load a family whose coefficients are rational in ``(w1, w2)``.

    The JSON object holds ``name``, ``A``, ``B``, ``s_pol``, ``t_pol``,
    ``s_range`` and ``t_range``.  Each coefficient is either a list of terms
    ``[re, im, p, q]`` meaning ``(re + i im) w1**p w2**q`` or an object
    ``{"num": [...], "den": [...]}``.  Curves are recovered by Newton
    inversion of ``z -> (t(z), s(z))``, so ``t_range`` must be a parameter
    interval that covers each curve's passage through the disc.
    """
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    return family_from_dict(spec)


def family_from_dict(spec: dict) -> PolarizedFamily:
    missing = [k for k in ("name", "A", "B", "s_pol", "t_pol", "s_range", "t_range") if k not in spec]
    if missing:
        raise ValidationError(f"family definition is missing {missing}")
    A, B = Rational2(spec["A"]), Rational2(spec["B"])
    s_fn, t_fn = Rational2(spec["s_pol"]), Rational2(spec["t_pol"])
    d1, d2 = s_fn.partials()
    t_lo, t_hi = (float(v) for v in spec["t_range"])
    s_lo, s_hi = (float(v) for v in spec["s_range"])
    if not (s_lo < s_hi and t_lo < t_hi) or not all(map(math.isfinite, (s_lo, s_hi, t_lo, t_hi))):
        raise ValidationError("s_range and t_range must be finite increasing intervals")

    def t_limits(s):
        s = np.asarray(s, dtype=float)
        return np.full(s.shape, t_lo), np.full(s.shape, t_hi)

    return PolarizedFamily(
        name=str(spec["name"]),
        A=A,
        B=B,
        s_pol=s_fn,
        t_pol=t_fn,
        curve=_newton_curve(s_fn, t_fn),
        s_range=(s_lo, s_hi),
        t_limits=t_limits,
        s_pol_d1=d1,
        s_pol_d2=d2,
        description=str(spec.get("description", "")),
    )
