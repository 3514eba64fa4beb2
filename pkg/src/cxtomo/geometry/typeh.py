"""Numerical certification of the type-H conditions for a family."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import CxTomoError
from .family import PolarizedFamily, as_complex
from .fields import eval_coeffs, jacobian_ds, mu_ratio
from .zeros import _log_derivative, _nodes, count_zeros

CAUCHY_TOL = 1e-8
MODULUS_TOL = 1e-10
LAURENT_TOL = 1e-8
INNER_RADIUS = 0.05


@dataclass
class CheckResult:
    name: str
    residual: float
    threshold: float
    passed: bool
    advisory: bool = False
    detail: str = ""


@dataclass
class TypeHReport:
    family: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.advisory)

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"family": self.family, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def default_points() -> np.ndarray:
    rings = [0.0] + [r * np.exp(2j * np.pi * (k + 0.5 * j) / 6) for j, r in enumerate((0.3, 0.6, 0.9)) for k in range(6)]
    return np.array(rings, dtype=complex)


def default_lambdas() -> np.ndarray:
    inner = [r * np.exp(2j * np.pi * (k + 0.25) / 8) for r in (0.2, 0.5, 0.8) for k in range(8)]
    outer = list(np.exp(2j * np.pi * np.arange(16) / 16))
    return np.array(inner + outer, dtype=complex)


def _cauchy_mean_residual(fn, lam0: np.ndarray, nodes: int = 64) -> float:
    """max |F(lam0) - mean of F over a circle about lam0|, relative to max(1, |F|)."""
    r = 0.5 * np.minimum(np.abs(lam0), 1 - np.abs(lam0))
    q = _nodes(nodes)
    centre = fn(lam0)
    ring = fn(lam0[..., None] + r[..., None] * q).mean(axis=-1)
    return float(np.max(np.abs(centre - ring) / np.maximum(1.0, np.abs(centre))))


def _laurent_tail(vals: np.ndarray) -> float:
    """Relative size of the upper half of the Fourier spectrum on a circle."""
    c = np.abs(np.fft.fft(vals, axis=-1))
    n = vals.shape[-1]
    k = np.abs(np.fft.fftfreq(n, 1.0 / n))
    tail = c[..., k >= n // 4].max(axis=-1)
    return float(np.max(tail / np.maximum(c.max(axis=-1), 1e-300)))


def _guard(name, threshold, fn, advisory=False) -> CheckResult:
    try:
        resid, detail = fn()
    except (CxTomoError, FloatingPointError, ZeroDivisionError) as exc:
        return CheckResult(name, float("inf"), threshold, False, advisory, f"{type(exc).__name__}: {exc}")
    resid = float(resid)
    ok = bool(np.isfinite(resid) and resid < threshold)
    return CheckResult(name, resid, threshold, ok, advisory, detail)


def check_type_h(family: PolarizedFamily, sample_points: Optional[Sequence] = None,
                 sample_lambdas: Optional[Sequence] = None, n_boundary: int = 512) -> TypeHReport:
    """Run the type-H checks and collect a report; never raises on failure.

    Conditions: (i) ``xi`` holomorphic in lam, (ii) ``rho`` zero-free in the
    disc (poles allowed), (iii) ``xi/rho`` holomorphic with at least one zero,
    (iv) ``s, s_z, s_zbar`` meromorphic in lam.  The boundary modulus
    ``|xi/rho| = 1`` and interior contraction are reported as consequences,
    the Jacobian sign on the outer disc as an advisory check.
    """
    zs = default_points() if sample_points is None else np.array([as_complex(p) for p in sample_points])
    lams = default_lambdas() if sample_lambdas is None else np.asarray(sample_lambdas, dtype=complex)
    inner = lams[(np.abs(lams) > 1e-3) & (np.abs(lams) < 1 - 1e-9)]
    report = TypeHReport(family.name)
    Z = zs[:, None]

    def xi_fn(lam):
        zz = Z.reshape(Z.shape + (1,) * (np.ndim(lam) - 1))
        return eval_coeffs(family, zz, lam).xi

    def ratio_fn(lam):
        zz = Z.reshape(Z.shape + (1,) * (np.ndim(lam) - 1))
        return mu_ratio(family, zz, lam)

    def c1():
        return _cauchy_mean_residual(xi_fn, inner[None, :] * np.ones_like(Z)), f"{inner.size} centres"

    def c2():
        # zeros minus poles of rho in INNER_RADIUS < |lam| < 1 must vanish
        ring = _nodes(1024)
        rho_out = eval_coeffs(family, Z, ring[None, :]).rho
        rho_in = eval_coeffs(family, Z, INNER_RADIUS * ring[None, :]).rho
        w_out = _log_derivative(rho_out).mean(axis=-1)
        w_in = _log_derivative(rho_in).mean(axis=-1)
        worst = float(np.max(np.abs(w_out - w_in)))
        rmin = float(np.min(np.abs(eval_coeffs(family, Z, inner[None, :]).rho)))
        if rmin < 1e-12:
            return float("inf"), f"min |rho| = {rmin:.3e}"
        return worst, f"min |rho| on samples = {rmin:.3e}"

    def c3():
        resid = _cauchy_mean_residual(ratio_fn, inner[None, :] * np.ones_like(Z))
        counts = [count_zeros(family, z) for z in zs]
        if min(counts) < 1:
            return float("inf"), f"zero counts {sorted(set(counts))}"
        return resid, f"zero counts {sorted(set(counts))}"

    def c4():
        worst = 0.0
        ring = _nodes(128)
        for r in (0.3, 0.55, 0.8):
            c = eval_coeffs(family, Z, r * ring[None, :])
            for v in (c.s_lambda, c.ds_dz, c.ds_dzbar):
                worst = max(worst, _laurent_tail(v))
        return worst, "Laurent tails on |lam| = 0.3, 0.55, 0.8"

    def c_mod():
        ring = np.exp(2j * np.pi * np.arange(n_boundary) / n_boundary)
        return float(np.max(np.abs(np.abs(ratio_fn(ring[None, :])) - 1))), f"{n_boundary} boundary lambdas"

    def c_contract():
        return float(np.max(np.abs(ratio_fn(inner[None, :] * np.ones_like(Z))))), "max |xi/rho| inside"

    def c_transport():
        c = eval_coeffs(family, Z, inner[None, :])
        scale = np.abs(c.xi * c.ds_dz) + np.abs(c.rho * c.ds_dzbar)
        return float(np.max(np.abs(c.transport_residual) / np.maximum(scale, 1e-300))), "relative"

    def c_jac_outer():
        out = 1.0 / np.conj(inner)
        j = jacobian_ds(family, Z, out[None, :])
        return float(np.max(j / np.maximum(np.abs(j), 1e-300)) + 1.0), "max sign + 1 on the outer disc"

    report.checks.append(_guard("xi_holomorphic", CAUCHY_TOL, c1))
    report.checks.append(_guard("rho_zero_free", 0.5, c2))
    report.checks.append(_guard("ratio_holomorphic_with_zero", CAUCHY_TOL, c3))
    report.checks.append(_guard("s_meromorphic", LAURENT_TOL, c4))
    report.checks.append(_guard("boundary_modulus", MODULUS_TOL, c_mod))
    report.checks.append(_guard("interior_contraction", 1.0, c_contract))
    report.checks.append(_guard("transport_annihilation", 1e-9, c_transport))
    report.checks.append(_guard("jacobian_negative_outside", 1.0, c_jac_outer, advisory=True))
    return report
