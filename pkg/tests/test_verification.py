import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from cxtomo.errors import DomainError, OnCharacteristic
from cxtomo.geometry import eval_coeffs
from cxtomo.phantoms import load_phantom
from cxtomo.verification import (boundary_limits, broken_lines_family, greens_eval, holomorphy_residual,
                                 extrapolate, richardson, run_verification, solve_u, transport_residual)

from conftest import random_disc


def cauchy_oracle(f, z, lam, R):
    """u(z, lam) for the lines family from the Cauchy transform in a linear coordinate.

    X_lam = a d_x + b d_y with a = (lam + 1/lam)/2, b = i(1/lam - lam)/2.
    w = x + q y with q = -a/b is annihilated by X_lam, so X_lam u = c d_wbar u
    with c = a + b conj(q), and u = |J| / (pi c) int f(z0) / (w - w0) dA(z0).
    The integral is done in polar coordinates about z with adaptive quad.
    """
    a = (lam + 1 / lam) / 2
    b = 1j * (1 / lam - lam) / 2
    q = -a / b
    c = a + b * np.conj(q)
    J = abs(q.imag)

    def inner(phi):
        radial = quad(lambda r: float(f(np.array(z + r * np.exp(1j * phi)))), 0, R, limit=200, epsabs=1e-13)[0]
        return radial / (np.cos(phi) + q * np.sin(phi))

    re = quad(lambda p: inner(p).real, 0, 2 * np.pi, limit=200, epsabs=1e-12)[0]
    im = quad(lambda p: inner(p).imag, 0, 2 * np.pi, limit=200, epsabs=1e-12)[0]
    return -(J / (np.pi * c)) * (re + 1j * im)


# ----- Green's function -----

def test_greens_lines_depends_on_s_only(lines):
    lam = 0.5 * np.exp(0.4j)
    z, z0 = 0.1 + 0.2j, -0.3 + 0.1j
    ds = eval_coeffs(lines, z, lam).s_lambda - eval_coeffs(lines, z0, lam).s_lambda
    c = eval_coeffs(lines, 0.0, lam)
    # a common translation leaves s(z) - s(z0) unchanged for lines
    g1 = greens_eval(lines, z, z0, lam)
    g2 = greens_eval(lines, z + 0.1, z0 + 0.1, lam)
    assert abs(g1 - g2) < 1e-14 * abs(g1)
    assert abs(g1 * np.pi * ds * c.rho / c.ds_dz - 1) < 1e-12


def test_greens_sign_flip(family):
    z, z0, a = 0.2 + 0.1j, -0.1 - 0.3j, 0.9
    for r, sgn in ((0.5, 1), (2.0, -1)):
        lam = r * np.exp(1j * a)
        c0 = eval_coeffs(family, z0, lam)
        diff = eval_coeffs(family, z, lam).s_lambda - c0.s_lambda
        core = c0.ds_dz / (c0.rho * np.pi * diff)
        assert greens_eval(family, z, z0, lam) == pytest.approx(sgn * core, rel=1e-12)


def test_greens_on_characteristic(lines):
    with pytest.raises(OnCharacteristic):
        greens_eval(lines, 0.1, 0.1, 0.5)
    with pytest.raises(DomainError):
        greens_eval(lines, 0.1, 0.2, 1.0)


def test_greens_blowup_slope(family):
    # z and z0 on one real curve: the s-difference vanishes like eps on the circle
    th = 0.6
    e = np.exp(1j * th)
    z, z0 = e * family.curve(-0.3, 0.2), e * family.curve(0.4, 0.2)
    eps = np.array([0.04, 0.02, 0.01, 0.005])
    g = np.array([abs(greens_eval(family, z, z0, (1 - x) * e)) for x in eps])
    slope = np.polyfit(np.log(eps), np.log(g), 1)[0]
    assert slope == pytest.approx(-1, abs=0.05)


# ----- solve_u -----

def test_solve_u_zero(family):
    assert solve_u(load_phantom("zero"), family, 0.1j, 0.5) == 0


def test_solve_u_domain(lines, gaussian):
    with pytest.raises(DomainError):
        solve_u(gaussian, lines, 0.1, 1.0)


def test_solve_u_matches_cauchy_oracle(lines, gaussian):
    rng = np.random.default_rng(4)
    zs = random_disc(rng, 20, 0.6)
    lams = 0.5 * np.exp(2j * np.pi * rng.random(20))
    for z, lam in zip(zs, lams):
        ref = cauchy_oracle(gaussian, z, lam, abs(z) + gaussian.support_radius)
        assert abs(solve_u(gaussian, lines, z, lam) - ref) < 1e-4 * abs(ref)


def test_solve_u_outer_disc(lines, gaussian):
    z, lam = 0.2 - 0.1j, 2 * np.exp(0.4j)
    ref = cauchy_oracle(gaussian, z, lam, abs(z) + gaussian.support_radius)
    assert abs(solve_u(gaussian, lines, z, lam) - ref) < 1e-4 * abs(ref)


def test_transport_residual(family, mollifier):
    r = transport_residual(mollifier, family, 0.1 + 0.05j, 0.5 * np.exp(0.3j))
    assert r < 1e-5


# ----- holomorphy -----

def test_holomorphy_lines(lines, gaussian):
    r, u = holomorphy_residual(gaussian, lines, 0.1 + 0.05j, 0.3, 0.2, return_value=True)
    assert r < 1e-6 * u


def test_holomorphy_hyperbolic(hyperbolic, mollifier):
    r, u = holomorphy_residual(mollifier, hyperbolic, 0.1 + 0.05j, 0.3 + 0.1j, 0.15, return_value=True)
    assert r < 1e-6 * u


def test_holomorphy_broken_control(gaussian):
    r, u = holomorphy_residual(gaussian, broken_lines_family(), 0.1 + 0.05j, 0.3, 0.2, return_value=True)
    assert r >= 1e-2 * u


def test_holomorphy_zero(lines):
    assert holomorphy_residual(load_phantom("zero"), lines, 0.1, 0.3, 0.2) == 0


def test_holomorphy_contour_checks(lines, gaussian):
    with pytest.raises(DomainError):
        holomorphy_residual(gaussian, lines, 0.1, 0.9, 0.2)


def test_holomorphy_of_derivatives(family, mollifier):
    # d_z u and d_zbar u by central differences are holomorphic in lam as well
    z, lam0, rad, h = 0.15 - 0.1j, 0.35 * np.exp(1.1j), 0.15, 1e-3
    ring = lam0 + rad * np.exp(2j * np.pi * np.arange(32) / 32)
    lams = np.concatenate([[lam0], ring])
    ux = (solve_u(mollifier, family, z + h, lams) - solve_u(mollifier, family, z - h, lams)) / (2 * h)
    uy = (solve_u(mollifier, family, z + 1j * h, lams) - solve_u(mollifier, family, z - 1j * h, lams)) / (2 * h)
    for d in ((ux - 1j * uy) / 2, (ux + 1j * uy) / 2):
        scale = np.max(np.abs(d))
        assert abs(d[0] - d[1:].mean()) < 1e-5 * scale


# ----- boundary values -----

@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_richardson_exact_on_quadratics(a, b, c):
    eps = np.array([0.08, 0.04, 0.02])
    val, _ = richardson(a + b * eps + c * eps**2)
    assert abs(val - a) < 1e-12


@given(st.lists(st.floats(-2, 2), min_size=5, max_size=5))
def test_extrapolate_exact_on_quartics(c):
    eps = np.array([0.08, 0.06, 0.04, 0.03, 0.02])
    val, gap = extrapolate(eps, np.polyval(c[::-1], eps))
    assert abs(val - c[0]) < 1e-9


def test_extrapolate_matches_richardson():
    v = np.array([0.3 + 1j, 0.1, -0.2j])
    assert abs(extrapolate([0.08, 0.04, 0.02], v)[0] - richardson(v)[0]) < 1e-14


def test_boundary_limits_zero(lines):
    bp = boundary_limits(load_phantom("zero"), lines, 0.1j, 0.3, tol=1.0)
    assert bp.u_plus == 0 and bp.u_minus == 0


@pytest.mark.parametrize("z,theta", [(0.1 + 0.05j, 0.7), (-0.2 + 0.3j, 2.0)])
def test_boundary_limits_match(family, gaussian, z, theta):
    bp = boundary_limits(gaussian, family, z, theta)
    tol = 1e-3
    assert abs(bp.u_plus - bp.predicted_plus) < tol
    assert abs(bp.u_minus - bp.predicted_minus) < tol
    assert abs(bp.jump - 1j * bp.hilbert) < tol
    assert abs(bp.u_plus + bp.u_minus - 2 * bp.beam) < 2 * tol


def test_inner_outer_branches(lines, gaussian):
    z, th = 0.1 + 0.05j, 0.7
    bp = boundary_limits(gaussian, lines, z, th)
    e = np.exp(1j * th)
    near_in = solve_u(gaussian, lines, z, 0.995 * e, nphi=4096)
    near_out = solve_u(gaussian, lines, z, 1.005 * e, nphi=4096)
    assert abs(near_in - bp.u_plus) < abs(near_in - bp.u_minus)
    assert abs(near_out - bp.u_minus) < abs(near_out - bp.u_plus)


# ----- report -----

def test_run_verification_lines(lines):
    rep = run_verification(lines, seed=1, n_probes=2)
    assert rep.passed
    d = json.loads(rep.to_json())
    assert d["passed"] is True
    for c in d["checks"]:
        assert set(c) >= {"name", "residual", "threshold", "passed"}


def test_run_verification_broken():
    rep = run_verification(broken_lines_family(), n_probes=1)
    assert not rep.passed
