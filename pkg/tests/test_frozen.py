"""Frozen-coefficient Gaussian kernels and the explicit constants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parakern.coefficients import freeze
from parakern.errors import ConfigError
from parakern.frozen import (
    FrozenKernel,
    bound_constants,
    c1_constant,
    reproducing_identity_check,
)

# frozen reference values for lam = Lam = 1, d = 1 (verified against
# direct quadrature / brute-force optimization when first derived)
C0_UNIT = 0.28209479177387814     # (4 pi)^{-1/2}
C2_UNIT = 5.013256549262001       # (pi / kappa0')^{1/2}, kappa0' = 1/8
C0P_UNIT = 0.14104739588693907    # entrywise Hessian-envelope constant
C1_UNIT = 20.139078759497768      # triangle-split chaining constant


def kernel_of(field, x0=0.0):
    return FrozenKernel(freeze(field, [x0], r=0.25, depth=4,
                               derivation="exact_slice").curve)


# --- covariance --------------------------------------------------------------

def test_covariance_const_closed_form(const_field):
    ker = kernel_of(const_field)
    for s, t in [(0.0, 0.5), (0.2, 0.9)]:
        assert ker.covariance(s, t)[0, 0] == pytest.approx(2.0 * (t - s),
                                                           abs=1e-12)


def test_covariance_t_sine_closed_form(t_sine_field):
    # Sigma(s, t) = 2 int (2 + sin r) dr = 4(t-s) + 2(cos s - cos t)
    ker = kernel_of(t_sine_field)
    for s, t in [(0.0, 1.0), (0.3, 0.7), (0.0, 0.05)]:
        want = 4.0 * (t - s) + 2.0 * (math.cos(s) - math.cos(t))
        assert ker.covariance(s, t)[0, 0] == pytest.approx(want, rel=1e-10)


@given(s=st.floats(0.0, 0.8), dt1=st.floats(0.01, 0.5), dt2=st.floats(0.01, 0.5))
@settings(max_examples=30, deadline=None)
def test_covariance_additivity_and_bounds(t_sine_field, s, dt1, dt2):
    ker = kernel_of(t_sine_field)
    tau, t = s + dt1, s + dt1 + dt2
    full = ker.covariance(s, t)
    split = ker.covariance(s, tau) + ker.covariance(tau, t)
    assert np.allclose(full, split, rtol=1e-9, atol=1e-12)
    lam, Lam = t_sine_field.lam, t_sine_field.Lam
    assert 2.0 * lam * (t - s) - 1e-12 <= full[0, 0] <= 2.0 * Lam * (t - s) + 1e-12


def test_covariance_rejects_reversed_times(const_field):
    ker = kernel_of(const_field)
    with pytest.raises(ConfigError):
        ker.covariance(0.5, 0.5)


# --- kernel values and derivatives -------------------------------------------

def test_phi_is_heat_kernel_for_const(const_field):
    ker = kernel_of(const_field)
    for t, x in [(0.5, 0.0), (1.0, 0.7), (0.1, -0.4)]:
        want = math.exp(-x * x / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)
        assert float(ker.phi(t, [x], 0.0, [0.0])) == pytest.approx(want,
                                                                   rel=1e-12)


def test_phi_vanishes_backward_in_time(const_field):
    ker = kernel_of(const_field)
    assert float(ker.phi(0.1, [0.0], 0.4, [0.0])) == 0.0


def test_phi_adjoint_transposes_arguments(t_sine_field):
    ker = kernel_of(t_sine_field)
    fwd = float(ker.phi(0.8, [0.3], 0.1, [-0.2]))
    adj = float(ker.phi_adjoint(0.1, [-0.2], 0.8, [0.3]))
    assert adj == pytest.approx(fwd, rel=1e-14)


def test_phi_gradient_and_hessian_match_differencing(t_sine_field):
    ker = kernel_of(t_sine_field)
    t, s, y = 0.6, 0.1, np.array([-0.2])
    h = 1e-5
    for x0 in (0.0, 0.45):
        grad = ker.phi_gradient(t, [x0], s, y)[0]
        hess = ker.phi_hessian(t, [x0], s, y)[0, 0]
        fp = float(ker.phi(t, [x0 + h], s, y))
        fm = float(ker.phi(t, [x0 - h], s, y))
        f0 = float(ker.phi(t, [x0], s, y))
        assert grad == pytest.approx((fp - fm) / (2.0 * h), rel=1e-6)
        assert hess == pytest.approx((fp - 2.0 * f0 + fm) / h**2, rel=1e-4)


def test_pde_residual_small_for_frozen(t_sine_field):
    # the frozen kernel solves d_t phi = a(t) D^2 phi exactly; only the
    # differencing error of the check itself remains
    ker = kernel_of(t_sine_field)
    assert ker.pde_residual(0.5, [0.3], 0.0, [0.0]) < 1e-6


def test_frozen_mass_is_one(t_sine_field):
    ker = kernel_of(t_sine_field)
    xs = np.linspace(-12.0, 12.0, 4001)
    vals = np.array([float(ker.phi(0.7, [x], 0.0, [0.0])) for x in xs])
    mass = np.trapezoid(vals, xs)
    assert mass == pytest.approx(1.0, abs=1e-8)


# --- constants ----------------------------------------------------------------

def test_unit_constants_frozen_values(unit_constants):
    bc = unit_constants
    assert bc.C0 == pytest.approx(C0_UNIT, rel=1e-12)
    assert bc.kappa0 == pytest.approx(0.25, rel=1e-12)
    assert bc.kappa0_prime == pytest.approx(0.125, rel=1e-12)
    assert bc.C2 == pytest.approx(C2_UNIT, rel=1e-12)
    assert bc.C0_prime == pytest.approx(C0P_UNIT, rel=1e-9)
    assert bc.C1 == pytest.approx(C1_UNIT, rel=1e-9)


def test_c2_matches_direct_quadrature(unit_constants):
    from scipy.integrate import quad
    val, _ = quad(lambda y: math.exp(-unit_constants.kappa0_prime * y * y),
                  -np.inf, np.inf)
    assert unit_constants.C2 == pytest.approx(val, abs=1e-10)


def test_c2_closed_form_d2():
    bc = bound_constants(0.5, 2.0, d=2, with_c1=False)
    assert bc.C2 == pytest.approx((math.pi / bc.kappa0_prime), rel=1e-14)


def test_c1_matches_brute_force(unit_constants):
    # coarse brute force here; the 1e6-point version runs in acceptance
    kappa0, kp = unit_constants.kappa0, unit_constants.kappa0_prime
    want = c1_constant(kappa0, kp)
    u = np.concatenate([[0.0], np.geomspace(1e-8, 100.0 / (kappa0 - kp),
                                            100001)])
    f = np.maximum(2.0 * np.sqrt(u) * (1.0 + u), 1.0 + u) * np.exp(
        -(kappa0 - kp) * u)
    assert want == pytest.approx(np.max(f), rel=1e-6)
    assert want >= np.max(f) - 1e-12


def test_constants_scale_with_ellipticity():
    a = bound_constants(1.0, 1.0, 1, with_c1=False)
    b = bound_constants(0.25, 4.0, 1, with_c1=False)
    # wider ellipticity band: smaller decay rate, larger amplitude
    assert b.kappa0 < a.kappa0
    assert b.C0 > a.C0
    assert b.kappa0_prime < b.kappa0


def test_bound_constants_validation():
    with pytest.raises(ConfigError):
        bound_constants(2.0, 1.0, 1)
    with pytest.raises(ConfigError):
        bound_constants(1.0, 1.0, 1, kappa_ratio=1.5)
    with pytest.raises(ConfigError):
        bound_constants(1.0, 1.0, 1, eps0=1.0)


# --- reproducing identity ------------------------------------------------------

def test_reproducing_identity_spot(unit_constants):
    rep = reproducing_identity_check(unit_constants.kappa0_prime, 1,
                                     s=0.05, tau=0.0, t=0.1,
                                     x=[0.2], xi=[0.0])
    assert rep["abs_err"] <= 1e-6 * max(1.0, abs(rep["rhs"]))


def test_reproducing_identity_rejects_bad_ordering(unit_constants):
    with pytest.raises(ConfigError):
        reproducing_identity_check(unit_constants.kappa0_prime, 1,
                                   s=0.2, tau=0.0, t=0.1, x=[0.0], xi=[0.0])
