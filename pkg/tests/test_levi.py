"""Levi series: correction terms, short-horizon builds, composition."""

import math

import numpy as np
import pytest

from parakern.coefficients import ProbeSpec, modulus_continuity
from parakern.errors import (
    ConfigError,
    ContractionError,
    DegenerateSpanError,
    HorizonError,
    LeakageError,
    NonDiniError,
)
from parakern.frozen import bound_constants
from parakern.levi import (
    ParametrixConfig,
    build_composed,
    build_short_time,
    delta0,
    extend_semigroup,
    levi_kernel,
    w0,
    w0_monte_carlo,
)
from tests.conftest import dyadic_radii

# first correction term on a(x) = 1 + 0.3 sin x, frozen from the
# adaptive-quadrature oracle (w0 args: t, x, tau, xi)
W0_CASES = [
    ((0.3, 0.4, 0.0, -0.2), 2.8122524999e-02),
    ((0.05, 0.0, 0.0, 0.0), 6.4316728013e-04),
    ((0.2, -0.5, 0.0, 0.3), -4.0307032356e-02),
    ((0.5, 1.0, 0.1, 0.8), -4.6327935676e-03),
]


# --- correction terms ---------------------------------------------------------

def test_levi_kernel_vanishes_without_x_dependence(const_field, t_sine_field):
    y = np.array([[0.3], [-0.7]])
    for f in (const_field, t_sine_field):
        vals = levi_kernel(f, 0.5, 0.2, y, 0.0, [0.1])
        assert np.all(vals == 0.0)


def test_levi_kernel_span_guards(x_sine_field):
    with pytest.raises(ConfigError):
        levi_kernel(x_sine_field, 0.5, 0.1, [[0.0]], 0.2, [0.0])
    with pytest.raises(DegenerateSpanError):
        levi_kernel(x_sine_field, 0.5, 0.2, [[0.0]], 0.2 - 1e-15, [0.0])


@pytest.mark.parametrize("args,want", W0_CASES)
def test_w0_frozen_oracle_values(x_sine_field, args, want):
    t, x, tau, xi = args
    assert w0(x_sine_field, t, x, tau, xi) == pytest.approx(want, rel=1e-6)


def test_w0_against_monte_carlo(x_sine_field):
    # independent route: importance-sampled space-time integral
    t, x, tau, xi = W0_CASES[0][0]
    mc = w0_monte_carlo(x_sine_field, t, x, tau, xi, n_samples=200000, seed=7)
    assert mc == pytest.approx(W0_CASES[0][1], rel=0.05)


# --- short-horizon builds -------------------------------------------------------

def test_const_build_is_heat_kernel(const_field, unit_constants):
    grid = build_short_time(const_field, [[1.0, 0.0]], [[0.0, 0.0]],
                            ParametrixConfig(), unit_constants)
    want = (4.0 * math.pi) ** -0.5
    assert grid.values[0, 0] == pytest.approx(want, abs=1e-10)
    assert all(n == 0.0 for n in grid.meta["term_norms"])


def test_t_sine_build_matches_closed_form(t_sine_field):
    grid = build_short_time(t_sine_field, [(0.4, 0.3), (0.8, -0.6)],
                            [(0.0, 0.2)], ParametrixConfig())
    for i, (t, x) in enumerate(grid.targets):
        Sig = 4.0 * t + 2.0 * (1.0 - math.cos(t))
        want = math.exp(-0.5 * (x - 0.2) ** 2 / Sig) / math.sqrt(
            2.0 * math.pi * Sig)
        assert grid.values[i, 0] == pytest.approx(want, rel=1e-9)


def test_build_rejects_backward_and_degenerate_spans(x_sine_field):
    with pytest.raises(HorizonError):
        build_short_time(x_sine_field, [(0.1, 0.0)], [(0.2, 0.0)])
    with pytest.raises(DegenerateSpanError):
        build_short_time(x_sine_field, [(1e-14, 0.0)], [(0.0, 0.0)])
    with pytest.raises(ConfigError):
        build_short_time(x_sine_field, [(0.1, 0.0, 0.0)], [(0.0, 0.0)])


def test_build_enforces_configured_horizon(x_sine_field):
    cfg = ParametrixConfig(delta0=0.1)
    with pytest.raises(HorizonError):
        build_short_time(x_sine_field, [(0.5, 0.0)], [(0.0, 0.0)], cfg)


def test_contraction_witness_trips_on_tight_budget(holder_field):
    # measured first-term ratio on this field at span 1 is near 0.08,
    # far above an eps0 + slack budget of 0.06
    cfg = ParametrixConfig(eps0=0.05, witness_slack=0.01, series_tol=1e-9)
    with pytest.raises(ContractionError) as err:
        build_short_time(holder_field, [(1.0, 0.0)], [(0.0, 0.0)], cfg)
    assert len(err.value.ratios) > 0


def test_build_is_deterministic(x_sine_field):
    args = ([(0.2, 0.1), (0.3, -0.4)], [(0.0, 0.0), (0.05, 0.2)])
    a = build_short_time(x_sine_field, *args)
    b = build_short_time(x_sine_field, *args)
    assert np.array_equal(a.values, b.values)
    assert a.config_digest == b.config_digest


def test_threads_do_not_change_values(x_sine_field):
    targets = [(0.2, x) for x in np.linspace(-1.0, 1.0, 7)]
    a = build_short_time(x_sine_field, targets, [(0.0, 0.0)],
                         ParametrixConfig(threads=1))
    b = build_short_time(x_sine_field, targets, [(0.0, 0.0)],
                         ParametrixConfig(threads=4))
    assert np.array_equal(a.values, b.values)


# --- horizon from the modulus ----------------------------------------------------

def test_delta0_infinite_without_x_dependence(const_field, unit_constants):
    prof = modulus_continuity(const_field, dyadic_radii(8))
    assert delta0(prof, unit_constants) == math.inf


def test_delta0_x_sine_value(x_sine_field):
    prof = modulus_continuity(x_sine_field, dyadic_radii(14))
    constants = bound_constants(x_sine_field.lam, x_sine_field.Lam, 1)
    d0 = delta0(prof, constants)
    assert d0 == pytest.approx(0.015625, rel=1e-12)


def test_delta0_rejects_non_dini(log_modulus_field):
    prof = modulus_continuity(log_modulus_field, dyadic_radii(100))
    constants = bound_constants(log_modulus_field.lam,
                                log_modulus_field.Lam, 1)
    with pytest.raises(NonDiniError) as err:
        delta0(prof, constants)
    assert "last5_ratio" in err.value.diagnostics


def test_delta0_horizon_error_when_budget_unreachable(x_sine_field):
    prof = modulus_continuity(x_sine_field, dyadic_radii(10))
    constants = bound_constants(x_sine_field.lam, x_sine_field.Lam, 1)
    with pytest.raises(HorizonError):
        delta0(prof, constants, eps0=1e-12)


# --- composition ------------------------------------------------------------------

def test_extend_semigroup_frozen_exactness(t_sine_field):
    # t-only coefficients: the two-step composition must reproduce the
    # one-step kernel up to quadrature of the spatial integral
    xg = np.linspace(-6.0, 6.0, 241)
    comp = build_composed(t_sine_field, xg, [0.0, 0.1, 0.2])
    direct = build_short_time(t_sine_field,
                              [(0.2, 0.0), (0.2, 0.5)], [(0.0, 0.0)])
    for (t, x), want in zip(direct.targets, direct.values[:, 0]):
        i = np.where((comp.targets[:, 0] == t)
                     & (np.abs(comp.targets[:, 1] - x) < 1e-12))[0]
        j = np.where((comp.sources[:, 0] == 0.0)
                     & (np.abs(comp.sources[:, 1]) < 1e-12))[0]
        assert comp.values[i[0], j[0]] == pytest.approx(float(want), rel=1e-9)


def test_extend_semigroup_flags_leakage(t_sine_field):
    # a lattice much narrower than the kernel spread loses interior mass
    xg = np.linspace(-0.5, 0.5, 41)
    with pytest.raises(LeakageError):
        build_composed(t_sine_field, xg, [0.0, 0.4, 0.8])


def test_composed_mass_drift_is_recorded(x_sine_field):
    xg = np.linspace(-4.0, 4.0, 65)
    comp = build_composed(x_sine_field, xg, [0.0, 0.1, 0.2])
    assert comp.method == "composed"
    assert 0.0 <= comp.meta["total_mass_drift"] < 1e-2
