"""Coefficient fields, oscillation moduli, and the Dini classification."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parakern.coefficients import (
    ProbeSpec,
    QuadSpec,
    check_ellipticity,
    dini_integral,
    evaluate,
    field_from_config,
    freeze,
    mean_oscillation,
    mean_oscillation_profile,
    modulus_continuity,
)
from parakern.errors import ConfigError
from tests.conftest import FIELD_CONFIGS, dyadic_radii


# --- construction and ellipticity ------------------------------------------

def test_unknown_family_rejected():
    with pytest.raises(ConfigError):
        field_from_config({"family": "perlin", "d": 1, "lambda": 1.0,
                           "Lambda": 1.0, "params": {}})


def test_inverted_ellipticity_rejected():
    cfg = dict(FIELD_CONFIGS["const"], **{"lambda": 2.0, "Lambda": 1.0})
    with pytest.raises(ConfigError):
        field_from_config(cfg)


def test_evaluate_dimension_mismatch(x_sine_field):
    with pytest.raises(ConfigError):
        evaluate(x_sine_field, 0.1, [0.0, 0.0])


@pytest.mark.parametrize("name", sorted(FIELD_CONFIGS))
def test_evaluate_symmetric_and_elliptic(name):
    field = field_from_config(FIELD_CONFIGS[name])
    rng = np.random.default_rng(3)
    for _ in range(25):
        t = rng.uniform(0.0, 1.0)
        x = rng.uniform(-2.0, 2.0, size=field.d)
        A = evaluate(field, t, x)
        assert np.allclose(A, A.T, atol=1e-14)
        eigs = np.linalg.eigvalsh(A)
        assert field.lam - 1e-12 <= eigs.min()
        assert eigs.max() <= field.Lam + 1e-12


@pytest.mark.parametrize("name", sorted(FIELD_CONFIGS))
def test_check_ellipticity_report(name):
    field = field_from_config(FIELD_CONFIGS[name])
    rep = check_ellipticity(field)
    assert rep.passed
    assert field.lam - 1e-9 <= rep.lambda_est <= rep.Lambda_est <= field.Lam + 1e-9


def test_sampled_field_round_trip(tmp_path):
    # tabulate x_sine on a (t, x) grid and re-wrap it as a sampled field
    nodes = np.linspace(-3.0, 3.0, 121)
    path = tmp_path / "field.csv"
    with path.open("w") as fh:
        fh.write("t,x1,a11\n")
        for t in (0.0, 1.0):
            for x in nodes:
                fh.write(f"{t},{float(x)!r},{1.0 + 0.3 * math.sin(float(x))!r}\n")
    field = field_from_config({
        "family": "sampled", "d": 1, "lambda": 0.7, "Lambda": 1.3,
        "params": {"csv": str(path)},
    })
    ref = field_from_config(FIELD_CONFIGS["x_sine"])
    for x in (-1.3, 0.0, 0.4, 2.2):
        got = evaluate(field, 0.2, [x])[0, 0]
        want = evaluate(ref, 0.2, [x])[0, 0]
        assert got == pytest.approx(want, abs=2e-4)


# --- modulus profiles --------------------------------------------------------

def test_probe_spec_includes_center():
    spec = ProbeSpec(d=1, center=[0.25])
    _, X = spec.points()
    assert any(np.allclose(p, [0.25]) for p in X)


def test_modulus_zero_for_const_and_t_only(const_field, t_sine_field):
    radii = dyadic_radii(8)
    for f in (const_field, t_sine_field):
        prof = modulus_continuity(f, radii)
        assert prof.kind == "uniform_continuity"
        assert np.all(prof.values == 0.0)


def test_modulus_nonneg_monotone_subadditive(holder_field):
    radii = dyadic_radii(10)
    prof = modulus_continuity(holder_field, radii)
    asc = prof.values[::-1]  # radii are stored descending
    assert np.all(prof.values >= 0.0)
    assert np.all(np.diff(asc) >= -1e-12)
    # rho(2r) <= 2 rho(r) at tabulated dyadic pairs
    for k in range(len(asc) - 1):
        assert asc[k + 1] <= 2.0 * asc[k] + 1e-12


def test_holder_modulus_matches_root_growth(holder_field):
    # a(x) = 1 + min(sqrt|x|, 1): worst increment over |h| <= r at the
    # cusp is exactly sqrt(r) for r <= 1
    radii = dyadic_radii(8)
    prof = modulus_continuity(holder_field, radii)
    for r, v in zip(prof.radii, prof.values):
        assert v == pytest.approx(math.sqrt(r), rel=1e-6)


@given(amp=st.floats(0.05, 0.45), freq=st.floats(0.5, 3.0))
@settings(max_examples=20, deadline=None)
def test_x_sine_modulus_lipschitz_property(amp, freq):
    field = field_from_config({
        "family": "x_sine", "d": 1, "lambda": 1.0 - 0.5, "Lambda": 1.0 + 0.5,
        "params": {"base": 1.0, "amp": amp, "freq": freq},
    })
    prof = modulus_continuity(field, dyadic_radii(8))
    # |amp sin(f x) - amp sin(f y)| <= amp f |x - y|
    for r, v in zip(prof.radii, prof.values):
        assert v <= amp * freq * r + 1e-12
        assert v >= 0.0


def test_mean_oscillation_below_uniform_modulus(holder_field):
    # L1 average of oscillations cannot exceed the uniform sup modulus
    radii = dyadic_radii(6)
    uni = modulus_continuity(holder_field, radii)
    avg = mean_oscillation_profile(holder_field, radii, X=[0.0, 0.0])
    assert avg.kind == "mean_oscillation"
    assert np.all(avg.values <= uni.values + 1e-9)


def test_mean_oscillation_vanishes_far_from_cusp(holder_field):
    # the field is frozen at 1 + cap beyond |x| = 1, so oscillation at a
    # distant anchor is identically zero
    assert mean_oscillation(holder_field, 0.125, X=[0.0, 5.0]) == 0.0


# --- Dini integral and classification ---------------------------------------

def test_dini_integral_converges_for_holder(holder_field):
    prof = modulus_continuity(holder_field, dyadic_radii(12))
    res = dini_integral(prof)
    assert not res.diverged
    # int_0^1 sqrt(r)/r dr = 2; the dyadic tabulation approximates it
    assert res.value == pytest.approx(2.0, rel=0.2)


def test_dini_integral_diverges_for_log_modulus(log_modulus_field):
    prof = modulus_continuity(log_modulus_field, dyadic_radii(100))
    res = dini_integral(prof)
    assert res.diverged
    assert res.last5_ratio < res.ratio_threshold


def test_dini_partial_upper_radius(holder_field):
    prof = modulus_continuity(holder_field, dyadic_radii(12))
    full = dini_integral(prof).value
    half = dini_integral(prof, r=0.25).value
    assert 0.0 < half < full


# --- freezing ----------------------------------------------------------------

def test_freeze_exact_slice_matches_field(x_sine_field):
    res = freeze(x_sine_field, x0=[0.4], r=0.25, depth=6,
                 derivation="exact_slice")
    for t in (0.0, 0.3, 0.9):
        want = evaluate(x_sine_field, t, [0.4])
        assert np.allclose(res.curve.eval(t), want, atol=1e-12)
    assert res.curve.derivation == "exact_slice"
    # slice freezing skips the averaging ladder entirely
    assert len(res.radii) == len(res.increments) == 0


def test_freeze_averaged_limit_converges(holder_field):
    # ball averages at shrinking radii approach the slice value a(x0)
    res = freeze(holder_field, x0=[0.5], r=0.5, depth=10,
                 derivation="averaged_limit")
    want = evaluate(holder_field, 0.2, [0.5])
    assert np.allclose(res.curve.eval(0.2), want, atol=2e-2)
    # L1-in-time increments between consecutive averages shrink
    assert res.increments[-1] <= res.increments[0]


def test_freeze_curve_keeps_ellipticity(holder_field):
    res = freeze(holder_field, x0=[0.0], r=0.25, depth=5,
                 derivation="averaged_limit")
    A = res.curve.eval(0.1)
    eigs = np.linalg.eigvalsh(A)
    assert holder_field.lam - 1e-9 <= eigs.min()
    assert eigs.max() <= holder_field.Lam + 1e-9


def test_quad_spec_validation():
    with pytest.raises(ConfigError):
        QuadSpec(time_nodes=1)
