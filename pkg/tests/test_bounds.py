"""Envelopes, scaled-sup checks, and the chained decay bound."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parakern.bounds import (
    GaussianEnvelope,
    chaining_bound,
    chaining_bound_report,
    chaining_crossover,
    derivative_bound_check,
    envelope_ratio,
    exp_decay_check,
    parabolic_distance,
    pointwise_bound_check,
    tail_sum_bound,
    tail_sum_direct_log,
)
from parakern.errors import ConfigError
from parakern.grids import KernelGrid

# frozen crossover reference for lam = Lam = 1, d = 1 (C0 = (4 pi)^{-1/2},
# kappa0 = 1/4); beta = kappa0 / 2 in every case
R0_REF = {0.25: 2.0576768183e11, 0.5: 5.0625000051e4, 0.75: 6.2678841297e2}
SEAM_N_REF = {0.25: 305515237, 0.5: 226, 0.75: 6}

C0_UNIT = (4.0 * math.pi) ** -0.5
KAPPA0_UNIT = 0.25


def heat_grid(times, xs, source=(0.0, 0.0), fn=None):
    """Single-source analytic grid; fn(dt, r) defaults to the heat kernel."""
    if fn is None:
        def fn(dt, r):
            return math.exp(-r * r / (4.0 * dt)) / math.sqrt(4.0 * math.pi * dt)
    targets = np.array([(t, x) for t in times for x in xs])
    values = np.array([[fn(t - source[0], abs(x - source[1]))]
                       for t, x in targets])
    return KernelGrid(targets=targets, sources=np.array([source]),
                      values=values, method="fd_oracle", d=1,
                      config_digest="test", meta={})


# --- envelope -----------------------------------------------------------------

def test_envelope_validation():
    with pytest.raises(ConfigError):
        GaussianEnvelope(C=1.0, kappa=0.25, p=2.5, d=1)
    with pytest.raises(ConfigError):
        GaussianEnvelope(C=-1.0, kappa=0.25, p=2.0, d=1)
    with pytest.raises(ConfigError):
        GaussianEnvelope(C=1.0, kappa=0.25, p=2.0, d=1).evaluate(0.0, 1.0)


@given(p=st.floats(0.1, 2.0), kappa=st.floats(0.01, 2.0),
       dt=st.floats(0.01, 4.0), r1=st.floats(0.0, 10.0), dr=st.floats(0.0, 10.0))
@settings(max_examples=60, deadline=None)
def test_envelope_positive_decreasing(p, kappa, dt, r1, dr):
    env = GaussianEnvelope(C=1.0, kappa=kappa, p=p, d=1)
    a, b = env.evaluate(dt, r1), env.evaluate(dt, r1 + dr)
    assert a > 0.0
    assert b <= a * (1.0 + 1e-12)


def test_envelope_gaussian_closed_form():
    env = GaussianEnvelope(C=2.0, kappa=0.25, p=2.0, d=3)
    assert env.evaluate(0.25, 1.0) == pytest.approx(
        2.0 * 0.25**-1.5 * math.exp(-1.0), rel=1e-14)


# --- parabolic distance ---------------------------------------------------------

def test_parabolic_distance_values():
    assert parabolic_distance((0.0, 0.0), (0.04, 0.1)) == pytest.approx(0.2)
    assert parabolic_distance((0.0, 0.3), (0.01, 0.0)) == pytest.approx(0.3)
    assert parabolic_distance((0.5, 1.0), (0.5, 1.0)) == 0.0


@given(st.lists(st.tuples(st.floats(-4.0, 4.0), st.floats(-4.0, 4.0)),
                min_size=3, max_size=3))
@settings(max_examples=100, deadline=None)
def test_parabolic_distance_metric_properties(pts):
    X, Y, Z = pts
    dxy = parabolic_distance(X, Y)
    assert dxy == parabolic_distance(Y, X)
    assert dxy >= 0.0
    assert dxy <= parabolic_distance(X, Z) + parabolic_distance(Z, Y) + 1e-12


# --- scaled-sup checks ------------------------------------------------------------

def test_envelope_ratio_heat_kernel_exact():
    # with the relaxed rate kappa0/2 the ratio peaks at x = y with value
    # exactly C0 (at kappa0 itself it would be C0 everywhere)
    grid = heat_grid([0.1, 0.2, 0.4], np.linspace(-2.0, 2.0, 41))
    env = GaussianEnvelope(C=1.0, kappa=KAPPA0_UNIT / 2.0, p=2.0, d=1)
    rep = envelope_ratio(grid, env)
    assert rep["sup_ratio"] == pytest.approx(C0_UNIT, rel=1e-12)
    assert rep["argmax_target"][1] == pytest.approx(0.0, abs=1e-12)


def test_envelope_ratio_interior_argmax_unflagged():
    # a time-peaked modulation pins the maximizer strictly inside the
    # grid; the resolved sup must not carry the boundary flag
    def fn(dt, r):
        heat = math.exp(-r * r / (4.0 * dt)) / math.sqrt(4.0 * math.pi * dt)
        return heat * (1.0 + 0.5 * math.exp(-((dt - 0.2) / 0.05) ** 2))

    grid = heat_grid([0.1, 0.2, 0.4], np.linspace(-2.0, 2.0, 41), fn=fn)
    env = GaussianEnvelope(C=1.0, kappa=KAPPA0_UNIT / 2.0, p=2.0, d=1)
    rep = envelope_ratio(grid, env)
    assert rep["sup_ratio"] == pytest.approx(1.5 * C0_UNIT, rel=1e-12)
    assert rep["boundary_flag"] is False


def test_envelope_ratio_flags_boundary_argmax():
    # a looser decay rate pushes the argmax to the lattice edge
    grid = heat_grid([0.5], np.linspace(-2.0, 2.0, 21))
    env = GaussianEnvelope(C=1.0, kappa=1.0, p=2.0, d=1)
    rep = envelope_ratio(grid, env)
    assert rep["boundary_flag"] is True


def test_pointwise_bound_heat_kernel_closed_form():
    # in d = 1 the time-diagonal branch wins: sup Gamma * pd = (4 pi)^{-1/2}
    t = 0.2
    xs = np.concatenate([np.linspace(-3.0, 3.0, 301), [math.sqrt(2.0 * t)]])
    grid = heat_grid([t], np.sort(xs))
    rep = pointwise_bound_check(grid, R0=10.0)
    assert rep["sup_scaled"] == pytest.approx(C0_UNIT, rel=1e-9)
    assert abs(rep["argmax_target"][1] - rep["argmax_source"][1]) < 1e-12


def test_pointwise_bound_needs_points_in_window():
    grid = heat_grid([0.5], [0.0])
    with pytest.raises(ConfigError):
        pointwise_bound_check(grid, R0=1e-6)


def test_derivative_bound_on_heat_kernel():
    times, xs = [0.1, 0.3], np.linspace(-2.0, 2.0, 81)

    def grad(dt, r):
        return abs(-r / (2.0 * dt)) * math.exp(-r * r / (4.0 * dt)) \
            / math.sqrt(4.0 * math.pi * dt)

    def hess(dt, r):
        phi = math.exp(-r * r / (4.0 * dt)) / math.sqrt(4.0 * math.pi * dt)
        return abs((r / (2.0 * dt)) ** 2 - 1.0 / (2.0 * dt)) * phi

    def dtv(dt, r):
        phi = math.exp(-r * r / (4.0 * dt)) / math.sqrt(4.0 * math.pi * dt)
        return abs(r * r / (4.0 * dt * dt) - 0.5 / dt) * phi

    rep = derivative_bound_check(heat_grid(times, xs, fn=grad),
                                 heat_grid(times, xs, fn=hess),
                                 heat_grid(times, xs, fn=dtv), R0=10.0)
    assert math.isfinite(rep["sup_first_scaled"])
    assert math.isfinite(rep["sup_second_scaled"])
    assert rep["sup_first_scaled"] > 0.0
    assert rep["sup_second_scaled"] > 0.0


def test_exp_decay_fit_on_heat_kernel():
    # ratio e^{-z^2/4 + z/4} peaks at z = 1/2: fitted C = C0 e^{1/16}
    xs = np.concatenate([np.linspace(-2.0, 2.0, 401), [0.5 * math.sqrt(0.25)]])
    grid = heat_grid([0.25], np.sort(xs))
    rep = exp_decay_check(grid, kappa0=KAPPA0_UNIT)
    assert rep["fitted"] is True
    assert rep["C0"] == pytest.approx(C0_UNIT * math.exp(1.0 / 16.0), rel=1e-9)
    # with that constant supplied there is nothing left to violate
    rep2 = exp_decay_check(grid, kappa0=KAPPA0_UNIT, C0=rep["C0"] * (1 + 1e-9))
    assert rep2["violations"] == 0
    # an undersized constant is flagged
    rep3 = exp_decay_check(grid, kappa0=KAPPA0_UNIT, C0=C0_UNIT)
    assert rep3["violations"] > 0
    assert rep3["worst_ratio"] == pytest.approx(math.exp(1.0 / 16.0), rel=1e-9)


# --- tail sums ---------------------------------------------------------------------

def test_tail_sum_frozen_spot_values():
    rep = tail_sum_bound(1, 0.5)
    assert rep["log_bound"] == pytest.approx(2.3025850929940455, rel=1e-12)
    assert tail_sum_direct_log(1, 0.5) == pytest.approx(1.9460081805509777,
                                                        rel=1e-9)


@given(k=st.integers(1, 20), alpha=st.floats(0.05, 0.95))
@settings(max_examples=60, deadline=None)
def test_tail_sum_bound_dominates_direct(k, alpha):
    bound = tail_sum_bound(k, alpha)["log_bound"]
    direct = tail_sum_direct_log(k, alpha)
    assert bound >= direct - 1e-9


def test_tail_sum_validation():
    with pytest.raises(ConfigError):
        tail_sum_bound(-1, 0.5)
    with pytest.raises(ConfigError):
        tail_sum_bound(1, 0.0)


# --- chaining ------------------------------------------------------------------------

@pytest.mark.parametrize("delta", sorted(R0_REF))
def test_chaining_crossover_frozen_values(delta):
    rep = chaining_crossover(C0_UNIT, KAPPA0_UNIT, delta, 1)
    assert rep["R0"] == pytest.approx(R0_REF[delta], rel=1e-9)
    assert rep["beta"] == pytest.approx(KAPPA0_UNIT / 2.0, rel=1e-12)
    assert rep["seam_N"] == SEAM_N_REF[delta]


def test_chaining_branch_switch():
    lo = chaining_bound_report(C0_UNIT, KAPPA0_UNIT, 0.5, 1.0, [1.0])
    hi = chaining_bound_report(C0_UNIT, KAPPA0_UNIT, 0.5, 1.0, [2.0e5])
    assert lo["branch"] == "single_step"
    assert lo["N"] == 1
    assert hi["branch"] == "chained"
    assert hi["log_bound"] < lo["log_bound"]


def test_chaining_bound_matches_report():
    rep = chaining_bound_report(C0_UNIT, KAPPA0_UNIT, 0.5, 1.0, [1.0])
    assert chaining_bound(C0_UNIT, KAPPA0_UNIT, 0.5, 1.0, [1.0]) \
        == pytest.approx(rep["bound"], rel=1e-14)
    assert rep["bound"] == pytest.approx(math.exp(rep["log_bound"]), rel=1e-14)


def test_chaining_underflow_is_zero_not_error():
    rep = chaining_bound_report(C0_UNIT, KAPPA0_UNIT, 0.5, 1.0, [2.0e5])
    assert rep["bound"] == 0.0
    assert math.isfinite(rep["log_bound"])


def test_chaining_validation():
    with pytest.raises(ConfigError):
        chaining_crossover(C0_UNIT, KAPPA0_UNIT, 0.0, 1)
    with pytest.raises(ConfigError):
        chaining_crossover(C0_UNIT, KAPPA0_UNIT, 1.0, 1)
    with pytest.raises(ConfigError):
        chaining_bound_report(C0_UNIT, -0.1, 0.5, 1.0, [1.0])
