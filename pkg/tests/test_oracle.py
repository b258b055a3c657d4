"""Finite-difference reference solver and its verification checks."""

import math

import numpy as np
import pytest

from parakern.errors import ConfigError, VerificationError
from parakern.grids import KernelGrid
from parakern.oracle import (
    FDGridSpec,
    adjoint_gamma,
    adjoint_solve_and_symmetry,
    ck_check,
    duality_pairing_check,
    gamma_eps,
    mass_check,
    relative_gap,
    residual_check,
)


def heat(t: float, x: float, s: float, y: float) -> float:
    return math.exp(-((x - y) ** 2) / (4.0 * (t - s))) / math.sqrt(
        4.0 * math.pi * (t - s)
    )


def heat_row_grid(targets, sources, method="fd_oracle") -> KernelGrid:
    values = np.array(
        [[heat(t, x, s, y) for (s, y) in sources] for (t, x) in targets]
    )
    return KernelGrid(
        d=1,
        targets=np.asarray(targets, dtype=float),
        sources=np.asarray(sources, dtype=float),
        values=values,
        method=method,
        config_digest="test",
    )


class TestFDGridSpec:
    def test_node_floor(self):
        with pytest.raises(ConfigError):
            FDGridSpec(box_halfwidth=6.0, n_nodes=8, dt=1e-3)

    def test_dt_positive(self):
        with pytest.raises(ConfigError):
            FDGridSpec(box_halfwidth=6.0, n_nodes=601, dt=-1e-3)

    def test_theta_range(self):
        # theta < 1/2 loses unconditional stability, theta > 1 is meaningless
        for theta in (0.25, 1.5):
            with pytest.raises(ConfigError):
                FDGridSpec(box_halfwidth=6.0, n_nodes=601, dt=1e-3, theta=theta)

    def test_refined_halves_steps(self):
        spec = FDGridSpec(box_halfwidth=6.0, n_nodes=601, dt=1e-3, theta=0.5)
        fine = spec.refined()
        assert fine.n_nodes == 1201
        assert fine.dt == pytest.approx(5e-4)
        assert fine.box_halfwidth == spec.box_halfwidth
        assert fine.theta == spec.theta


class TestGammaEps:
    def test_constant_coefficients_match_heat_kernel(self, const_field, coarse_fd_spec):
        # eps = 0.05 spans 2.5 grid cells: the mollified source is resolved,
        # so backward Euler at these steps should sit well under 1%
        grid = gamma_eps(
            const_field,
            (0.0, 0.0),
            eps=0.05,
            spec=coarse_fd_spec,
            horizon=0.5,
            eval_times=[0.3, 0.5],
            x_eval=np.linspace(-1.0, 1.0, 11),
        )
        for (t, x), row in zip(grid.targets, grid.values):
            exact = heat(t, x, 0.0, 0.0)
            assert abs(row[0] - exact) / exact < 5e-3

    def test_mass_trace_conserved(self, const_field, coarse_fd_spec):
        grid = gamma_eps(
            const_field,
            (0.0, 0.0),
            eps=0.05,
            spec=coarse_fd_spec,
            horizon=0.5,
            eval_times=[0.3, 0.5],
            x_eval=[0.0],
        )
        trace = grid.meta["x_mass_trace"]
        for t, mass in trace.items():
            assert mass == pytest.approx(1.0, abs=1e-6), f"mass drifted at t={t}"

    def test_eval_time_must_follow_source(self, const_field, coarse_fd_spec):
        with pytest.raises(ConfigError):
            gamma_eps(
                const_field, (0.0, 0.0), 0.05, coarse_fd_spec, 0.5,
                eval_times=[0.0], x_eval=[0.0],
            )

    def test_eval_time_past_horizon(self, const_field, coarse_fd_spec):
        with pytest.raises(ConfigError):
            gamma_eps(
                const_field, (0.0, 0.0), 0.05, coarse_fd_spec, 0.5,
                eval_times=[0.6], x_eval=[0.0],
            )

    def test_box_margin_guard(self, const_field):
        # half-width must dominate the diffusive spread over the horizon
        tight = FDGridSpec(box_halfwidth=2.0, n_nodes=201, dt=1e-3)
        with pytest.raises(ConfigError):
            gamma_eps(
                const_field, (0.0, 0.0), 0.05, tight, 1.0,
                eval_times=[0.5], x_eval=[0.0],
            )


class TestResidualCheck:
    def test_accepts_matching_field(self, const_field, coarse_fd_spec):
        spec = FDGridSpec(box_halfwidth=6.0, n_nodes=601, dt=1e-3, theta=0.5)
        grid = gamma_eps(
            const_field, (0.0, 0.0), 0.05, spec, 0.4,
            eval_times=np.linspace(0.2, 0.4, 9),
            x_eval=np.linspace(-1.5, 1.5, 31),
        )
        report = residual_check(grid, const_field, exclusion_radius=0.3)
        assert report["max_scaled_residual"] < 0.05

    def test_flags_wrong_field(self, const_field):
        from parakern.coefficients import field_from_config

        spec = FDGridSpec(box_halfwidth=6.0, n_nodes=601, dt=1e-3, theta=0.5)
        grid = gamma_eps(
            const_field, (0.0, 0.0), 0.05, spec, 0.4,
            eval_times=np.linspace(0.2, 0.4, 9),
            x_eval=np.linspace(-1.5, 1.5, 31),
        )
        doubled = field_from_config(
            {
                "family": "const",
                "d": 1,
                "lambda": 2.0,
                "Lambda": 2.0,
                "params": {"value": 2.0},
            }
        )
        report = residual_check(grid, doubled, exclusion_radius=0.3)
        # solving with a but differentiating against 2a leaves an O(1) defect
        assert report["max_scaled_residual"] > 0.5


class TestMassCheck:
    def test_exact_kernel_lattice(self):
        ys = np.linspace(-8.0, 8.0, 801)
        grid = heat_row_grid([(0.5, 0.0)], [(0.0, y) for y in ys])
        report = mass_check(grid, tol=1e-6)
        assert report["passed"]
        assert report["max_deviation"] < 1e-9
        assert report["coverage"] > 0.999

    def test_single_source_rejected(self):
        grid = heat_row_grid([(0.5, 0.0)], [(0.0, 0.0)])
        with pytest.raises(ConfigError):
            mass_check(grid)

    def test_narrow_window_rejected(self):
        ys = np.linspace(-0.5, 0.5, 101)
        grid = heat_row_grid([(0.5, 0.0)], [(0.0, y) for y in ys])
        with pytest.raises(ConfigError, match="covers only"):
            mass_check(grid)


class TestCkCheck:
    @staticmethod
    def _composable_grids():
        xm = np.linspace(-8.0, 8.0, 641)
        xa = np.linspace(-2.0, 2.0, 9)
        A = heat_row_grid([(0.3, x) for x in xa], [(0.1, y) for y in xm])
        B = heat_row_grid([(0.1, y) for y in xm], [(0.0, 0.0)])
        direct = heat_row_grid([(0.3, x) for x in xa], [(0.0, 0.0)])
        return A, B, direct

    def test_exact_semigroup_identity(self):
        A, B, direct = self._composable_grids()
        report = ck_check(A, B, direct=direct)
        assert report["max_relative_defect"] < 1e-12
        assert report["tau_mid"] == pytest.approx(0.1)
        assert report["n_points"] == 9

    def test_requires_direct_grid(self):
        A, B, _ = self._composable_grids()
        with pytest.raises(ConfigError):
            ck_check(A, B)

    def test_tolerance_enforced(self):
        A, B, direct = self._composable_grids()
        with pytest.raises(VerificationError):
            ck_check(A, B, direct=direct, tol=1e-16)

    def test_seam_times_must_agree(self):
        A, _, direct = self._composable_grids()
        xm = np.linspace(-8.0, 8.0, 641)
        B_shifted = heat_row_grid([(0.05, y) for y in xm], [(0.0, 0.0)])
        with pytest.raises(ConfigError):
            ck_check(A, B_shifted, direct=direct)


class TestAdjointAndDuality:
    def test_symmetry_constant_coefficients(self, const_field, coarse_fd_spec):
        report = adjoint_solve_and_symmetry(
            const_field,
            (0.5, 0.2),
            0.05,
            coarse_fd_spec,
            sources=[(0.0, -0.4), (0.0, 0.0), (0.0, 0.6)],
        )
        assert report["n_points"] == 3
        assert report["max_relative_asymmetry"] < 5e-3

    def test_duality_pairing(self, holder_field, coarse_fd_spec):
        report = duality_pairing_check(
            holder_field, (0.5, 0.3), (0.0, -0.2), 0.05, coarse_fd_spec
        )
        assert report["passed"]
        assert report["relative_gap"] < 1e-8

    def test_adjoint_rows_conserve_mass(self, const_field, coarse_fd_spec):
        xs, rows = adjoint_gamma(
            const_field, (0.5, 0.2), 0.05, coarse_fd_spec, tau_eval=[0.0, 0.2]
        )
        assert sorted(rows) == [0.0, 0.2]
        for tau, row in rows.items():
            mass = float(np.trapezoid(row, xs))
            assert mass == pytest.approx(1.0, abs=1e-6), f"tau={tau}"


class TestRelativeGap:
    def test_identical_grids(self):
        a = heat_row_grid([(0.5, 0.0)], [(0.0, 0.0)])
        b = heat_row_grid([(0.5, 0.0)], [(0.0, 0.0)], method="frozen")
        report = relative_gap(a, b)
        assert report["gap"] == 0.0
        assert report["argmax_target"] == [0.5, 0.0]

    def test_lattice_mismatch_rejected(self):
        a = heat_row_grid([(0.5, 0.0)], [(0.0, 0.0)])
        b = heat_row_grid([(0.5, 0.1)], [(0.0, 0.0)])
        with pytest.raises(ConfigError):
            relative_gap(a, b)
