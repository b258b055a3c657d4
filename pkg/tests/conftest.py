"""Shared fixtures: benchmark coefficient fields and solver settings.

The five families cover the regimes the checks care about: exactly
solvable (const, t_sine), smooth spatial variation (x_sine), Dini but
not Lipschitz (holder, square-root cusp at the origin), and the
non-Dini negative control (log_modulus).
"""

import numpy as np
import pytest

from parakern.coefficients import field_from_config
from parakern.frozen import bound_constants
from parakern.oracle import FDGridSpec

FIELD_CONFIGS = {
    "const": {"family": "const", "d": 1, "lambda": 1.0, "Lambda": 1.0,
              "params": {"value": 1.0}},
    "t_sine": {"family": "t_sine", "d": 1, "lambda": 1.0, "Lambda": 3.0,
               "params": {"base": 2.0, "amp": 1.0, "freq": 1.0}},
    "x_sine": {"family": "x_sine", "d": 1, "lambda": 0.7, "Lambda": 1.3,
               "params": {"base": 1.0, "amp": 0.3, "freq": 1.0}},
    "holder": {"family": "holder", "d": 1, "lambda": 1.0, "Lambda": 2.0,
               "params": {"base": 1.0, "amp": 1.0, "alpha": 0.5,
                          "cap": 1.0, "center": 0.0}},
    "log_modulus": {"family": "log_modulus", "d": 1, "lambda": 1.0,
                    "Lambda": 2.0,
                    "params": {"base": 1.0, "amp": 0.5, "r_cut": 0.25}},
}


@pytest.fixture(scope="session")
def const_field():
    return field_from_config(FIELD_CONFIGS["const"])


@pytest.fixture(scope="session")
def t_sine_field():
    return field_from_config(FIELD_CONFIGS["t_sine"])


@pytest.fixture(scope="session")
def x_sine_field():
    return field_from_config(FIELD_CONFIGS["x_sine"])


@pytest.fixture(scope="session")
def holder_field():
    return field_from_config(FIELD_CONFIGS["holder"])


@pytest.fixture(scope="session")
def log_modulus_field():
    return field_from_config(FIELD_CONFIGS["log_modulus"])


@pytest.fixture(scope="session")
def unit_constants():
    # lam = Lam = 1, d = 1: C0 = (4 pi)^{-1/2}, kappa0 = 1/4
    return bound_constants(1.0, 1.0, 1)


@pytest.fixture(scope="session")
def coarse_fd_spec():
    # cheap solver settings for structural checks (not accuracy claims)
    return FDGridSpec(box_halfwidth=6.0, n_nodes=601, dt=1e-3, theta=1.0)


@pytest.fixture(scope="session")
def accurate_fd_spec():
    # Crank-Nicolson at a resolution where the heat-kernel gap is < 2%
    return FDGridSpec(box_halfwidth=8.0, n_nodes=6401, dt=2e-4, theta=0.5)


def dyadic_radii(depth: int) -> np.ndarray:
    return 2.0 ** -np.arange(depth + 1, dtype=float)
