"""Numerical fundamental solutions of parabolic operators in non-divergence form.

The package builds transition kernels Gamma(t, x, tau, xi) for operators

    P u = du/dt - a_ij(t, x) D_ij u,      lam |v|^2 <= a_ij v_i v_j <= Lam |v|^2,

by freezing coefficients along time fibers (exact Gaussian kernels for
t-dependent-only coefficients) and correcting with the Levi parametrix
series when the coefficients vary in space.  Companion modules quantify
the Dini modulus of the coefficients, verify Gaussian upper bounds with
explicit constants, and cross-check everything against an independent
finite-difference solver.
"""

from .coefficients import (
    CoefficientField,
    ModulusProfile,
    TimeCurve,
    ProbeSpec,
    field_from_config,
    load_field_config,
    evaluate,
    check_ellipticity,
    modulus_continuity,
    mean_oscillation,
    dini_integral,
    freeze,
)
from .frozen import (
    FrozenKernel,
    BoundConstants,
    bound_constants,
    c1_constant,
    reproducing_identity_check,
)
from .grids import GridSpec, KernelGrid
from .levi import (
    ParametrixConfig,
    levi_kernel,
    w0,
    iterate,
    iterate_table,
    build_short_time,
    build_composed,
    delta0,
    extend_semigroup,
)
from .bounds import (
    GaussianEnvelope,
    parabolic_distance,
    envelope_ratio,
    pointwise_bound_check,
    derivative_bound_check,
    chaining_bound,
    chaining_bound_report,
    chaining_crossover,
    tail_sum_bound,
    exp_decay_check,
)
from .oracle import (
    FDGridSpec,
    gamma_eps,
    mass_check,
    ck_check,
    residual_check,
    adjoint_solve_and_symmetry,
    duality_pairing_check,
    relative_gap,
)
from .errors import (
    ParakernError,
    ConfigError,
    GuardRailError,
    NonDiniError,
    ContractionError,
    HorizonError,
    LeakageError,
    DegenerateSpanError,
    VerificationError,
)

__version__ = "0.1.0"
