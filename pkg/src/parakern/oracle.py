"""Finite-difference reference solver and global consistency checks.

The solver approximates the kernel mollified over a backward parabolic
cylinder Q_eps^-(Y) = (tau - eps^2, tau] x B_eps(xi):

    Gamma_eps(t, x; Y) = |Q|^{-1} int_{Q_eps^-(Y)} Gamma(t, x; s, y) dy ds,

realized as an implicit theta-scheme for du/dt = a(t, x) u_xx with a
discretely normalized indicator source (total injected mass exactly 1)
and Dirichlet walls far enough out that truncation is negligible.
Implemented for d = 1; the checks below operate on KernelGrid values
from any construction method.

The non-divergence operator does not conserve the x-integral of the
forward solution pointwise; the conserved quantity is the integral over
the source slot.  The adjoint stepping is the exact matrix transpose of
the forward stepping, which coincides with the conservative
discretization of the adjoint equation, so source-slot mass and
forward/adjoint duality hold to rounding at the discrete level.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.linalg import solve_banded

from .coefficients import CoefficientField
from .errors import ConfigError, VerificationError
from .grids import KernelGrid, config_digest
from .quad import trapezoid_weights


@dataclasses.dataclass
class FDGridSpec:
    """Space-time resolution of the reference solver."""

    box_halfwidth: float
    n_nodes: int = 801
    dt: float = 1e-4
    theta: float = 1.0

    def __post_init__(self):
        if self.box_halfwidth <= 0.0:
            raise ConfigError("box_halfwidth must be positive")
        if self.n_nodes < 16:
            raise ConfigError("n_nodes must be at least 16")
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if not (0.5 <= self.theta <= 1.0):
            raise ConfigError("theta must lie in [1/2, 1] for unconditional stability")

    @property
    def h(self) -> float:
        return 2.0 * self.box_halfwidth / (self.n_nodes - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(-self.box_halfwidth, self.box_halfwidth, self.n_nodes)

    def refined(self, factor: int = 2) -> "FDGridSpec":
        return FDGridSpec(
            box_halfwidth=self.box_halfwidth,
            n_nodes=factor * (self.n_nodes - 1) + 1,
            dt=self.dt / factor,
            theta=self.theta,
        )


def _check_margins(grid: FDGridSpec, horizon: float, points) -> None:
    need = 8.0 * math.sqrt(horizon)
    if grid.box_halfwidth < need:
        raise ConfigError(
            f"box half-width {grid.box_halfwidth:g} < 8 sqrt(horizon) = {need:g}"
        )
    margin = 4.0 * math.sqrt(horizon)
    for p in np.atleast_1d(points):
        if abs(p) > grid.box_halfwidth - margin:
            raise ConfigError(
                f"point {p:g} closer than 4 sqrt(horizon) to the Dirichlet wall "
                "(mass-leakage guard)"
            )


def _require_1d(field: CoefficientField) -> None:
    if field.d != 1:
        raise ConfigError("the finite-difference oracle is implemented for d = 1")


class _Stepper:
    """Theta-scheme stepper for du/dt = a(t, x) u_xx on a Dirichlet box.

    step(u, t0, t1) advances forward; step_transpose(v, t0, t1) applies
    the exact transpose propagator, i.e. the conservative adjoint step.
    """

    def __init__(self, field: CoefficientField, grid: FDGridSpec):
        self.field = field
        self.grid = grid
        self.x = grid.nodes()
        self.h = grid.h
        self._coef_cache = {}

    def _a(self, t: float) -> np.ndarray:
        if not self.field.time_dependent:
            t = 0.0
        key = round(t, 14)
        if key not in self._coef_cache:
            if len(self._coef_cache) > 4096:
                self._coef_cache.clear()
            A = self.field.eval(t, self.x[:, None])
            self._coef_cache[key] = np.ascontiguousarray(A[:, 0, 0])
        return self._coef_cache[key]

    def _banded(self, t: float, scale: float):
        """Banded form of I + scale * A(t), A = a(t,x) D^2, walls pinned."""
        n = self.grid.n_nodes
        a = self._a(t)
        r = scale * a / self.h**2
        ab = np.zeros((3, n))
        ab[0, 1:] = r[:-1]          # superdiagonal entry of row i is r_i
        ab[1, :] = 1.0 - 2.0 * r
        ab[2, :-1] = r[1:]
        ab[1, 0] = ab[1, -1] = 1.0
        ab[0, 1] = ab[2, -2] = 0.0
        return ab

    def _banded_t(self, t: float, scale: float):
        """Banded form of (I + scale * A(t))^T: the conservative stencil."""
        n = self.grid.n_nodes
        a = self._a(t)
        r = scale * a / self.h**2
        ab = np.zeros((3, n))
        ab[0, 1:] = r[1:]           # row i now couples to a_{i+1} v_{i+1}
        ab[1, :] = 1.0 - 2.0 * r
        ab[2, :-1] = r[:-1]
        ab[1, 0] = ab[1, -1] = 1.0
        ab[0, 1] = ab[2, -2] = 0.0
        return ab

    @staticmethod
    def _apply(ab: np.ndarray, u: np.ndarray) -> np.ndarray:
        out = ab[1] * u
        out[:-1] += ab[0, 1:] * u[1:]
        out[1:] += ab[2, :-1] * u[:-1]
        return out

    def step(self, u: np.ndarray, t0: float, t1: float) -> np.ndarray:
        dt = t1 - t0
        th = self.grid.theta
        rhs = self._apply(self._banded(t0, (1.0 - th) * dt), u)
        rhs[0] = rhs[-1] = 0.0
        out = solve_banded((1, 1), self._banded(t1, -th * dt), rhs)
        out[0] = out[-1] = 0.0
        return out

    def step_transpose(self, v: np.ndarray, t0: float, t1: float) -> np.ndarray:
        dt = t1 - t0
        th = self.grid.theta
        w = solve_banded((1, 1), self._banded_t(t1, -th * dt), v)
        w[0] = w[-1] = 0.0
        out = self._apply(self._banded_t(t0, (1.0 - th) * dt), w)
        out[0] = out[-1] = 0.0
        return out


def _source_profile(x: np.ndarray, h: float, center: float, eps: float) -> np.ndarray:
    """Spatial indicator of B_eps(center), discretely normalized: h * sum = 1."""
    prof = (np.abs(x - center) < eps).astype(float)
    if not prof.any():
        prof[np.argmin(np.abs(x - center))] = 1.0
    return prof / (h * prof.sum())


def forward_profiles(field: CoefficientField, source, eps: float,
                     spec: FDGridSpec, eval_times,
                     initial_delta: bool = False):
    """Raw mollified-source forward solve.

    Returns (x_nodes, {t_eval: profile}).  Evaluation times before the
    source window starts give exact zeros (causality of time-marching);
    times inside the window give the partially injected state.  With
    initial_delta the normalized indicator is placed as initial data at
    tau instead of being injected over (tau - eps^2, tau]; that variant
    is not the mollified object the checks are stated for and exists
    for convergence studies only.
    """
    _require_1d(field)
    if eps <= 0.0:
        raise ConfigError("eps must be positive")
    tau, xi = float(source[0]), float(source[1])
    eval_times = np.sort(np.unique(np.asarray(eval_times, dtype=float)))
    horizon = float(eval_times[-1] - tau)
    if horizon <= 0.0:
        raise ConfigError("the last evaluation time must lie after the source time")
    if eps**2 >= horizon:
        raise ConfigError("eps^2 must be smaller than the horizon")
    _check_margins(spec, horizon, [xi])
    stepper = _Stepper(field, spec)
    x = stepper.x
    u = np.zeros(spec.n_nodes)
    prof = _source_profile(x, stepper.h, xi, eps)

    window_start = tau if initial_delta else tau - eps**2
    out = {float(t): np.zeros(spec.n_nodes) for t in eval_times
           if t <= window_start}
    remaining = [float(t) for t in eval_times if t > window_start]
    if initial_delta:
        u = prof.copy()

    # source window (tau - eps^2, tau]: sub-steps keep at least 5 injections;
    # each sub-step injects dt/eps^2 of the normalized profile, so the total
    # discrete mass is exactly 1 once the window closes
    n_inj = max(5, int(math.ceil(eps**2 / spec.dt)))
    dt_inj = eps**2 / n_inj
    t_now = window_start
    events = sorted(set(remaining) | {tau})
    for t_ev in events:
        if t_ev <= tau and not initial_delta:
            while t_now < t_ev - 1e-15:
                u = stepper.step(u, t_now, t_now + dt_inj)
                u = u + (dt_inj / eps**2) * prof
                t_now += dt_inj
            t_now = t_ev
        elif t_ev <= tau:
            t_now = t_ev
        else:
            span = t_ev - t_now
            n_steps = max(1, int(math.ceil(span / spec.dt)))
            dt = span / n_steps
            for _ in range(n_steps):
                u = stepper.step(u, t_now, t_now + dt)
                t_now += dt
            t_now = t_ev
        if t_ev in remaining:
            out[t_ev] = u.copy()
    return x, out


def gamma_eps(field: CoefficientField, source, eps: float, spec: FDGridSpec,
              horizon: float, eval_times=None, x_eval=None,
              initial_delta: bool = False) -> KernelGrid:
    """Mollified-source kernel on a (times x points) target lattice.

    One forward solve per source; targets are the tensor product of
    eval_times (default: the single time tau + horizon) and x_eval
    (default: the solver's spatial nodes).  The x-integral of each
    profile is recorded as a diagnostic trace in the metadata; mass in
    that slot is only approximately conserved (non-divergence form).
    """
    tau, xi = float(source[0]), float(source[1])
    if eval_times is None:
        eval_times = [tau + horizon]
    eval_times = np.sort(np.unique(np.asarray(eval_times, dtype=float)))
    if eval_times[0] <= tau:
        raise ConfigError("evaluation times must lie strictly after the source time")
    if eval_times[-1] - tau > horizon * (1 + 1e-12):
        raise ConfigError("evaluation times exceed the stated horizon")
    xs, profiles = forward_profiles(field, source, eps, spec,
                                    np.append(eval_times, tau + horizon),
                                    initial_delta=initial_delta)
    if x_eval is None:
        x_eval = xs
    x_eval = np.atleast_1d(np.asarray(x_eval, dtype=float))
    targets = np.array([(t, xv) for t in eval_times for xv in x_eval])
    values = np.concatenate([np.interp(x_eval, xs, profiles[float(t)])
                             for t in eval_times])
    wts = trapezoid_weights(xs)
    mass_trace = {float(t): float(wts @ profiles[float(t)]) for t in eval_times}
    digest = config_digest({
        "field": field.describe(), "spec": dataclasses.asdict(spec),
        "eps": eps, "source": [tau, xi], "horizon": horizon,
        "eval_times": eval_times, "x_eval": x_eval,
        "initial_delta": initial_delta,
    })
    return KernelGrid(
        targets=targets,
        sources=np.array([[tau, xi]]),
        values=values[:, None],
        method="fd_oracle",
        d=1,
        config_digest=digest,
        meta={"eps": eps, "dt": spec.dt, "h": spec.h,
              "x_mass_trace": mass_trace},
    )


def adjoint_gamma(field: CoefficientField, target, eps: float,
                  spec: FDGridSpec, tau_eval) -> tuple:
    """Kernel rows xi -> Gamma_eps(X; s, xi) by one transpose solve.

    Terminal data is the normalized spatial indicator B_eps(x) at time
    t; stepping backward with the transpose propagator yields the
    conservative adjoint solution, whose discrete integral is preserved
    to rounding.  Returns (x_nodes, {s: row}) for each requested s.
    """
    _require_1d(field)
    if eps <= 0.0:
        raise ConfigError("eps must be positive")
    t, x0 = float(target[0]), float(target[1])
    tau_eval = np.sort(np.unique(np.asarray(tau_eval, dtype=float)))[::-1]
    horizon = t - float(tau_eval[-1])
    if horizon <= 0.0:
        raise ConfigError("adjoint evaluation times must precede the target time")
    _check_margins(spec, horizon, [x0])
    stepper = _Stepper(field, spec)
    xs = stepper.x
    v = _source_profile(xs, stepper.h, x0, eps)
    out = {}
    s_now = t
    for s_ev in tau_eval:
        span = s_now - float(s_ev)
        n_steps = max(1, int(math.ceil(span / spec.dt)))
        dt = span / n_steps
        for _ in range(n_steps):
            v = stepper.step_transpose(v, s_now - dt, s_now)
            s_now -= dt
        s_now = float(s_ev)
        out[float(s_ev)] = v.copy()
    return xs, out


def mass_check(kernel: KernelGrid, tol: float = 1e-2,
               coverage_floor: float = 0.999) -> dict:
    """Source-slot mass per target: trapezoid of Gamma(t, x, tau, .) over xi.

    Sources must form a spatial lattice at one common time.  Coverage of
    each row's effective support is estimated from the row's own second
    moment (Gaussian-envelope mass estimate); rows whose estimated
    coverage falls below coverage_floor raise, since their quadrature
    mass is meaningless.
    """
    if kernel.d != 1:
        raise ConfigError("mass check is implemented for d = 1")
    taus = np.unique(kernel.sources[:, 0])
    if len(taus) != 1:
        raise ConfigError("mass check needs sources at a single time level")
    if len(kernel.sources) < 2:
        raise ConfigError(
            "mass check needs a lattice of source points to integrate over"
        )
    order = np.argsort(kernel.sources[:, 1])
    xi = kernel.sources[order, 1]
    V = kernel.values[:, order]
    wts = trapezoid_weights(xi)
    masses = V @ wts
    # coverage estimate: treat |row| as a density, fit mean and sigma
    worst_cov = 1.0
    for row in np.abs(V):
        tot = row @ wts
        if tot <= 0.0:
            continue
        mu = (row * xi) @ wts / tot
        var = (row * (xi - mu) ** 2) @ wts / tot
        sd = math.sqrt(max(var, 1e-300))
        cov = 0.5 * (math.erf((xi[-1] - mu) / (sd * math.sqrt(2)))
                     - math.erf((xi[0] - mu) / (sd * math.sqrt(2))))
        worst_cov = min(worst_cov, cov)
    if worst_cov < coverage_floor:
        raise ConfigError(
            f"source grid covers only {worst_cov:.4%} of the estimated "
            f"kernel mass (< {coverage_floor:.2%}); widen the xi window"
        )
    worst = float(np.max(np.abs(masses - 1.0)))
    return {"masses": masses, "max_deviation": worst, "tol": tol,
            "coverage": worst_cov, "passed": bool(worst <= tol)}


def ck_check(A: KernelGrid, B: KernelGrid, tau_mid: float = None,
             direct: KernelGrid = None, floor_frac: float = 1e-3,
             tol: float = None) -> dict:
    """Two-step composition against the direct kernel.

    A spans (tau_mid, t], B spans (s, tau_mid]; A's sources and B's
    targets must be the same spatial lattice at tau_mid.  The defect is
    max over (target, source) of |int A B dxi - direct| / direct at
    points where direct >= floor_frac * peak.  The direct grid must be
    built by the caller on A's targets times B's sources (there is no
    canonical way to rebuild it from the operands alone).
    """
    if direct is None:
        raise ConfigError(
            "ck_check needs the directly built kernel on A.targets x B.sources"
        )
    mids_a = np.unique(A.sources[:, 0])
    mids_b = np.unique(B.targets[:, 0])
    if len(mids_a) != 1 or len(mids_b) != 1 or not np.isclose(mids_a[0], mids_b[0]):
        raise ConfigError("A's sources and B's targets must sit at one shared time")
    if tau_mid is not None and not np.isclose(mids_a[0], tau_mid):
        raise ConfigError(f"shared time {mids_a[0]:g} is not the stated {tau_mid:g}")
    if A.d != 1:
        raise ConfigError("composition check is implemented for d = 1")
    ia = np.argsort(A.sources[:, 1])
    ib = np.argsort(B.targets[:, 1])
    if not np.allclose(A.sources[ia, 1], B.targets[ib, 1], atol=1e-12):
        raise ConfigError("spatial lattices at the intermediate time differ")
    if (direct.targets.shape != A.targets.shape
            or not np.allclose(direct.targets, A.targets, atol=1e-12)
            or direct.sources.shape != B.sources.shape
            or not np.allclose(direct.sources, B.sources, atol=1e-12)):
        raise ConfigError("direct grid must span A's targets times B's sources")
    xi = A.sources[ia, 1]
    wts = trapezoid_weights(xi)
    composed = A.values[:, ia] @ (wts[:, None] * B.values[ib, :])
    ref = direct.values
    peak = float(np.max(np.abs(ref)))
    mask = np.abs(ref) >= floor_frac * peak
    if not mask.any():
        raise ConfigError("no comparison points above the significance floor")
    defect = np.abs(composed - ref)[mask] / np.abs(ref)[mask]
    worst = float(defect.max())
    report = {"max_relative_defect": worst, "n_points": int(mask.sum()),
              "tau_mid": float(mids_a[0]), "passed": None}
    if tol is not None:
        report["tol"] = tol
        report["passed"] = bool(worst <= tol)
        if not report["passed"]:
            raise VerificationError(
                f"composition defect {worst:.3e} exceeds {tol:g}"
            )
    return report


def residual_check(kernel: KernelGrid, field: CoefficientField,
                   exclusion_radius: float) -> dict:
    """Interior PDE residual of a kernel grid, scaled by |X - Y|^{d+2}.

    The targets must form a uniform (t, x) lattice per source; the
    residual d_t Gamma - a D^2 Gamma is formed by central differences
    and reported as max of |residual| * pdist^{d+2} over lattice points
    at parabolic distance >= exclusion_radius from the source.
    """
    if kernel.d != 1:
        raise ConfigError("residual check is implemented for d = 1")
    t_ax, x_axes, V = kernel.target_lattice()
    x_ax = x_axes[0]
    if len(t_ax) < 5 or len(x_ax) < 5:
        raise ConfigError("need at least 5 lattice nodes per axis for stencils")
    dt_ax = np.diff(t_ax)
    dx_ax = np.diff(x_ax)
    if np.ptp(dt_ax) > 1e-9 * dt_ax[0] or np.ptp(dx_ax) > 1e-9 * dx_ax[0]:
        raise ConfigError("residual stencils need uniform lattice spacing")
    dt, h = float(dt_ax[0]), float(dx_ax[0])

    tt_full, xx_full = np.meshgrid(t_ax, x_ax, indexing="ij")
    # full meshgrids: fields constant in t or x collapse broadcast axes
    a_vals = np.broadcast_to(
        field.eval(tt_full, xx_full[..., None])[..., 0, 0], tt_full.shape)
    worst = 0.0
    n_pts = 0
    per_source = []
    for jsrc, src in enumerate(kernel.sources):
        tau, xi = src[0], src[1]
        G = V[:, :, jsrc]
        d_t = (G[2:, 1:-1] - G[:-2, 1:-1]) / (2.0 * dt)
        d_xx = (G[1:-1, 2:] - 2.0 * G[1:-1, 1:-1] + G[1:-1, :-2]) / h**2
        res = np.abs(d_t - a_vals[1:-1, 1:-1] * d_xx)
        tt, xx = tt_full[1:-1, 1:-1], xx_full[1:-1, 1:-1]
        pdist = np.maximum(np.abs(xx - xi), np.sqrt(np.abs(tt - tau)))
        mask = pdist >= exclusion_radius
        if not mask.any():
            continue
        scaled = res[mask] * pdist[mask] ** (kernel.d + 2)
        per_source.append(float(scaled.max()))
        worst = max(worst, float(scaled.max()))
        n_pts += int(mask.sum())
    if n_pts == 0:
        raise ConfigError("no lattice points outside the exclusion radius")
    return {"max_scaled_residual": worst, "n_points": n_pts,
            "per_source": per_source, "dt": dt, "h": h}


def adjoint_solve_and_symmetry(field: CoefficientField, target, eps: float,
                               spec: FDGridSpec, sources,
                               floor_frac: float = 1e-3) -> dict:
    """Forward-vs-adjoint agreement at matched (source, target) pairs.

    For each source Y the forward solve gives Gamma_eps(X; Y) with the
    source slot mollified; one adjoint (transpose) solve from X gives
    the row values with the target slot mollified.  Both approximate
    the same kernel value, so their relative gap measures the combined
    mollification and discretization error.  Gaps are taken at points
    where the kernel is at least floor_frac of the peak over the batch.
    """
    _require_1d(field)
    t, x0 = float(target[0]), float(target[1])
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    if np.any(sources[:, 0] >= t):
        raise ConfigError("all sources must precede the target time")
    _check_margins(spec, t - float(np.min(sources[:, 0])),
                   np.append(sources[:, 1], x0))
    xs, rows = adjoint_gamma(field, target, eps, spec,
                             np.unique(sources[:, 0]))
    fwd_vals = np.zeros(len(sources))
    adj_vals = np.zeros(len(sources))
    for i, (s_i, y_i) in enumerate(sources):
        _, profs = forward_profiles(field, (s_i, y_i), eps, spec, [t])
        fwd_vals[i] = np.interp(x0, xs, profs[t])
        adj_vals[i] = np.interp(y_i, xs, rows[float(s_i)])
    peak = max(float(np.max(np.abs(fwd_vals))), float(np.max(np.abs(adj_vals))))
    if peak == 0.0:
        raise ConfigError("all compared values vanish")
    mask = (np.abs(fwd_vals) >= floor_frac * peak) \
        & (np.abs(adj_vals) >= floor_frac * peak)
    if not mask.any():
        raise ConfigError("no comparison points above the significance floor")
    gaps = np.abs(fwd_vals - adj_vals)[mask] / np.abs(fwd_vals)[mask]
    return {
        "forward": fwd_vals, "adjoint": adj_vals,
        "max_relative_asymmetry": float(gaps.max()),
        "n_points": int(mask.sum()),
    }


def duality_pairing_check(field: CoefficientField, target, source, eps: float,
                          spec: FDGridSpec, tol: float = 1e-8) -> dict:
    """Discrete forward/adjoint duality of the doubly mollified kernel.

    <phi_X, u_Y(t)> from the forward solve must equal the source-window
    average of <chi_Y, v_X(s)> from the transpose solve, exactly to
    rounding, because the adjoint stepping is the literal transpose.
    Deviations flag an assembly bug rather than discretization error.
    """
    _require_1d(field)
    t, x0 = float(target[0]), float(target[1])
    tau, xi = float(source[0]), float(source[1])
    if t - tau <= 0.0:
        raise ConfigError("target must come after the source")
    _check_margins(spec, t - tau, [x0, xi])
    stepper = _Stepper(field, spec)
    xs = stepper.x
    h = stepper.h
    phi = _source_profile(xs, h, x0, eps)
    chi = _source_profile(xs, h, xi, eps)

    n_inj = max(5, int(math.ceil(eps**2 / spec.dt)))
    dt_inj = eps**2 / n_inj
    n_steps = max(1, int(math.ceil((t - tau) / spec.dt)))
    dt = (t - tau) / n_steps

    u = np.zeros(spec.n_nodes)
    s = tau - eps**2
    for _ in range(n_inj):
        u = stepper.step(u, s, s + dt_inj)
        u = u + (dt_inj / eps**2) * chi
        s += dt_inj
    for k in range(n_steps):
        u = stepper.step(u, tau + k * dt, tau + (k + 1) * dt)
    forward_pairing = float(h * np.dot(phi, u))

    v = phi.copy()
    for k in range(n_steps, 0, -1):
        v = stepper.step_transpose(v, tau + (k - 1) * dt, tau + k * dt)
    adjoint_pairing = 0.0
    s = tau
    for _ in range(n_inj):
        adjoint_pairing += (dt_inj / eps**2) * float(h * np.dot(chi, v))
        v = stepper.step_transpose(v, s - dt_inj, s)
        s -= dt_inj
    scale = max(abs(forward_pairing), abs(adjoint_pairing))
    gap = abs(forward_pairing - adjoint_pairing) / scale
    report = {"forward": forward_pairing, "adjoint": adjoint_pairing,
              "relative_gap": gap, "tol": tol, "passed": gap <= tol}
    if not report["passed"]:
        raise VerificationError(
            f"forward/adjoint pairing differs by {gap:.3e} > {tol:g}"
        )
    return report


def relative_gap(grid_a: KernelGrid, grid_b: KernelGrid) -> dict:
    """sup |A - B| / sup |B| over a shared (target, source) lattice."""
    if grid_a.d != grid_b.d:
        raise ConfigError("grids have different dimensions")
    if (grid_a.targets.shape != grid_b.targets.shape
            or not np.allclose(grid_a.targets, grid_b.targets, atol=1e-12)
            or grid_a.sources.shape != grid_b.sources.shape
            or not np.allclose(grid_a.sources, grid_b.sources, atol=1e-12)):
        raise ConfigError("grids must share the same targets and sources")
    diff = np.abs(grid_a.values - grid_b.values)
    denom = float(np.max(np.abs(grid_b.values)))
    if denom == 0.0:
        raise ConfigError("reference grid is identically zero")
    i, j = np.unravel_index(np.argmax(diff), diff.shape)
    return {
        "sup_diff": float(diff.max()),
        "sup_ref": denom,
        "gap": float(diff.max() / denom),
        "argmax_target": grid_a.targets[i].tolist(),
        "argmax_source": grid_a.sources[j].tolist(),
    }
