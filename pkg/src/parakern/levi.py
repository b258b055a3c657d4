"""Levi parametrix series for variable-coefficient parabolic kernels.

The kernel is built as Gamma = Phi^xi + sum_k w_k where Phi^xi freezes
the coefficients at the source point and the correction terms solve the
Volterra recursion

    w_0(t,x,tau,xi) = int_tau^t int Phi^y(t,x,s,y) L(s,y,tau,xi) dy ds,
    w_{k+1}          = same with Phi^y replaced by w_k,
    L(s,y,tau,xi)    = (a_ij(s,y) - a_ij(s,xi)) D_ij Phi^xi(s,y,tau,xi).

Note the first factor freezes at the moving integration point y.  Time
integrals are split at the midpoint and graded quadratically toward
each endpoint, which regularizes the integrable endpoint singularities;
the spatial rule at each time node is a Gauss-Legendre window around
the peak of whichever factor is narrow there.  Iterated terms are
tabulated per target on a tensor (time, space) source grid in
envelope-factored form

    g_k(s, y) = w_k(t,x,s,y) (t-s)^{d/2} exp(+kappa0' |x-y|^2/(t-s)),

which stays bounded up the diagonal s -> t, so multilinear
interpolation of g_k (with the exact envelope restored outside) is
uniformly accurate.

The theoretical short-time horizon delta0 comes from the Dini modulus
of the coefficients; builds beyond it are permitted when the
configuration says so, guarded by the measured contraction ratio of
consecutive terms (the "witness").
"""

from __future__ import annotations

import dataclasses
import functools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import gauss
from .coefficients import CoefficientField, ModulusProfile, dini_integral
from .errors import (
    ConfigError,
    ContractionError,
    DegenerateSpanError,
    HorizonError,
    LeakageError,
    NonDiniError,
)
from .frozen import BoundConstants
from .grids import GridSpec, KernelGrid, config_digest
from .quad import gauss_legendre, graded_time_nodes, trapezoid_weights

MIN_SPAN = 1e-12


@dataclasses.dataclass
class ParametrixConfig:
    """Knobs of the series construction.

    delta0 is the operative short-time horizon: builds require all
    (target, source) spans within delta0^2.  The default is the +inf
    sentinel (appropriate for constant or time-only coefficients whose
    Levi terms vanish identically); pipelines working from a measured
    modulus should install the value computed by delta0() or justify a
    larger one, in which case the contraction witness is the safeguard.
    """

    eps0: float = 0.5
    delta0: float = math.inf
    K_max: int = 8
    series_tol: float = 1e-4
    time_nodes: int = 16
    space_nodes_per_dim: int = 48
    truncation_multiplier: float = 8.0
    pad_multiplier: float = 3.0
    grid: GridSpec = dataclasses.field(default_factory=GridSpec)
    witness_slack: float = 0.1
    threads: int = 1

    def __post_init__(self):
        if not (0.0 < self.eps0 < 1.0):
            raise ConfigError("eps0 must lie in (0, 1)")
        if self.delta0 <= 0.0:
            raise ConfigError("delta0 must be positive")
        if self.K_max < 0:
            raise ConfigError("K_max must be nonnegative")
        if self.time_nodes < 2 or self.space_nodes_per_dim < 2:
            raise ConfigError("quadrature order must be at least 2 per axis")


# ---------------------------------------------------------------------------
# vectorized field helpers


class _Kit:
    """Vectorized coefficient access: values and time-integrated covariances."""

    def __init__(self, field: CoefficientField):
        self.field = field
        self.d = field.d
        self.Lam = field.Lam

    def a(self, t, X):
        A = self.field.eval(t, np.asarray(X, dtype=float))
        return 0.5 * (A + np.swapaxes(A, -1, -2))

    def sigma(self, s, t, X):
        """Sig^X(s, t) = 2 int_s^t A(r, X) dr for anchor batch X (..., d)."""
        X = np.asarray(X, dtype=float)
        if self.field.cumulative is not None:
            out = 2.0 * np.asarray(self.field.cumulative(s, t, X), dtype=float)
            return 0.5 * (out + np.swapaxes(out, -1, -2))
        # composite Gauss-Legendre fallback for fields without a closed
        # form; 24 nodes resolve smooth and piecewise-linear time tables
        s_arr = np.broadcast_to(np.asarray(s, dtype=float), X.shape[:-1])
        t_arr = np.broadcast_to(np.asarray(t, dtype=float), X.shape[:-1])
        z, w = np.polynomial.legendre.leggauss(24)
        out = np.zeros(X.shape[:-1] + (self.d, self.d))
        half = 0.5 * (t_arr - s_arr)
        mid = 0.5 * (t_arr + s_arr)
        for zi, wi in zip(z, w):
            r = mid + half * zi
            out += wi * self.a(r, X)
        out *= 2.0 * half[..., None, None]
        return out


@functools.lru_cache(maxsize=None)
def _tensor_gl(n: int, d: int):
    """Tensor Gauss-Legendre rule on [-1, 1]^d: nodes (n^d, d), weights (n^d,)."""
    z, w = np.polynomial.legendre.leggauss(n)
    axes = np.meshgrid(*([z] * d), indexing="ij")
    Z = np.stack(axes, axis=-1).reshape(-1, d)
    W = w
    for _ in range(d - 1):
        W = np.multiply.outer(W, w)
    return Z, W.reshape(-1)


def levi_kernel(field: CoefficientField, t: float, s: float, y, tau: float,
                xi) -> np.ndarray:
    """(a_ij(s, y) - a_ij(s, xi)) D_ij Phi^xi(s, y, tau, xi), summed over ij.

    t is the time of the eventual target; the factor does not depend on
    it and the argument is accepted only so call sites read like the
    integral this feeds.  y may carry leading batch axes; xi is a
    single point.  Vanishes identically when the coefficients do not
    depend on x.
    """
    kit = _Kit(field)
    y = np.asarray(y, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if s <= tau:
        raise ConfigError("the Levi factor needs tau < s")
    if s - tau < MIN_SPAN:
        raise DegenerateSpanError(f"span {s - tau:g} below resolution {MIN_SPAN:g}")
    Sig = kit.sigma(tau, s, xi)
    H = gauss.gaussian_hessian(y - xi, Sig)
    dA = kit.a(s, y) - kit.a(s, np.broadcast_to(xi, y.shape))
    return np.einsum("...ij,...ij->...", dA, H)


# ---------------------------------------------------------------------------
# envelope-factored term tables


class LeviTermTable:
    """One Levi term w_k(t, x, ., .) for a fixed target, tabulated.

    Values are stored envelope-factored (see module docstring) on a
    tensor grid: graded time coordinate v in [v_min, 1] with
    s = t - (t - tau_min) v^2, and uniform spatial axes.  Queries
    interpolate g multilinearly (clamped at edges) and restore the
    exact envelope at the query point.
    """

    def __init__(self, target, tau_min, v_grid, y_axes, g, kappa_prime, d, k):
        self.t, self.x = target
        self.tau_min = tau_min
        self.v_grid = v_grid
        self.y_axes = y_axes
        self.g = g
        self.kappa_prime = kappa_prime
        self.d = d
        self.k = k

    def _envelope(self, s, Y):
        dt = self.t - s
        u = np.sum((self.x - Y) ** 2, axis=-1) / dt
        return dt ** (-self.d / 2.0) * np.exp(-self.kappa_prime * u)

    def values(self, s, Y):
        """w_k at source times s (broadcastable) and points Y (..., d)."""
        Y = np.asarray(Y, dtype=float)
        s = np.broadcast_to(np.asarray(s, dtype=float), Y.shape[:-1])
        span = self.t - self.tau_min
        v = np.sqrt(np.clip((self.t - s) / span, 0.0, None))
        coords = [np.clip(v, self.v_grid[0], self.v_grid[-1])]
        for j in range(self.d):
            ax = self.y_axes[j]
            coords.append(np.clip(Y[..., j], ax[0], ax[-1]))
        g = _multilinear(self.g, [self.v_grid, *self.y_axes], coords)
        return g * self._envelope(s, Y)

    def sup_g(self) -> float:
        return float(np.max(np.abs(self.g)))


def _multilinear(table, axes, coords):
    """Multilinear interpolation on a uniform-per-axis tensor grid."""
    nd = len(axes)
    idx = []
    frac = []
    for ax, c in zip(axes, coords):
        h = ax[1] - ax[0]
        f = (np.asarray(c) - ax[0]) / h
        i0 = np.clip(np.floor(f).astype(int), 0, len(ax) - 2)
        idx.append(i0)
        frac.append(np.clip(f - i0, 0.0, 1.0))
    out = 0.0
    for corner in range(1 << nd):
        weight = 1.0
        sel = []
        for axis in range(nd):
            if corner >> axis & 1:
                weight = weight * frac[axis]
                sel.append(idx[axis] + 1)
            else:
                weight = weight * (1.0 - frac[axis])
                sel.append(idx[axis])
        out = out + weight * table[tuple(sel)]
    return out


# ---------------------------------------------------------------------------
# quadrature core shared by w0 and the iteration


def _first_factor_phi(kit: _Kit, t, x, sigma, Y):
    """Phi^Y(t, x, sigma, Y): kernel frozen at the integration point."""
    Sig = kit.sigma(sigma, t, Y)
    return gauss.gaussian_value(x - Y, Sig)


def _term_rows(kit, t, x, s_row, y_rows, cfg, first_factor):
    """Integral int_s_row^t int first(sigma, Y) L(sigma, Y, s_row, y_j) dY dsigma
    for a batch of source points y_rows (m, d) at common source time s_row.

    first_factor(sigma, Y) evaluates the left factor (Phi^Y for w_0, the
    interpolated previous term for iterates) at arbitrary points.
    """
    d = kit.d
    x = np.asarray(x, dtype=float)
    y_rows = np.atleast_2d(np.asarray(y_rows, dtype=float))
    m = len(y_rows)
    Z, W = _tensor_gl(cfg.space_nodes_per_dim, d)
    out = np.zeros(m)
    span = t - s_row
    if span < MIN_SPAN:
        raise DegenerateSpanError(f"span {span:g} below resolution {MIN_SPAN:g}")

    # anchor covariances Sig^{y_j}(s_row, sigma) recomputed per time node
    sig_anchor = functools.partial(kit.sigma, s_row)

    # half 1: sigma near s_row; the Levi factor is narrow around each y_j
    s_nodes, s_w = graded_time_nodes(s_row, t, cfg.time_nodes, "lower")
    for sigma, wt in zip(s_nodes, s_w):
        h = cfg.truncation_multiplier * math.sqrt(2.0 * kit.Lam * (sigma - s_row))
        Y = y_rows[:, None, :] + h * Z[None, :, :]
        Sig_j = sig_anchor(sigma, y_rows)[:, None]
        H = gauss.gaussian_hessian(Y - y_rows[:, None, :], Sig_j)
        dA = kit.a(sigma, Y) - kit.a(sigma, np.broadcast_to(y_rows[:, None, :], Y.shape))
        L = np.einsum("...ij,...ij->...", dA, H)
        F = first_factor(sigma, Y)
        out += wt * ((L * F) @ W) * h**d

    # half 2: sigma near t; the left factor is narrow around the target x
    s_nodes, s_w = graded_time_nodes(s_row, t, cfg.time_nodes, "upper")
    for sigma, wt in zip(s_nodes, s_w):
        h = cfg.truncation_multiplier * math.sqrt(2.0 * kit.Lam * (t - sigma))
        Y = x[None, :] + h * Z
        Sig_j = sig_anchor(sigma, y_rows)[:, None]
        H = gauss.gaussian_hessian(Y[None, :, :] - y_rows[:, None, :], Sig_j)
        dA = kit.a(sigma, Y)[None] - kit.a(sigma, np.broadcast_to(y_rows[:, None, :], (m,) + Y.shape))
        L = np.einsum("...ij,...ij->...", dA, H)
        F = first_factor(sigma, Y)
        out += wt * ((L * F[None, :]) @ W) * h**d
    return out


def w0(field: CoefficientField, t: float, x, tau: float, xi,
       config: ParametrixConfig = None, constants: BoundConstants = None) -> float:
    """First Levi correction term at a single (target, source) pair."""
    cfg = config or ParametrixConfig()
    kit = _Kit(field)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    span = t - tau
    if span <= 0.0:
        return 0.0
    if span < MIN_SPAN:
        raise DegenerateSpanError(f"span {span:g} below resolution {MIN_SPAN:g}")
    if span > cfg.delta0**2 * (1.0 + 1e-12):
        raise HorizonError(
            f"span {span:g} exceeds configured horizon delta0^2 = {cfg.delta0 ** 2:g}"
        )
    first = functools.partial(_first_factor_phi, kit, t, x)
    return float(_term_rows(kit, t, x, tau, xi[None, :], cfg, first)[0])


def w0_monte_carlo(field: CoefficientField, t: float, x, tau: float, xi,
                   n_samples: int = 400000, seed: int = 0) -> float:
    """Monte Carlo estimate of w0 for cross-checking the quadrature.

    Importance sampling: sigma = tau + (t - tau) U^2 with U uniform (the
    same grading as the quadrature), and Y from an equal mixture of
    Gaussians around xi (scale of the Levi factor) and around x (scale
    of the left kernel factor).
    """
    kit = _Kit(field)
    d = kit.d
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    rng = np.random.default_rng(seed)
    span = t - tau
    U = rng.uniform(size=n_samples)
    sigma = tau + span * U * U
    keep = (sigma - tau > 1e-14 * span) & (t - sigma > 1e-14 * span)
    sigma, U = sigma[keep], U[keep]
    n = len(sigma)
    s1 = 1.25 * np.sqrt(2.0 * kit.Lam * (sigma - tau))
    s2 = 1.25 * np.sqrt(2.0 * kit.Lam * (t - sigma))
    pick = rng.uniform(size=n) < 0.5
    centers = np.where(pick[:, None], xi[None, :], x[None, :])
    scales = np.where(pick, s1, s2)
    Y = centers + scales[:, None] * rng.standard_normal((n, d))

    def normal_pdf(Y, c, s):
        q = np.sum((Y - c) ** 2, axis=-1) / (s * s)
        return (2.0 * np.pi) ** (-d / 2.0) * s**-d * np.exp(-0.5 * q)

    pdf = 0.5 * normal_pdf(Y, xi[None, :], s1) + 0.5 * normal_pdf(Y, x[None, :], s2)

    Sig_xi = kit.sigma(tau, sigma, np.broadcast_to(xi, (n, d)))
    H = gauss.gaussian_hessian(Y - xi[None, :], Sig_xi)
    dA = kit.a(sigma, Y) - kit.a(sigma, np.broadcast_to(xi, (n, d)))
    L = np.einsum("...ij,...ij->...", dA, H)
    F = gauss.gaussian_value(x[None, :] - Y, kit.sigma(sigma, t, Y))
    vals = 2.0 * span * U * L * F / pdf
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# per-target tabulation and iteration


def _table_axes(t, x, tau_min, sources_xi, kit, cfg):
    span = t - tau_min
    pad = cfg.pad_multiplier * math.sqrt(2.0 * kit.Lam * span)
    pts = np.vstack([np.atleast_2d(sources_xi), np.asarray(x)[None, :]])
    y_axes = []
    for j in range(kit.d):
        lo = float(np.min(pts[:, j])) - pad
        hi = float(np.max(pts[:, j])) + pad
        y_axes.append(np.linspace(lo, hi, cfg.grid.space_nodes))
    v_min = 0.02
    v_grid = np.linspace(v_min, 1.0, cfg.grid.time_nodes)
    return v_grid, y_axes


def _tabulate_term(kit, t, x, tau_min, v_grid, y_axes, cfg, first_factor,
                   kappa_prime, k):
    """Tabulate one term on the (v, y) tensor grid, envelope-factored."""
    d = kit.d
    span = t - tau_min
    mesh = np.meshgrid(*y_axes, indexing="ij")
    Y_tab = np.stack(mesh, axis=-1).reshape(-1, d)
    g_shape = (len(v_grid),) + tuple(len(ax) for ax in y_axes)
    g = np.empty((len(v_grid), len(Y_tab)))
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    for i, v in enumerate(v_grid):
        s_row = t - span * v * v
        vals = _term_rows(kit, t, x_arr, s_row, Y_tab, cfg, first_factor)
        dt = t - s_row
        u = np.sum((x_arr[None, :] - Y_tab) ** 2, axis=-1) / dt
        # far cells: the term underflows before the envelope factor
        # overflows, and they reconstruct to ~0 regardless of g there
        expo = kappa_prime * u
        g[i] = np.where(expo < 600.0,
                        vals * dt ** (d / 2.0) * np.exp(np.minimum(expo, 600.0)),
                        0.0)
    table = LeviTermTable((t, x_arr), tau_min, v_grid, y_axes,
                          g.reshape(g_shape), kappa_prime, d, k)
    return table


def iterate_table(field: CoefficientField, w_prev: LeviTermTable,
                  config: ParametrixConfig = None) -> LeviTermTable:
    """Next Levi term from a tabulated one (same target), tabulated."""
    cfg = config or ParametrixConfig()
    kit = _Kit(field)
    first = lambda sigma, Y: w_prev.values(sigma, Y)  # noqa: E731
    return _tabulate_term(kit, w_prev.t, w_prev.x, w_prev.tau_min,
                          w_prev.v_grid, w_prev.y_axes, cfg, first,
                          w_prev.kappa_prime, w_prev.k + 1)


def iterate(field: CoefficientField, w_prev: LeviTermTable, tau: float, xi,
            config: ParametrixConfig = None) -> float:
    """Next Levi term at one source: the Volterra step applied to w_prev.

    w_prev tabulates the current term for one fixed target over
    (tau_min, t) x a spatial box; the integration domain (tau, t) must
    be covered by it.
    """
    cfg = config or ParametrixConfig()
    kit = _Kit(field)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if tau < w_prev.tau_min - 1e-12:
        raise ConfigError(
            f"tabulation starts at {w_prev.tau_min:g} and does not cover the "
            f"integration domain from tau = {tau:g}"
        )
    first = lambda sigma, Y: w_prev.values(sigma, Y)  # noqa: E731
    return float(_term_rows(kit, w_prev.t, w_prev.x, tau, xi[None, :], cfg,
                            first)[0])


# ---------------------------------------------------------------------------
# horizon from the Dini modulus


def delta0(profile: ModulusProfile, constants: BoundConstants,
           eps0: float = None) -> float:
    """Largest tabulated radius delta with 2 C0' C1 C2 D(delta) <= eps0,
    where D(delta) = int_0^delta value(s)/s ds from the tabulated ladder.

    Returns +inf for an identically vanishing modulus (constant or
    time-only coefficients: no horizon restriction).  Raises NonDiniError
    with divergence diagnostics when the Dini integral diverges, and
    HorizonError when even the smallest tabulated radius fails.
    """
    if constants.C0_prime is None or constants.C1 is None or constants.C2 is None:
        raise ConfigError("delta0 needs C0_prime, C1 and C2 in the constants bundle")
    eps = constants.eps0 if eps0 is None else eps0
    full = dini_integral(profile)
    if full.diverged:
        raise NonDiniError(
            "oscillation modulus fails the Dini condition: dyadic tail does not "
            f"decay geometrically (last-5 ratio {full.last5_ratio:.6g} < "
            f"{full.ratio_threshold}, tail exponent {full.tail_exponent:.6g})",
            diagnostics={
                "last5_ratio": full.last5_ratio,
                "tail_exponent": full.tail_exponent,
                "threshold": full.ratio_threshold,
            },
        )
    if np.all(profile.values == 0.0):
        return math.inf
    coef = 2.0 * constants.C0_prime * constants.C1 * constants.C2

    radii = profile.radii  # descending
    def admissible(r):
        return coef * dini_integral(profile, r).value <= eps

    # bisection on the dyadic ladder: find the largest admissible radius
    if admissible(radii[0]):
        return float(radii[0])
    if not admissible(radii[-1]):
        raise HorizonError(
            "no admissible short-time horizon on the tabulated ladder: "
            f"condition value {coef * dini_integral(profile, radii[-1]).value:.6g} "
            f"> eps0 = {eps:g} at the smallest radius {radii[-1]:g}"
        )
    lo, hi = 0, len(radii) - 1  # radii[lo] inadmissible, radii[hi] admissible
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if admissible(radii[mid]):
            hi = mid
        else:
            lo = mid
    return float(radii[hi])


# ---------------------------------------------------------------------------
# the short-time build


def _phi_at_sources(kit, t, x, sources):
    """Phi^xi(t, x, tau, xi) for source rows (tau, xi...)."""
    vals = np.zeros(len(sources))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    for j, row in enumerate(sources):
        tau, xi = row[0], row[1:]
        if t - tau <= 0.0:
            continue
        Sig = kit.sigma(tau, t, xi)
        vals[j] = gauss.gaussian_value(x - xi, Sig)
    return vals


def _build_one_target(field, t, x, sources, cfg, kappa_prime):
    kit = _Kit(field)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phi_vals = _phi_at_sources(kit, t, x, sources)
    spans = t - sources[:, 0]
    first = functools.partial(_first_factor_phi, kit, t, x)

    # w0 at the requested sources, grouped by common tau
    w_sum = np.zeros(len(sources))
    w0_vals = np.zeros(len(sources))
    for tau in np.unique(sources[:, 0]):
        rows = np.where(sources[:, 0] == tau)[0]
        w0_vals[rows] = _term_rows(kit, t, x, tau, sources[rows, 1:], cfg, first)
    w_sum += w0_vals

    norm0 = float(np.max(np.abs(w0_vals) * spans ** (kit.d / 2.0)))
    norms = [norm0]
    ratios = []
    terms_used = 1

    if norm0 > cfg.series_tol and cfg.K_max >= 1:
        tau_min = float(np.min(sources[:, 0]))
        v_grid, y_axes = _table_axes(t, x, tau_min, sources[:, 1:], kit, cfg)
        table = _tabulate_term(kit, t, x, tau_min, v_grid, y_axes, cfg, first,
                               kappa_prime, 0)
        sup_prev = table.sup_g()
        for k in range(1, cfg.K_max + 1):
            first_k = (lambda tab: lambda s, Y: tab.values(s, Y))(table)
            wk_vals = np.zeros(len(sources))
            for tau in np.unique(sources[:, 0]):
                rows = np.where(sources[:, 0] == tau)[0]
                wk_vals[rows] = _term_rows(kit, t, x, tau, sources[rows, 1:],
                                           cfg, first_k)
            w_sum += wk_vals
            terms_used += 1
            norm_k = float(np.max(np.abs(wk_vals) * spans ** (kit.d / 2.0)))
            norms.append(norm_k)
            table_next = _tabulate_term(kit, t, x, tau_min, v_grid, y_axes, cfg,
                                        first_k, kappa_prime, k)
            sup_k = table_next.sup_g()
            if sup_prev > 0.0:
                ratios.append(sup_k / sup_prev)
            if norm_k <= cfg.series_tol or k == cfg.K_max:
                break
            table = table_next
            sup_prev = sup_k

    return phi_vals + w_sum, norms, ratios, terms_used


def build_short_time(field: CoefficientField, targets, sources,
                     config: ParametrixConfig = None,
                     constants: BoundConstants = None) -> KernelGrid:
    """Kernel grid Gamma = Phi^xi + sum w_k over targets x sources.

    Preconditions: every (target, source) pair satisfies
    0 < t - tau <= config.delta0^2.  The measured contraction ratio of
    consecutive tabulated terms must stay within eps0 + witness_slack;
    otherwise ContractionError (the configured horizon was too
    optimistic or the quadrature too coarse for this field).
    """
    cfg = config or ParametrixConfig()
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    d = field.d
    if targets.shape[1] != 1 + d or sources.shape[1] != 1 + d:
        raise ConfigError("target/source rows must be (t, x_1..x_d)")
    spans = targets[:, 0][:, None] - sources[:, 0][None, :]
    if np.any(spans <= 0.0):
        raise HorizonError("builds need t > tau for every (target, source) pair")
    if np.any(spans < MIN_SPAN):
        raise DegenerateSpanError("a (target, source) span is below 1e-12")
    if np.any(spans > cfg.delta0**2 * (1.0 + 1e-12)):
        raise HorizonError(
            f"max span {np.max(spans):g} exceeds the configured horizon "
            f"delta0^2 = {cfg.delta0 ** 2:g}; extend by composition instead"
        )

    kappa_prime = (constants.kappa0_prime if constants is not None
                   else 0.5 / (4.0 * field.Lam))

    def job(i):
        t, x = targets[i, 0], targets[i, 1:]
        return _build_one_target(field, t, x, sources, cfg, kappa_prime)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(job, range(len(targets))))
    else:
        results = [job(i) for i in range(len(targets))]

    values = np.vstack([r[0] for r in results])
    all_norms = [r[1] for r in results]
    all_ratios = [r[2] for r in results]
    terms_used = max(r[3] for r in results)

    # aggregate per-term quantities across targets (counts can differ:
    # a target whose series stopped early contributes fewer entries)
    k_count = max(len(n) for n in all_norms)
    term_norms = [max(n[k] for n in all_norms if len(n) > k)
                  for k in range(k_count)]
    r_count = max((len(r) for r in all_ratios), default=0)
    term_ratios = [max(r[k] for r in all_ratios if len(r) > k)
                   for k in range(r_count)]

    worst_ratio = max(term_ratios, default=0.0)
    if worst_ratio > cfg.eps0 + cfg.witness_slack:
        raise ContractionError(
            f"contraction witness violated: measured term ratio {worst_ratio:.4g} "
            f"> eps0 + slack = {cfg.eps0 + cfg.witness_slack:.4g} "
            "(delta0 too large or quadrature too coarse)",
            ratios=[r for rs in all_ratios for r in rs],
        )

    digest = config_digest({
        "field": field.describe(),
        "config": dataclasses.asdict(cfg),
        "targets": targets,
        "sources": sources,
    })
    return KernelGrid(
        targets=targets,
        sources=sources,
        values=values,
        method="parametrix",
        d=d,
        config_digest=digest,
        meta={
            "term_norms": term_norms,
            "term_ratios": term_ratios,
            "per_target_norms": all_norms,
            "terms_used": terms_used,
            "worst_ratio": worst_ratio,
            "eps0": cfg.eps0,
        },
    )


# ---------------------------------------------------------------------------
# semigroup extension


def extend_semigroup(short: KernelGrid, total_span: float = None,
                     step: float = None, composition_grid=None,
                     leak_tol: float = 0.01) -> KernelGrid:
    """Compose consecutive short-horizon blocks into one long-span kernel.

    ``short`` must hold targets at time levels t_1 < ... < t_m and
    sources at levels t_0 < ... < t_{m-1} on one shared spatial lattice
    (the composition grid).  The result spans (t_0 -> t_m):

        Gamma(t_m, x, t_0, xi)
            = int ... int K_m(x, y_{m-1}) ... K_1(y_1, xi) dy,

    evaluated with trapezoid weights on the lattice.  When total_span
    and step are given they are validated against the levels found in
    the grid; total_span = step (one level pair) degenerates to the
    identity and returns ``short`` unchanged.  Mass drift per level is
    recorded over the central half of the lattice; drift beyond
    leak_tol raises LeakageError (the lattice is too narrow or too
    coarse).  Rows near the edge are excluded from the drift check
    because their truncated tails always leak; only interior-row drift
    distinguishes an inadequate lattice.  Composed values are likewise
    trustworthy only for interior (target, source) pairs.
    """
    if short.d != 1:
        raise ConfigError("semigroup extension is implemented for d = 1")
    t_targets = np.unique(short.targets[:, 0])
    t_sources = np.unique(short.sources[:, 0])
    levels = np.unique(np.concatenate([t_targets, t_sources]))
    if len(levels) < 2:
        raise ConfigError("semigroup extension needs at least two time levels")
    if total_span is not None and step is not None:
        m = total_span / step
        if abs(m - round(m)) > 1e-9 or round(m) < 1:
            raise ConfigError("total_span must be a positive integer multiple of step")
        m = int(round(m))
        if m == 1:
            return short
        ladder = levels[0] + step * np.arange(m + 1)
        if len(levels) != m + 1 or not np.allclose(levels, ladder, atol=1e-9):
            raise ConfigError(
                "grid time levels do not form the requested composition ladder"
            )
    x_lattice = np.unique(short.targets[:, 1:], axis=0)
    if composition_grid is not None and not isinstance(composition_grid, GridSpec):
        x_lattice = np.atleast_2d(np.asarray(composition_grid, dtype=float))
        if x_lattice.shape[0] == 1 and x_lattice.shape[1] > 1:
            x_lattice = x_lattice.T
    xs = np.sort(x_lattice[:, 0])
    wts = trapezoid_weights(xs)
    span = xs[-1] - xs[0]
    interior = (xs >= xs[0] + span / 4.0) & (xs <= xs[-1] - span / 4.0)
    if not interior.any():
        interior = np.ones_like(xs, dtype=bool)

    def block(t_hi, t_lo):
        rows = []
        for xv in xs:
            i = _find_row(short.targets, (t_hi, xv))
            cols = [_find_row(short.sources, (t_lo, xw)) for xw in xs]
            rows.append(short.values[i, cols])
        return np.array(rows)

    def drift_of(K):
        return float(np.max(np.abs((K @ wts)[interior] - 1.0)))

    K = block(levels[1], levels[0])
    drifts = [drift_of(K)]
    for lev in range(1, len(levels) - 1):
        K_next = block(levels[lev + 1], levels[lev])
        drifts.append(drift_of(K_next))
        K = K_next @ (wts[:, None] * K)
    total_drift = drift_of(K)
    if total_drift > leak_tol:
        raise LeakageError(
            f"composed kernel mass drifts by {total_drift:.4g} > {leak_tol:g}: "
            "composition grid too narrow or too coarse",
            leakage=total_drift,
        )
    targets = np.column_stack([np.full(len(xs), levels[-1]), xs])
    sources = np.column_stack([np.full(len(xs), levels[0]), xs])
    return KernelGrid(
        targets=targets,
        sources=sources,
        values=K,
        method="composed",
        d=1,
        config_digest=short.config_digest,
        meta={"levels": levels.tolist(), "mass_drift_per_level": drifts,
              "total_mass_drift": total_drift},
    )


def _find_row(rows, point):
    match = np.where(np.all(np.isclose(rows, point, rtol=0, atol=1e-12), axis=1))[0]
    if len(match) != 1:
        raise ConfigError(f"composition lattice row {point} not found exactly once")
    return int(match[0])


def build_composed(field: CoefficientField, x_grid, t_levels,
                   config: ParametrixConfig = None,
                   constants: BoundConstants = None) -> KernelGrid:
    """Build per-step short kernels on a shared lattice and compose them."""
    cfg = config or ParametrixConfig()
    x_grid = np.asarray(x_grid, dtype=float)
    t_levels = np.sort(np.asarray(t_levels, dtype=float))
    if field.d != 1:
        raise ConfigError("composed builds are implemented for d = 1")
    targets = []
    sources = []
    for lev in range(1, len(t_levels)):
        targets += [(t_levels[lev], xv) for xv in x_grid]
        sources += [(t_levels[lev - 1], xv) for xv in x_grid]
    targets = np.array(sorted(set(targets)))
    sources = np.array(sorted(set(sources)))
    values = np.zeros((len(targets), len(sources)))
    for lev in range(1, len(t_levels)):
        tgt = np.column_stack([np.full(len(x_grid), t_levels[lev]), x_grid])
        src = np.column_stack([np.full(len(x_grid), t_levels[lev - 1]), x_grid])
        piece = build_short_time(field, tgt, src, cfg, constants)
        for i, trow in enumerate(tgt):
            gi = _find_row(targets, trow)
            for j, srow in enumerate(src):
                gj = _find_row(sources, srow)
                values[gi, gj] = piece.values[i, j]
    grid = KernelGrid(targets=targets, sources=sources, values=values,
                      method="parametrix", d=1,
                      config_digest=config_digest({"levels": t_levels}),
                      meta={"levels": t_levels.tolist()})
    return extend_semigroup(grid)
