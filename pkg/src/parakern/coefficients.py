"""Coefficient fields, oscillation moduli, Dini integrals, time-freezing.

A coefficient field is the matrix a_ij(t, x) of a parabolic operator in
non-divergence form together with its declared ellipticity bounds
lam, Lam.  The module measures two moduli of regularity in x,

    uniform continuity: rho(r) = sup over |x - y| <= r of |A(t,x) - A(t,y)|
    mean oscillation:   omega(r, X) = avg over Q_r^-(X) of |A - ball avg|

(entrywise max over matrix entries, sups restricted to a declared probe
region), integrates value(s)/s against tabulated profiles to decide the
Dini condition, and freezes coefficients along time fibers by dyadic
ball averaging.

Closed-form families are registered by name; sampled fields come from
CSV tables with header ``t,x1[,x2],a11[,a12,a22]`` and multilinear
interpolation, clamped at the table edges.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from typing import Callable, Optional

import numpy as np
import yaml
from scipy.stats import qmc

from .errors import ConfigError, GuardRailError
from .quad import gauss_legendre

KIND_CLOSED_FORM = "closed_form_registry_entry"
KIND_SAMPLED = "sampled_grid_with_interpolation"

MODULUS_MEAN_OSCILLATION = "mean_oscillation"
MODULUS_UNIFORM_CONTINUITY = "uniform_continuity"


# ---------------------------------------------------------------------------
# core types


@dataclasses.dataclass
class CoefficientField:
    """Uniformly parabolic coefficient matrix a_ij(t, x).

    eval(t, X) accepts X of shape (..., d) with t scalar or shaped like
    X[..., 0] and returns (..., d, d).  ``cumulative(s, t, X)`` returns
    the entrywise time integral of A over [s, t] when a closed form is
    available (None means: integrate numerically).
    """

    d: int
    lam: float
    Lam: float
    kind: str
    name: str
    params: dict
    eval: Callable
    time_dependent: bool
    space_dependent: bool
    cumulative: Optional[Callable] = None
    resolution: Optional[float] = None

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.d}")
        if not (0.0 < self.lam <= self.Lam):
            raise ConfigError(
                f"need 0 < lambda <= Lambda, got ({self.lam}, {self.Lam})"
            )

    def describe(self) -> dict:
        return {
            "family": self.name,
            "d": self.d,
            "lambda": self.lam,
            "Lambda": self.Lam,
            "params": self.params,
            "kind": self.kind,
        }


@dataclasses.dataclass
class TimeCurve:
    """A purely time-dependent coefficient matrix A(t) anchored at a point."""

    anchor: np.ndarray
    eval: Callable  # (t,) array or scalar -> (..., d, d)
    derivation: str  # "exact_slice" | "averaged_limit"
    d: int
    cumulative: Optional[Callable] = None  # (s, t) -> (d, d) integral of A


@dataclasses.dataclass
class ModulusProfile:
    """Tabulated modulus values on a decreasing ladder of radii."""

    radii: np.ndarray
    values: np.ndarray
    kind: str
    sampling_spec: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.radii.shape != self.values.shape or self.radii.ndim != 1:
            raise ConfigError("radii and values must be 1-d arrays of equal length")
        if np.any(self.radii <= 0.0):
            raise ConfigError("radii must be positive")
        order = np.argsort(self.radii)[::-1]
        self.radii = self.radii[order]
        self.values = self.values[order]
        if np.any(self.values < 0.0):
            raise ConfigError("modulus values must be nonnegative")
        if self.kind not in (MODULUS_MEAN_OSCILLATION, MODULUS_UNIFORM_CONTINUITY):
            raise ConfigError(f"unknown modulus kind {self.kind!r}")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "value"])
            for r, v in zip(self.radii, self.values):
                writer.writerow([f"{r:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, kind=MODULUS_UNIFORM_CONTINUITY) -> "ModulusProfile":
        rows = np.genfromtxt(path, delimiter=",", names=True)
        return cls(
            radii=np.atleast_1d(rows["r"]),
            values=np.atleast_1d(rows["value"]),
            kind=kind,
            sampling_spec={"source": str(path)},
        )


@dataclasses.dataclass
class ProbeSpec:
    """Deterministic probe points for sup-type quantities.

    Sups are taken over the bounded region [t_range] x [center +- box]
    only; points are a low-discrepancy Halton set plus the box corners.
    """

    d: int
    t_range: tuple = (0.0, 1.0)
    center: tuple = None
    box_halfwidth: float = 3.0
    n_points: int = 128
    n_directions: int = 8
    distance_fractions: tuple = (1.0, 0.5, 0.25)

    def points(self) -> tuple:
        """Return (t, X) arrays of probe times and positions.

        The region center is always a probe point: moduli of the
        built-in families peak at pairs anchored exactly on the center
        (cusp and log-modulus singularities), which a low-discrepancy
        set alone never hits.
        """
        center = np.zeros(self.d) if self.center is None else np.asarray(self.center)
        sampler = qmc.Halton(d=self.d + 1, scramble=False)
        u = sampler.random(self.n_points)
        t = self.t_range[0] + (self.t_range[1] - self.t_range[0]) * u[:, 0]
        x = center + (2.0 * u[:, 1:] - 1.0) * self.box_halfwidth
        extra = np.vstack([center + self.box_halfwidth * _signs(self.d),
                           center[None, :]])
        t_extra = np.full(len(extra), 0.5 * (self.t_range[0] + self.t_range[1]))
        return np.concatenate([t, t_extra]), np.vstack([x, extra])

    def directions(self) -> np.ndarray:
        if self.d == 1:
            return np.array([[1.0], [-1.0]])
        if self.d == 2:
            ang = 2.0 * np.pi * np.arange(self.n_directions) / self.n_directions
            return np.stack([np.cos(ang), np.sin(ang)], axis=1)
        # Fibonacci lattice on the sphere for d = 3; axes beyond that.
        if self.d == 3:
            k = np.arange(self.n_directions)
            phi = np.pi * (3.0 - np.sqrt(5.0)) * k
            z = 1.0 - 2.0 * (k + 0.5) / self.n_directions
            rho = np.sqrt(1.0 - z * z)
            return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
        return np.vstack([np.eye(self.d), -np.eye(self.d)])


def _signs(d: int) -> np.ndarray:
    out = np.array(np.meshgrid(*([[-1.0, 1.0]] * d))).reshape(d, -1).T
    return out


@dataclasses.dataclass
class QuadSpec:
    """Tensor quadrature orders for cylinder averages."""

    time_nodes: int = 24
    space_nodes: int = 48
    angle_nodes: int = 32

    def __post_init__(self):
        if min(self.time_nodes, self.space_nodes, self.angle_nodes) < 2:
            raise ConfigError("quadrature order must be at least 2 per axis")


# ---------------------------------------------------------------------------
# closed-form registry


def _const_builder(params, d):
    value = params.get("value", 1.0)
    M = np.asarray(value, dtype=float)
    if M.ndim == 0:
        M = float(M) * np.eye(d)
    if M.shape != (d, d):
        raise ConfigError(f"const matrix must be {d}x{d}, got {M.shape}")
    M = 0.5 * (M + M.T)

    def ev(t, X):
        X = np.asarray(X, dtype=float)
        return np.broadcast_to(M, X.shape[:-1] + (d, d)).copy()

    def cum(s, t, X):
        X = np.asarray(X, dtype=float)
        span = np.asarray(t - s, dtype=float)
        return span[..., None, None] * np.broadcast_to(M, X.shape[:-1] + (d, d))

    return ev, cum, False, False


def _t_sine_builder(params, d):
    base = float(params.get("base", 2.0))
    amp = float(params.get("amp", 1.0))
    freq = float(params.get("freq", 1.0))
    if base - abs(amp) <= 0.0:
        raise ConfigError("t_sine needs base > |amp| for positivity")
    eye = np.eye(d)

    def scalar(t):
        return base + amp * np.sin(freq * np.asarray(t, dtype=float))

    def ev(t, X):
        X = np.asarray(X, dtype=float)
        a = np.broadcast_to(scalar(t), X.shape[:-1])
        return a[..., None, None] * eye

    def cum(s, t, X):
        X = np.asarray(X, dtype=float)
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        val = base * (t - s) - (amp / freq) * (np.cos(freq * t) - np.cos(freq * s))
        val = np.broadcast_to(val, X.shape[:-1])
        return val[..., None, None] * eye

    return ev, cum, True, False


def _x_sine_builder(params, d):
    base = float(params.get("base", 1.0))
    amp = float(params.get("amp", 0.3))
    freq = float(params.get("freq", 1.0))
    if base - abs(amp) <= 0.0:
        raise ConfigError("x_sine needs base > |amp| for positivity")
    eye = np.eye(d)

    def scalar(X):
        X = np.asarray(X, dtype=float)
        return base + amp * np.sin(freq * X[..., 0])

    def ev(t, X):
        return scalar(X)[..., None, None] * eye

    def cum(s, t, X):
        X = np.asarray(X, dtype=float)
        span = np.broadcast_to(np.asarray(t - s, dtype=float), X.shape[:-1])
        return (scalar(X) * span)[..., None, None] * eye

    return ev, cum, False, True


def _holder_builder(params, d):
    base = float(params.get("base", 1.0))
    amp = float(params.get("amp", 0.3))
    alpha = float(params.get("alpha", 0.5))
    cap = float(params.get("cap", 2.0))
    center = np.asarray(params.get("center", np.zeros(d)), dtype=float)
    if not (0.0 < alpha <= 1.0):
        raise ConfigError("holder exponent must lie in (0, 1]")
    eye = np.eye(d)

    def scalar(X):
        X = np.asarray(X, dtype=float)
        r = np.sqrt(np.sum((X - center) ** 2, axis=-1))
        return base + amp * np.minimum(r**alpha, cap)

    def ev(t, X):
        return scalar(X)[..., None, None] * eye

    def cum(s, t, X):
        X = np.asarray(X, dtype=float)
        span = np.broadcast_to(np.asarray(t - s, dtype=float), X.shape[:-1])
        return (scalar(X) * span)[..., None, None] * eye

    return ev, cum, False, True


def _log_modulus_builder(params, d):
    """a(x) = base + amp * g(|x|) with g(r) = 1/log(1/r), clamped.

    g extends continuously by g(0) = 0 and is frozen at its value at
    r_cut for r >= r_cut, so the uniform-continuity modulus behaves like
    amp/log(1/r) for small r: continuous but not Dini.
    """
    base = float(params.get("base", 1.0))
    amp = float(params.get("amp", 0.5))
    r_cut = float(params.get("r_cut", 0.25))
    if not (0.0 < r_cut < 1.0):
        raise ConfigError("log_modulus needs r_cut in (0, 1)")
    g_cut = 1.0 / math.log(1.0 / r_cut)
    if base - abs(amp) * g_cut <= 0.0:
        raise ConfigError("log_modulus needs base > |amp| * g(r_cut) for positivity")
    eye = np.eye(d)

    def scalar(X):
        X = np.asarray(X, dtype=float)
        r = np.sqrt(np.sum(X**2, axis=-1))
        r = np.minimum(r, r_cut)
        with np.errstate(divide="ignore"):
            g = np.where(r > 0.0, 1.0 / np.log(1.0 / np.maximum(r, 1e-300)), 0.0)
        return base + amp * g

    def ev(t, X):
        return scalar(X)[..., None, None] * eye

    def cum(s, t, X):
        X = np.asarray(X, dtype=float)
        span = np.broadcast_to(np.asarray(t - s, dtype=float), X.shape[:-1])
        return (scalar(X) * span)[..., None, None] * eye

    return ev, cum, False, True


FAMILIES = {
    "const": _const_builder,
    "t_sine": _t_sine_builder,
    "x_sine": _x_sine_builder,
    "holder": _holder_builder,
    "log_modulus": _log_modulus_builder,
}


def _sampled_field(params, d, lam, Lam):
    path = params.get("csv")
    if path is None:
        raise ConfigError("sampled family requires params.csv")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader])
    header = [h.strip() for h in header]
    if d == 1:
        expected = ["t", "x1", "a11"]
    elif d == 2:
        expected = ["t", "x1", "x2", "a11", "a12", "a22"]
    else:
        raise ConfigError("sampled fields support d in {1, 2}")
    if header != expected:
        raise ConfigError(f"sampled CSV header must be {expected}, got {header}")
    if rows.size == 0:
        raise ConfigError("sampled CSV has no data rows")

    t_ax = np.unique(rows[:, 0])
    x_axes = [np.unique(rows[:, 1 + j]) for j in range(d)]
    shape = (len(t_ax),) + tuple(len(ax) for ax in x_axes)
    if np.prod(shape) != len(rows):
        raise ConfigError("sampled CSV rows do not form a complete tensor grid")
    # sort rows lexicographically by (t, x1[, x2]) then reshape
    order = np.lexsort(tuple(rows[:, j] for j in range(d, -1, -1)))
    rows = rows[order]
    n_entries = 1 if d == 1 else 3
    tables = rows[:, d + 1 :].reshape(shape + (n_entries,))

    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator(
        (t_ax, *x_axes), tables, method="linear", bounds_error=False, fill_value=None
    )
    lo = np.array([ax[0] for ax in x_axes])
    hi = np.array([ax[-1] for ax in x_axes])
    spacings = [np.min(np.diff(ax)) for ax in x_axes if len(ax) > 1]
    if len(t_ax) > 1:
        spacings.append(np.min(np.diff(t_ax)))
    resolution = float(min(spacings)) if spacings else None

    def ev(t, X):
        X = np.asarray(X, dtype=float)
        tt = np.broadcast_to(np.asarray(t, dtype=float), X.shape[:-1])
        Xc = np.clip(X, lo, hi)
        tc = np.clip(tt, t_ax[0], t_ax[-1])
        pts = np.concatenate([tc[..., None], Xc], axis=-1)
        vals = interp(pts.reshape(-1, d + 1)).reshape(X.shape[:-1] + (n_entries,))
        out = np.empty(X.shape[:-1] + (d, d))
        if d == 1:
            out[..., 0, 0] = vals[..., 0]
        else:
            out[..., 0, 0] = vals[..., 0]
            out[..., 0, 1] = vals[..., 1]
            out[..., 1, 0] = vals[..., 1]
            out[..., 1, 1] = vals[..., 2]
        return out

    time_dependent = len(t_ax) > 1
    return CoefficientField(
        d=d,
        lam=lam,
        Lam=Lam,
        kind=KIND_SAMPLED,
        name="sampled",
        params={"csv": str(path)},
        eval=ev,
        time_dependent=time_dependent,
        space_dependent=any(len(ax) > 1 for ax in x_axes),
        cumulative=None,
        resolution=resolution,
    )


def field_from_config(cfg: dict) -> CoefficientField:
    """Build a CoefficientField from a parsed configuration mapping."""
    if not isinstance(cfg, dict):
        raise ConfigError("field configuration must be a mapping")
    try:
        family = cfg["family"]
        lam = float(cfg["lambda"])
        Lam = float(cfg["Lambda"])
        d = int(cfg["d"])
    except KeyError as exc:
        raise ConfigError(f"field configuration missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed field configuration: {exc}") from exc
    params = cfg.get("params", {}) or {}
    if family == "sampled":
        return _sampled_field(params, d, lam, Lam)
    if family not in FAMILIES:
        raise ConfigError(
            f"unknown family {family!r}; known: {sorted(FAMILIES)} + ['sampled']"
        )
    ev, cum, time_dep, space_dep = FAMILIES[family](params, d)
    return CoefficientField(
        d=d,
        lam=lam,
        Lam=Lam,
        kind=KIND_CLOSED_FORM,
        name=family,
        params=dict(params),
        eval=ev,
        time_dependent=time_dep,
        space_dependent=space_dep,
        cumulative=cum,
    )


def load_field_config(path) -> CoefficientField:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read field configuration: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse field configuration: {exc}") from exc
    if isinstance(cfg, dict) and "field" in cfg:
        cfg = cfg["field"]
    return field_from_config(cfg)


# ---------------------------------------------------------------------------
# operations


def evaluate(field: CoefficientField, t, x) -> np.ndarray:
    """Symmetrized coefficient matrix at (t, x)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != field.d:
        raise ConfigError(f"point dimension {x.shape[-1]} != field dimension {field.d}")
    A = field.eval(t, x)
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    if not np.all(np.isfinite(A)):
        raise GuardRailError("coefficient evaluation produced non-finite entries")
    return A


@dataclasses.dataclass
class EllipticityReport:
    lambda_est: float
    Lambda_est: float
    passed: bool
    n_probes: int
    tol: float


def check_ellipticity(
    field: CoefficientField, probe_spec: ProbeSpec = None, tol: float = 1e-12
) -> EllipticityReport:
    """Estimate eigenvalue range over probes; compare with declared bounds."""
    spec = probe_spec or ProbeSpec(d=field.d)
    t, X = spec.points()
    A = evaluate(field, t, X)
    eigs = np.linalg.eigvalsh(A)
    lo = float(np.min(eigs))
    hi = float(np.max(eigs))
    passed = (lo >= field.lam - tol) and (hi <= field.Lam + tol)
    return EllipticityReport(
        lambda_est=lo, Lambda_est=hi, passed=passed, n_probes=len(t), tol=tol
    )


def modulus_continuity(
    field: CoefficientField, radii, probe_spec: ProbeSpec = None
) -> ModulusProfile:
    """Uniform-continuity modulus over the probe region, entrywise max.

    For each radius the sup runs over probe points, probe directions and
    pair distances r * distance_fractions; the resulting profile is made
    monotone in r by a running max (a sup over a nested family must be).
    """
    spec = probe_spec or ProbeSpec(d=field.d)
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    t, X = spec.points()
    dirs = spec.directions()
    A0 = evaluate(field, t, X)
    values = np.empty_like(radii)
    for i, r in enumerate(radii):
        worst = 0.0
        for frac in spec.distance_fractions:
            for u in dirs:
                A1 = evaluate(field, t, X + r * frac * u)
                worst = max(worst, float(np.max(np.abs(A1 - A0))))
        values[i] = worst
    # enforce monotonicity from small radii upward
    values = np.maximum.accumulate(values[::-1])[::-1]
    return ModulusProfile(
        radii=radii,
        values=values,
        kind=MODULUS_UNIFORM_CONTINUITY,
        sampling_spec={
            "n_points": spec.n_points,
            "box_halfwidth": spec.box_halfwidth,
            "t_range": list(spec.t_range),
            "fractions": list(spec.distance_fractions),
        },
    )


def _ball_nodes(center, r, d, quad: QuadSpec):
    """Quadrature nodes/weights for the normalized average over B_r(center)."""
    center = np.asarray(center, dtype=float)
    if d == 1:
        y, w = gauss_legendre(center[0] - r, center[0] + r, quad.space_nodes)
        return y[:, None], w / (2.0 * r)
    if d == 2:
        rho, w_rho = gauss_legendre(0.0, r, quad.space_nodes)
        ang = 2.0 * np.pi * (np.arange(quad.angle_nodes) + 0.5) / quad.angle_nodes
        w_ang = np.full(quad.angle_nodes, 2.0 * np.pi / quad.angle_nodes)
        P = np.stack(
            [
                center[0] + rho[:, None] * np.cos(ang)[None, :],
                center[1] + rho[:, None] * np.sin(ang)[None, :],
            ],
            axis=-1,
        ).reshape(-1, 2)
        W = (rho[:, None] * w_rho[:, None] * w_ang[None, :]).reshape(-1)
        return P, W / (np.pi * r * r)
    raise ConfigError("ball averages support d in {1, 2}")


def ball_average(field: CoefficientField, t, center, r, quad: QuadSpec = None):
    """Average of A(t, .) over the ball B_r(center); t may be an array."""
    quad = quad or QuadSpec()
    P, W = _ball_nodes(center, r, field.d, quad)
    t = np.asarray(t, dtype=float)
    tt = np.broadcast_to(t[..., None], t.shape + (len(P),))
    A = evaluate(field, tt, np.broadcast_to(P, t.shape + P.shape))
    return np.einsum("...nij,n->...ij", A, W)


def mean_oscillation(
    field: CoefficientField, r: float, X, quad_spec: QuadSpec = None
) -> float:
    """Mean oscillation over the backward cylinder Q_r^-(X).

    omega = avg over (s, y) in (t - r^2, t) x B_r(x) of the entrywise max
    of |A(s, y) - ball average of A(s, .)|, both averages computed with
    the same tensor rule.
    """
    quad = quad_spec or QuadSpec()
    t, x = X
    if r <= 0.0:
        raise ConfigError("cylinder radius must be positive")
    s_nodes, s_w = gauss_legendre(t - r * r, t, quad.time_nodes)
    s_w = s_w / (r * r)
    P, W = _ball_nodes(np.atleast_1d(np.asarray(x, dtype=float)), r, field.d, quad)
    tt = np.broadcast_to(s_nodes[:, None], (len(s_nodes), len(P)))
    A = evaluate(field, tt, np.broadcast_to(P, (len(s_nodes),) + P.shape))
    Abar = np.einsum("snij,n->sij", A, W)
    dev = np.max(np.abs(A - Abar[:, None]), axis=(-1, -2))
    inner = dev @ W
    return float(inner @ s_w)


def mean_oscillation_profile(
    field: CoefficientField,
    radii,
    X,
    quad_spec: QuadSpec = None,
) -> ModulusProfile:
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    vals = np.array([mean_oscillation(field, r, X, quad_spec) for r in radii])
    return ModulusProfile(
        radii=radii,
        values=vals,
        kind=MODULUS_MEAN_OSCILLATION,
        sampling_spec={"t": float(X[0]), "x": np.asarray(X[1]).tolist()},
    )


@dataclasses.dataclass
class DiniResult:
    """Value of int_0^r value(s)/s ds from a tabulated ladder.

    The per-interval integrals treat the profile as a power law between
    adjacent tabulated radii (exact for r^alpha profiles); below the
    smallest radius the last power-law exponent extrapolates the tail
    geometrically.  ``diverged`` is set when the tail fails the ratio
    test: the last five tabulated values decrease by a cumulative factor
    below ratio_threshold, or the extrapolation exponent is <= 0.
    """

    value: float
    diverged: bool
    tail: float
    tail_exponent: float
    last5_ratio: float
    ratio_threshold: float = 1.05


def dini_integral(profile: ModulusProfile, r: float = None) -> DiniResult:
    radii = profile.radii
    values = profile.values
    if r is None:
        r = float(radii[0])
    mask = radii <= r * (1.0 + 1e-12)
    if not np.any(mask):
        raise ConfigError("no tabulated radii at or below the requested r")
    n = len(radii)

    if np.all(values == 0.0):
        return DiniResult(0.0, False, 0.0, math.inf, math.inf)

    # per-interval power-law exponents over the FULL ladder: divergence
    # and the below-ladder tail are properties of the modulus near 0 and
    # must not change with the upper limit r
    tiny = 1e-300
    total = 0.0
    alphas = []
    for i in range(n - 1):
        r_hi, r_lo = radii[i], radii[i + 1]
        v_hi, v_lo = values[i], values[i + 1]
        lr = math.log(r_hi / r_lo)
        if v_hi <= tiny and v_lo <= tiny:
            alphas.append(math.inf)
            continue
        if v_hi <= tiny or v_lo <= tiny:
            if mask[i]:
                total += 0.5 * (v_hi + v_lo) * lr
            alphas.append(math.inf)
            continue
        alpha = math.log(v_hi / v_lo) / lr
        alphas.append(alpha)
        if not mask[i]:
            continue
        if abs(alpha) < 1e-12:
            total += v_hi * lr
        else:
            total += v_hi * (1.0 - (r_lo / r_hi) ** alpha) / alpha

    v_last = values[-1]
    if n >= 5:
        last5_ratio = float(values[-5] / values[-1]) if values[-1] > 0 else math.inf
    else:
        last5_ratio = math.inf
    finite_alphas = [a for a in alphas if math.isfinite(a)]
    tail_exponent = finite_alphas[-1] if finite_alphas else math.inf
    threshold = 1.05

    diverged = False
    if v_last > 0.0:
        if last5_ratio < threshold:
            diverged = True
        if math.isfinite(tail_exponent) and tail_exponent <= 0.0:
            diverged = True

    if diverged:
        return DiniResult(math.inf, True, math.inf, tail_exponent, last5_ratio)

    if v_last <= tiny:
        tail = 0.0
    elif math.isinf(tail_exponent):
        tail = 0.0
    else:
        tail = v_last / tail_exponent
    return DiniResult(float(total + tail), False, float(tail), tail_exponent, last5_ratio)


@dataclasses.dataclass
class FreezeResult:
    curve: TimeCurve
    radii: np.ndarray
    increments: np.ndarray
    window: tuple


def freeze(
    field: CoefficientField,
    x0,
    r: float,
    depth: int,
    window: tuple = (0.0, 1.0),
    quad_spec: QuadSpec = None,
    derivation: str = "averaged_limit",
) -> FreezeResult:
    """Freeze coefficients at x0 by dyadic ball averaging.

    Returns the averaged time curve at radius r * 2^-depth along with
    the successive L1 increments over the window,

        inc_k = int_window max_ij |avg_{r 2^-k} - avg_{r 2^-(k+1)}| dt,

    whose decay rate reflects the Dini modulus of the field.  With
    derivation="exact_slice" the curve is A(., x0) itself (the natural
    choice for fields continuous in x).
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    quad = quad_spec or QuadSpec()
    if depth < 0:
        raise ConfigError("depth must be nonnegative")
    if field.resolution is not None and r * 2.0**-depth < field.resolution:
        raise ConfigError(
            "freezing depth exceeds the field's sampled resolution "
            f"({r * 2.0 ** -depth:g} < {field.resolution:g})"
        )

    if derivation == "exact_slice":
        def ev_slice(t):
            t = np.asarray(t, dtype=float)
            return evaluate(field, t, np.broadcast_to(x0, t.shape + (field.d,)))

        cum = None
        if field.cumulative is not None:
            def cum(s, t):
                return np.asarray(field.cumulative(s, t, x0), dtype=float)
        curve = TimeCurve(anchor=x0, eval=ev_slice, derivation="exact_slice",
                          d=field.d, cumulative=cum)
        return FreezeResult(curve=curve, radii=np.array([]), increments=np.array([]),
                            window=window)

    radii = r * 2.0 ** -np.arange(depth + 1)
    t_nodes, t_w = gauss_legendre(window[0], window[1], quad.time_nodes)
    avgs = [ball_average(field, t_nodes, x0, rk, quad) for rk in radii]
    increments = np.array(
        [
            float(np.max(np.abs(avgs[k] - avgs[k + 1]), axis=(-1, -2)) @ t_w)
            for k in range(depth)
        ]
    )

    r_final = radii[-1]

    def ev(t):
        return ball_average(field, np.asarray(t, dtype=float), x0, r_final, quad)

    cum = None
    if not field.time_dependent:
        A_const = ball_average(field, np.array(0.0), x0, r_final, quad)

        def ev(t):  # noqa: F811 - constant-in-time fast path
            t = np.asarray(t, dtype=float)
            return np.broadcast_to(A_const, t.shape + A_const.shape).copy()

        def cum(s, t):
            span = np.asarray(t, dtype=float) - np.asarray(s, dtype=float)
            return span[..., None, None] * A_const

    curve = TimeCurve(anchor=x0, eval=ev, derivation="averaged_limit",
                      d=field.d, cumulative=cum)
    return FreezeResult(curve=curve, radii=radii, increments=increments, window=window)
