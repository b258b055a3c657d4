"""Batch front-end: one manifest file in, one command run out.

A manifest is a YAML mapping with four top-level keys:

    field:    coefficient configuration (same schema as load_field_config)
    command:  one of dmo, freeze, phi, build, verify, bounds, chain
    params:   command-specific settings (all optional, defaults below)
    out:      output directory (overridable with --out)
    seed:     recorded in every output directory for reproducibility

Identical manifests produce byte-identical outputs: every float is
written with 17 significant digits and all sweeps run in a fixed order.
Exit codes: 0 success, 2 configuration error, 3 guard rail tripped
(non-Dini field, horizon past the contraction guarantee, witness
failure), 4 verification tolerances violated, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from .bounds import (
    GaussianEnvelope,
    chaining_bound_report,
    chaining_crossover,
    envelope_ratio,
    tail_sum_bound,
    tail_sum_direct_log,
)
from .coefficients import (
    QuadSpec,
    dini_integral,
    field_from_config,
    freeze,
    mean_oscillation_profile,
    modulus_continuity,
)
from .errors import (
    ConfigError,
    GuardRailError,
    HorizonError,
    NonDiniError,
    VerificationError,
)
from .frozen import FrozenKernel, bound_constants
from .grids import KernelGrid, config_digest
from .levi import ParametrixConfig, build_composed, build_short_time, delta0
from .oracle import (
    FDGridSpec,
    adjoint_gamma,
    adjoint_solve_and_symmetry,
    ck_check,
    gamma_eps,
    mass_check,
    relative_gap,
    residual_check,
)

COMMANDS = ("dmo", "freeze", "phi", "build", "verify", "bounds", "chain")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_VERIFY = 4
EXIT_IO = 5


@dataclasses.dataclass
class RunManifest:
    command: str
    field: dict
    params: dict
    out: str = ""
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "field": self.field,
            "params": self.params,
            "out": self.out,
            "seed": self.seed,
        }


def load_manifest(path) -> RunManifest:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read manifest: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse manifest: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("manifest must be a mapping")
    for key in ("command", "field"):
        if key not in raw:
            raise ConfigError(f"manifest is missing required key {key!r}")
    command = str(raw["command"])
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    params = raw.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("manifest key 'params' must be a mapping")
    return RunManifest(
        command=command,
        field=raw["field"],
        params=params,
        out=str(raw.get("out", "")),
        seed=int(raw.get("seed", 0)),
    )


def dump_manifest(man: RunManifest) -> str:
    # sorted keys + default flow style pin the byte-level round trip
    return yaml.safe_dump(man.to_dict(), sort_keys=True, default_flow_style=False)


def _g17(v) -> str:
    return f"{float(v):.17g}"


def _write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_g17(v) if isinstance(v, (int, float, np.floating))
                              else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_kv(path, pairs) -> None:
    lines = [f"{k}: {_g17(v) if isinstance(v, (int, float, np.floating)) else v}"
             for k, v in pairs]
    Path(path).write_text("\n".join(lines) + "\n")


def _dyadic_radii(depth: int):
    return [2.0 ** -k for k in range(depth + 1)]


# ---------------------------------------------------------------------------
# commands


def cmd_dmo(man: RunManifest, out: Path, args) -> None:
    field = field_from_config(man.field)
    p = man.params
    depth = int(p.get("depth", 14))
    radii = _dyadic_radii(depth)
    t0 = float(p.get("t0", 0.0))
    origin = np.zeros(field.d)

    rho = modulus_continuity(field, radii)
    omega = mean_oscillation_profile(field, radii, (t0, origin))
    _write_csv(out / "modulus.csv", ["r", "rho", "omega"],
               [(r, rv, ov) for r, rv, ov in
                zip(rho.radii, rho.values, omega.values)])

    lines = []
    if np.all(rho.values == 0.0):
        classification = "constant-in-x; Dini trivially"
        lines += ["rho_integral: 0", "omega_integral: 0", "diverged: no"]
    else:
        res_rho = dini_integral(rho)
        res_omega = dini_integral(omega)
        if res_rho.diverged:
            classification = "non-Dini"
            lines += [
                "rho_integral: diverged",
                f"tail_exponent: {res_rho.tail_exponent:.6g}",
                f"last5_ratio: {res_rho.last5_ratio:.6g}",
                f"ratio_threshold: {res_rho.ratio_threshold:.6g}",
                "diverged: yes",
            ]
        else:
            slopes = rho.values[rho.radii <= 0.25] / rho.radii[rho.radii <= 0.25]
            lipschitz = slopes.size >= 3 and np.ptp(slopes) <= 0.2 * slopes.max()
            classification = "Dini (Lipschitz)" if lipschitz else "Dini"
            lines += [
                f"rho_integral: {res_rho.value:.17g}",
                f"omega_integral: {res_omega.value:.17g}",
                "diverged: no",
            ]
    lines.insert(0, f"classification: {classification}")
    lines.append(f"depth: {depth}")
    (out / "dini.txt").write_text("\n".join(lines) + "\n")


def cmd_freeze(man: RunManifest, out: Path, args) -> None:
    field = field_from_config(man.field)
    p = man.params
    x0 = np.atleast_1d(np.asarray(p.get("x0", [0.0] * field.d), dtype=float))
    r = float(p.get("r", 1.0))
    depth = int(p.get("depth", 8))
    window = tuple(p.get("window", (0.0, 1.0)))
    res = freeze(field, x0, r, depth, window=window)

    n_nodes = int(p.get("curve_nodes", 65))
    ts = np.linspace(window[0], window[1], n_nodes)
    header = ["t"] + [f"a{i + 1}{j + 1}" for i in range(field.d)
                      for j in range(i, field.d)]
    rows = []
    for t in ts:
        a = np.atleast_2d(res.curve.eval(t))
        rows.append([t] + [a[i, j] for i in range(field.d)
                           for j in range(i, field.d)])
    _write_csv(out / "freeze.csv", header, rows)

    inc = res.increments
    lines = [f"x0: {np.array2string(x0, precision=17)}", f"r: {_g17(r)}",
             f"depth: {depth}"]
    for k, v in enumerate(inc):
        ratio = inc[k] / inc[k - 1] if k > 0 and inc[k - 1] > 0 else float("nan")
        lines.append(f"increment[{k}]: {_g17(v)} ratio: {ratio:.6g}")
    lines.append(f"increment_sum: {_g17(float(np.sum(inc)))}")
    (out / "increments.txt").write_text("\n".join(lines) + "\n")


def _frozen_kernel_for(field, p):
    x0 = np.atleast_1d(np.asarray(p.get("x0", [0.0] * field.d), dtype=float))
    res = freeze(field, x0, float(p.get("r", 1.0)), int(p.get("depth", 6)),
                 derivation=str(p.get("derivation", "exact_slice")))
    return FrozenKernel(res.curve)


def cmd_phi(man: RunManifest, out: Path, args) -> None:
    field = field_from_config(man.field)
    p = man.params
    kernel = _frozen_kernel_for(field, p)
    tau, xi = _source_of(p, field.d)
    eval_times = _eval_times_of(p, tau)
    x_eval = _x_eval_of(p, xi, field.d)

    targets = np.array([(t, *x) for t in eval_times for x in x_eval])
    sources = np.array([(tau, *xi)])
    values = np.array([[kernel.phi(t, x, tau, xi)] for (t, *x) in targets])
    grid = KernelGrid(targets=targets, sources=sources, values=values,
                      method="frozen", d=field.d,
                      config_digest=config_digest(man.to_dict()))
    grid.to_csv(out / "phi.csv")

    consts = bound_constants(field.lam, field.Lam, field.d)
    _write_kv(out / "constants.txt", [
        ("lambda", field.lam), ("Lambda", field.Lam), ("d", field.d),
        ("kappa0", consts.kappa0), ("C0", consts.C0),
        ("kappa0_prime", consts.kappa0_prime), ("C0_prime", consts.C0_prime),
        ("C1", consts.C1), ("C2", consts.C2), ("eps0", consts.eps0),
    ])


def _source_of(p, d):
    src = p.get("source", [0.0] + [0.0] * d)
    tau = float(src[0])
    xi = np.atleast_1d(np.asarray(src[1:], dtype=float))
    if xi.size != d:
        raise ConfigError(f"source must be (tau, xi_1..xi_{d})")
    return tau, xi


def _eval_times_of(p, tau):
    if "eval_times" in p:
        times = np.asarray(p["eval_times"], dtype=float)
    else:
        horizon = float(p.get("horizon", 0.1))
        n = int(p.get("n_times", 4))
        times = tau + horizon * np.arange(1, n + 1) / n
    if np.any(times <= tau):
        raise ConfigError("evaluation times must lie strictly after the source")
    return np.sort(times)


def _x_eval_of(p, xi, d):
    if "x_values" in p:
        pts = np.atleast_2d(np.asarray(p["x_values"], dtype=float))
        if pts.shape[1] != d:
            pts = pts.reshape(-1, d)
        return pts
    half = float(p.get("x_half_width", 3.0))
    n = int(p.get("x_nodes", 25))
    if d == 1:
        return np.linspace(xi[0] - half, xi[0] + half, n).reshape(-1, 1)
    axes = [np.linspace(c - half, c + half, n) for c in xi]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _parametrix_config(p, threads):
    cfg = ParametrixConfig(threads=max(1, threads))
    for key in ("eps0", "series_tol", "K_max", "time_nodes",
                "space_nodes_per_dim", "truncation_multiplier", "witness_slack"):
        if key in p:
            setattr(cfg, key, type(getattr(cfg, key))(p[key]))
    return cfg


def _dini_gate(field, p, constants, force):
    """Theory horizon delta0^2; non-Dini fields stop here unless forced.

    The default ladder is deep: log-type tails only fail the dyadic
    ratio test around depth 100.
    """
    radii = _dyadic_radii(int(p.get("dini_depth", 100)))
    profile = modulus_continuity(field, radii)
    try:
        return delta0(profile, constants)
    except NonDiniError:
        if not force:
            raise
        return 0.0


def cmd_build(man: RunManifest, out: Path, args) -> None:
    field = field_from_config(man.field)
    p = man.params
    cfg = _parametrix_config(p, args.threads)
    constants = bound_constants(field.lam, field.Lam, field.d)
    d0 = _dini_gate(field, p, constants, args.force)

    tau, xi = _source_of(p, field.d)
    eval_times = _eval_times_of(p, tau)
    span = float(eval_times[-1] - tau)
    step = p.get("step")

    if step is not None:
        step = float(step)
        if step > d0**2 and not args.force:
            raise HorizonError(
                f"composition step {step:g} exceeds the contraction horizon "
                f"delta0^2 = {d0**2:g}"
            )
        levels = tau + step * np.arange(int(round(span / step)) + 1)
        half = float(p.get("composition_half_width", 4.0))
        n_lat = int(p.get("composition_nodes", 65))
        x_grid = np.linspace(xi[0] - half, xi[0] + half, n_lat)
        grid = build_composed(field, x_grid, levels, cfg, constants)
    else:
        if span > d0**2 and not args.force:
            raise HorizonError(
                f"requested span {span:g} exceeds the contraction horizon "
                f"delta0^2 = {d0**2:g}; extend by composition (params.step) "
                "or pass --force"
            )
        x_eval = _x_eval_of(p, xi, field.d)
        targets = np.array([(t, *x) for t in eval_times for x in x_eval])
        grid = build_short_time(field, targets, [(tau, *xi)], cfg, constants)
    grid.to_csv(out / "kernel.csv")

    meta = grid.meta
    lines = [f"delta0: {_g17(d0)}", f"horizon: {_g17(span)}",
             f"eps0: {_g17(cfg.eps0)}",
             f"witness: {_g17(cfg.eps0 + cfg.witness_slack)}"]
    for k, v in enumerate(meta.get("term_norms", [])):
        lines.append(f"term_norm[{k}]: {_g17(v)}")
    for k, v in enumerate(meta.get("term_ratios", [])):
        lines.append(f"term_ratio[{k + 1}]: {_g17(v)}")
    if "worst_ratio" in meta:
        lines.append(f"worst_ratio: {_g17(meta['worst_ratio'])}")
    if "total_mass_drift" in meta:
        lines.append(f"total_mass_drift: {_g17(meta['total_mass_drift'])}")
    (out / "terms.txt").write_text("\n".join(lines) + "\n")

    env = GaussianEnvelope(C=1.0, kappa=constants.kappa0 / 2.0, p=2.0, d=field.d)
    rep = envelope_ratio(grid, env)
    _write_kv(out / "envelope.txt", [
        ("kappa", constants.kappa0 / 2.0), ("p", 2.0),
        ("empirical_constant", rep["sup_ratio"]),
        ("admissible_constant", constants.C0 / (1.0 - cfg.eps0)),
        ("argmax_target", rep["argmax_target"]),
        ("boundary_flag", rep["boundary_flag"]),
    ])


def _fd_spec_of(p):
    fd = p.get("fd", {})
    return FDGridSpec(
        box_halfwidth=float(fd.get("box_halfwidth", 8.0)),
        n_nodes=int(fd.get("n_nodes", 3201)),
        dt=float(fd.get("dt", 2e-4)),
        theta=float(fd.get("theta", 1.0)),
    )


def cmd_verify(man: RunManifest, out: Path, args) -> None:
    field = field_from_config(man.field)
    p = man.params
    checks = list(p.get("checks", ["mass", "residual"]))
    tolerances = dict(p.get("tolerances", {}))
    results = []

    grid = None
    if "kernel_csv" in p:
        grid = KernelGrid.from_csv(p["kernel_csv"])

    def fd_grid():
        # oracle-request mode: solve forward once and check that grid
        if grid is not None:
            return grid
        tau, xi = _source_of(p, field.d)
        eval_times = _eval_times_of(p, tau)
        x_eval = _x_eval_of(p, xi, field.d)[:, 0]
        return gamma_eps(field, (tau, xi[0]), float(p.get("eps", 0.01)),
                         _fd_spec_of(p), float(eval_times[-1] - tau),
                         eval_times=eval_times, x_eval=x_eval)

    def record(name, value, tol):
        ok = value <= tol
        results.append((name, value, tol, ok))
        return ok

    for check in checks:
        if check == "mass":
            tol = float(tolerances.get("mass", 1e-2))
            if grid is not None:
                target_grid = grid
            else:
                # one transpose solve tabulates Gamma over the whole
                # source lattice, which is what the mass quadrature needs
                target = tuple(p.get("target", (0.3, 0.0)))
                tau = float(p.get("tau", 0.0))
                xs, rows = adjoint_gamma(field, target,
                                         float(p.get("eps", 0.01)),
                                         _fd_spec_of(p), [tau])
                target_grid = KernelGrid(
                    targets=np.array([target]),
                    sources=np.column_stack([np.full(len(xs), tau), xs]),
                    values=rows[tau].reshape(1, -1),
                    method="fd_oracle", d=1,
                )
            try:
                rep = mass_check(target_grid, tol=tol)
                record("mass", rep["max_deviation"], tol)
            except VerificationError:
                record("mass", float("inf"), tol)
        elif check == "residual":
            tol = float(tolerances.get("residual", 1.0))
            rep = residual_check(fd_grid(), field,
                                 float(p.get("exclusion_radius", 0.2)))
            record("residual", rep["max_scaled_residual"], tol)
        elif check == "envelope":
            consts = bound_constants(field.lam, field.Lam, field.d)
            env = GaussianEnvelope(C=1.0, kappa=consts.kappa0 / 2.0,
                                   p=2.0, d=field.d)
            rep = envelope_ratio(fd_grid(), env)
            tol = float(tolerances.get(
                "envelope", 1.2 * consts.C0 / (1.0 - consts.eps0)))
            record("envelope", rep["sup_ratio"], tol)
        elif check == "cross":
            tau, xi = _source_of(p, field.d)
            eval_times = _eval_times_of(p, tau)
            x_eval = _x_eval_of(p, xi, field.d)[:, 0]
            cfg = _parametrix_config(p, args.threads)
            targets = np.array([(t, x) for t in eval_times for x in x_eval])
            para = build_short_time(field, targets, [(tau, xi[0])], cfg)
            fd = gamma_eps(field, (tau, xi[0]), float(p.get("eps", 0.01)),
                           _fd_spec_of(p), float(eval_times[-1] - tau),
                           eval_times=eval_times, x_eval=x_eval)
            gap = relative_gap(para, fd)
            record("cross", gap["gap"], float(tolerances.get("cross", 0.05)))
        elif check == "symmetry":
            target = tuple(p.get("target", (0.3, 0.5)))
            sources = p.get("sources", [(0.0, -1.0), (0.0, 0.3), (0.0, 0.8)])
            rep = adjoint_solve_and_symmetry(
                field, target, float(p.get("eps", 0.01)), _fd_spec_of(p),
                sources)
            record("symmetry", rep["max_relative_asymmetry"],
                   float(tolerances.get("symmetry", 0.05)))
        elif check == "ck":
            rep = _ck_from_params(field, p, args)
            record("ck", rep["max_relative_defect"],
                   float(tolerances.get("ck", 2e-2)))
        else:
            raise ConfigError(f"unknown verify check {check!r}")

    lines = []
    for name, value, tol, ok in results:
        lines.append(f"{name}: measured={value:.6g} tol={tol:.6g} -> "
                     f"{'PASS' if ok else 'FAIL'}")
    (out / "verify.txt").write_text("\n".join(lines) + "\n")
    failures = [name for name, _, _, ok in results if not ok]
    if failures:
        raise VerificationError(f"checks failed: {', '.join(failures)}")


def _ck_from_params(field, p, args):
    """Two FD half-span kernels composed across tau_mid vs one direct solve."""
    tau, xi = _source_of(p, field.d)
    t_end = float(p.get("t_end", tau + 0.2))
    tau_mid = float(p.get("tau_mid", (tau + t_end) / 2.0))
    half = float(p.get("lattice_half_width", 2.0))
    n_lat = int(p.get("lattice_nodes", 33))
    lattice = np.linspace(xi[0] - half, xi[0] + half, n_lat)
    spec = _fd_spec_of(p)
    eps = float(p.get("eps", 0.01))

    B = gamma_eps(field, (tau, xi[0]), eps, spec, tau_mid - tau,
                  eval_times=[tau_mid], x_eval=lattice)
    A_rows = []
    for xm in lattice:
        g = gamma_eps(field, (tau_mid, xm), eps, spec, t_end - tau_mid,
                      eval_times=[t_end], x_eval=lattice)
        A_rows.append(g.values[:, 0])
    A = KernelGrid(
        targets=np.column_stack([np.full(n_lat, t_end), lattice]),
        sources=np.column_stack([np.full(n_lat, tau_mid), lattice]),
        values=np.column_stack(A_rows),
        method="fd_oracle", d=1,
    )
    direct = gamma_eps(field, (tau, xi[0]), eps, spec, t_end - tau,
                       eval_times=[t_end], x_eval=lattice)
    return ck_check(A, B, tau_mid, direct=direct)


def cmd_bounds(man: RunManifest, out: Path, args) -> None:
    field = field_from_config(man.field)
    p = man.params
    consts = bound_constants(field.lam, field.Lam, field.d)
    deltas = [float(v) for v in p.get("deltas", (0.25, 0.5, 0.75))]

    pairs = [
        ("lambda", field.lam), ("Lambda", field.Lam), ("d", field.d),
        ("kappa0", consts.kappa0), ("C0", consts.C0),
        ("kappa0_prime", consts.kappa0_prime), ("C0_prime", consts.C0_prime),
        ("C1", consts.C1), ("C2", consts.C2), ("eps0", consts.eps0),
    ]
    for k, alpha in ((1, 0.5), (5, 1.0), (12, 2.0)):
        rep = tail_sum_bound(k, alpha)
        direct = tail_sum_direct_log(k, alpha)
        pairs.append((f"tail_log_bound[k={k},alpha={alpha:g}]",
                      rep["log_bound"]))
        pairs.append((f"tail_log_direct[k={k},alpha={alpha:g}]", direct))
        if rep["log_bound"] < direct:
            raise VerificationError(
                f"tail bound fails to dominate direct sum at k={k}, "
                f"alpha={alpha:g}"
            )
    for delta in deltas:
        cross = chaining_crossover(consts.C0, consts.kappa0, delta, field.d)
        pairs.append((f"R0[delta={delta:g}]", cross["R0"]))
        pairs.append((f"beta[delta={delta:g}]", cross["beta"]))
    if "kernel_csv" in p:
        grid = KernelGrid.from_csv(p["kernel_csv"])
        for delta in [0.0] + deltas:
            env = GaussianEnvelope(C=1.0, kappa=consts.kappa0 / 2.0,
                                   p=2.0 - delta, d=field.d)
            rep = envelope_ratio(grid, env)
            pairs.append((f"empirical_C[p={2.0 - delta:g}]", rep["sup_ratio"]))
    _write_kv(out / "bounds.txt", pairs)
    _write_chain_csv(out / "chain.csv", consts, field.d, deltas, p)


def _write_chain_csv(path, consts, d, deltas, p) -> None:
    zeta_max = float(p.get("zeta_max", 50.0))
    n_zeta = int(p.get("n_zeta", 201))
    t = float(p.get("t", 1.0))
    zetas = np.linspace(0.0, zeta_max, n_zeta)
    rows = []
    for delta in deltas:
        for z in zetas:
            x = np.append(z * math.sqrt(t), np.zeros(d - 1))
            rep = chaining_bound_report(consts.C0, consts.kappa0, delta, t, x)
            rows.append((delta, z, rep["log_bound"], rep["bound"],
                         rep["branch"]))
    _write_csv(path, ["delta", "zeta", "log_bound", "bound", "branch"], rows)


def cmd_chain(man: RunManifest, out: Path, args) -> None:
    field = field_from_config(man.field)
    p = man.params
    consts = bound_constants(field.lam, field.Lam, field.d, with_c1=False)
    deltas = [float(v) for v in p.get("deltas", (0.25, 0.5, 0.75))]
    _write_chain_csv(out / "chain.csv", consts, field.d, deltas, p)
    pairs = []
    for delta in deltas:
        cross = chaining_crossover(consts.C0, consts.kappa0, delta, field.d)
        for key in ("R0", "beta", "seam_N", "worst_N_jump_margin"):
            pairs.append((f"{key}[delta={delta:g}]", cross[key]))
    _write_kv(out / "crossover.txt", pairs)


HANDLERS = {
    "dmo": cmd_dmo,
    "freeze": cmd_freeze,
    "phi": cmd_phi,
    "build": cmd_build,
    "verify": cmd_verify,
    "bounds": cmd_bounds,
    "chain": cmd_chain,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parakern",
        description="build and verify parabolic transition kernels",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True,
                        help="manifest file (YAML)")
        sp.add_argument("--out", default=None,
                        help="output directory (overrides manifest)")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker cap; outputs are identical for any value")
        sp.add_argument("--force", action="store_true",
                        help="bypass the Dini/horizon guard rails")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        man = load_manifest(args.config)
        if man.command != args.command:
            raise ConfigError(
                f"manifest declares command {man.command!r}; "
                f"invoked as {args.command!r} (one manifest = one command)"
            )
        out = Path(args.out or man.out or f"runs/{man.command}")
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.yaml").write_text(dump_manifest(man))
        (out / "seed.txt").write_text(f"{man.seed}\n")
        HANDLERS[man.command](man, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardRailError as exc:
        print(f"guard rail: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
