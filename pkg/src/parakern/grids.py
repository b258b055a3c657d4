"""Kernel grids: tabulated Gamma(t, x, tau, xi) values plus CSV round-trip.

A KernelGrid stores values on targets x sources, where targets are rows
(t, x_1..x_d) and sources rows (tau, xi_1..xi_d).  CSV files carry one
row per (target, source) pair with 17-significant-digit formatting so
that doubles survive a round trip bit-exactly; a JSON sidecar records
the dimension, field description and configuration digest.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json

import numpy as np

from .errors import ConfigError

METHODS = ("frozen", "parametrix", "fd_oracle", "composed")


def config_digest(payload: dict) -> str:
    """Short stable digest of a configuration mapping."""
    blob = json.dumps(payload, sort_keys=True, default=_jsonify)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    return str(obj)


@dataclasses.dataclass
class GridSpec:
    """Source-grid resolution for per-target Levi-term tabulation."""

    time_nodes: int = 24
    space_nodes: int = 48

    def __post_init__(self):
        if min(self.time_nodes, self.space_nodes) < 2:
            raise ConfigError("tabulation grid needs at least 2 nodes per axis")


@dataclasses.dataclass
class KernelGrid:
    targets: np.ndarray
    sources: np.ndarray
    values: np.ndarray
    method: str
    d: int
    config_digest: str = ""
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        self.sources = np.atleast_2d(np.asarray(self.sources, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.targets.shape[1] != 1 + self.d or self.sources.shape[1] != 1 + self.d:
            raise ConfigError("target/source rows must be (t, x_1..x_d)")
        if self.values.shape != (len(self.targets), len(self.sources)):
            raise ConfigError(
                f"values shape {self.values.shape} != "
                f"({len(self.targets)}, {len(self.sources)})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("kernel grid contains non-finite values")
        # causality: vanish identically for t <= tau
        bad = self.targets[:, 0][:, None] < self.sources[:, 0][None, :]
        if np.any(self.values[bad] != 0.0):
            raise ConfigError("causality violated: nonzero value at t < tau")

    # -- lattice helpers -----------------------------------------------------

    def target_lattice(self):
        """Interpret targets as a tensor lattice (t-axis, x-axes, values).

        Only meaningful when the targets were built lattice-major; raises
        ConfigError otherwise.  Used by finite-difference residual checks.
        """
        t_ax = np.unique(self.targets[:, 0])
        x_axes = [np.unique(self.targets[:, 1 + j]) for j in range(self.d)]
        shape = (len(t_ax),) + tuple(len(ax) for ax in x_axes)
        if np.prod(shape) != len(self.targets):
            raise ConfigError("targets do not form a tensor lattice")
        order = np.lexsort(tuple(self.targets[:, j] for j in range(self.d, -1, -1)))
        if not np.all(np.diff(order) == 1):
            reordered = self.values[order]
        else:
            reordered = self.values
        return t_ax, x_axes, reordered.reshape(shape + (len(self.sources),))

    # -- CSV round trip --------------------------------------------------------

    def to_csv(self, path) -> None:
        d = self.d
        header = (
            ["t"]
            + [f"x{j + 1}" for j in range(d)]
            + ["tau"]
            + [f"xi{j + 1}" for j in range(d)]
            + ["value", "method"]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, tgt in enumerate(self.targets):
                for j, src in enumerate(self.sources):
                    row = (
                        [f"{v:.17g}" for v in tgt]
                        + [f"{v:.17g}" for v in src]
                        + [f"{self.values[i, j]:.17g}", self.method]
                    )
                    writer.writerow(row)
        sidecar = {
            "d": self.d,
            "method": self.method,
            "config_digest": self.config_digest,
            "n_targets": len(self.targets),
            "n_sources": len(self.sources),
            "meta": self.meta,
        }
        with open(str(path) + ".meta.json", "w") as fh:
            json.dump(sidecar, fh, sort_keys=True, indent=1, default=_jsonify)
            fh.write("\n")

    @classmethod
    def from_csv(cls, path) -> "KernelGrid":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        if "value" not in header or "method" not in header:
            raise ConfigError(f"not a kernel CSV: header {header}")
        d = (len(header) - 3) // 2
        vals = {}
        targets, sources = [], []
        seen_t, seen_s = {}, {}
        method = None
        for row in rows:
            tgt = tuple(float(v) for v in row[: 1 + d])
            src = tuple(float(v) for v in row[1 + d : 2 * (1 + d)])
            if tgt not in seen_t:
                seen_t[tgt] = len(targets)
                targets.append(tgt)
            if src not in seen_s:
                seen_s[src] = len(sources)
                sources.append(src)
            vals[(seen_t[tgt], seen_s[src])] = float(row[2 * (1 + d)])
            method = row[2 * (1 + d) + 1]
        values = np.zeros((len(targets), len(sources)))
        for (i, j), v in vals.items():
            values[i, j] = v
        meta = {}
        digest = ""
        try:
            with open(str(path) + ".meta.json") as fh:
                sidecar = json.load(fh)
            meta = sidecar.get("meta", {})
            digest = sidecar.get("config_digest", "")
        except OSError:
            pass
        return cls(
            targets=np.array(targets),
            sources=np.array(sources),
            values=values,
            method=method or "frozen",
            d=d,
            config_digest=digest,
            meta=meta,
        )
