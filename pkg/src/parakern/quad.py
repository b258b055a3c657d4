"""Quadrature helpers shared by the kernel-construction modules.

Everything here is deterministic; Gauss-Legendre nodes are cached per
order.  The graded maps below absorb the integrable time singularity of
parametrix integrands: with s = tau + (t - tau) u^2 the weight ds kills
a 1/sqrt(s - tau) blow-up exactly, and mirrored grading handles the
opposite endpoint.
"""

from __future__ import annotations

import functools

import numpy as np


@functools.lru_cache(maxsize=None)
def _gl_cached(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_legendre(a: float, b: float, n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    if n < 2:
        raise ValueError("quadrature order must be at least 2 per axis")
    x, w = _gl_cached(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def graded_time_nodes(tau: float, t: float, n: int, toward: str):
    """Graded nodes for int_tau^t f(s) ds on one half of the span.

    toward="lower": s = tau + (t - tau) u^2 on u in (0, 1/sqrt(2)), i.e.
    s sweeps (tau, midpoint) with nodes accumulating at s = tau.
    toward="upper": mirrored, s in (midpoint, t) accumulating at s = t.
    Returns (s_nodes, weights) such that sum(w_i f(s_i)) approximates the
    integral over that half.
    """
    span = t - tau
    u, wu = gauss_legendre(0.0, 1.0 / np.sqrt(2.0), n)
    if toward == "lower":
        s = tau + span * u * u
    elif toward == "upper":
        s = t - span * u * u
    else:
        raise ValueError(f"unknown grading direction {toward!r}")
    return s, 2.0 * span * u * wu


def gaussian_window(center, spread: float, multiplier: float, n: int):
    """Gauss-Legendre rule on the interval center +- multiplier*spread.

    Sized so that a Gaussian of standard deviation <= spread centered in
    the window is integrated with relative truncation error below
    exp(-multiplier^2 / 2) (about 1.3e-14 at the default multiplier 8).
    """
    half = multiplier * spread
    return gauss_legendre(center - half, center + half, n)


def tail_radius(kappa: float, scale: float, tol: float = 1e-12) -> float:
    """Truncation radius R with exp(-kappa (R/scale)^2) = tol."""
    return float(np.sqrt(np.log(1.0 / tol) / kappa) * scale)


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights for (possibly non-uniform) sorted nodes."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1-d grid with at least two nodes")
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w
