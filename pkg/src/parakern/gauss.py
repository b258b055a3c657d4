"""Anisotropic Gaussian densities with matrix covariance, vectorized.

These are the raw ingredients of time-frozen kernels: value, gradient
and Hessian of

    G(diff; S) = (2 pi)^(-d/2) det(S)^(-1/2) exp(-diff' S^{-1} diff / 2)

with S symmetric positive definite.  All functions broadcast over
leading axes of ``diff`` (shape (..., d)) and ``S`` (shape (..., d, d)).
Inverses and determinants use explicit formulas for d <= 3 and LAPACK
beyond that.
"""

from __future__ import annotations

import numpy as np

_LOG_2PI = np.log(2.0 * np.pi)


def sym_inv_det(S: np.ndarray):
    """Inverse and determinant of symmetric positive definite matrices.

    S has shape (..., d, d).  Returns (S_inv, det) with shapes
    (..., d, d) and (...,).  Raises ValueError on non-positive leading
    minors for d <= 3 (a cheap positivity screen).
    """
    S = np.asarray(S, dtype=float)
    d = S.shape[-1]
    if d == 1:
        det = S[..., 0, 0]
        if np.any(det <= 0.0):
            raise ValueError("covariance must be positive definite")
        inv = 1.0 / det
        return inv[..., None, None], det
    if d == 2:
        a, b, c = S[..., 0, 0], S[..., 0, 1], S[..., 1, 1]
        det = a * c - b * b
        if np.any(a <= 0.0) or np.any(det <= 0.0):
            raise ValueError("covariance must be positive definite")
        inv = np.empty_like(S)
        inv[..., 0, 0] = c / det
        inv[..., 1, 1] = a / det
        inv[..., 0, 1] = -b / det
        inv[..., 1, 0] = -b / det
        return inv, det
    if d == 3:
        a = S[..., 0, 0]
        b = S[..., 0, 1]
        c = S[..., 0, 2]
        e = S[..., 1, 1]
        f = S[..., 1, 2]
        g = S[..., 2, 2]
        A = e * g - f * f
        B = c * f - b * g
        C = b * f - c * e
        det = a * A + b * B + c * C
        if np.any(a <= 0.0) or np.any(det <= 0.0):
            raise ValueError("covariance must be positive definite")
        inv = np.empty_like(S)
        inv[..., 0, 0] = A / det
        inv[..., 0, 1] = B / det
        inv[..., 0, 2] = C / det
        inv[..., 1, 0] = B / det
        inv[..., 1, 1] = (a * g - c * c) / det
        inv[..., 1, 2] = (c * b - a * f) / det
        inv[..., 2, 0] = C / det
        inv[..., 2, 1] = (c * b - a * f) / det
        inv[..., 2, 2] = (a * e - b * b) / det
        return inv, det
    det = np.linalg.det(S)
    if np.any(det <= 0.0):
        raise ValueError("covariance must be positive definite")
    return np.linalg.inv(S), det


def gaussian_value(diff: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Density value G(diff; S), broadcast over leading axes."""
    diff = np.asarray(diff, dtype=float)
    d = diff.shape[-1]
    S_inv, det = sym_inv_det(S)
    if d == 1:
        q = diff[..., 0] ** 2 * S_inv[..., 0, 0]
    else:
        q = np.einsum("...i,...ij,...j->...", diff, S_inv, diff)
    return np.exp(-0.5 * (q + d * _LOG_2PI + np.log(det)))


def gaussian_gradient(diff: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Gradient in the first argument: -G * S^{-1} diff, shape (..., d)."""
    diff = np.asarray(diff, dtype=float)
    S_inv, _ = sym_inv_det(S)
    val = gaussian_value(diff, S)
    lin = np.einsum("...ij,...j->...i", S_inv, diff)
    return -val[..., None] * lin


def gaussian_hessian(diff: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Hessian in the first argument, shape (..., d, d).

    D^2 G = G * (S^{-1} diff diff' S^{-1} - S^{-1}).
    """
    diff = np.asarray(diff, dtype=float)
    S_inv, _ = sym_inv_det(S)
    val = gaussian_value(diff, S)
    lin = np.einsum("...ij,...j->...i", S_inv, diff)
    outer = lin[..., :, None] * lin[..., None, :]
    return val[..., None, None] * (outer - S_inv)


def gaussian_value_and_hessian(diff: np.ndarray, S: np.ndarray):
    """Value and Hessian sharing one inverse/determinant computation."""
    diff = np.asarray(diff, dtype=float)
    d = diff.shape[-1]
    S_inv, det = sym_inv_det(S)
    if d == 1:
        q = diff[..., 0] ** 2 * S_inv[..., 0, 0]
    else:
        q = np.einsum("...i,...ij,...j->...", diff, S_inv, diff)
    val = np.exp(-0.5 * (q + d * _LOG_2PI + np.log(det)))
    lin = np.einsum("...ij,...j->...i", S_inv, diff)
    outer = lin[..., :, None] * lin[..., None, :]
    hess = val[..., None, None] * (outer - S_inv)
    return val, hess
