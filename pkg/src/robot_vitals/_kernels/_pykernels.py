"""Numpy implementations of the hot kernels.

Used when the compiled extension is unavailable or when
``ROBOT_VITALS_PURE=1`` is set. Signatures match ``_ckernels`` exactly.
"""

from __future__ import annotations

import numpy as np


def immerkaer_abs_sum(image: np.ndarray) -> float:
    """Sum of |I * M| over the valid interior, M the 3x3 Laplacian-difference mask."""
    img = np.asarray(image, dtype=np.float64)
    c = img[1:-1, 1:-1]
    # mask rows [1,-2,1], [-2,4,-2], [1,-2,1] expanded as shifted slices
    resp = (
        img[:-2, :-2] - 2.0 * img[:-2, 1:-1] + img[:-2, 2:]
        - 2.0 * img[1:-1, :-2] + 4.0 * c - 2.0 * img[1:-1, 2:]
        + img[2:, :-2] - 2.0 * img[2:, 1:-1] + img[2:, 2:]
    )
    return float(np.abs(resp).sum())


def run_lengths(flags: np.ndarray) -> np.ndarray:
    f = np.asarray(flags, dtype=bool)
    out = np.zeros(f.size, dtype=np.int64)
    if f.size == 0:
        return out
    idx = np.arange(1, f.size + 1, dtype=np.int64)
    # position just after the most recent False, carried forward
    last_false = np.where(~f, idx, 0)
    np.maximum.accumulate(last_false, out=last_false)
    out[:] = idx - last_false
    return out


def entropy_terms(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    nz = p > 0.0
    out[nz] = p[nz] * np.log(p[nz])
    return out


def windowed_entropy(p: np.ndarray, window: int) -> np.ndarray:
    terms = entropy_terms(p)
    n = terms.size
    out = np.zeros(n, dtype=np.float64)
    # oldest lag first so each output accumulates in the same order as the C loop
    for lag in range(min(window, n) - 1, -1, -1):
        out[lag:] += terms[:n - lag]
    return out


def permutation_abs_count(cx: np.ndarray, cy: np.ndarray, perms: np.ndarray,
                          threshold: float) -> int:
    """Count rows of ``perms`` with |sum(cx * cy[perm])| >= threshold."""
    cx = np.asarray(cx, dtype=np.float64)
    cy = np.asarray(cy, dtype=np.float64)
    stats = cy[perms] @ cx
    return int(np.count_nonzero(np.abs(stats) >= threshold))


def box_muller(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
