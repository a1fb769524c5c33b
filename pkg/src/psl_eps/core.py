"""Shared value types, Pareto dominance and seeded randomness.

Preferences, decision vectors and objective vectors are plain float64
numpy arrays; batches are 2-D arrays with one vector per row.  The helpers
in this module validate them at API boundaries.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

SIMPLEX_ATOL = 1e-9


class DimensionError(ValueError):
    """Vectors of incompatible length were combined."""


class DegenerateInputError(ValueError):
    """Input cannot be mapped onto the probability simplex."""


class NumericStateError(FloatingPointError):
    """A non-finite value appeared in model parameters or a loss."""


@dataclass(frozen=True)
class EvaluatedPreference:
    """A preference together with the objectives its model solution scored.

    ``objectives`` is recorded once at evaluation time and never recomputed.
    """

    preference: np.ndarray
    objectives: np.ndarray


def make_rng(seed: int) -> np.random.Generator:
    """Return the package's seeded generator.

    Philox is a counter-based bit generator whose output for a given seed is
    fixed across platforms and numpy releases, so equal seeds give equal
    draw sequences.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.Philox(np.uint64(seed)))


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent stream ``index`` derived from ``seed`` (for parallel runs)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def dominates(a, b) -> bool:
    """True iff ``a`` Pareto-dominates ``b`` under minimization."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def simplex_project(raw) -> np.ndarray:
    """Clamp negatives to zero and rescale so the components sum to one.

    Works on a single vector or row-wise on a 2-D batch.
    """
    x = np.clip(np.asarray(raw, dtype=float), 0.0, None)
    total = x.sum(axis=-1, keepdims=True)
    if np.any(total <= 0.0) or not np.all(np.isfinite(total)):
        raise DegenerateInputError("vector is all-zero after clamping negatives")
    return x / total


def check_preferences(prefs, n_obj: int | None = None) -> np.ndarray:
    """Validate a batch of preference vectors and return it as a 2-D array."""
    prefs = np.atleast_2d(np.asarray(prefs, dtype=float))
    if prefs.ndim != 2:
        raise DimensionError(f"expected a 2-D batch of preferences, got shape {prefs.shape}")
    if prefs.shape[1] < 2:
        raise DimensionError("preference vectors need at least two components")
    if n_obj is not None and prefs.shape[1] != n_obj:
        raise DimensionError(f"preferences have {prefs.shape[1]} components, problem has {n_obj} objectives")
    if not np.all(np.isfinite(prefs)):
        raise ValueError("preferences contain non-finite values")
    if np.any(prefs < 0.0):
        raise ValueError("preferences must be non-negative")
    if np.any(np.abs(prefs.sum(axis=1) - 1.0) > SIMPLEX_ATOL):
        raise ValueError("preferences must sum to one")
    return prefs


def check_decisions(x, lower, upper) -> np.ndarray:
    """Validate a batch of decision vectors against box bounds."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if x.shape[1] != lower.shape[0]:
        raise DimensionError(f"decision vectors have {x.shape[1]} components, expected {lower.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("decision vectors contain non-finite values")
    if np.any(x < lower) or np.any(x > upper):
        raise ValueError("decision vector outside the problem's box bounds")
    return x


def _nondominated_2d(order, pts):
    keep = []
    best = np.inf
    for i in order:
        if pts[i, 1] < best:
            keep.append(i)
            best = pts[i, 1]
    return keep


def _nondominated_3d(order, pts):
    # Kung-style sweep: points arrive in lexicographic order, so a point is
    # dominated iff an earlier one is no worse in (f2, f3).  The (f2, f3)
    # staircase is kept with f2 ascending and f3 strictly descending.
    keep = []
    ys: list[float] = []
    zs: list[float] = []
    for i in order:
        y, z = pts[i, 1], pts[i, 2]
        pos = bisect.bisect_right(ys, y)
        if pos > 0 and zs[pos - 1] <= z:
            continue
        keep.append(i)
        end = pos
        while end < len(ys) and zs[end] >= z:
            end += 1
        ys[pos:end] = [y]
        zs[pos:end] = [z]
    return keep


def nondominated_mask(points) -> np.ndarray:
    """Boolean mask of the mutually non-dominated rows of ``points``.

    Exact duplicates are kept once (the first occurrence).  Two and three
    objectives use sweep algorithms; higher dimensions fall back to pairwise
    comparison.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    mask = np.zeros(n, dtype=bool)
    if n == 0:
        return mask
    _, first = np.unique(pts, axis=0, return_index=True)
    unique_idx = np.sort(first)
    sub = pts[unique_idx]
    m = pts.shape[1]
    order = np.lexsort(sub.T[::-1])
    if m == 2:
        keep = _nondominated_2d(order, sub)
    elif m == 3:
        keep = _nondominated_3d(order, sub)
    else:
        keep = []
        for i in range(sub.shape[0]):
            le = np.all(sub <= sub[i], axis=1)
            lt = np.any(sub < sub[i], axis=1)
            if not np.any(le & lt):
                keep.append(i)
    mask[unique_idx[np.asarray(keep, dtype=int)]] = True
    return mask


def pareto_filter(points) -> np.ndarray:
    """Rows of ``points`` that no other row dominates, in original order."""
    pts = np.asarray(points, dtype=float)
    return pts[nondominated_mask(pts)]
