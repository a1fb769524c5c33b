"""Hypervolume (exact for two and three objectives, Monte Carlo for checks)
and the log hypervolume difference used to score trained models.
"""

from __future__ import annotations

import bisect
import hashlib
import math
import threading
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .problems import FrontSample

DEFAULT_HV_EPSILON = 1e-6
REFERENCE_SCALE = 1.1


class UnsupportedDimensionError(ValueError):
    pass


def _clip_to_ref(points, ref):
    pts = np.asarray(points, dtype=float).reshape(-1, len(ref))
    return pts[np.all(pts < ref, axis=1)]


def _hv2d(pts, ref):
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    area = 0.0
    best = ref[1]
    for x, y in pts[order]:
        if y < best:
            area += (ref[0] - x) * (best - y)
            best = y
    return area


class _Staircase:
    """2-D non-dominated set with incremental dominated-area bookkeeping."""

    def __init__(self, ref_x, ref_y):
        self.ref_x, self.ref_y = ref_x, ref_y
        self.xs: list[float] = []
        self.ys: list[float] = []
        self.area = 0.0

    def insert(self, a, b):
        xs, ys = self.xs, self.ys
        pos = bisect.bisect_left(xs, a)
        if pos > 0 and ys[pos - 1] <= b:
            return
        if pos < len(xs) and xs[pos] == a and ys[pos] <= b:
            return
        cur_x = a
        cur_h = ys[pos - 1] if pos > 0 else self.ref_y
        gain = 0.0
        end = pos
        while end < len(xs) and ys[end] >= b:
            gain += (xs[end] - cur_x) * (cur_h - b)
            cur_x, cur_h = xs[end], ys[end]
            end += 1
        nxt = xs[end] if end < len(xs) else self.ref_x
        gain += (nxt - cur_x) * (cur_h - b)
        xs[pos:end] = [a]
        ys[pos:end] = [b]
        self.area += gain


def _hv3d(pts, ref):
    order = np.argsort(pts[:, 2], kind="stable")
    pts = pts[order]
    stair = _Staircase(ref[0], ref[1])
    vol = 0.0
    n = len(pts)
    for k in range(n):
        stair.insert(pts[k, 0], pts[k, 1])
        z_next = pts[k + 1, 2] if k + 1 < n else ref[2]
        vol += stair.area * (z_next - pts[k, 2])
    return vol


def hypervolume_exact(points, ref) -> float:
    """Hypervolume dominated by ``points`` and bounded by ``ref`` (m = 2 or 3).

    Points not strictly better than ``ref`` in every objective are dropped.
    """
    ref = np.asarray(ref, dtype=float)
    m = ref.shape[0]
    if m not in (2, 3):
        raise UnsupportedDimensionError(f"exact hypervolume supports 2 or 3 objectives, got {m}")
    pts = _clip_to_ref(points, ref)
    if len(pts) == 0:
        return 0.0
    return float(_hv2d(pts, ref) if m == 2 else _hv3d(pts, ref))


def hypervolume_mc(points, ref, n_samples: int, rng: np.random.Generator, chunk: int = 20_000):
    """Monte Carlo hypervolume estimate and its standard error.

    Samples are drawn uniformly from the box spanned by the componentwise
    minimum of the points and ``ref``.
    """
    ref = np.asarray(ref, dtype=float)
    pts = _clip_to_ref(points, ref)
    if len(pts) == 0:
        return 0.0, 0.0
    lo = pts.min(axis=0)
    volume = float(np.prod(ref - lo))
    hits = 0
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        u = lo + rng.random((size, len(ref))) * (ref - lo)
        dominated = np.zeros(size, dtype=bool)
        for p in pts:
            dominated |= np.all(p <= u, axis=1)
        hits += int(dominated.sum())
        done += size
    frac = hits / n_samples
    return volume * frac, volume * math.sqrt(frac * (1.0 - frac) / n_samples)


def reference_point(front: FrontSample, scale: float = REFERENCE_SCALE) -> np.ndarray:
    """Nadir of ``front`` pushed away from its ideal by ``scale``."""
    ideal = front.points.min(axis=0)
    nadir = front.points.max(axis=0)
    return ideal + scale * (nadir - ideal)


def simplex_lattice(n_obj: int, n_partitions: int) -> np.ndarray:
    """All preferences whose components are multiples of ``1 / n_partitions``."""
    rows = []
    for combo in combinations_with_replacement(range(n_obj), n_partitions):
        counts = np.bincount(combo, minlength=n_obj)
        rows.append(counts / n_partitions)
    return np.array(sorted(map(tuple, rows)), dtype=float)


def evaluation_preferences(n_obj: int) -> np.ndarray:
    """Fixed preference set for scoring: 100 points for m = 2, 105 for m = 3."""
    if n_obj == 2:
        return simplex_lattice(2, 99)
    if n_obj == 3:
        return simplex_lattice(3, 13)
    raise UnsupportedDimensionError("evaluation sets exist for 2 or 3 objectives only")


@dataclass(frozen=True)
class HvReport:
    reference_point: np.ndarray
    hv_true: float
    hv_estimate: float
    epsilon: float
    log_hv_diff: float
    source: str
    exceeded: bool = False


_HV_CACHE: dict = {}
_HV_LOCK = threading.Lock()


def _true_hv(front: FrontSample, ref) -> float:
    digest = hashlib.sha1(np.ascontiguousarray(front.points).tobytes()).hexdigest()
    key = (digest, tuple(float(r) for r in ref))
    with _HV_LOCK:
        if key not in _HV_CACHE:
            _HV_CACHE[key] = hypervolume_exact(front.points, ref)
        return _HV_CACHE[key]


def log_hv_difference(front: FrontSample, approx, ref=None, epsilon: float = DEFAULT_HV_EPSILON) -> HvReport:
    """``log(HV(front) + epsilon - HV(approx))`` with bookkeeping.

    If the approximation beats the reference front by more than ``epsilon``
    (possible when the front sample is coarse) the result is ``-inf`` and
    ``exceeded`` is set.
    """
    ref = reference_point(front) if ref is None else np.asarray(ref, dtype=float)
    hv_true = _true_hv(front, ref)
    approx = np.asarray(approx, dtype=float).reshape(-1, len(ref))
    hv_est = hypervolume_exact(approx, ref) if len(approx) else 0.0
    gap = hv_true + epsilon - hv_est
    if gap <= 0.0:
        return HvReport(ref, hv_true, hv_est, epsilon, -math.inf, front.source, exceeded=True)
    return HvReport(ref, hv_true, hv_est, epsilon, math.log(gap), front.source)
