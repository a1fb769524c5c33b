"""Scalarization functions and the running ideal point.

Each scalarization comes in two flavours: a scalar function on one
objective vector (``s_ls`` etc., convenient for tests and notebooks) and a
batched ``value_and_grad`` on ``Scalarization`` objects used in training,
which returns per-row losses and their gradients w.r.t. the objectives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DimensionError, simplex_project

PREF_FLOOR = 1e-6
DEFAULT_EPSILON = 0.1


@dataclass(frozen=True)
class IdealPoint:
    """Running per-objective minimum ``z_star`` with the offset ``epsilon``."""

    z_star: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "z_star", np.asarray(self.z_star, dtype=float))

    @classmethod
    def empty(cls, n_obj: int, epsilon: float = DEFAULT_EPSILON) -> "IdealPoint":
        return cls(np.full(n_obj, np.inf), epsilon)

    @property
    def shifted(self) -> np.ndarray:
        """``z_star - epsilon``, the anchor the Tchebycheff forms measure from."""
        return self.z_star - self.epsilon


def update_ideal(z: IdealPoint, batch) -> IdealPoint:
    """Componentwise running minimum of ``z`` and every row of ``batch``."""
    batch = np.asarray(batch, dtype=float)
    if batch.size == 0:
        return z
    batch = np.atleast_2d(batch)
    return IdealPoint(np.minimum(z.z_star, batch.min(axis=0)), z.epsilon)


def floor_preferences(prefs, floor: float = PREF_FLOOR) -> np.ndarray:
    """Raise components below ``floor`` and renormalise onto the simplex."""
    prefs = np.asarray(prefs, dtype=float)
    if np.all(prefs >= floor):
        return prefs
    return simplex_project(np.maximum(prefs, floor))


def _check(f, lam):
    f = np.asarray(f, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if f.shape != lam.shape:
        raise DimensionError(f"objectives {f.shape} and preference {lam.shape} differ")
    return f, lam


def s_ls(f, lam) -> float:
    f, lam = _check(f, lam)
    return float(np.dot(lam, f))


def _anchor(z, m):
    if isinstance(z, IdealPoint):
        return z.shifted
    z = np.asarray(z, dtype=float)
    if z.shape != (m,):
        raise DimensionError("ideal point has the wrong length")
    return z


def s_tch(f, lam, z) -> tuple[float, int]:
    """Weighted Tchebycheff value and the (lowest) index attaining the max.

    ``z`` is an ``IdealPoint`` or an already-shifted anchor ``z* - eps``.
    """
    f, lam = _check(f, lam)
    terms = lam * (f - _anchor(z, f.shape[0]))
    idx = int(np.argmax(terms))
    return float(terms[idx]), idx


def s_mtch(f, lam, z, floor: float = PREF_FLOOR) -> tuple[float, int]:
    """Modified Tchebycheff: terms are divided by (floored) preferences."""
    f, lam = _check(f, lam)
    lam = floor_preferences(lam, floor)
    terms = (f - _anchor(z, f.shape[0])) / lam
    idx = int(np.argmax(terms))
    return float(terms[idx]), idx


def s_cosmos(f, lam, mu: float = 1.0) -> float:
    """Weighted sum minus ``mu`` times the cosine between ``f`` and ``lam``.

    The penalty is skipped for a zero objective vector.
    """
    f, lam = _check(f, lam)
    value = float(np.dot(lam, f))
    nf = np.linalg.norm(f)
    if mu > 0 and nf > 0:
        value -= mu * float(np.dot(lam, f) / (nf * np.linalg.norm(lam)))
    return value


def _rowwise_argmax(terms):
    idx = np.argmax(terms, axis=1)
    return terms[np.arange(len(terms)), idx], idx


@dataclass(frozen=True)
class Scalarization:
    """Batched scalarization selected by ``kind`` (ls, tch, mtch or cosmos).

    ``mu`` is only read by COSMOS.
    """

    kind: str = "mtch"
    mu: float = 1.0
    floor: float = field(default=PREF_FLOOR, repr=False)

    KINDS = ("ls", "tch", "mtch", "cosmos")

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.lower())
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown scalarization {self.kind!r}; choose from {self.KINDS}")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")

    @property
    def uses_ideal(self) -> bool:
        return self.kind in ("tch", "mtch")

    def value_and_grad(self, F, prefs, ideal: IdealPoint | None = None):
        """Per-row loss values ``(n,)`` and ``d loss / d F`` of shape ``(n, m)``."""
        F = np.asarray(F, dtype=float)
        prefs = np.asarray(prefs, dtype=float)
        if F.shape != prefs.shape:
            raise DimensionError(f"objectives {F.shape} and preferences {prefs.shape} differ")
        n = F.shape[0]
        if self.kind == "ls":
            return (F * prefs).sum(axis=1), prefs.copy()
        if self.kind == "cosmos":
            return self._cosmos(F, prefs)
        anchor = ideal.shifted
        grad = np.zeros_like(F)
        rows = np.arange(n)
        if self.kind == "tch":
            terms = prefs * (F - anchor)
            values, idx = _rowwise_argmax(terms)
            grad[rows, idx] = prefs[rows, idx]
        else:
            lam = floor_preferences(prefs, self.floor)
            terms = (F - anchor) / lam
            values, idx = _rowwise_argmax(terms)
            grad[rows, idx] = 1.0 / lam[rows, idx]
        return values, grad

    def active_index(self, F, prefs, ideal: IdealPoint):
        """Index of the max term per row for the Tchebycheff forms."""
        anchor = ideal.shifted
        if self.kind == "tch":
            terms = prefs * (F - anchor)
        else:
            terms = (F - anchor) / floor_preferences(prefs, self.floor)
        return np.argmax(terms, axis=1)

    def _cosmos(self, F, prefs):
        ls = (F * prefs).sum(axis=1)
        grad = prefs.copy()
        if self.mu == 0:
            return ls, grad
        nf = np.linalg.norm(F, axis=1)
        nl = np.linalg.norm(prefs, axis=1)
        ok = nf > 0
        cos = np.zeros_like(ls)
        cos[ok] = ls[ok] / (nf[ok] * nl[ok])
        # d cos / dF = lam / (|F||lam|) - cos * F / |F|^2
        dcos = np.zeros_like(F)
        dcos[ok] = prefs[ok] / (nf[ok] * nl[ok])[:, None] - (cos[ok] / nf[ok] ** 2)[:, None] * F[ok]
        return ls - self.mu * cos, grad - self.mu * dcos

    def __call__(self, f, lam, ideal: IdealPoint | None = None) -> float:
        values, _ = self.value_and_grad(np.atleast_2d(f), np.atleast_2d(lam), ideal)
        return float(values[0])
