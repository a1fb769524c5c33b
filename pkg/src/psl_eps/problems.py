"""Benchmark problems with analytic Jacobians and reference fronts.

All problems are minimisation problems over a box.  ``evaluate`` and
``jacobian`` accept a single decision vector or a batch (one per row) and
return ``(m,)`` / ``(n, m)`` objectives and ``(m, d)`` / ``(n, m, d)``
Jacobians respectively.

Formulas:

* ZDT3 -- Zitzler, Deb & Thiele (2000), 10 variables in [0, 1].
* DTLZ5, DTLZ7 -- Deb, Thiele, Laumanns & Zitzler (2005), 3 objectives,
  10 variables in [0, 1] (k = 8).
* RE21, RE33, RE36, RE37 -- Tanabe & Ishibuchi (2020), "An easy-to-use
  real-world multi-objective optimization problem suite".  RE36's variables
  are treated as continuous (the published version rounds them to integers).

Kinks (``abs``, ``max``) are differentiated along the active branch; ties go
to the lowest branch index, so ``|a|`` at ``a = 0`` uses ``+a`` and
``max(0, v)`` at ``v = 0`` uses the constant zero.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DimensionError, make_rng, pareto_filter

PI = math.pi


class DomainError(ValueError):
    """A decision vector lies outside the problem's box."""


@dataclass(frozen=True)
class FrontSample:
    """Mutually non-dominated approximation of a Pareto front.

    ``source`` is ``"analytic"`` when the points come from the known front
    parameterisation and ``"dense-search oracle"`` when they were found by
    filtering a large random sample of the decision space.
    """

    points: np.ndarray
    source: str

    def to_csv(self, path) -> None:
        path = Path(path)
        m = self.points.shape[1]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"f{i + 1}" for i in range(m)])
            for row in self.points:
                writer.writerow([repr(float(v)) for v in row])


class Problem:
    """Base class: subclasses set the class attributes and the two kernels."""

    name: str = ""
    n_obj: int = 0
    n_var: int = 0
    lower: np.ndarray
    upper: np.ndarray

    def _f(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _jac(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _front(self, n: int) -> FrontSample:
        return self._dense_search_front()

    def _as_batch(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.ndim != 2 or x.shape[1] != self.n_var:
            raise DimensionError(f"{self.name} expects {self.n_var} decision variables, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DomainError("decision vector contains non-finite values")
        if np.any(x < self.lower) or np.any(x > self.upper):
            raise DomainError(f"decision vector outside the {self.name} box")
        return x, single

    def evaluate(self, x) -> np.ndarray:
        x, single = self._as_batch(x)
        f = self._f(x)
        return f[0] if single else f

    def jacobian(self, x) -> np.ndarray:
        """Analytic Jacobian ``d f_i / d x_j``; expects interior points."""
        x, single = self._as_batch(x)
        jac = self._jac(x)
        return jac[0] if single else jac

    def reference_front(self, n: int = 1000) -> FrontSample:
        if n < 100:
            raise ValueError("reference fronts need at least 100 points")
        return self._front(n)

    @functools.lru_cache(maxsize=None)
    def _dense_search_front(self, n_samples: int = 1_000_000, seed: int = 0) -> FrontSample:
        rng = make_rng(seed)
        pts = []
        chunk = 100_000
        for start in range(0, n_samples, chunk):
            size = min(chunk, n_samples - start)
            u = rng.random((size, self.n_var))
            x = self.lower + u * (self.upper - self.lower)
            f = self._f(x)
            pts.append(pareto_filter(f[np.all(np.isfinite(f), axis=1)]))
        return FrontSample(pareto_filter(np.concatenate(pts)), "dense-search oracle")

    def __repr__(self):
        return f"{type(self).__name__}(m={self.n_obj}, d={self.n_var})"


class ZDT3(Problem):
    name = "zdt3"
    n_obj = 2
    n_var = 10
    lower = np.zeros(10)
    upper = np.ones(10)

    # x1-intervals of the five disconnected front pieces
    SEGMENTS = (
        (0.0, 0.0830015349),
        (0.1822287280, 0.2577623634),
        (0.4093136748, 0.4538821041),
        (0.6183967944, 0.6525117038),
        (0.8233317983, 0.8518328654),
    )

    def _f(self, x):
        n = self.n_var
        f1 = x[:, 0]
        g = 1.0 + 9.0 / (n - 1) * x[:, 1:].sum(axis=1)
        f2 = g - np.sqrt(f1 * g) - f1 * np.sin(10 * PI * f1)
        return np.stack([f1, f2], axis=1)

    def _jac(self, x):
        n = self.n_var
        f1 = x[:, 0]
        g = 1.0 + 9.0 / (n - 1) * x[:, 1:].sum(axis=1)
        jac = np.zeros((x.shape[0], 2, n))
        jac[:, 0, 0] = 1.0
        jac[:, 1, 0] = -0.5 * np.sqrt(g / f1) - np.sin(10 * PI * f1) - 10 * PI * f1 * np.cos(10 * PI * f1)
        jac[:, 1, 1:] = (9.0 / (n - 1) * (1.0 - 0.5 * np.sqrt(f1 / g)))[:, None]
        return jac

    def _front(self, n):
        lengths = np.array([b - a for a, b in self.SEGMENTS])
        counts = np.maximum(1, np.round(n * lengths / lengths.sum()).astype(int))
        counts[-1] += n - counts.sum()
        xs = []
        for (a, b), k in zip(self.SEGMENTS, counts):
            # cell centres keep every point strictly inside its piece
            xs.append(a + (b - a) * (np.arange(k) + 0.5) / k)
        f1 = np.concatenate(xs)
        f2 = 1.0 - np.sqrt(f1) - f1 * np.sin(10 * PI * f1)
        return FrontSample(pareto_filter(np.stack([f1, f2], axis=1)), "analytic")


class DTLZ5(Problem):
    name = "dtlz5"
    n_obj = 3
    n_var = 10
    lower = np.zeros(10)
    upper = np.ones(10)

    def _parts(self, x):
        g = ((x[:, 2:] - 0.5) ** 2).sum(axis=1)
        G = 1.0 + g
        t1 = 0.5 * PI * x[:, 0]
        t2 = PI / (4.0 * G) * (1.0 + 2.0 * g * x[:, 1])
        return g, G, t1, t2

    def _f(self, x):
        g, G, t1, t2 = self._parts(x)
        return np.stack([
            G * np.cos(t1) * np.cos(t2),
            G * np.cos(t1) * np.sin(t2),
            G * np.sin(t1),
        ], axis=1)

    def _jac(self, x):
        g, G, t1, t2 = self._parts(x)
        c1, s1, c2, s2 = np.cos(t1), np.sin(t1), np.cos(t2), np.sin(t2)
        dg = 2.0 * (x[:, 2:] - 0.5)
        dt2_dx2 = PI / 4.0 * 2.0 * g / G
        dt2_dg = PI / 4.0 * (2.0 * x[:, 1] - 1.0) / G**2
        jac = np.zeros((x.shape[0], 3, self.n_var))
        jac[:, 0, 0] = -G * 0.5 * PI * s1 * c2
        jac[:, 0, 1] = -G * c1 * s2 * dt2_dx2
        jac[:, 0, 2:] = (c1 * c2 - G * c1 * s2 * dt2_dg)[:, None] * dg
        jac[:, 1, 0] = -G * 0.5 * PI * s1 * s2
        jac[:, 1, 1] = G * c1 * c2 * dt2_dx2
        jac[:, 1, 2:] = (c1 * s2 + G * c1 * c2 * dt2_dg)[:, None] * dg
        jac[:, 2, 0] = G * 0.5 * PI * c1
        jac[:, 2, 2:] = s1[:, None] * dg
        return jac

    def _front(self, n):
        t = np.linspace(0.0, 0.5 * PI, n)
        c = np.cos(t) / math.sqrt(2.0)
        return FrontSample(pareto_filter(np.stack([c, c, np.sin(t)], axis=1)), "analytic")


class DTLZ7(Problem):
    name = "dtlz7"
    n_obj = 3
    n_var = 10
    lower = np.zeros(10)
    upper = np.ones(10)

    def _f(self, x):
        k = self.n_var - self.n_obj + 1
        g = 1.0 + 9.0 / k * x[:, 2:].sum(axis=1)
        head = x[:, :2]
        f3 = 3.0 * (1.0 + g) - (head * (1.0 + np.sin(3 * PI * head))).sum(axis=1)
        return np.column_stack([head, f3])

    def _jac(self, x):
        k = self.n_var - self.n_obj + 1
        head = x[:, :2]
        jac = np.zeros((x.shape[0], 3, self.n_var))
        jac[:, 0, 0] = 1.0
        jac[:, 1, 1] = 1.0
        jac[:, 2, :2] = -(1.0 + np.sin(3 * PI * head) + 3 * PI * head * np.cos(3 * PI * head))
        jac[:, 2, 2:] = 3.0 * 9.0 / k
        return jac

    def _front(self, n):
        side = int(math.ceil(math.sqrt(n)))
        grid = np.linspace(0.0, 1.0, side)
        a, b = np.meshgrid(grid, grid, indexing="ij")
        head = np.stack([a.ravel(), b.ravel()], axis=1)
        f3 = 6.0 - (head * (1.0 + np.sin(3 * PI * head))).sum(axis=1)
        return FrontSample(pareto_filter(np.column_stack([head, f3])), "analytic")


class RE21(Problem):
    """Four-bar truss design."""

    name = "re21"
    n_obj = 2
    n_var = 4
    F, E, L, SIGMA = 10.0, 2.0e5, 200.0, 10.0
    lower = np.array([1.0, math.sqrt(2.0), math.sqrt(2.0), 1.0])
    upper = np.full(4, 3.0)

    def _f(self, x):
        x1, x2, x3, x4 = x.T
        r2 = math.sqrt(2.0)
        f1 = self.L * (2 * x1 + r2 * x2 + np.sqrt(x3) + x4)
        f2 = self.F * self.L / self.E * (2.0 / x1 + 2.0 * r2 / x2 - 2.0 * r2 / x3 + 2.0 / x4)
        return np.stack([f1, f2], axis=1)

    def _jac(self, x):
        x1, x2, x3, x4 = x.T
        r2 = math.sqrt(2.0)
        c = self.F * self.L / self.E
        jac = np.zeros((x.shape[0], 2, 4))
        jac[:, 0, 0] = 2 * self.L
        jac[:, 0, 1] = r2 * self.L
        jac[:, 0, 2] = self.L * 0.5 / np.sqrt(x3)
        jac[:, 0, 3] = self.L
        jac[:, 1, 0] = -2.0 * c / x1**2
        jac[:, 1, 1] = -2.0 * r2 * c / x2**2
        jac[:, 1, 2] = 2.0 * r2 * c / x3**2
        jac[:, 1, 3] = -2.0 * c / x4**2
        return jac


class RE33(Problem):
    """Disc brake design; the third objective sums constraint violations."""

    name = "re33"
    n_obj = 3
    n_var = 4
    lower = np.array([55.0, 75.0, 1000.0, 11.0])
    upper = np.array([80.0, 110.0, 3000.0, 20.0])

    @staticmethod
    def _constraints(x):
        x1, x2, x3, x4 = x.T
        A = x2 * x2 - x1 * x1
        B = x2**3 - x1**3
        S = x1 + x2
        Q = x1 * x1 + x1 * x2 + x2 * x2
        # B / A == Q / S, written without the removable singularity at x1 == x2
        g = np.stack([
            (x2 - x1) - 20.0,
            0.4 - x3 / (3.14 * A),
            1.0 - 2.22e-3 * x3 * B / A**2,
            2.66e-2 * x3 * x4 * Q / S - 900.0,
        ], axis=1)
        return g, A, B, S, Q

    def _f(self, x):
        x1, x2, x3, x4 = x.T
        g, A, B, S, Q = self._constraints(x)
        f1 = 4.9e-5 * A * (x4 - 1.0)
        f2 = 9.82e6 * (S / Q) / (x3 * x4)
        f3 = np.where(g < 0.0, -g, 0.0).sum(axis=1)
        return np.stack([f1, f2, f3], axis=1)

    def _jac(self, x):
        x1, x2, x3, x4 = x.T
        n = x.shape[0]
        g, A, B, S, Q = self._constraints(x)
        zero = np.zeros(n)
        dA = np.stack([-2 * x1, 2 * x2, zero, zero], axis=1)
        dB = np.stack([-3 * x1**2, 3 * x2**2, zero, zero], axis=1)
        dS = np.stack([np.ones(n), np.ones(n), zero, zero], axis=1)
        dQ = np.stack([2 * x1 + x2, x1 + 2 * x2, zero, zero], axis=1)
        R = S / Q
        dR = (dS * Q[:, None] - S[:, None] * dQ) / (Q**2)[:, None]
        W = Q / S
        dW = (dQ * S[:, None] - Q[:, None] * dS) / (S**2)[:, None]

        jac = np.zeros((n, 3, 4))
        jac[:, 0, :] = 4.9e-5 * dA * (x4 - 1.0)[:, None]
        jac[:, 0, 3] += 4.9e-5 * A

        jac[:, 1, :] = 9.82e6 * dR / (x3 * x4)[:, None]
        jac[:, 1, 2] = -9.82e6 * R / (x3**2 * x4)
        jac[:, 1, 3] = -9.82e6 * R / (x3 * x4**2)

        dg = np.zeros((n, 4, 4))
        dg[:, 0, 0] = -1.0
        dg[:, 0, 1] = 1.0
        dg[:, 1, :] = (x3 / (3.14 * A**2))[:, None] * dA
        dg[:, 1, 2] = -1.0 / (3.14 * A)
        V = B / A**2
        dV = dB / (A**2)[:, None] - 2.0 * (B / A**3)[:, None] * dA
        dg[:, 2, :] = -2.22e-3 * x3[:, None] * dV
        dg[:, 2, 2] = -2.22e-3 * V
        dg[:, 3, :] = 2.66e-2 * (x3 * x4)[:, None] * dW
        dg[:, 3, 2] = 2.66e-2 * x4 * W
        dg[:, 3, 3] = 2.66e-2 * x3 * W
        active = (g < 0.0).astype(float)
        jac[:, 2, :] = -(active[:, :, None] * dg).sum(axis=1)
        return jac


class RE36(Problem):
    """Gear train design (continuous relaxation)."""

    name = "re36"
    n_obj = 3
    n_var = 4
    lower = np.full(4, 12.0)
    upper = np.full(4, 60.0)
    TARGET = 6.931

    def _f(self, x):
        x1, x2, x3, x4 = x.T
        f1 = np.abs(self.TARGET - (x3 / x1) * (x4 / x2))
        f2 = x.max(axis=1)
        f3 = np.maximum(0.0, f1 / self.TARGET - 0.5)
        return np.stack([f1, f2, f3], axis=1)

    def _jac(self, x):
        x1, x2, x3, x4 = x.T
        n = x.shape[0]
        r = (x3 / x1) * (x4 / x2)
        dr = np.stack([-r / x1, -r / x2, r / x3, r / x4], axis=1)
        a = self.TARGET - r
        sign = np.where(a >= 0.0, 1.0, -1.0)
        jac = np.zeros((n, 3, 4))
        jac[:, 0, :] = -sign[:, None] * dr
        jac[np.arange(n), 1, np.argmax(x, axis=1)] = 1.0
        f1 = np.abs(a)
        active = (f1 / self.TARGET - 0.5) > 0.0
        jac[:, 2, :] = np.where(active[:, None], jac[:, 0, :] / self.TARGET, 0.0)
        return jac


# (coefficient, exponents of (alpha, HA, OA, OPTT))
_RE37_TERMS = (
    (
        (0.692, (0, 0, 0, 0)), (0.477, (1, 0, 0, 0)), (-0.687, (0, 1, 0, 0)), (-0.080, (0, 0, 1, 0)),
        (-0.0650, (0, 0, 0, 1)), (-0.167, (2, 0, 0, 0)), (-0.0129, (1, 1, 0, 0)), (0.0796, (0, 2, 0, 0)),
        (-0.0634, (1, 0, 1, 0)), (-0.0257, (0, 1, 1, 0)), (0.0877, (0, 0, 2, 0)), (-0.0521, (1, 0, 0, 1)),
        (0.00156, (0, 1, 0, 1)), (0.00198, (0, 0, 1, 1)), (0.0184, (0, 0, 0, 2)),
    ),
    (
        (0.153, (0, 0, 0, 0)), (-0.322, (1, 0, 0, 0)), (0.396, (0, 1, 0, 0)), (0.424, (0, 0, 1, 0)),
        (0.0226, (0, 0, 0, 1)), (0.175, (2, 0, 0, 0)), (0.0185, (1, 1, 0, 0)), (-0.0701, (0, 2, 0, 0)),
        (-0.251, (1, 0, 1, 0)), (0.179, (0, 1, 1, 0)), (0.0150, (0, 0, 2, 0)), (0.0134, (1, 0, 0, 1)),
        (0.0296, (0, 1, 0, 1)), (0.0752, (0, 0, 1, 1)), (0.0192, (0, 0, 0, 2)),
    ),
    (
        (0.370, (0, 0, 0, 0)), (-0.205, (1, 0, 0, 0)), (0.0307, (0, 1, 0, 0)), (0.108, (0, 0, 1, 0)),
        (1.019, (0, 0, 0, 1)), (-0.135, (2, 0, 0, 0)), (0.0141, (1, 1, 0, 0)), (0.0998, (0, 2, 0, 0)),
        (0.208, (1, 0, 1, 0)), (-0.0301, (0, 1, 1, 0)), (-0.226, (0, 0, 2, 0)), (0.353, (1, 0, 0, 1)),
        (-0.0497, (0, 0, 1, 1)), (-0.423, (0, 0, 0, 2)), (0.202, (2, 1, 0, 0)), (-0.281, (2, 0, 1, 0)),
        (-0.342, (1, 2, 0, 0)), (-0.245, (0, 2, 1, 0)), (0.281, (0, 1, 2, 0)), (-0.184, (1, 0, 0, 2)),
        (-0.281, (1, 1, 1, 0)),
    ),
)


class RE37(Problem):
    """Rocket injector design: three response-surface polynomials."""

    name = "re37"
    n_obj = 3
    n_var = 4
    lower = np.zeros(4)
    upper = np.ones(4)

    def _f(self, x):
        out = np.zeros((x.shape[0], 3))
        for i, terms in enumerate(_RE37_TERMS):
            for coef, exps in terms:
                out[:, i] += coef * np.prod(x ** np.asarray(exps), axis=1)
        return out

    def _jac(self, x):
        jac = np.zeros((x.shape[0], 3, 4))
        for i, terms in enumerate(_RE37_TERMS):
            for coef, exps in terms:
                for j in range(4):
                    if exps[j] == 0:
                        continue
                    lowered = list(exps)
                    lowered[j] -= 1
                    jac[:, i, j] += coef * exps[j] * np.prod(x ** np.asarray(lowered), axis=1)
        return jac


PROBLEMS = {cls.name: cls for cls in (ZDT3, DTLZ5, DTLZ7, RE21, RE33, RE36, RE37)}

# (m, d) for every registered problem
DIMENSIONS = {
    "zdt3": (2, 10), "dtlz5": (3, 10), "dtlz7": (3, 10),
    "re21": (2, 4), "re33": (3, 4), "re36": (3, 4), "re37": (3, 4),
}

for _name, _cls in PROBLEMS.items():
    assert (_cls.n_obj, _cls.n_var) == DIMENSIONS[_name], _name
    assert np.all(_cls.lower < _cls.upper), _name


@functools.lru_cache(maxsize=None)
def get_problem(name: str) -> Problem:
    """Shared instance of a registered problem (case-insensitive)."""
    key = name.lower()
    if key not in PROBLEMS:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
    return PROBLEMS[key]()


class EvaluationCounter:
    """Wraps a problem and counts decision vectors passed to ``evaluate``."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.count = 0

    def __getattr__(self, item):
        return getattr(self.problem, item)

    def evaluate(self, x):
        out = self.problem.evaluate(x)
        self.count += 1 if np.ndim(x) == 1 else len(x)
        return out

