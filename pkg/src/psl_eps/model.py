"""Preference-to-solution network, its gradients, and the Adam update.

The network maps a preference vector to a decision vector:
``x = lower + (upper - lower) * sigmoid(W3 relu(W2 relu(W1 lam + b1) + b2) + b3)``.
Gradients are propagated by hand through the scalarization, the problem's
analytic Jacobian, the bound mapping and the layers.

Checkpoint layout (plain text, one token per line)::

    psl-model 1
    <number of layer sizes> <size_0> ... <size_L>
    <lower bounds, d values on one line>
    <upper bounds, d values on one line>
    <parameter values, W1 row-major, b1, W2, b2, ...>

Floats are written with 17 significant digits so that a save/load round
trip is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import NumericStateError
from .scalarize import IdealPoint, Scalarization, update_ideal

CHECKPOINT_MAGIC = "psl-model 1"
_SQUASH_CLIP = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 1e-3
    batch_size: int = 8
    max_iterations: int = 1000
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.max_iterations < 1:
            raise ValueError("batch_size and max_iterations must be positive")
        if not all(0.0 < b < 1.0 for b in self.betas):
            raise ValueError("moment decay rates must lie in (0, 1)")


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class ParetoSetModel:
    """Two-hidden-layer ReLU network with a sigmoid output mapped onto a box.

    Every layer is initialised uniformly in ``+-1/sqrt(fan_in)``.  With
    ``zero_last`` the output layer starts at zero instead, so every
    preference initially maps to the centre of the box.
    """

    def __init__(self, n_obj, n_var, lower, upper, hidden=(64, 64), rng=None, zero_last=False):
        self.lower = np.asarray(lower, dtype=float).copy()
        self.upper = np.asarray(upper, dtype=float).copy()
        if self.lower.shape != (n_var,) or self.upper.shape != (n_var,):
            raise ValueError("bounds must have one entry per decision variable")
        self.sizes = [int(n_obj), *[int(h) for h in hidden], int(n_var)]
        rng = np.random.default_rng(0) if rng is None else rng
        self.params = []
        n_layers = len(self.sizes) - 1
        for k in range(n_layers):
            fan_in, fan_out = self.sizes[k], self.sizes[k + 1]
            if k == n_layers - 1 and zero_last:
                W = np.zeros((fan_in, fan_out))
                b = np.zeros(fan_out)
            else:
                bound = 1.0 / np.sqrt(fan_in)
                W = rng.uniform(-bound, bound, (fan_in, fan_out))
                b = rng.uniform(-bound, bound, fan_out)
            self.params += [W, b]

    @classmethod
    def for_problem(cls, problem, hidden=(64, 64), rng=None, **kwargs):
        return cls(problem.n_obj, problem.n_var, problem.lower, problem.upper, hidden, rng, **kwargs)

    @property
    def n_obj(self):
        return self.sizes[0]

    @property
    def n_var(self):
        return self.sizes[-1]

    def _check_finite(self):
        for p in self.params:
            if not np.all(np.isfinite(p)):
                raise NumericStateError("model parameters are not finite")

    def _forward(self, prefs):
        self._check_finite()
        prefs = np.atleast_2d(np.asarray(prefs, dtype=float))
        if prefs.shape[1] != self.n_obj:
            raise ValueError(f"preferences need {self.n_obj} components, got {prefs.shape[1]}")
        acts = [prefs]
        pre = []
        a = prefs
        n_layers = len(self.params) // 2
        for k in range(n_layers):
            W, b = self.params[2 * k], self.params[2 * k + 1]
            z = a @ W + b
            pre.append(z)
            if k < n_layers - 1:
                a = np.maximum(z, 0.0)
                acts.append(a)
        s = np.clip(_sigmoid(pre[-1]), _SQUASH_CLIP, 1.0 - _SQUASH_CLIP)
        x = self.lower + (self.upper - self.lower) * s
        return x, (acts, pre, s)

    def forward(self, prefs) -> np.ndarray:
        """Decision vectors (one row per preference), strictly inside the box."""
        return self._forward(prefs)[0]

    predict = forward

    def _backward(self, cache, dx):
        acts, pre, s = cache
        dz = dx * (self.upper - self.lower) * s * (1.0 - s)
        grads = [None] * len(self.params)
        n_layers = len(self.params) // 2
        for k in reversed(range(n_layers)):
            grads[2 * k] = acts[k].T @ dz
            grads[2 * k + 1] = dz.sum(axis=0)
            if k > 0:
                dz = (dz @ self.params[2 * k].T) * (pre[k - 1] > 0.0)
        return grads

    def loss_and_grad(self, prefs, problem, scalarization: Scalarization, ideal: IdealPoint | None = None,
                      ideal_update: bool = False):
        """Mean scalarized loss over ``prefs`` and its gradient w.r.t. the parameters.

        Returns ``(loss, grads, objectives, ideal)``.  With ``ideal_update``
        the ideal point is first lowered to cover this batch's objectives.
        """
        x, cache = self._forward(prefs)
        F = problem.evaluate(x)
        if ideal_update and ideal is not None:
            ideal = update_ideal(ideal, F)
        prefs = cache[0][0]
        values, dF = scalarization.value_and_grad(F, prefs, ideal)
        n = len(values)
        loss = float(values.mean())
        if not np.isfinite(loss):
            raise NumericStateError(f"non-finite loss {loss}")
        J = problem.jacobian(x)
        dx = np.einsum("nm,nmd->nd", dF / n, J)
        return loss, self._backward(cache, dx), F, ideal

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=float)
        pos = 0
        for i, p in enumerate(self.params):
            self.params[i] = flat[pos:pos + p.size].reshape(p.shape).copy()
            pos += p.size
        if pos != flat.size:
            raise ValueError("flat parameter vector has the wrong length")

    def save(self, path) -> None:
        lines = [
            CHECKPOINT_MAGIC,
            " ".join(str(v) for v in [len(self.sizes), *self.sizes]),
            " ".join(format(v, ".17g") for v in self.lower),
            " ".join(format(v, ".17g") for v in self.upper),
        ]
        lines += [format(v, ".17g") for v in self.get_flat()]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "ParetoSetModel":
        lines = Path(path).read_text().splitlines()
        if not lines or lines[0] != CHECKPOINT_MAGIC:
            raise ValueError(f"{path} is not a model checkpoint")
        header = [int(t) for t in lines[1].split()]
        sizes = header[1:1 + header[0]]
        lower = [float(t) for t in lines[2].split()]
        upper = [float(t) for t in lines[3].split()]
        model = cls(sizes[0], sizes[-1], lower, upper, hidden=sizes[1:-1])
        model.set_flat([float(t) for t in lines[4:]])
        return model


@dataclass
class Adam:
    """Adaptive-moment optimiser acting in place on a model's parameters."""

    config: OptimizerConfig = field(default_factory=OptimizerConfig)
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, model: ParetoSetModel, grads) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in model.params]
            self.v = [np.zeros_like(p) for p in model.params]
        b1, b2 = self.config.betas
        lr, eps = self.config.learning_rate, self.config.eps
        self.t += 1
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for i, g in enumerate(grads):
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g
            model.params[i] = model.params[i] - lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + eps)
        model._check_finite()


@dataclass(frozen=True)
class StepResult:
    loss: float
    objectives: np.ndarray
    ideal: IdealPoint | None


def training_step(model: ParetoSetModel, prefs, problem, scalarization: Scalarization,
                  ideal: IdealPoint | None, optimizer: Adam) -> StepResult:
    """Evaluate ``prefs``, refresh the ideal point, and apply one Adam update.

    The returned loss is the batch mean before the update.
    """
    if len(np.atleast_2d(prefs)) == 0:
        raise ValueError("empty preference batch")
    loss, grads, F, ideal = model.loss_and_grad(prefs, problem, scalarization, ideal, ideal_update=True)
    optimizer.step(model, grads)
    return StepResult(loss, F, ideal)
