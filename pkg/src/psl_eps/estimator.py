"""scikit-learn style wrapper around a Pareto set model."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .core import check_preferences, make_rng
from .eps import EpsConfig, run_eps_training, run_uniform_training
from .indicators import evaluation_preferences, log_hv_difference
from .model import OptimizerConfig, ParetoSetModel
from .problems import FrontSample, get_problem
from .scalarize import Scalarization


class ParetoSetLearner(BaseEstimator):
    """Learns a map from preference vectors to Pareto-optimal decisions.

    The problem is named by ``problem``; ``fit`` needs no data.  After
    fitting, ``predict(prefs)`` returns one decision vector per preference
    row and ``score`` is the negated log hypervolume difference (higher is
    better) against the problem's reference front.
    """

    def __init__(self, problem="zdt3", scalarization="mtch", sampler="eps", max_iterations=1000,
                 batch_size=8, learning_rate=1e-3, period=100, select_fraction=0.1, crossover_prob=0.9,
                 mutation_prob=0.9, eta_c=15.0, eta_m=20.0, mu=1.0, epsilon=0.1, hidden=(64, 64),
                 random_state=0):
        self.problem = problem
        self.scalarization = scalarization
        self.sampler = sampler
        self.max_iterations = max_iterations
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.period = period
        self.select_fraction = select_fraction
        self.crossover_prob = crossover_prob
        self.mutation_prob = mutation_prob
        self.eta_c = eta_c
        self.eta_m = eta_m
        self.mu = mu
        self.epsilon = epsilon
        self.hidden = hidden
        self.random_state = random_state

    def fit(self, X=None, y=None):
        """Train the model.  ``X`` and ``y`` are ignored."""
        if self.sampler not in ("uniform", "eps"):
            raise ValueError(f"sampler must be 'uniform' or 'eps', got {self.sampler!r}")
        problem = get_problem(self.problem)
        opt = OptimizerConfig(learning_rate=self.learning_rate, batch_size=self.batch_size,
                              max_iterations=self.max_iterations)
        scal = Scalarization(self.scalarization, mu=self.mu)
        rng = make_rng(int(self.random_state))
        model = ParetoSetModel.for_problem(problem, hidden=tuple(self.hidden), rng=rng)
        if self.sampler == "eps":
            cfg = EpsConfig(period=self.period, select_fraction=self.select_fraction,
                            crossover_prob=self.crossover_prob, mutation_prob=self.mutation_prob,
                            eta_c=self.eta_c, eta_m=self.eta_m)
            result = run_eps_training(problem, model, scal, opt, cfg, rng, epsilon=self.epsilon)
        else:
            result = run_uniform_training(problem, model, scal, opt, rng, epsilon=self.epsilon)
        self.problem_ = problem
        self.model_ = model
        self.ideal_ = result.ideal.z_star.copy()
        self.n_evaluations_ = result.n_evaluations
        self.loss_curve_ = np.array([r.loss for r in result.records])
        self.populations_ = result.populations
        self.n_features_in_ = problem.n_obj
        return self

    def _prefs(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return check_preferences(X, self.n_features_in_)

    def predict(self, X) -> np.ndarray:
        """Decision vectors for the preference rows of ``X``."""
        prefs = self._prefs(X)
        return self.model_.forward(prefs)

    def predict_objectives(self, X) -> np.ndarray:
        """Objective vectors of the predicted decisions."""
        return self.problem_.evaluate(self.predict(X))

    def score(self, X=None, y=None, front: FrontSample | None = None) -> float:
        """Negated log hypervolume difference on ``X`` (default: the evaluation lattice)."""
        check_is_fitted(self, "model_")
        prefs = evaluation_preferences(self.n_features_in_) if X is None else self._prefs(X)
        front = self.problem_.reference_front(10_000) if front is None else front
        F = self.problem_.evaluate(self.model_.forward(prefs))
        return -log_hv_difference(front, F).log_hv_diff
