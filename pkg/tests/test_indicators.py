import math

import numpy as np
import pytest

from psl_eps.indicators import (
    UnsupportedDimensionError,
    evaluation_preferences,
    hypervolume_exact,
    hypervolume_mc,
    log_hv_difference,
    reference_point,
    simplex_lattice,
)
from psl_eps.problems import FrontSample, get_problem


def test_closed_form_cases():
    assert hypervolume_exact([[0.5, 0.5]], [1, 1]) == 0.25
    # union of two 0.25 x 0.75 rectangles overlapping in a 0.25 x 0.25 square
    assert hypervolume_exact([[0.25, 0.75], [0.75, 0.25]], [1, 1]) == pytest.approx(0.3125, abs=1e-15)
    assert hypervolume_exact([[0.0, 0.0, 0.0]], [1, 2, 3]) == 6.0
    assert hypervolume_exact(np.empty((0, 2)), [1, 1]) == 0.0
    # points on or beyond the reference point contribute nothing
    assert hypervolume_exact([[1.0, 0.5], [2.0, 0.0]], [1, 1]) == 0.0


def test_3d_two_boxes():
    pts = [[0.0, 0.5, 0.5], [0.5, 0.0, 0.0]]
    # 1*0.5*0.5 + 0.5*1*1 - overlap 0.5*0.5*0.5
    assert hypervolume_exact(pts, [1, 1, 1]) == pytest.approx(0.25 + 0.5 - 0.125)


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimensionError):
        hypervolume_exact([[0.0] * 4], [1.0] * 4)


@pytest.mark.parametrize("m", [2, 3])
def test_exact_agrees_with_monte_carlo(m):
    rng = np.random.default_rng(m)
    for _ in range(30):
        pts = rng.random((int(rng.integers(1, 30)), m))
        ref = np.ones(m) * 1.1
        exact = hypervolume_exact(pts, ref)
        est, se = hypervolume_mc(pts, ref, 200_000, rng)
        assert abs(exact - est) <= 4 * se + 1e-12


def test_monotone_and_dominated_invariance():
    rng = np.random.default_rng(10)
    for _ in range(50):
        pts = rng.random((20, 3))
        ref = np.full(3, 1.5)
        base = hypervolume_exact(pts, ref)
        assert hypervolume_exact(np.vstack([pts, rng.random((1, 3))]), ref) >= base - 1e-12
        dominated = pts[0] + rng.random(3) * 0.1
        assert hypervolume_exact(np.vstack([pts, dominated]), ref) == pytest.approx(base, abs=1e-12)
        assert hypervolume_exact(pts[rng.permutation(20)], ref) == pytest.approx(base, abs=1e-12)


def test_lattice_sizes():
    assert len(evaluation_preferences(2)) == 100
    assert len(evaluation_preferences(3)) == 105
    L = simplex_lattice(3, 4)
    assert len(L) == 15 and np.allclose(L.sum(axis=1), 1)
    with pytest.raises(UnsupportedDimensionError):
        evaluation_preferences(4)


def test_reference_point():
    front = FrontSample(np.array([[0.0, 1.0], [1.0, 0.0]]), "analytic")
    np.testing.assert_allclose(reference_point(front), [1.1, 1.1])


def test_log_hv_difference_edges():
    front = get_problem("zdt3").reference_front(500)
    same = log_hv_difference(front, front.points)
    assert same.log_hv_diff == pytest.approx(math.log(1e-6), abs=1e-6)
    empty = log_hv_difference(front, np.empty((0, 2)))
    assert empty.hv_estimate == 0.0
    assert empty.log_hv_diff == pytest.approx(math.log(empty.hv_true + 1e-6))
    assert empty.source == "analytic"


def test_log_hv_difference_exceeded_flag():
    front = FrontSample(np.array([[0.5, 1.0], [1.0, 0.5]]), "analytic")
    better = np.array([[0.4, 0.4]])
    rep = log_hv_difference(front, better)
    assert rep.exceeded and rep.log_hv_diff == -math.inf
