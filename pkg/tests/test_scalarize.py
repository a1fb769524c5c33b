import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psl_eps.core import dominates
from psl_eps.scalarize import IdealPoint, Scalarization, s_cosmos, s_ls, s_mtch, s_tch, update_ideal

ZERO = np.zeros(2)


def test_s_ls():
    assert s_ls((1, 2), (0.5, 0.5)) == 1.5
    assert s_ls((3, 100), (1, 0)) == 3
    assert s_ls((0, 0, 0), (1 / 3, 1 / 3, 1 / 3)) == 0


def test_s_tch():
    assert s_tch((1, 2), (0.5, 0.5), ZERO) == (1.0, 1)
    assert s_tch((5, -10), (1, 0), ZERO) == (5.0, 0)
    assert s_tch((2, 2), (0.5, 0.5), ZERO) == (1.0, 0)


def test_s_mtch():
    assert s_mtch((1, 2), (0.5, 0.5), ZERO) == (4.0, 1)
    assert s_mtch((1, 3), (0.25, 0.75), ZERO) == (4.0, 0)


def test_tch_uses_ideal_offset():
    z = IdealPoint([0.0, 0.0], epsilon=0.1)
    value, idx = s_tch((1, 2), (0.5, 0.5), z)
    assert value == pytest.approx(1.05) and idx == 1


def test_mtch_minimiser_aligns_with_preference():
    # brute force over the segment f1 + f2 = 1
    t = np.linspace(0, 1, 100_001)
    segment = np.stack([t, 1 - t], axis=1)
    for lam in ([0.5, 0.5], [0.2, 0.8], [0.7, 0.3]):
        values = [s_mtch(f, lam, ZERO)[0] for f in segment]
        best = segment[int(np.argmin(values))]
        np.testing.assert_allclose(best / best.sum(), lam, atol=1e-4)


def test_cosmos():
    f, lam = np.array([1.0, 2.0]), np.array([0.3, 0.7])
    assert s_cosmos(f, lam, 0.0) == s_ls(f, lam)
    assert s_cosmos([2.0, 2.0], [0.5, 0.5], 1.0) == pytest.approx(2.0 - 1.0)
    assert s_cosmos([0.0, 3.0], [1.0, 0.0], 0.7) == pytest.approx(0.0)
    assert s_cosmos([0.0, 0.0], [0.5, 0.5], 1.0) == 0.0


def test_update_ideal():
    z = IdealPoint([1.0, 1.0])
    assert update_ideal(z, [[0.5, 2.0]]).z_star.tolist() == [0.5, 1.0]
    assert update_ideal(z, np.empty((0, 2))) is z
    batch = np.array([[0.3, 4.0], [2.0, -1.0], [0.9, 0.9]])
    once = update_ideal(z, batch)
    twice = update_ideal(update_ideal(z, batch), batch[::-1])
    assert np.array_equal(once.z_star, twice.z_star)


def test_ideal_rejects_non_positive_epsilon():
    with pytest.raises(ValueError):
        IdealPoint([0.0, 0.0], epsilon=0.0)


vec3 = st.lists(st.floats(-5, 5), min_size=3, max_size=3)
pos_pref = st.lists(st.floats(0.01, 1), min_size=3, max_size=3).map(lambda v: np.array(v) / sum(v))


@settings(max_examples=200)
@given(vec3, vec3, pos_pref, vec3)
def test_monotone_under_dominance(a, delta, lam, z):
    a = np.array(a)
    b = a + np.abs(np.array(delta))
    if not dominates(a, b):
        return
    z = np.array(z)
    assert s_ls(a, lam) <= s_ls(b, lam) + 1e-12
    assert s_tch(a, lam, z)[0] <= s_tch(b, lam, z)[0] + 1e-12
    assert s_mtch(a, lam, z)[0] <= s_mtch(b, lam, z)[0] + 1e-12


@settings(max_examples=200)
@given(vec3, pos_pref, vec3)
def test_active_index_is_argmax(f, lam, z):
    f, z = np.array(f), np.array(z)
    v, i = s_tch(f, lam, z)
    terms = lam * (f - z)
    assert terms[i] == terms.max() == v
    assert i == int(np.flatnonzero(terms == terms.max())[0])
    v, i = s_mtch(f, lam, z)
    terms = (f - z) / lam
    assert terms[i] == terms.max()


@settings(max_examples=100)
@given(st.lists(vec3, min_size=1, max_size=10), vec3)
def test_update_ideal_never_increases(batch, start):
    z = IdealPoint(np.array(start))
    new = update_ideal(z, np.array(batch))
    assert np.all(new.z_star <= z.z_star)


@pytest.mark.parametrize("kind", Scalarization.KINDS)
def test_batched_values_match_scalar_functions(kind):
    rng = np.random.default_rng(0)
    F = rng.normal(size=(20, 3))
    P = rng.dirichlet(np.ones(3), 20)
    ideal = IdealPoint(F.min(axis=0) - 0.5)
    values, grad = Scalarization(kind, mu=0.8).value_and_grad(F, P, ideal)
    for f, lam, v in zip(F, P, values):
        expected = {
            "ls": lambda: s_ls(f, lam),
            "tch": lambda: s_tch(f, lam, ideal)[0],
            "mtch": lambda: s_mtch(f, lam, ideal)[0],
            "cosmos": lambda: s_cosmos(f, lam, 0.8),
        }[kind]()
        assert v == pytest.approx(expected, rel=1e-12, abs=1e-12)
    # gradient against central differences
    h = 1e-7
    for r in range(5):
        for j in range(3):
            up, down = F.copy(), F.copy()
            up[r, j] += h
            down[r, j] -= h
            s = Scalarization(kind, mu=0.8)
            fd = (s.value_and_grad(up, P, ideal)[0][r] - s.value_and_grad(down, P, ideal)[0][r]) / (2 * h)
            assert grad[r, j] == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_tch_gradient_routes_through_argmax_only():
    F = np.array([[1.0, 2.0, 0.5]])
    P = np.array([[0.2, 0.5, 0.3]])
    ideal = IdealPoint(np.zeros(3), epsilon=0.1)
    _, grad = Scalarization("tch").value_and_grad(F, P, ideal)
    assert np.count_nonzero(grad) == 1 and grad[0, 1] == 0.5


def test_mtch_floors_zero_preferences():
    v, i = s_mtch((1.0, 1.0), (1.0, 0.0), ZERO)
    assert np.isfinite(v) and i == 1


def test_unknown_kind():
    with pytest.raises(ValueError):
        Scalarization("hv")
