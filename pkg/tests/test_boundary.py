import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maslov_morse.boundary import Side, bk_decompose, bottom_shelf, normalize_pair, target_data, validate_pair
from maslov_morse.errors import NotSelfAdjoint, RankDeficient

from instances import random_pair

I2, O2 = np.eye(2), np.zeros((2, 2))
R = 1 / math.sqrt(2)


def test_validate_dirichlet_and_neumann():
    assert validate_pair(I2, O2).n == 2
    assert validate_pair(O2, I2, Side.RIGHT).side is Side.RIGHT


def test_validate_not_self_adjoint():
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    with pytest.raises(NotSelfAdjoint) as exc:
        validate_pair(I2, J)
    # I J^t - J I^t = -2J
    assert exc.value.defect == pytest.approx(2.0)


def test_validate_rank_deficient():
    with pytest.raises(RankDeficient):
        validate_pair(np.diag([1.0, 0.0]), O2)


def test_validate_shape():
    with pytest.raises(ValueError):
        validate_pair(np.eye(2), np.eye(3))


@pytest.mark.parametrize("a1, a2, e1, e2", [
    (I2, O2, I2, O2),
    (2 * I2, O2, I2, O2),
    (I2, I2, R * I2, R * I2),
])
def test_normalize(a1, a2, e1, e2):
    p = normalize_pair(validate_pair(a1, a2))
    assert np.allclose(p.a1, e1) and np.allclose(p.a2, e2)
    assert p.is_normalized()


def test_bk_dirichlet_neumann():
    d = bk_decompose(normalize_pair(validate_pair(I2, O2)))
    assert np.allclose(d.pD, I2) and np.allclose(d.pN, 0) and np.allclose(d.pR, 0) and np.allclose(d.lam, 0)
    d = bk_decompose(normalize_pair(validate_pair(O2, I2)))
    assert np.allclose(d.pD, 0) and np.allclose(d.pN, I2) and np.allclose(d.pR, 0)


@pytest.mark.parametrize("theta", [math.pi / 4, 0.3, -1.1])
def test_bk_scalar_robin(theta):
    d = bk_decompose(normalize_pair(validate_pair([[math.sin(theta)]], [[math.cos(theta)]])))
    assert d.pR[0, 0] == pytest.approx(1.0)
    assert d.lam[0, 0] == pytest.approx(-math.tan(theta), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_bk_invariants_random(seed, n):
    rng = np.random.default_rng(seed)
    a1, a2 = random_pair(rng, n)
    p = normalize_pair(validate_pair(a1, a2))
    assert np.allclose(p.a1 @ p.a1.T + p.a2 @ p.a2.T, np.eye(n), atol=1e-9)
    d = bk_decompose(p)
    for P in (d.pD, d.pN, d.pR):
        assert np.allclose(P @ P, P, atol=1e-9)
        assert np.allclose(P, P.T, atol=1e-9)
    assert np.allclose(d.pD + d.pN + d.pR, np.eye(n), atol=1e-9)
    assert np.allclose(d.pD @ d.pN, 0, atol=1e-9)
    assert np.allclose(d.lam, d.pR @ d.lam @ d.pR, atol=1e-9)
    assert np.allclose(d.lam, d.lam.T, atol=1e-9)
    # on ran pR the condition reads y' = lam y
    y = d.pR @ rng.standard_normal(n)
    assert np.allclose(p.a1 @ y + p.a2 @ (d.lam @ y), 0, atol=1e-8)


def test_bk_full_rank_a2_matches_formula():
    rng = np.random.default_rng(7)
    S = rng.standard_normal((3, 3))
    S = S + S.T
    # (S, I) is self-adjoint with a2 invertible, so the whole space is Robin
    p = normalize_pair(validate_pair(S, np.eye(3)))
    d = bk_decompose(p)
    assert np.allclose(d.pR, np.eye(3), atol=1e-9)
    assert np.allclose(d.robin, -np.linalg.solve(p.a2, p.a1), atol=1e-7)


@pytest.mark.parametrize("b1, b2, factor", [
    (I2, O2, I2),
    (O2, I2, -I2),
    (R * I2, R * I2, -1j * I2),
])
def test_target_factor(b1, b2, factor):
    t = target_data(normalize_pair(validate_pair(b1, b2, Side.RIGHT)))
    assert np.allclose(t.factor, factor)
    assert np.allclose(t.frameX.T @ t.frameZ, t.frameZ.T @ t.frameX)


def _shelf(a, b, v0):
    d0 = bk_decompose(normalize_pair(validate_pair(*a)))
    d1 = bk_decompose(normalize_pair(validate_pair(*b, Side.RIGHT)))
    return bottom_shelf(d0, d1, v0)


def test_shelf_third_example_bcs():
    sh = _shelf((R * I2, R * I2), (O2, I2), np.zeros((2, 2)))
    assert sh.d == 2
    assert np.allclose(sh.bMatrix, -I2, atol=1e-9)
    assert sh.kernelBasis.shape == (2, 0)


def test_shelf_fourth_example_bcs():
    sh = _shelf((R * I2, R * I2), (R * I2, R * I2), np.diag([-10.0, -5.0]))
    assert np.allclose(sh.bMatrix, 0, atol=1e-9)
    assert np.allclose(sh.correction_eigenvalues, [-11, -6], atol=1e-9)
    assert sh.nondegenerate


def test_shelf_dirichlet_empty():
    sh = _shelf((I2, O2), (I2, O2), np.zeros((2, 2)))
    assert sh.d == 0 and sh.bMatrix.size == 0 and sh.correction.size == 0


def test_shelf_degenerate_flag():
    # Neumann both ends, V(0) with a zero eigenvalue
    sh = _shelf((O2, I2), (O2, I2), np.diag([0.0, 1.0]))
    assert not sh.nondegenerate


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_shelf_symmetric_random(seed, n):
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal((n, n))
    sh = _shelf(random_pair(rng, n), random_pair(rng, n), v0 + v0.T)
    assert np.allclose(sh.bMatrix, sh.bMatrix.T, atol=1e-9)
    assert np.allclose(sh.correction, sh.correction.T, atol=1e-9)
    if sh.kernelBasis.size:
        assert np.abs(sh.bMatrix @ sh.kernelBasis).max() <= 1e-7
