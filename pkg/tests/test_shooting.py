import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from maslov_morse import Potential, dirichlet_kernel_count, integrate_frame, lagrangian_defect, system_matrix
from maslov_morse.boundary import normalize_pair, validate_pair
from maslov_morse.errors import NotSymmetric, StepTooCoarse, ValidationError
from maslov_morse import shooting
from maslov_morse.shooting import Trajectory, integrate_frames

from instances import example, random_pair, trig_potential


def dirichlet(n=1):
    return normalize_pair(validate_pair(np.eye(n), np.zeros((n, n))))


def test_system_matrix():
    zero = Potential.constant(np.zeros((2, 2)))
    A = system_matrix(0.3, 0.0, zero)
    assert np.allclose(A, np.block([[np.zeros((2, 2)), np.eye(2)], [np.zeros((2, 2)), np.zeros((2, 2))]]))
    assert np.allclose(system_matrix(0.0, -1.0, Potential.constant(0.0)), [[0, 1], [1, 0]])
    lin = Potential(1, lambda xs: np.asarray(xs).reshape(-1, 1, 1))
    assert np.allclose(system_matrix(0.5, 2.0, lin), [[0, 1], [-1.5, 0]])


def test_potential_checks():
    bad = Potential(2, lambda xs: np.broadcast_to(np.array([[0.0, 1.0], [0.0, 0.0]]), (len(xs), 2, 2)))
    with pytest.raises(NotSymmetric):
        bad(0.5)
    inf = Potential(1, lambda xs: np.where(np.asarray(xs) == 0.5, np.inf, 1.0).reshape(-1, 1, 1))
    with pytest.raises(ValidationError):
        inf.tabulate(np.linspace(0, 1, 3))


def test_potential_helpers():
    V = Potential(1, lambda xs: (3 * np.asarray(xs)).reshape(-1, 1, 1), lipschitz=3.0)
    assert V.sup_norm() == pytest.approx(3.0)
    assert V.check_continuity() == pytest.approx(3.0)
    with pytest.raises(ValidationError):
        V.check_continuity(lipschitz=1.0)
    assert V.shifted(2.0)(1.0)[0, 0] == pytest.approx(1.0)
    assert V.scaled(0.5)(1.0)[0, 0] == pytest.approx(0.25 * 1.5)


def test_free_dirichlet_frame():
    fr = integrate_frame(dirichlet(2), Potential.constant(np.zeros((2, 2))), 0.0, 1.0)
    assert np.allclose(fr.X, -np.eye(2), atol=1e-10)
    assert np.allclose(fr.Z, -np.eye(2), atol=1e-10)
    assert np.allclose(fr.gram, np.eye(2) / 3, atol=1e-10)


def test_hyperbolic_frame():
    fr = integrate_frame(dirichlet(), Potential.constant(0.0), -4.0, 1.0)
    assert fr.X[0, 0] == pytest.approx(-math.sinh(2) / 2, abs=1e-8)
    assert fr.Z[0, 0] == pytest.approx(-math.cosh(2), abs=1e-8)


def test_tiny_s_returns_initial_data():
    rng = np.random.default_rng(2)
    bc = normalize_pair(validate_pair(*random_pair(rng, 2)))
    fr = integrate_frame(bc, Potential.constant(np.diag([3.0, -2.0])), 0.0, 1e-6)
    assert np.allclose(fr.X, bc.a2.T, atol=1e-5)
    assert np.allclose(fr.Z, -bc.a1.T, atol=1e-5)


def _reference(bc, V, lam, s):
    """Tight-tolerance adaptive solve of the frame equation plus the Gram integral."""
    n = V.n

    def rhs(x, y):
        X = y[:n * n].reshape(n, n)
        Z = y[n * n:2 * n * n].reshape(n, n)
        return np.concatenate([Z.ravel(), ((V(x) - lam * np.eye(n)) @ X).ravel(), (X.T @ X).ravel()])

    y0 = np.concatenate([bc.a2.T.ravel(), (-bc.a1.T).ravel(), np.zeros(n * n)])
    sol = solve_ivp(rhs, (0, s), y0, method="DOP853", rtol=1e-12, atol=1e-12)
    y = sol.y[:, -1]
    return y[:n * n].reshape(n, n), y[n * n:2 * n * n].reshape(n, n), y[2 * n * n:].reshape(n, n)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_against_adaptive_solver(seed):
    rng = np.random.default_rng(seed)
    n = 2
    V = trig_potential(rng, n)
    bc = normalize_pair(validate_pair(*random_pair(rng, n)))
    lam, s = float(rng.uniform(-20, 5)), float(rng.uniform(0.2, 1.0))
    fr = integrate_frame(bc, V, lam, s)
    X, Z, G = _reference(bc, V, lam, s)
    scale = 1 + np.abs(X).max() + np.abs(Z).max()
    assert np.abs(fr.X - X).max() <= 1e-8 * scale
    assert np.abs(fr.Z - Z).max() <= 1e-8 * scale
    assert np.abs(fr.gram - G).max() <= 1e-8 * scale ** 2


def test_batch_matches_single():
    p = example(3)
    s = np.array([0.1, 0.5, 1.0])
    lam = np.array([-3.0, 0.0, -40.0])
    X, Z, G = integrate_frames(p.left, p.potential, s, lam)
    for i in range(3):
        fr = integrate_frame(p.left, p.potential, lam[i], s[i])
        assert np.allclose(X[i], fr.X) and np.allclose(Z[i], fr.Z) and np.allclose(G[i], fr.gram)


def test_rescaling_keeps_the_span():
    # deep in the negative lambda region the frame grows like exp(sqrt(-lam))
    p = example(1)
    lam = -2.0e5
    X, Z, G = integrate_frames(p.left, p.potential, 1.0, lam)
    assert np.all(np.isfinite(X)) and np.all(np.isfinite(Z)) and np.all(np.isfinite(G))
    # Z X^{-1} approaches sqrt(V(1) - lam) for the growing solution
    R = np.linalg.solve(X[0].T, Z[0].T).T
    expected = np.sqrt(np.linalg.eigvalsh(p.potential(1.0)) - lam)
    assert np.allclose(np.sort(np.linalg.eigvals(R).real), expected, rtol=1e-3)


def test_lagrangian_defect():
    fr = integrate_frame(dirichlet(), Potential.constant(0.0), 0.0, 1.0)
    assert lagrangian_defect(fr) <= 1e-12
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert lagrangian_defect((np.eye(2), J)) == pytest.approx(2.0)
    p = example(1)
    fr = integrate_frame(p.left, p.potential, -5.0, 1.0)
    assert lagrangian_defect(fr) <= 1e-9


def test_too_few_steps():
    with pytest.raises(ValueError):
        integrate_frames(dirichlet(), Potential.constant(0.0), 1.0, 0.0, steps=4)


def test_defect_check_can_fire(monkeypatch):
    # RK4 keeps the normalized defect tiny, so the bound is lowered to exercise the error path
    def rotating(xs):
        c, s = np.cos(7 * np.asarray(xs)), np.sin(7 * np.asarray(xs))
        R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
        return R @ np.diag([-3000.0, 2000.0]) @ np.swapaxes(R, 1, 2)

    monkeypatch.setattr(shooting, "DEFECT_TOL", 1e-16)
    with pytest.raises(StepTooCoarse):
        integrate_frames(dirichlet(2), Potential(2, rotating), 1.0, 0.0, steps=16)


def test_trajectory_frame_at_matches_direct():
    p = example(2)
    tr = Trajectory(p.left, p.potential, -1.0, 2000)
    for s in (0.3, 0.77777, 1.0):
        a = tr.frame_at(s)
        b = integrate_frame(p.left, p.potential, -1.0, s)
        assert np.allclose(a.X, b.X, atol=1e-9) and np.allclose(a.Z, b.Z, atol=1e-9)


def test_dirichlet_kernel_free_case():
    grid = np.linspace(0.01, 1.0, 200)
    assert dirichlet_kernel_count(dirichlet(), Potential.constant(0.0), grid) == 0


def test_dirichlet_kernel_sturm():
    grid = np.linspace(0.01, 1.0, 200)
    total, locs = dirichlet_kernel_count(dirichlet(), Potential.constant(-50.0), grid, return_locations=True)
    assert total == 2
    k = math.sqrt(50)
    assert [round(abs(c - t), 6) <= 1e-6 for (c, _), t in zip(locs, (math.pi / k, 2 * math.pi / k))] == [True, True]


def test_dirichlet_kernel_first_example():
    p = example(1)
    assert dirichlet_kernel_count(p.left, p.potential, np.linspace(0.01, 1.0, 400)) == 2
