"""Random problem instances shared by the property and acceptance tests."""

from functools import lru_cache

import numpy as np

from maslov_morse import Potential, Problem, Settings, morse_via_theorem
from maslov_morse.config import load_config


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


def trig_potential(rng, n, bound=30.0, modes=3):
    """V(x) = C + sum_k A_k cos(k pi x) + B_k sin(k pi x), rescaled so ||V||_inf <= bound."""
    C = _sym(rng, n)
    A = [_sym(rng, n) / (k + 1) for k in range(modes)]
    B = [_sym(rng, n) / (k + 1) for k in range(modes)]

    def raw(xs):
        xs = np.asarray(xs, dtype=float)[:, None, None]
        out = np.broadcast_to(C, (xs.shape[0], n, n)).copy()
        for k in range(modes):
            out += A[k] * np.cos((k + 1) * np.pi * xs) + B[k] * np.sin((k + 1) * np.pi * xs)
        return out

    grid = np.linspace(0.0, 1.0, 2049)
    peak = np.max(np.linalg.norm(raw(grid), ord=2, axis=(1, 2)))
    scale = rng.uniform(0.2, 1.0) * bound / peak
    return Potential(n, lambda xs: scale * raw(xs), "random")


def random_pair(rng, n, angles=(0.35, 1.2)):
    """a1 = diag(cos t) Q^t, a2 = diag(sin t) Q^t with some exact Dirichlet/Neumann directions.

    The Robin coefficient is -cot t, so |t| is kept inside `angles`.
    """
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    t = rng.uniform(*angles, n) * rng.choice([-1.0, 1.0], n)
    kind = rng.integers(0, 4, n)
    t[kind == 0] = 0.0
    t[kind == 1] = np.pi / 2
    c, s = np.cos(t), np.sin(t)
    c[kind == 1] = 0.0
    return np.diag(c) @ Q.T, np.diag(s) @ Q.T


def random_problem(seed, n=None, mesh=1000):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(1, 4))
    V = trig_potential(rng, n)
    a1, a2 = random_pair(rng, n)
    b1, b2 = random_pair(rng, n)
    return Problem.build(V, a1, a2, b1, b2, Settings(mesh=mesh), name=f"random{seed}")


@lru_cache(maxsize=None)
def example(k):
    return load_config(f"example{k}")


@lru_cache(maxsize=None)
def example_report(k):
    """Theorem report for a built-in example, with crossings localized; cached across tests."""
    return morse_via_theorem(example(k), box=True, oracle=False, crossings=True)


def dirichlet_problem(v, n=1, **settings):
    V = Potential.constant(np.full((n, n), v) if np.ndim(v) == 0 and n == 1 else v)
    I, O = np.eye(n), np.zeros((n, n))
    return Problem.build(V, I, O, I, O, Settings(**settings))
