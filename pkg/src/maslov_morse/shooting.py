"""Lagrangian frames shot from the left boundary.

The frame (X, Z) solves X' = Z, Z' = (V - lambda) X from (alpha2^t, -alpha1^t).
Integration is fixed-step RK4, batched over many (s, lambda) pairs at once so a
whole path segment advances in one numpy loop.  The Gram integral of X^t X
rides along as an extra RK4 component; for a pure quadrature this reduces to
Simpson's rule on the same grid.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels as K
from .boundary import BoundaryPair
from .errors import GridTooCoarse, NotSymmetric, StepTooCoarse, ValidationError

MIN_STEPS = 16
DEFECT_TOL = 1e-9
SYM_TOL = 1e-9
RESCALE = 1e32


def _row_sum_norms(A: np.ndarray) -> np.ndarray:
    return np.abs(A).sum(axis=-1).max(axis=-1)


class Potential:
    """A symmetric matrix-valued function on [0, 1].

    `func` takes a 1-d array of points and returns an (m, n, n) array.  Use
    `from_pointwise` to wrap a function of a single float.
    """

    def __init__(self, n: int, func: Callable[[np.ndarray], np.ndarray], name: str = "V",
                 lipschitz: float | None = None, cache_size: int = 32):
        self.n = int(n)
        self._func = func
        self.name = name
        self.lipschitz = lipschitz
        self._cache: dict = {}
        self._cache_size = cache_size
        self._lock = threading.Lock()

    @classmethod
    def constant(cls, M, name: str = "const") -> "Potential":
        M = np.array(M, dtype=float)
        if M.ndim == 0:
            M = M.reshape(1, 1)
        return cls(M.shape[0], lambda xs: np.broadcast_to(M, (len(xs),) + M.shape).copy(), name, lipschitz=0.0)

    @classmethod
    def from_pointwise(cls, n: int, f: Callable[[float], np.ndarray], name: str = "V") -> "Potential":
        def vec(xs):
            return np.array([np.asarray(f(float(x)), dtype=float).reshape(n, n) for x in xs])
        return cls(n, vec, name)

    def _eval(self, xs: np.ndarray) -> np.ndarray:
        vals = np.asarray(self._func(xs), dtype=float).reshape(len(xs), self.n, self.n)
        if not np.all(np.isfinite(vals)):
            raise ValidationError("finite-potential", f"{self.name} is not finite on the queried points")
        asym = _row_sum_norms(vals - np.swapaxes(vals, 1, 2))
        bound = SYM_TOL * (1.0 + _row_sum_norms(vals))
        if np.any(asym > bound):
            i = int(np.argmax(asym - bound))
            raise NotSymmetric(f"{self.name} is not symmetric at x={xs[i]:.6g} (defect {asym[i]:.3e})")
        return vals

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        vals = self._eval(xs.ravel())
        if np.ndim(x) == 0:
            return vals[0]
        return vals.reshape(xs.shape + (self.n, self.n))

    def tabulate(self, xs: np.ndarray) -> np.ndarray:
        """Evaluate on a grid, memoized by the grid's contents."""
        xs = np.ascontiguousarray(xs, dtype=float)
        key = (xs.shape, hash(xs.tobytes()))
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        vals = self(xs)
        vals.setflags(write=False)
        with self._lock:
            if len(self._cache) >= self._cache_size:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = vals
        return vals

    def sup_norm(self, points: int = 1024) -> float:
        return float(_row_sum_norms(self.tabulate(np.linspace(0.0, 1.0, points))).max())

    def check_continuity(self, points: int = 1024, lipschitz: float | None = None) -> float:
        """Largest observed jump ratio; raises if it beats the Lipschitz bound."""
        L = self.lipschitz if lipschitz is None else lipschitz
        xs = np.linspace(0.0, 1.0, points)
        vals = self.tabulate(xs)
        ratio = float((_row_sum_norms(np.diff(vals, axis=0)) / (xs[1] - xs[0])).max()) if points > 1 else 0.0
        if L is not None and ratio > L * (1 + 1e-9):
            raise ValidationError("continuous-potential", f"{self.name} jumps faster than Lipschitz bound {L}")
        return ratio

    def shifted(self, lam0: float) -> "Potential":
        """V - lam0 I, so that the shifted operator is H - lam0."""
        eye = np.eye(self.n)
        base = self
        return Potential(self.n, lambda xs: base._func(xs) - lam0 * eye, f"{self.name}-({lam0:g})",
                         self.lipschitz)

    def scaled(self, s: float) -> "Potential":
        """x -> s^2 V(s x), the potential of the rescaled operator on [0, 1]."""
        base = self
        return Potential(self.n, lambda xs: s * s * base._func(s * np.asarray(xs)), f"{self.name}[s={s:g}]")


@dataclass(frozen=True)
class Frame:
    s: float
    lam: float
    X: np.ndarray
    Z: np.ndarray
    gram: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]


def system_matrix(x: float, lam: float, V: Potential) -> np.ndarray:
    n = V.n
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = V(x) - lam * np.eye(n)
    return A


def lagrangian_defect(f) -> float:
    X, Z = (f.X, f.Z) if isinstance(f, Frame) else f
    return K.norm(X.T @ Z - Z.T @ X)


def _defects(X, Z):
    XtZ = np.swapaxes(X, -1, -2) @ Z
    d = _row_sum_norms(XtZ - np.swapaxes(XtZ, -1, -2))
    scale = 1.0 + _row_sum_norms(X) ** 2 + _row_sum_norms(Z) ** 2
    return d, scale


def _rk4_operators(W0, Wm, W1, h):
    """Per-step RK4 propagator P and Gram weight Q for Y' = [[0, I], [W, 0]] Y.

    One step maps Y to P Y, and the Gram increment h/6 sum w_i X_i^t X_i over
    the four stages equals Y^t Q Y.  Both are written out in n x n blocks, which
    needs only the products Wm W0 and W1 Wm.  Leading axes are broadcast.
    """
    n = W0.shape[-1]
    I = np.eye(n)
    c = h / 6
    h2, h3 = h * h, h * h * h
    WmW0 = Wm @ W0
    W1Wm = W1 @ Wm
    P = np.empty(W0.shape[:-2] + (2 * n, 2 * n))
    P[..., :n, :n] = I + c * (h * W0 + 2 * h * Wm + (h3 / 4) * WmW0)
    P[..., :n, n:] = h * I + (h3 / 6) * Wm
    P[..., n:, :n] = c * (W0 + 4 * Wm + W1 + (h2 / 2) * (WmW0 + W1Wm))
    P[..., n:, n:] = I + c * (2 * h * Wm + h * W1 + (h3 / 4) * W1Wm)

    # X parts of the four stages, as [L | R] acting on Y = [X; Z]
    a = 0.5 * h
    L3 = I + a * a * W0
    L4 = I + (h2 / 2) * Wm
    R4 = h * I + (h3 / 4) * Wm
    Q = np.empty_like(P)
    Q[..., :n, :n] = c * (3 * I + 2 * (L3 @ L3) + L4 @ L4)
    Q[..., :n, n:] = c * (2 * a * I + 2 * a * L3 + L4 @ R4)
    Q[..., n:, :n] = np.swapaxes(Q[..., :n, n:], -1, -2)
    Q[..., n:, n:] = c * (4 * a * a * I + R4 @ R4)
    return P, Q


def integrate_frames(bc0: BoundaryPair, V: Potential, s, lam, steps: int = 2000, check: bool = True,
                     memory: float = 4e7):
    """RK4 over a batch: returns X, Z, gram as (m, n, n) arrays.

    `s` and `lam` broadcast against each other.  Trajectory i runs on [0, s_i]
    with step s_i/steps, so all trajectories share the same normalized grid.
    The equation is linear, so each step's RK4 map is formed up front and the
    sequential part is a single matrix product per step.
    """
    if steps < MIN_STEPS:
        raise ValueError(f"steps must be at least {MIN_STEPS}")
    s, lam = np.broadcast_arrays(np.atleast_1d(np.asarray(s, float)), np.atleast_1d(np.asarray(lam, float)))
    if np.any(s <= 0) or np.any(s > 1 + 1e-12):
        raise ValueError("s must lie in (0, 1]")
    m, n = s.size, V.n
    chunk = max(1, int(memory // (steps * 4 * n * n * 8)))
    if m > chunk:
        parts = [integrate_frames(bc0, V, s[i:i + chunk], lam[i:i + chunk], steps, check, memory)
                 for i in range(0, m, chunk)]
        return tuple(np.concatenate([p[j] for p in parts]) for j in range(3))

    eye = np.eye(n)
    ts = np.arange(2 * steps + 1) / (2 * steps)
    us, inv = np.unique(s, return_inverse=True)
    grid = np.outer(us, ts).ravel()
    # only single-s grids are worth memoizing; s-sweeps never repeat a grid
    vals = V.tabulate(grid) if len(us) == 1 else V(grid)
    table = vals.reshape(len(us), 2 * steps + 1, n, n)[inv] - lam[:, None, None, None] * eye
    h = (s / steps)[:, None, None, None]
    P, Q = _rk4_operators(table[:, 0:-1:2], table[:, 1::2], table[:, 2::2], h)

    Y = np.empty((m, steps + 1, 2 * n, n))
    Y[:, 0, :n] = bc0.a2.T
    Y[:, 0, n:] = -bc0.a1.T
    # Only the span of Y matters, so it is rescaled whenever it grows large.
    # Stored states carry a cumulative factor g_k; the Gram sum is reported
    # in the scale of the final state, i.e. weighted by (g_end / g_k)^2.
    logg = np.zeros((m, steps + 1))
    for k in range(steps):
        Y[:, k + 1] = P[:, k] @ Y[:, k]
        logg[:, k + 1] = logg[:, k]
        if k % 8 == 7:
            big = np.max(np.abs(Y[:, k + 1]), axis=(1, 2))
            hit = big > RESCALE
            if np.any(hit):
                Y[hit, k + 1] /= big[hit, None, None]
                logg[hit, k + 1] -= np.log(big[hit])
    Yk = Y[:, :-1]
    w = np.exp(2.0 * (logg[:, -1:] - logg[:, :-1]))[:, :, None, None]
    G = (w * (np.swapaxes(Yk, -1, -2) @ Q @ Yk)).sum(axis=1)
    X, Z = Y[:, -1, :n].copy(), Y[:, -1, n:].copy()

    G = 0.5 * (G + np.swapaxes(G, 1, 2))
    if check:
        d, scale = _defects(X, Z)
        bad = d > DEFECT_TOL * scale
        if np.any(bad):
            i = int(np.argmax(d / scale))
            raise StepTooCoarse(
                f"Lagrangian defect {d[i]:.3e} exceeds bound at s={s[i]:.6g}, lambda={lam[i]:.6g}; "
                f"increase steps (now {steps})"
            )
    return X, Z, G


def integrate_frame(bc0: BoundaryPair, V: Potential, lam: float, s: float, steps: int = 2000) -> Frame:
    X, Z, G = integrate_frames(bc0, V, s, lam, steps)
    return Frame(float(s), float(lam), X[0], Z[0], G[0])


class Trajectory:
    """A single frame history over [0, 1] at fixed lambda.

    Node states are stored so that `frame_at(s)` costs one partial RK4 step.
    """

    def __init__(self, bc0: BoundaryPair, V: Potential, lam: float, steps: int = 2000):
        self.bc0, self.V, self.lam, self.steps = bc0, V, float(lam), steps
        n = V.n
        h = 1.0 / steps
        xs = np.arange(2 * steps + 1) * (0.5 * h)
        table = V.tabulate(xs) - self.lam * np.eye(n)
        self._table = table
        Xs = np.empty((steps + 1, n, n))
        Zs = np.empty((steps + 1, n, n))
        Gs = np.empty((steps + 1, n, n))
        Xs[0], Zs[0], Gs[0] = bc0.a2.T, -bc0.a1.T, 0.0
        for k in range(steps):
            Xs[k + 1], Zs[k + 1], Gs[k + 1] = self._step(Xs[k], Zs[k], Gs[k], k, h)
        self.X, self.Z, self.G = Xs, Zs, Gs

    def _step(self, X, Z, G, k, h, V0=None, Vm=None, V1=None):
        if V0 is None:
            V0, Vm, V1 = self._table[2 * k], self._table[2 * k + 1], self._table[2 * k + 2]
        k1x, k1z = Z, V0 @ X
        X2, Z2 = X + 0.5 * h * k1x, Z + 0.5 * h * k1z
        k2x, k2z = Z2, Vm @ X2
        X3, Z3 = X + 0.5 * h * k2x, Z + 0.5 * h * k2z
        k3x, k3z = Z3, Vm @ X3
        X4, Z4 = X + h * k3x, Z + h * k3z
        k4x, k4z = Z4, V1 @ X4
        G = G + h / 6 * (X.T @ X + 2 * X2.T @ X2 + 2 * X3.T @ X3 + X4.T @ X4)
        X = X + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        Z = Z + h / 6 * (k1z + 2 * k2z + 2 * k3z + k4z)
        return X, Z, G

    def frame_at(self, s: float) -> Frame:
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        h = 1.0 / self.steps
        k = min(int(np.floor(s / h)), self.steps)
        r = s - k * h
        X, Z, G = self.X[k], self.Z[k], self.G[k]
        if r > 1e-15 and k < self.steps:
            x0 = k * h
            pts = self.V(np.array([x0, x0 + 0.5 * r, x0 + r])) - self.lam * np.eye(self.V.n)
            X, Z, G = self._step(X, Z, G, k, r, pts[0], pts[1], pts[2])
        return Frame(float(s), self.lam, X, Z, 0.5 * (G + G.T))


def _scaled_det(X, Z):
    """det X / sqrt(det(X^t X + Z^t Z)), a scale-free sign indicator."""
    M = np.swapaxes(X, -1, -2) @ X + np.swapaxes(Z, -1, -2) @ Z
    return np.linalg.det(X) / np.sqrt(np.abs(np.linalg.det(M)))


def dirichlet_kernel_count(bc0: BoundaryPair, V: Potential, sGrid, steps: int = 2000,
                           lam: float = 0.0, width: float = 1e-8, return_locations: bool = False):
    """Total dim ker X(s, lam) over the grid, found from sign changes of det X."""
    sGrid = np.asarray(sGrid, dtype=float)
    if sGrid.ndim != 1 or sGrid.size < 2 or np.any(np.diff(sGrid) <= 0):
        raise ValueError("sGrid must be strictly increasing with at least two points")
    if sGrid[0] <= 0 or sGrid[-1] >= 1 + 1e-12:
        raise ValueError("sGrid must lie in (0, 1]")
    traj = Trajectory(bc0, V, lam, steps)

    def f(s):
        fr = traj.frame_at(s)
        return float(_scaled_det(fr.X, fr.Z)), fr

    vals = [f(s)[0] for s in sGrid]
    total = 0
    locs = []
    for i in range(len(sGrid) - 1):
        a, b = sGrid[i], sGrid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            fa = vals[i - 1] if i > 0 else fb
        if np.sign(fa) == np.sign(fb):
            if min(abs(fa), abs(fb)) < 1e-12:
                raise GridTooCoarse(f"det X nearly vanishes without a sign change on [{a:.6g}, {b:.6g}]")
            continue
        lo, hi, flo = a, b, fa
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            fm = f(mid)[0]
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
        c = 0.5 * (lo + hi)
        fr = f(c)[1]
        sv = np.sqrt(np.maximum(K.sym_eig(fr.X.T @ fr.X).eigenvalues, 0.0))
        mult = int(np.sum(sv <= 1e-7 * (K.norm(fr.X) + K.norm(fr.Z)))) or 1
        total += mult
        locs.append((c, mult))
    return (total, locs) if return_locations else total
