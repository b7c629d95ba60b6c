"""Separated self-adjoint boundary conditions.

A condition at one endpoint is a pair (a1, a2) acting as a1 y + a2 y' = 0.
This module validates and normalizes pairs, splits them into Dirichlet,
Neumann and Robin parts, builds the target-side unitary factor, and forms the
matrices that govern the bottom shelf of the (s, lambda) box.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import DecompositionInconsistent, NotSelfAdjoint, RankDeficient

RANK_TOL = 1e-10
SELF_ADJOINT_TOL = 1e-9
KERNEL_TOL = 1e-7


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BoundaryPair:
    a1: np.ndarray
    a2: np.ndarray
    side: Side = Side.LEFT

    def __post_init__(self):
        object.__setattr__(self, "a1", _frozen(self.a1))
        object.__setattr__(self, "a2", _frozen(self.a2))

    @property
    def n(self) -> int:
        return self.a1.shape[0]

    def is_normalized(self, tol: float = 1e-9) -> bool:
        gram = self.a1 @ self.a1.T + self.a2 @ self.a2.T
        return K.norm(gram - np.eye(self.n)) <= tol


@dataclass(frozen=True)
class BKDecomposition:
    """Orthogonal Dirichlet/Neumann/Robin projections and the Robin map."""

    pD: np.ndarray
    pN: np.ndarray
    pR: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        for name in ("pD", "pN", "pR", "lam"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def robin(self) -> np.ndarray:
        """pR @ lam @ pR, the Robin map embedded in R^n."""
        return self.pR @ self.lam @ self.pR


@dataclass(frozen=True)
class TargetData:
    frameX: np.ndarray
    frameZ: np.ndarray
    factor: np.ndarray

    def __post_init__(self):
        for name in ("frameX", "frameZ"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        f = np.array(self.factor, dtype=complex)
        f.setflags(write=False)
        object.__setattr__(self, "factor", f)


@dataclass(frozen=True)
class BottomShelfData:
    intersectionBasis: np.ndarray
    bMatrix: np.ndarray
    kernelBasis: np.ndarray
    correction: np.ndarray
    nondegenerate: bool
    b_eigenvalues: np.ndarray
    correction_eigenvalues: np.ndarray
    kernel_tol: float

    @property
    def d(self) -> int:
        return self.intersectionBasis.shape[1]


def validate_pair(a1, a2, side: Side = Side.LEFT) -> BoundaryPair:
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    if a1.ndim != 2 or a1.shape[0] != a1.shape[1] or a1.shape != a2.shape:
        raise ValueError(f"boundary matrices must both be n x n, got {a1.shape} and {a2.shape}")
    if not (np.all(np.isfinite(a1)) and np.all(np.isfinite(a2))):
        raise ValueError("boundary matrices must be finite")
    gram = a1 @ a1.T + a2 @ a2.T
    w = K.sym_eig(gram).eigenvalues
    if w.size and (w.max() <= 0 or w.min() <= RANK_TOL * w.max()):
        raise RankDeficient(f"rank [a1 a2] < {a1.shape[0]} at the {side.value} endpoint")
    defect = K.norm(a1 @ a2.T - a2 @ a1.T)
    if defect > SELF_ADJOINT_TOL * max(1.0, K.norm(gram)):
        raise NotSelfAdjoint(
            f"a1 a2^t - a2 a1^t has norm {defect:.3e} at the {side.value} endpoint", defect
        )
    return BoundaryPair(a1, a2, side)


def normalize_pair(p: BoundaryPair) -> BoundaryPair:
    """Rescale to a1 a1^t + a2 a2^t = I without changing the condition."""
    M = K.inv_sqrt_spd(p.a1 @ p.a1.T + p.a2 @ p.a2.T)
    return BoundaryPair(M @ p.a1, M @ p.a2, p.side)


def bk_decompose(p: BoundaryPair, tol: float = KERNEL_TOL) -> BKDecomposition:
    n = p.n
    eye = np.eye(n)
    pD = K.ortho_projector(K.nullspace_basis(p.a2, tol))
    pN = K.ortho_projector(K.nullspace_basis(p.a1, tol))
    pR = eye - pD - pN
    for label, prod in (("pR pD", pR @ pD), ("pR pN", pR @ pN), ("pD pN", pD @ pN)):
        if K.norm(prod) > 1e-9:
            raise DecompositionInconsistent(f"{label} has norm {K.norm(prod):.3e}")

    R = K.nullspace_basis(pD + pN, tol)  # orthonormal basis of ran pR
    r = R.shape[1]
    if r == 0:
        return BKDecomposition(pD, pN, pR, np.zeros((n, n)))

    # Cayley route
    U = -K.solve(p.a1 - 1j * p.a2, p.a1 + 1j * p.a2)
    plus = R.T @ (U + eye) @ R
    minus = R.T @ (U - eye) @ R
    lam_r = -1j * K.solve(plus, minus)
    if np.max(np.abs(lam_r.imag)) > 1e-8:
        raise DecompositionInconsistent(
            f"Cayley Robin map has imaginary part {np.max(np.abs(lam_r.imag)):.3e}"
        )
    lam_r = lam_r.real
    lam_r = 0.5 * (lam_r + lam_r.T)

    # direct route: a2 (R c) = a1 R  =>  restricted map is -c
    A2R = p.a2 @ R
    c = K.solve(A2R.T @ A2R, A2R.T @ (p.a1 @ R))
    direct = -c
    if K.norm(direct - lam_r) > 1e-7 * max(1.0, K.norm(lam_r)):
        raise DecompositionInconsistent(
            f"Cayley and direct Robin maps differ by {K.norm(direct - lam_r):.3e}"
        )
    return BKDecomposition(pD, pN, pR, R @ lam_r @ R.T)


def target_data(p: BoundaryPair) -> TargetData:
    b1, b2 = p.a1, p.a2
    factor = (b1.T @ b1 - b2.T @ b2) - 2j * (b2.T @ b1)
    n = p.n
    defect = K.norm(factor.conj().T @ factor - np.eye(n))
    if defect > 1e-9:
        raise DecompositionInconsistent(f"target factor is not unitary (defect {defect:.3e}); normalize first")
    X1, Z1 = b2.T.copy(), -b1.T.copy()
    if K.norm(X1.T @ Z1 - Z1.T @ X1) > 1e-9:
        raise DecompositionInconsistent("target frame is not Lagrangian")
    return TargetData(X1, Z1, factor)


def bottom_shelf(dec0: BKDecomposition, dec1: BKDecomposition, v0, tol_nd: float = 1e-6) -> BottomShelfData:
    v0 = np.asarray(v0, dtype=float)
    n = v0.shape[0]
    Kb = K.nullspace_basis(dec0.pD + dec1.pD, KERNEL_TOL)
    d = Kb.shape[1]
    if d == 0:
        empty = np.zeros((0, 0))
        return BottomShelfData(Kb, empty, np.zeros((0, 0)), empty, True, np.zeros(0), np.zeros(0), 0.0)

    rob0, rob1 = dec0.robin, dec1.robin
    B = Kb.T @ (rob0 - rob1) @ Kb
    B = 0.5 * (B + B.T)
    # absolute scale: B may be exactly zero up to rounding
    ktol = 1e-8 * (1.0 + K.norm(rob0) + K.norm(rob1))
    eigB = K.sym_eig(B)
    L = eigB.eigenvectors[:, np.abs(eigB.eigenvalues) <= ktol]
    KL = Kb @ L
    corr = KL.T @ (v0 - rob0 @ rob0) @ KL
    corr = 0.5 * (corr + corr.T)
    ceig = K.sym_eig(corr).eigenvalues if corr.size else np.zeros(0)
    nd_tol = tol_nd * (1.0 + K.norm(corr))
    nondegenerate = bool(np.all(np.abs(ceig) > nd_tol))
    return BottomShelfData(Kb, B, L, corr, nondegenerate, eigB.eigenvalues, ceig, ktol)
