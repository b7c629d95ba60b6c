"""Small dense linear algebra (n <= 16).

Everything here works on plain numpy arrays and is written out by hand:
cyclic Jacobi for symmetric spectra, Householder-Hessenberg plus shifted QR
for general complex spectra, LU with partial pivoting for solves.  All
tolerances are relative to the max-row-sum norm.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    NoConvergence,
    NotOrthonormal,
    NotPositiveDefinite,
    NotSymmetric,
    Singular,
)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ToleranceSettings:
    symmetry: float = 1e-9
    jacobi: float = 1e-12
    orthonormal: float = 1e-10
    pivot: float = 1e-13
    spd: float = 1e-12
    qr_sweeps_per_entry: int = 100


DEFAULT_TOL = ToleranceSettings()


@dataclass(frozen=True)
class SymEig:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)


def norm(A) -> float:
    """Max-row-sum norm (the induced infinity norm); 0 for empty matrices."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    if A.ndim == 1:
        return float(np.max(np.abs(A)))
    return float(np.max(np.sum(np.abs(A), axis=1)))


def sym_eig(S, tol: ToleranceSettings = DEFAULT_TOL) -> SymEig:
    """Full spectral decomposition of a real symmetric matrix by cyclic Jacobi."""
    A = np.array(S, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"sym_eig needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("sym_eig needs finite entries")
    n = A.shape[0]
    scale = norm(A)
    if norm(A - A.T) > tol.symmetry * scale:
        raise NotSymmetric(f"asymmetry {norm(A - A.T):.3e} exceeds {tol.symmetry:.0e}*|S|")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    target = tol.jacobi * scale
    for _ in range(100):
        off = np.sqrt(np.sum((A - np.diag(np.diag(A))) ** 2))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * ap - s * aq, s * ap + c * aq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        raise NoConvergence("Jacobi sweeps did not reduce the off-diagonal mass")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return SymEig(w[order], V[:, order].copy())


def herm_eig(H, tol: ToleranceSettings = DEFAULT_TOL) -> np.ndarray:
    """Ascending eigenvalues of a complex Hermitian matrix.

    Uses the real embedding [[A, -B], [B, A]], whose spectrum is the
    Hermitian spectrum with every value doubled.
    """
    H = np.asarray(H, dtype=complex)
    A, B = H.real, H.imag
    emb = np.block([[A, -B], [B, A]])
    emb = 0.5 * (emb + emb.T)
    return sym_eig(emb, tol).eigenvalues[::2].copy()


def _householder_hessenberg(A: np.ndarray) -> np.ndarray:
    H = A.copy()
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[k + 1 :, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1 :, :])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v.conj())
    return H


def _eig2(a, b, c, d):
    half_tr = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c + 0j)
    r1 = half_tr + disc
    r2 = half_tr - disc
    # the larger root is exact to rounding; recover the smaller from the determinant
    det = a * d - b * c
    if abs(r1) >= abs(r2) and r1 != 0:
        r2 = det / r1
    elif r2 != 0:
        r1 = det / r2
    return r1, r2


def complex_eig(C, max_sweeps: int | None = None) -> np.ndarray:
    """Eigenvalues of a square complex matrix (Hessenberg + shifted QR)."""
    A = np.array(C, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"complex_eig needs a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex)
    limit = max_sweeps if max_sweeps is not None else DEFAULT_TOL.qr_sweeps_per_entry * n * n
    H = _householder_hessenberg(A)
    scale = max(norm(H), np.finfo(float).tiny)
    out: list[complex] = []
    hi = n - 1
    sweeps = 0
    since_deflation = 0
    while hi >= 0:
        if hi == 0:
            out.append(H[0, 0])
            break
        lo = hi
        while lo > 0:
            sub = abs(H[lo, lo - 1])
            if sub <= _EPS * (abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])) or sub <= _EPS * 1e-3 * scale:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            out.append(H[hi, hi])
            hi -= 1
            since_deflation = 0
            continue
        if lo == hi - 1:
            out.extend(_eig2(H[lo, lo], H[lo, hi], H[hi, lo], H[hi, hi]))
            hi -= 2
            since_deflation = 0
            continue
        sweeps += 1
        since_deflation += 1
        if sweeps > limit:
            raise NoConvergence(f"shifted QR exceeded {limit} sweeps")
        r1, r2 = _eig2(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        mu = r1 if abs(r1 - H[hi, hi]) < abs(r2 - H[hi, hi]) else r2
        if since_deflation % 11 == 10:
            mu = H[hi, hi] + abs(H[hi, hi - 1]) * (0.75 + 0.5j)
        B = H[lo : hi + 1, lo : hi + 1]
        m = B.shape[0]
        B -= mu * np.eye(m)
        rots = []
        for k in range(m - 1):
            x, y = B[k, k], B[k + 1, k]
            r = np.hypot(abs(x), abs(y))
            if r == 0.0:
                G = np.eye(2, dtype=complex)
            else:
                G = np.array([[np.conj(x), np.conj(y)], [-y, x]]) / r
            B[k : k + 2, :] = G @ B[k : k + 2, :]
            rots.append(G)
        for k, G in enumerate(rots):
            B[:, k : k + 2] = B[:, k : k + 2] @ G.conj().T
        B += mu * np.eye(m)
    return np.array(out, dtype=complex)


def nullspace_basis(M, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of M.

    Kernel vectors are the eigenvectors of M^t M whose eigenvalue is at most
    tol^2 * |M^t M|.  Returns an n x 0 array for a trivial kernel.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M, dtype=float)
    G = M.T @ M
    G = 0.5 * (G + G.T)
    eig = sym_eig(G)
    # floor at a few ulps: Jacobi cannot resolve exact zeros below rounding
    cut = max(tol * tol, 64 * _EPS) * norm(G)
    keep = eig.eigenvalues <= cut
    return eig.eigenvectors[:, keep].copy()


def ortho_projector(basis, tol: ToleranceSettings = DEFAULT_TOL) -> np.ndarray:
    basis = np.asarray(basis, dtype=float)
    k = basis.shape[1]
    if norm(basis.T @ basis - np.eye(k)) > tol.orthonormal:
        raise NotOrthonormal("basis columns are not orthonormal")
    return basis @ basis.T


def lu_factor(A, tol: ToleranceSettings = DEFAULT_TOL):
    """Doolittle LU with partial pivoting; returns (LU packed, perm, sign)."""
    LU = np.array(A, dtype=complex if np.iscomplexobj(A) else float)
    n = LU.shape[0]
    if LU.ndim != 2 or LU.shape[1] != n:
        raise ValueError(f"LU needs a square matrix, got shape {LU.shape}")
    perm = np.arange(n)
    sign = 1.0
    floor = tol.pivot * norm(LU)
    for k in range(n):
        p = k + int(np.argmax(np.abs(LU[k:, k])))
        if abs(LU[p, k]) <= floor or LU[p, k] == 0:
            raise Singular(f"pivot {abs(LU[p, k]):.3e} below {tol.pivot:.0e}*|A| at column {k}")
        if p != k:
            LU[[k, p]] = LU[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        LU[k + 1 :, k] /= LU[k, k]
        LU[k + 1 :, k + 1 :] -= np.outer(LU[k + 1 :, k], LU[k, k + 1 :])
    return LU, perm, sign


def solve(A, RHS, tol: ToleranceSettings = DEFAULT_TOL) -> np.ndarray:
    """Solve A X = RHS by LU with partial pivoting (real or complex)."""
    LU, perm, _ = lu_factor(A, tol)
    B = np.asarray(RHS)
    vector = B.ndim == 1
    X = np.array(B[perm], dtype=np.result_type(LU, B, float))
    if vector:
        X = X[:, None]
    n = LU.shape[0]
    for k in range(n):
        X[k + 1 :] -= np.outer(LU[k + 1 :, k], X[k])
    for k in range(n - 1, -1, -1):
        X[k] /= LU[k, k]
        X[:k] -= np.outer(LU[:k, k], X[k])
    return X[:, 0] if vector else X


def det(A, tol: ToleranceSettings = DEFAULT_TOL) -> complex | float:
    A = np.asarray(A)
    if A.shape[0] == 0:
        return 1.0
    try:
        LU, _, sign = lu_factor(A, tol)
    except Singular:
        return 0.0
    return sign * np.prod(np.diag(LU))


def sqrt_spd(S, tol: ToleranceSettings = DEFAULT_TOL) -> np.ndarray:
    eig = sym_eig(S, tol)
    floor = tol.spd * norm(S)
    if eig.eigenvalues.size and (eig.eigenvalues.min() <= floor):
        raise NotPositiveDefinite(f"smallest eigenvalue {eig.eigenvalues.min():.3e} is not positive")
    V = eig.eigenvectors
    R = (V * np.sqrt(eig.eigenvalues)) @ V.T
    return 0.5 * (R + R.T)


def inv_sqrt_spd(S, tol: ToleranceSettings = DEFAULT_TOL) -> np.ndarray:
    eig = sym_eig(S, tol)
    floor = tol.spd * norm(S)
    if eig.eigenvalues.size and (eig.eigenvalues.min() <= floor):
        raise NotPositiveDefinite(f"smallest eigenvalue {eig.eigenvalues.min():.3e} is not positive")
    V = eig.eigenvectors
    R = (V / np.sqrt(eig.eigenvalues)) @ V.T
    return 0.5 * (R + R.T)


def best_assignment(cost: np.ndarray) -> np.ndarray:
    """Row-to-column assignment minimising total cost.

    Exhaustive for n <= 6; above that a greedy pass followed by pairwise-swap
    improvement until no swap helps.
    """
    n = cost.shape[0]
    if n <= 6:
        best, best_perm = np.inf, None
        for perm in itertools.permutations(range(n)):
            total = cost[np.arange(n), perm].sum()
            if total < best:
                best, best_perm = total, perm
        return np.array(best_perm, dtype=int)
    perm = -np.ones(n, dtype=int)
    free = set(range(n))
    for i in np.argsort(cost.min(axis=1)):
        j = min(free, key=lambda c: cost[i, c])
        perm[i] = j
        free.remove(j)
    improved = True
    while improved:
        improved = False
        for a in range(n):
            for b in range(a + 1, n):
                if cost[a, perm[b]] + cost[b, perm[a]] < cost[a, perm[a]] + cost[b, perm[b]] - 1e-15:
                    perm[a], perm[b] = perm[b], perm[a]
                    improved = True
    return perm
