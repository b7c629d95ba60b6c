"""Finite-element cross-check for eigenvalue counts.

Piecewise-linear elements on a uniform mesh of [0, 1] discretize the quadratic
form of the rescaled operator H(s):

    h(u, u) = |u'|^2 + s^2 <V(s x) u, u> + s (R0 u(0), u(0)) - s (R1 u(1), u(1))

on functions with P_D u = 0 at each end, where R0, R1 are the embedded Robin
maps.  Counting negative eigenvalues uses Sylvester's law on K + tol*M, so no
generalized eigensolve is needed; eigenvalue curves use sparse shift-invert.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvals_banded
from scipy.sparse.linalg import eigsh

from . import kernels as K
from .errors import MeshSensitivity
from .problem import Problem

_GAUSS = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


@dataclass(frozen=True)
class DiscretizedForm:
    meshSize: int
    s: float
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    left_basis: np.ndarray
    right_basis: np.ndarray
    scale: float
    floor: float
    problem: Problem | None = None

    @property
    def size(self) -> int:
        return self.stiffness.shape[0]

    def bandwidth(self) -> int:
        A = self.stiffness.tocoo()
        return int(np.max(np.abs(A.row - A.col))) if A.nnz else 0


def _element_blocks(p: Problem, s: float, N: int):
    n = p.n
    h = 1.0 / N
    g = np.array(_GAUSS)
    left = np.arange(N) * h
    pts = (left[:, None] + h * g[None, :]).ravel()
    Vq = (s * s) * p.potential(s * pts).reshape(N, 2, n, n)
    # basis values at the two Gauss points: phi_left = 1 - t, phi_right = t
    phiL, phiR = 1.0 - g, g
    w = 0.5 * h
    Vll = w * np.einsum("q,eqij->eij", phiL * phiL, Vq)
    Vlr = w * np.einsum("q,eqij->eij", phiL * phiR, Vq)
    Vrr = w * np.einsum("q,eqij->eij", phiR * phiR, Vq)
    return Vll, Vlr, Vrr


def assemble(p: Problem, s: float = 1.0, N: int | None = None) -> DiscretizedForm:
    N = p.settings.mesh if N is None else int(N)
    if N < 64:
        raise ValueError("mesh must have at least 64 elements")
    if not 0.0 < s <= 1.0:
        raise ValueError("s must lie in (0, 1]")
    n = p.n
    h = 1.0 / N
    eye = np.eye(n)
    Vll, Vlr, Vrr = _element_blocks(p, s, N)

    # block tridiagonal in node order: diag blocks and super-diagonal blocks
    diagK = np.zeros((N + 1, n, n))
    offK = np.zeros((N, n, n))
    diagK[:-1] += eye / h + Vll
    diagK[1:] += eye / h + Vrr
    offK += -eye / h + Vlr
    diagM = np.zeros(N + 1)
    diagM[:-1] += h / 3
    diagM[1:] += h / 3
    offM = np.full(N, h / 6)

    diagK[0] += s * p.dec0.robin
    diagK[N] -= s * p.dec1.robin

    def blocks_to_sparse(diag, off):
        rows, cols, vals = [], [], []
        idx = np.arange(n)
        I, J = np.meshgrid(idx, idx, indexing="ij")
        for k in range(N + 1):
            rows.append(k * n + I.ravel()); cols.append(k * n + J.ravel()); vals.append(diag[k].ravel())
        for k in range(N):
            rows.append(k * n + I.ravel()); cols.append((k + 1) * n + J.ravel()); vals.append(off[k].ravel())
            rows.append((k + 1) * n + J.ravel()); cols.append(k * n + I.ravel()); vals.append(off[k].ravel())
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=((N + 1) * n, (N + 1) * n))

    Kfull = blocks_to_sparse(diagK, offK)
    Mfull = blocks_to_sparse(diagM[:, None, None] * eye, offM[:, None, None] * eye)

    # restrict the end nodes to ker P_D
    E0 = K.nullspace_basis(p.dec0.pD, 1e-8)
    E1 = K.nullspace_basis(p.dec1.pD, 1e-8)
    T = sp.block_diag([sp.csr_matrix(E0), sp.identity((N - 1) * n), sp.csr_matrix(E1)], format="csr")
    Kc = (T.T @ Kfull @ T).tocsr()
    Mc = (T.T @ Mfull @ T).tocsr()
    Kc = 0.5 * (Kc + Kc.T)
    Mc = 0.5 * (Mc + Mc.T)
    vsup = p.potential.sup_norm(1024)
    c = K.norm(p.dec0.robin) + K.norm(p.dec1.robin)
    scale = 1.0 + s * s * vsup + s * c
    floor = s * s * vsup + s * c + (s * c) ** 2   # no eigenvalue of H(s) lies below -floor
    return DiscretizedForm(N, float(s), Kc, Mc, E0, E1, float(scale), float(floor), p)


def _to_banded(A: sp.spmatrix, bw: int) -> np.ndarray:
    """Lower banded storage for scipy's symmetric banded routines."""
    A = A.tocoo()
    m = A.shape[0]
    ab = np.zeros((bw + 1, m))
    keep = (A.row >= A.col) & (A.row - A.col <= bw)
    ab[A.row[keep] - A.col[keep], A.col[keep]] = A.data[keep]
    return ab


def _count(form: DiscretizedForm, tol: float) -> int:
    A = (form.stiffness + tol * form.mass).tocsr()
    bw = form.bandwidth()
    ab = _to_banded(A, bw)
    neg = eigvals_banded(ab, lower=True, select="v", select_range=(-np.inf, 0.0))
    return int(neg.size)


def negative_count(form: DiscretizedForm, tol: float | None = None, check_doubling: bool = False) -> int:
    """Number of discrete eigenvalues below -tol."""
    tol = 1e-8 * form.scale if tol is None else tol
    c = _count(form, tol)
    if check_doubling:
        if form.problem is None:
            raise ValueError("doubling check needs the originating problem")
        c2 = _count(assemble(form.problem, form.s, 2 * form.meshSize), tol)
        if c2 != c:
            raise MeshSensitivity(f"negative count {c} at N={form.meshSize} but {c2} at N={2 * form.meshSize}")
    return c


def oracle_count(p: Problem, s: float = 1.0, N: int | None = None, check_doubling: bool = False) -> int:
    return negative_count(assemble(p, s, N), check_doubling=check_doubling)


def lowest_eigenvalues(form: DiscretizedForm, k: int) -> np.ndarray:
    k = min(k, form.size - 1)
    sigma = -form.floor - 1.0
    vals = eigsh(form.stiffness.tocsc(), k=k, M=form.mass.tocsc(), sigma=sigma, which="LM",
                 return_eigenvectors=False)
    return np.sort(vals)


def eigencurves(p: Problem, sGrid, k: int = 4, convention: str = "H(s)", N: int | None = None):
    """Rows (s, lowest k eigenvalues) of H(s), or of H_s = H(s)/s^2 with convention 'H_s'."""
    if k > 8:
        raise ValueError("k must be at most 8")
    if convention not in ("H(s)", "H_s"):
        raise ValueError("convention is 'H(s)' or 'H_s'")
    rows = []
    for s in np.asarray(sGrid, dtype=float):
        vals = lowest_eigenvalues(assemble(p, s, N), k)
        if convention == "H_s":
            vals = vals / (s * s)
        rows.append((float(s), vals))
    return rows
