"""Morse index assembly from the principal Maslov index and the bottom shelf."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .errors import EigenvalueOnPath, EmptyBottomShelf
from .maslov import (PathSegment, SegmentKind, circ_dist, locate_crossings, maslov_box, sample_phases,
                     spectral_flow)
from .problem import Problem, Settings
from .shooting import Potential

__all__ = ["MorseReport", "Problem", "Settings", "count_below", "lambda_infty", "morse_count",
           "morse_via_gamma3", "morse_via_theorem", "perturbation_prediction", "spectral_floor"]

CORNER_TOL = 1e-6


def morse_count(S, tol: float = 1e-9) -> int:
    S = np.asarray(S, dtype=float)
    if S.size == 0:
        return 0
    return int(np.sum(K.sym_eig(S).eigenvalues < -tol))


def lambda_infty(V: Potential, s0: float, cushion: float = 4.0) -> float:
    if not 0.0 < s0 < 1.0:
        raise ValueError("s0 must lie in (0, 1)")
    return V.sup_norm(1024) + cushion / (s0 * s0)


def spectral_floor(p: Problem, s: float = 1.0) -> float:
    """A bound b with spec(H_s) >= -b, from the trace inequality at both ends.

    |u(e)|^2 <= d |u'|^2 + (1/s + 1/d)|u|^2 on [0, s]; taking d = 1/c with c the
    total Robin strength absorbs the boundary terms into the kinetic term.
    """
    c = K.norm(p.dec0.robin) + K.norm(p.dec1.robin)
    return p.potential.sup_norm(1024) + c / s + c * c


def _box_lambda(p: Problem, s0: float) -> float:
    st = p.settings
    if st.lambda_inf is not None:
        return st.lambda_inf
    return max(lambda_infty(p.potential, s0, st.cushion), 1.25 * spectral_floor(p, s0) + 1.0)


@dataclass
class MorseReport:
    principalMaslov: int
    morB: int
    morCorrection: int
    morH: int
    gamma1: int | None = None
    gamma3: int | None = None
    gamma4: int | None = None
    oracleCount: int | None = None
    nondegenerate: bool = True
    crossings: dict = field(default_factory=dict)
    bEigenvalues: list = field(default_factory=list)
    correctionEigenvalues: list = field(default_factory=list)
    s0: float | None = None
    lambdaInf: float | None = None
    warnings: list = field(default_factory=list)
    box: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.morH != -self.principalMaslov + self.morB + self.morCorrection:
            raise AssertionError("morH does not match its assembly")

    @property
    def homotopy_sum(self) -> int | None:
        if None in (self.gamma1, self.gamma3, self.gamma4):
            return None
        return self.gamma1 + self.principalMaslov + self.gamma3 + self.gamma4

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.pop("box", None)
        d["crossings"] = {k: [e.to_dict() for e in v] for k, v in self.crossings.items()}
        return d


def _corner_warning(path) -> bool:
    return bool(np.min(circ_dist(path.phases[-1], math.pi)) < CORNER_TOL)


def morse_via_theorem(p: Problem, box: bool = True, oracle: bool = False, crossings: bool = False,
                      max_halvings: int = 3) -> MorseReport:
    """Mor(H) = -Mas(Gamma2) + Mor(B) + Mor(correction).

    With `box`, the whole rectangle is traversed as well; if the bottom-shelf
    side disagrees with the shelf matrices, s0 was not small enough and is halved.
    """
    shelf = p.shelf
    morB = morse_count(shelf.bMatrix, shelf.kernel_tol)
    nd_tol = 1e-6 * (1.0 + K.norm(shelf.correction)) if shelf.correction.size else 0.0
    morC = morse_count(shelf.correction, nd_tol)
    warnings = []
    if not shelf.nondegenerate:
        warnings.append("correction matrix has an eigenvalue near zero; higher-order terms are needed")

    s0 = p.settings.s0
    g1 = g3 = g4 = None
    lam_inf = None
    bx = None
    paths = {}
    if box:
        for attempt in range(max_halvings + 1):
            lam_inf = _box_lambda(p, s0)
            bx = maslov_box(p, s0, lam_inf)
            g1, principal, g3, g4 = bx.indices
            lam_inf = bx.lambda_inf
            if g1 == -(morB + morC) or not shelf.nondegenerate:
                break
            if attempt == max_halvings:
                warnings.append(f"bottom side index {g1} disagrees with -(Mor B + Mor correction) at s0={s0:g}")
                break
            s0 *= 0.5
        paths = dict(zip(("Gamma1", "Gamma2", "Gamma3", "Gamma4"), bx.paths))
        p2 = bx.paths[1]
    else:
        principal, p2 = spectral_flow(PathSegment(SegmentKind.GAMMA2, 0.0, s0, 1.0, p.settings.samples), p)
        paths = {"Gamma2": p2}
    if _corner_warning(p2):
        warnings.append("H has a kernel: a crossing sits at the corner s=1, lambda=0 and is not counted")

    ev = {}
    if crossings:
        for name, path in paths.items():
            ev[name] = locate_crossings(path.segment, p, path)

    rep = MorseReport(
        principalMaslov=int(principal), morB=morB, morCorrection=morC,
        morH=int(-principal + morB + morC), gamma1=g1, gamma3=g3, gamma4=g4,
        nondegenerate=bool(shelf.nondegenerate), crossings=ev,
        bEigenvalues=[float(x) for x in shelf.b_eigenvalues],
        correctionEigenvalues=[float(x) for x in shelf.correction_eigenvalues],
        s0=s0, lambdaInf=lam_inf, warnings=warnings, box=bx,
    )
    if oracle:
        from .oracle import oracle_count
        rep.oracleCount = oracle_count(p, 1.0, p.settings.mesh)
    return rep


def morse_via_gamma3(p: Problem, lambda_inf: float | None = None) -> int:
    """Count eigenvalues in (-lambda_inf, 0) as crossings along s = 1."""
    lam = lambda_inf if lambda_inf is not None else _box_lambda(p, p.settings.s0)
    seg = PathSegment(SegmentKind.GAMMA3, 1.0, 0.0, -lam, p.settings.samples)
    idx, _ = spectral_flow(seg, p)
    return idx


def count_below(p: Problem, lambda0: float) -> int:
    """Number of eigenvalues of H strictly below lambda0."""
    ph = sample_phases(p, PathSegment(SegmentKind.LAMBDA_SLICE, 1.0, lambda0 - 1.0, lambda0), [lambda0]).phases[0]
    if np.min(circ_dist(ph, math.pi)) < 1e-8:
        raise EigenvalueOnPath(f"lambda0={lambda0:g} is (numerically) an eigenvalue of H")
    if lambda0 == 0.0:
        return morse_via_theorem(p).morH
    q = p.with_potential(p.potential.shifted(lambda0))
    return morse_via_theorem(q).morH


def perturbation_prediction(p: Problem, s: float):
    """Small-s eigenvalues of H(s): first order s*spec(B), second order s^2*spec(correction)."""
    shelf = p.shelf
    if shelf.d == 0:
        raise EmptyBottomShelf("ker P_D0 and ker P_D1 intersect trivially")
    mu = shelf.b_eigenvalues
    first = [float(s * x) for x in mu if abs(x) > shelf.kernel_tol]
    second = [float(s * s * x) for x in shelf.correction_eigenvalues]
    return first, second


@dataclass
class AsymptoticsRow:
    s: float
    predicted: list
    observed: list
    relative_errors: list

    @property
    def worst(self) -> float:
        return max(self.relative_errors) if self.relative_errors else 0.0


def perturbation_errors(p: Problem, s_values=(0.08, 0.04, 0.02), N: int | None = None):
    """Compare small-s predictions with the d oracle eigenvalues of H(s) nearest zero."""
    from .oracle import assemble, lowest_eigenvalues

    d = p.shelf.d
    if d == 0:
        raise EmptyBottomShelf("ker P_D0 and ker P_D1 intersect trivially")
    rows = []
    for s in s_values:
        first, second = perturbation_prediction(p, s)
        pred = np.array(first + second)
        vals = lowest_eigenvalues(assemble(p, s, N), min(8, d + 4))
        near = np.sort(vals[np.argsort(np.abs(vals))[:d]])
        cost = np.abs(near[:, None] - pred[None, :]) / np.maximum(np.abs(pred[None, :]), 1e-300)
        perm = K.best_assignment(cost)
        obs = near[np.argsort(perm)]
        errs = [float(abs(o - q) / abs(q)) for o, q in zip(obs, pred)]
        rows.append(AsymptoticsRow(float(s), pred.tolist(), obs.tolist(), errs))
    return rows


def asymptotics_ok(rows, bound: float = 0.15) -> bool:
    """Within `bound` at the smallest s, and strictly better as s shrinks."""
    rows = sorted(rows, key=lambda r: r.s, reverse=True)
    worst = [r.worst for r in rows]
    return worst[-1] <= bound and all(a > b for a, b in zip(worst, worst[1:]))
