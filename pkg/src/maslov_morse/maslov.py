"""Spectral flow of the unitary family W~(s, lambda) through -1.

W~ = (X + iZ)(X - iZ)^{-1} B~ has eigenvalue -1 exactly when the shot frame meets
the right boundary plane.  Along a path segment we sample eigenphases, match
them between neighbouring samples and count crossings of the unwrapped phases
through pi with a half-open arc rule: entering [pi, 3pi) counts +1, leaving it
counts -1.

A step is bisected when any of these hold:
  * a matched phase moves more than pi/4;
  * the crossing-form norm at either end, times the step, exceeds pi/4;
  * on a lambda segment, some phase moves against the monotone direction;
  * the number of crossings seen in the step has the wrong parity compared
    with the sign change of E = det(b1 X + b2 Z) / sqrt(det(X^t X + Z^t Z)),
    which vanishes exactly at crossings.  This catches a phase that spins a
    full turn between two samples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import kernels as K
from .errors import DegenerateFrame, HomotopyCheckFailed, NotUnitary, RefinementExhausted, Singular
from .shooting import Frame, integrate_frames

TWO_PI = 2.0 * math.pi
UNITARY_TOL = 1e-8
PHASE_UNITARY_TOL = 1e-6
MAX_MOVE = math.pi / 4
MIN_STEP = 1e-9
SNAP = 1e-10
BACKWARD_TOL = 1e-9
CHUNK = 128
EVANS_TOL = 1e-8


class SegmentKind(enum.Enum):
    GAMMA1 = "Gamma1"
    GAMMA2 = "Gamma2"
    GAMMA3 = "Gamma3"
    GAMMA4 = "Gamma4"
    LAMBDA_SLICE = "CustomLambdaSlice"
    S_SLICE = "CustomSSlice"

    @property
    def varies_lambda(self) -> bool:
        return self in (SegmentKind.GAMMA1, SegmentKind.GAMMA3, SegmentKind.LAMBDA_SLICE)


@dataclass(frozen=True)
class PathSegment:
    """`fixed` is s for lambda-slices and lambda for s-slices."""

    kind: SegmentKind
    fixed: float
    start: float
    end: float
    samples: int = 400

    def __post_init__(self):
        if self.start == self.end:
            raise ValueError("segment start and end coincide")
        if self.samples < 2:
            raise ValueError("need at least two samples")

    @property
    def varies_lambda(self) -> bool:
        return self.kind.varies_lambda

    def point(self, t: float) -> tuple[float, float]:
        """(s, lambda) at varying coordinate t."""
        return (self.fixed, t) if self.varies_lambda else (t, self.fixed)


@dataclass(frozen=True)
class CrossingEvent:
    location: float
    multiplicity: int
    direction: int

    def to_dict(self) -> dict:
        return {"location": self.location, "multiplicity": self.multiplicity, "direction": self.direction}


@dataclass
class PhasePath:
    segment: PathSegment
    coords: np.ndarray
    phases: np.ndarray      # (m, n) matched, in (-pi, pi]
    unwrapped: np.ndarray   # (m, n) continuous copies
    index: int
    crossings: list = field(default_factory=list)   # provisional: (k, track, direction)
    unitarity_defect: float = 0.0
    lagrangian_defect: float = 0.0
    winding_mismatch: float = 0.0
    monotonicity_violation: float = 0.0

    @property
    def samples(self):
        return list(zip(self.coords, self.phases, self.unwrapped))

    def phase_gap(self) -> np.ndarray:
        """Per sample, the smallest circular distance of any phase to pi."""
        return np.min(np.abs(np.angle(-np.exp(1j * self.phases))), axis=1)


def _check_unitary(W, tol):
    d = K.norm(W.conj().T @ W - np.eye(W.shape[0]))
    if d > tol:
        raise NotUnitary(f"unitarity defect {d:.3e} exceeds {tol:g}")
    return d


def _wtilde(X, Z, factor):
    try:
        A = K.solve(X - 1j * Z, factor)
    except Singular as e:
        raise DegenerateFrame(f"X - iZ is singular: {e}") from e
    return (X + 1j * Z) @ A


def wtilde(f: Frame, factor) -> np.ndarray:
    W = (f.X + 1j * f.Z) @ K.solve(f.X - 1j * f.Z, factor)
    _check_unitary(W, UNITARY_TOL)
    return W


def eigen_phases(W) -> np.ndarray:
    W = np.asarray(W, dtype=complex)
    _check_unitary(W, PHASE_UNITARY_TOL)
    ph = np.angle(K.complex_eig(W))
    ph[ph <= -math.pi] = math.pi
    return np.sort(ph)


def circ_dist(a, b):
    return np.abs(np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b)))))


def match_phases(prev, nxt):
    """Permutation p with nxt[p] lined up against prev, plus the largest move."""
    prev, nxt = np.asarray(prev, float), np.asarray(nxt, float)
    cost = circ_dist(prev[:, None], nxt[None, :])
    perm = K.best_assignment(cost)
    return perm, float(cost[np.arange(len(prev)), perm].max()) if len(prev) else 0.0


def _wrap(d):
    return (d + math.pi) % TWO_PI - math.pi


@dataclass
class _Samples:
    phases: np.ndarray
    dets: np.ndarray
    unit: np.ndarray
    lag: np.ndarray
    speed: np.ndarray
    evans: np.ndarray


def sample_phases(problem, seg: PathSegment, coords) -> _Samples:
    """Sorted eigenphases of W~ at each coordinate of a segment."""
    coords = np.asarray(coords, dtype=float)
    factor = problem.target.factor
    n = problem.n
    phases = np.empty((coords.size, n))
    dets = np.empty(coords.size, dtype=complex)
    unit = np.empty(coords.size)
    lag = np.empty(coords.size)
    speed = np.empty(coords.size)
    evans = np.empty(coords.size)
    b1, b2 = problem.right.a1, problem.right.a2
    eye = np.eye(n)
    for c0 in range(0, coords.size, CHUNK):
        cs = coords[c0:c0 + CHUNK]
        s, lam = (seg.fixed, cs) if seg.varies_lambda else (cs, seg.fixed)
        X, Z, G = integrate_frames(problem.left, problem.potential, s, lam, problem.settings.steps)
        if not seg.varies_lambda:
            Vs = problem.potential(cs) - seg.fixed * eye
        for j in range(cs.size):
            Xj, Zj = X[j], Z[j]
            Y = Xj - 1j * Zj
            try:
                Yinv = K.solve(Y, eye.astype(complex))
            except Singular as e:
                raise DegenerateFrame(f"X - iZ is singular: {e}") from e
            W = (Xj + 1j * Zj) @ Yinv @ factor
            # crossing form up to a unitary factor; its norm bounds how fast any phase turns
            rate = G[j] if seg.varies_lambda else Xj.T @ Vs[j] @ Xj - Zj.T @ Zj
            Om = 2.0 * Yinv.conj().T @ rate @ Yinv
            i = c0 + j
            speed[i] = float(np.max(np.abs(K.herm_eig(0.5 * (Om + Om.conj().T)))))
            unit[i] = _check_unitary(W, UNITARY_TOL)
            ph = np.angle(K.complex_eig(W))
            ph[ph <= -math.pi] = math.pi
            phases[i] = np.sort(ph)
            dets[i] = K.det(W)
            scale = 1.0 + K.norm(Xj) ** 2 + K.norm(Zj) ** 2
            lag[i] = K.norm(Xj.T @ Zj - Zj.T @ Xj) / scale
            gram = Xj.T @ Xj + Zj.T @ Zj
            evans[i] = K.det(b1 @ Xj + b2 @ Zj) / math.sqrt(abs(K.det(gram)))
    return _Samples(phases, dets, unit, lag, speed, evans)


def _snap(ph):
    ph = ph.copy()
    ph[circ_dist(ph, math.pi) < SNAP] = math.pi
    return ph


def _level(theta):
    return np.floor((theta - math.pi) / TWO_PI)


def spectral_flow(seg: PathSegment, problem, max_rounds: int = 60):
    """Signed count of eigenphases of W~ crossing -1 along the segment."""
    coords = list(np.linspace(seg.start, seg.end, seg.samples + 1))
    smp = sample_phases(problem, seg, coords)
    ph = list(smp.phases)
    dets, unit, lag, speed = list(smp.dets), list(smp.unit), list(smp.lag), list(smp.speed)
    evans = list(smp.evans)

    for _ in range(max_rounds):
        bad = []
        for k in range(len(coords) - 1):
            perm, move = match_phases(ph[k], ph[k + 1])
            dt = coords[k + 1] - coords[k]
            rough = move > MAX_MOVE or max(speed[k], speed[k + 1]) * abs(dt) > MAX_MOVE
            if seg.varies_lambda and not rough:
                # phases turn clockwise as lambda grows; a backward step hides a full turn
                back = np.max(_wrap(ph[k + 1][perm] - ph[k]) * np.sign(dt))
                rough = back > BACKWARD_TOL
            if not rough and min(abs(evans[k]), abs(evans[k + 1])) > EVANS_TOL:
                step = _wrap(ph[k + 1][perm] - ph[k])
                seen = int(np.abs(_level(ph[k] + step) - _level(ph[k])).sum())
                rough = (seen % 2 == 1) != (evans[k] * evans[k + 1] < 0)
            if rough:
                if abs(dt) < MIN_STEP:
                    raise RefinementExhausted(
                        f"phases still jump {move:.3f} rad across a step of {abs(coords[k + 1] - coords[k]):.1e} "
                        f"near {coords[k]:.9g} on {seg.kind.value}"
                    )
                bad.append(k)
        if not bad:
            break
        mids = [0.5 * (coords[k] + coords[k + 1]) for k in bad]
        new = sample_phases(problem, seg, mids)
        for off, k in enumerate(bad):
            at = k + 1 + off
            coords.insert(at, mids[off])
            ph.insert(at, new.phases[off])
            dets.insert(at, new.dets[off])
            unit.insert(at, new.unit[off])
            lag.insert(at, new.lag[off])
            speed.insert(at, new.speed[off])
            evans.insert(at, new.evans[off])
    else:
        raise RefinementExhausted(f"refinement did not settle on {seg.kind.value}")

    coords = np.array(coords)
    m, n = len(coords), problem.n
    ph[0], ph[-1] = _snap(ph[0]), _snap(ph[-1])
    matched = np.empty((m, n))
    unwrapped = np.empty((m, n))
    matched[0] = unwrapped[0] = ph[0]
    winding = 0.0
    for k in range(m - 1):
        perm, _ = match_phases(matched[k], ph[k + 1])
        matched[k + 1] = ph[k + 1][perm]
        step = _wrap(matched[k + 1] - matched[k])
        unwrapped[k + 1] = unwrapped[k] + step
        dd = _wrap(np.angle(dets[k + 1] / dets[k]) - step.sum())
        winding = max(winding, abs(dd))

    lv = _level(unwrapped)
    index = int((lv[-1] - lv[0]).sum())
    crossings = []
    for k in range(m - 1):
        for j in np.nonzero(lv[k + 1] != lv[k])[0]:
            crossings.append((k, int(j), int(np.sign(lv[k + 1, j] - lv[k, j]))))

    viol = 0.0
    if seg.varies_lambda:
        dlam = np.diff(coords)[:, None]
        viol = float(np.max(np.maximum(np.diff(unwrapped, axis=0) * np.sign(dlam), 0.0), initial=0.0))

    path = PhasePath(seg, coords, matched, unwrapped, index, crossings, float(max(unit)), float(max(lag)),
                     float(winding), viol)
    return index, path


def _track_at(problem, seg, t, ref_phases, ref_unwrapped, track):
    ph = sample_phases(problem, seg, [t]).phases[0]
    perm, _ = match_phases(ref_phases, ph)
    return ref_unwrapped[track] + _wrap(ph[perm][track] - ref_phases[track]), ph


def locate_crossings(seg: PathSegment, problem, path: PhasePath | None = None, xtol: float = 1e-9):
    """Refined crossing events along a segment (bisection on the tracked phase)."""
    if path is None:
        _, path = spectral_flow(seg, problem)
    events = []
    for k, track, direction in path.crossings:
        a, b = path.coords[k], path.coords[k + 1]
        ua, ub = path.unwrapped[k, track], path.unwrapped[k + 1, track]
        level = math.pi + TWO_PI * max(_level(ua), _level(ub))
        ref_ph, ref_un = path.phases[k], path.unwrapped[k]
        if ub == level:
            loc = b
        elif ua == level:
            loc = a
        else:
            def g(t):
                return _track_at(problem, seg, t, ref_ph, ref_un, track)[0] - level
            loc = brentq(g, a, b, xtol=xtol) if g(a) * g(b) < 0 else 0.5 * (a + b)
        events.append((loc, direction, track))

    events.sort(key=lambda e: e[0])
    out: list[CrossingEvent] = []
    i = 0
    while i < len(events):
        j = i
        while j + 1 < len(events) and abs(events[j + 1][0] - events[i][0]) < 1e-7 and events[j + 1][1] == events[i][1]:
            j += 1
        group = events[i:j + 1]
        loc = float(np.mean([e[0] for e in group]))
        ph = sample_phases(problem, seg, [loc]).phases[0]
        near = int(np.sum(circ_dist(ph, math.pi) < 1e-6))
        out.append(CrossingEvent(loc, max(len(group), near), group[0][1]))
        i = j + 1
    return out


def box_segments(s0: float, lambda_inf: float, samples: int = 400):
    return (
        PathSegment(SegmentKind.GAMMA1, s0, -lambda_inf, 0.0, samples),
        PathSegment(SegmentKind.GAMMA2, 0.0, s0, 1.0, samples),
        PathSegment(SegmentKind.GAMMA3, 1.0, 0.0, -lambda_inf, samples),
        PathSegment(SegmentKind.GAMMA4, -lambda_inf, 1.0, s0, samples),
    )


@dataclass
class BoxResult:
    s0: float
    lambda_inf: float
    indices: tuple
    paths: tuple

    @property
    def total(self) -> int:
        return int(sum(self.indices))

    def __getitem__(self, i):
        return self.indices[i]


def maslov_box(problem, s0: float | None = None, lambda_inf: float | None = None, samples: int | None = None,
               max_doublings: int = 6) -> BoxResult:
    """Indices of the four sides of the box, doubling lambda_inf until the bottom side is clean."""
    from .morse import lambda_infty

    st = problem.settings
    s0 = st.s0 if s0 is None else s0
    samples = st.samples if samples is None else samples
    if lambda_inf is None:
        lambda_inf = st.lambda_inf if st.lambda_inf is not None else lambda_infty(problem.potential, s0, st.cushion)
    for _ in range(max_doublings + 1):
        segs = box_segments(s0, lambda_inf, samples)
        idx4, path4 = spectral_flow(segs[3], problem)
        if not path4.crossings:
            break
        lambda_inf *= 2.0
    else:
        raise HomotopyCheckFailed(f"bottom side still has crossings at lambda_inf={lambda_inf:g}")
    results = [spectral_flow(sg, problem) for sg in segs[:3]] + [(idx4, path4)]
    indices = tuple(r[0] for r in results)
    box = BoxResult(s0, lambda_inf, indices, tuple(r[1] for r in results))
    if box.total != 0:
        raise HomotopyCheckFailed(f"box indices {indices} sum to {box.total}; refine samples or steps")
    return box


def _A(f: Frame, factor):
    return K.solve(f.X - 1j * f.Z, np.asarray(factor, dtype=complex))


def omega_lambda(f: Frame, factor) -> np.ndarray:
    A = _A(f, factor)
    Om = -2.0 * A.conj().T @ f.gram @ A
    return 0.5 * (Om + Om.conj().T)


def omega_s(f: Frame, factor, V, lam: float) -> np.ndarray:
    A = _A(f, factor)
    n = f.n
    M = f.X.T @ (V(f.s) - lam * np.eye(n)) @ f.X - f.Z.T @ f.Z
    Om = 2.0 * A.conj().T @ M @ A
    return 0.5 * (Om + Om.conj().T)
