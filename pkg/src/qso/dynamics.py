"""Simplex states, operator application, trajectories and limit classification."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .construct import SkewMatrix
from .errors import DimensionMismatch, ModelError, NumericalIntegrityError, QsoError, TooShort
from .tournament import decay_fit

NEG_TOL = 1e-12
SUM_TOL = 1e-9
RESIDUAL_TOL = 1e-9
WINDOW = 50
MAX_RECORDED = 2048
SET_TOL = 1e-6


def simplex_point(x, n: int | None = None) -> np.ndarray:
    """Validate a user-supplied probability vector; clamp tiny negatives and renormalize."""
    x = np.array(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ModelError(f"a simplex point must be a nonempty vector, got shape {x.shape}")
    if n is not None and x.size != n:
        raise DimensionMismatch(f"point has {x.size} coordinates, expected {n}")
    if not np.all(np.isfinite(x)):
        raise ModelError("simplex point has non-finite coordinates")
    if x.min() < -NEG_TOL:
        raise ModelError(f"negative coordinate {x.min()!r}")
    x = np.clip(x, 0.0, None)
    if abs(x.sum() - 1.0) > SUM_TOL:
        raise ModelError(f"coordinates sum to {x.sum()!r}, not 1")
    return x / x.sum()


def uniform_point(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def random_point(n: int, rng) -> np.ndarray:
    return rng.dirichlet(np.ones(n))


def vertex(n: int, k: int) -> np.ndarray:
    e = np.zeros(n)
    e[k] = 1.0
    return e


def on_boundary(x, tol: float = 0.0) -> bool:
    return bool(np.min(x) <= tol)


def is_interior(x, tol: float = 0.0) -> bool:
    return not on_boundary(x, tol)


def _project(raw: np.ndarray) -> tuple[np.ndarray, float, float]:
    lowest = float(raw.min())
    total = float(raw.sum())
    if lowest < -NEG_TOL or not math.isfinite(total) or abs(total - 1.0) > SUM_TOL:
        raise NumericalIntegrityError(
            f"iterate left the simplex: min coordinate {lowest!r}, sum {total!r}"
        )
    x = np.clip(raw, 0.0, None)
    return x / x.sum(), abs(total - 1.0), lowest


def apply(op, x) -> np.ndarray:
    x = simplex_point(x)
    if x.size != op.n:
        raise DimensionMismatch(f"point has {x.size} coordinates, operator has {op.n}")
    return _project(op.apply(x))[0]


def apply_volterra(a, x) -> np.ndarray:
    a = a if isinstance(a, SkewMatrix) else SkewMatrix(a)
    return apply(a, x)


def is_fixed(op, x, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(apply(op, x) - simplex_point(x))) <= tol)


def _logsumexp(v, axis=-1):
    top = v.max(axis=axis, keepdims=True)
    top[~np.isfinite(top)] = 0.0
    return np.log(np.exp(v - top).sum(axis=axis)) + top.squeeze(axis)


class _LogStepper:
    """Volterra step carried out on log-coordinates so tiny masses never underflow."""

    def __init__(self, a: SkewMatrix, x0):
        with np.errstate(divide="ignore"):
            self.log_gain = np.log1p(a.a)
            self.lx = np.log(x0)

    def step(self):
        with np.errstate(divide="ignore"):
            y = self.lx + _logsumexp(self.log_gain + self.lx, axis=1)
            total = float(_logsumexp(y[None, :], axis=1)[0])
        drift = abs(math.expm1(total))
        if not math.isfinite(total) or drift > SUM_TOL:
            raise NumericalIntegrityError(f"iterate left the simplex: sum {math.exp(total)!r}")
        self.lx = y - total
        return np.exp(self.lx), drift, 0.0

    def positive(self):
        return np.isfinite(self.lx)


class _LinearStepper:
    def __init__(self, op, x0):
        self.op = op
        self.x = x0

    def step(self):
        self.x, drift, lowest = _project(self.op.apply(self.x))
        return self.x, drift, lowest

    def positive(self):
        return self.x > 0


def escaping(op, x, positive, tol: float = SET_TOL) -> list[int]:
    """Coordinates that are (numerically) zero at ``x``, still carry mass, and grow there.

    Only Volterra operators have invariant faces, so only they get a verdict.
    A trajectory cannot converge to ``x`` while such a coordinate exists.
    """
    if not isinstance(op, SkewMatrix):
        return []
    g = op.growth(x)
    return [int(k) for k in np.flatnonzero((x <= tol) & positive & (g > 1.0 + RESIDUAL_TOL))]


@dataclass
class Trajectory:
    initial: np.ndarray
    indices: np.ndarray
    points: np.ndarray
    steps: int
    reason: str
    tail_residuals: np.ndarray
    max_sum_drift: float
    min_raw: float
    tol: float
    window: int
    positive: np.ndarray
    operator: object = field(default=None, repr=False)

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]


def iterate(op, x0, max_steps: int = 10_000, tol: float = RESIDUAL_TOL, record_stride: int | None = None,
            window: int = WINDOW, log_space: bool | None = None) -> Trajectory:
    """Run x(l+1) = V(x(l)).

    Stops with reason ``"converged"`` once the sup-norm step is at most
    ``tol`` for ``window`` consecutive steps (and at least ``2 * window``
    steps have run), otherwise ``"budget"`` after ``max_steps``.  Every
    ``record_stride``-th point is kept (by default at most ~2048 of them)
    together with the final window.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    x = simplex_point(x0, op.n)
    stride = record_stride or max(1, math.ceil(max_steps / MAX_RECORDED))
    if log_space is None:
        log_space = isinstance(op, SkewMatrix)
    stepper = _LogStepper(op, x) if log_space else _LinearStepper(op, x)

    rec_idx, rec_pts = [0], [x]
    recent = deque(maxlen=window + 1)
    recent.append((0, x))
    residuals = deque(maxlen=window)
    calm = 0
    max_drift, min_raw = 0.0, float(x.min())
    reason = "budget"
    l = 0
    while l < max_steps:
        new, drift, lowest = stepper.step()
        l += 1
        max_drift = max(max_drift, drift)
        min_raw = min(min_raw, lowest)
        r = float(np.max(np.abs(new - x)))
        x = new
        residuals.append(r)
        calm = calm + 1 if r <= tol else 0
        if l % stride == 0:
            rec_idx.append(l)
            rec_pts.append(x)
        recent.append((l, x))
        if calm >= window and l >= 2 * window and calm % window == 0 and not escaping(op, x, stepper.positive()):
            reason = "converged"
            break

    seen = set(rec_idx)
    for i, p in recent:
        if i not in seen:
            rec_idx.append(i)
            rec_pts.append(p)
    order = np.argsort(rec_idx)
    return Trajectory(
        initial=simplex_point(x0),
        indices=np.asarray(rec_idx)[order],
        points=np.asarray(rec_pts)[order],
        steps=l,
        reason=reason,
        tail_residuals=np.asarray(residuals),
        max_sum_drift=max_drift,
        min_raw=min_raw,
        tol=tol,
        window=window,
        positive=stepper.positive().copy(),
        operator=op,
    )


@dataclass(frozen=True)
class FixedSet:
    """Linear set given by vanishing coordinates and equal coordinate pairs (0-based)."""

    name: str
    zero: tuple[int, ...] = ()
    equal: tuple[tuple[int, int], ...] = ()

    def distance(self, x) -> float:
        terms = [abs(x[k]) for k in self.zero] + [abs(x[i] - x[j]) for i, j in self.equal]
        return float(max(terms, default=0.0))

    def contains(self, x, tol: float = SET_TOL) -> bool:
        return self.distance(x) <= tol

    def sample(self, n: int, rng) -> np.ndarray:
        """Random point of the set: pool tied coordinates, drop zeroed ones."""
        parent = list(range(n))

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v

        for i, j in self.equal:
            parent[find(i)] = find(j)
        dead = {find(k) for k in self.zero}
        classes: dict[int, list[int]] = {}
        for v in range(n):
            classes.setdefault(find(v), []).append(v)
        live = [c for r, c in classes.items() if r not in dead]
        mass = rng.dirichlet(np.ones(len(live)))
        x = np.zeros(n)
        for share, members in zip(mass, live):
            x[members] = share / len(members)
        return x


class Limit(str, Enum):
    POINT = "ConvergedToPoint"
    SET = "ConvergedToSet"
    NONCONVERGENT = "NonConvergent"
    UNDECIDED = "Undecided"


@dataclass
class LimitReport:
    classification: Limit
    limit: np.ndarray | None
    final: np.ndarray
    residual: float
    amplitude: float
    on_boundary: bool
    min_coordinate: tuple[float, float]
    memberships: dict
    fixed_set: str | None = None
    escaping: tuple[int, ...] = ()
    decay: dict = field(default_factory=dict)


def classify_limit(traj: Trajectory, fixed_sets=(), tol: float | None = None, set_tol: float = SET_TOL) -> LimitReport:
    W = traj.window
    tol = traj.tol if tol is None else tol
    if traj.steps + 1 < 2 * W:
        raise TooShort(f"{traj.steps + 1} iterates, need at least {2 * W}")
    final = traj.final
    res = traj.tail_residuals[-W:]
    residual = float(res.max()) if res.size else 0.0
    tail_mask = traj.indices >= traj.steps / 2
    tail = traj.points[tail_mask]
    tail_idx = traj.indices[tail_mask]
    amplitude = float((tail.max(axis=0) - tail.min(axis=0)).max())
    mid = (traj.steps / 2 + traj.steps) / 2
    halves = [tail[tail_idx < mid], tail[tail_idx >= mid]]
    sustained = all(h.shape[0] > 1 and (h.max(axis=0) - h.min(axis=0)).max() >= 10 * tol for h in halves)

    esc = tuple(escaping(traj.operator, final, traj.positive, set_tol)) if traj.operator is not None else ()
    memberships = {s.name: s.contains(final, set_tol) for s in fixed_sets}
    window_pts = traj.points[traj.indices > traj.steps - W]

    if res.size >= W and residual <= tol and not esc:
        cls, limit, name = Limit.POINT, final.copy(), None
    else:
        cls, limit, name = Limit.UNDECIDED, None, None
        if not esc:
            for s in fixed_sets:
                if all(s.contains(p, set_tol) for p in window_pts):
                    cls, name = Limit.SET, s.name
                    break
        if cls is Limit.UNDECIDED and sustained:
            cls = Limit.NONCONVERGENT

    decay = {}
    for j in np.flatnonzero(final < set_tol):
        try:
            decay[int(j)] = decay_fit(traj, int(j))
        except QsoError as exc:
            decay[int(j)] = exc
    return LimitReport(
        classification=cls,
        limit=limit,
        final=final.copy(),
        residual=residual,
        amplitude=amplitude,
        on_boundary=on_boundary(final, set_tol),
        min_coordinate=(float(tail[0].min()), float(final.min())),
        memberships=memberships,
        fixed_set=name,
        escaping=esc,
        decay=decay,
    )
