"""Tournaments of Volterra operators and geometric-extinction predictions.

Edge rule: the edge between ``k`` and ``i`` points ``k -> i`` when
``a_ki < 0``, i.e. from the type that loses ground to the type that gains.
The strong components of a tournament are totally ordered; we list them
source first.  The last class (the sink, which every other class points
into) holds the surviving types: in two dimensions ``a_12 > 0`` drives
``x_2`` to zero and the rule gives the edge ``2 -> 1``, so the survivor is
the head of the edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoordinateZero, DegenerateCoefficients, InsufficientData, ModelError

TIE_TOL = 1e-12
EXTINCT = 1e-300


@dataclass(frozen=True)
class Tournament:
    """``beats[k, i]`` is True iff the edge is directed ``k -> i``."""

    beats: np.ndarray

    @property
    def n(self) -> int:
        return self.beats.shape[0]

    @classmethod
    def from_edges(cls, n: int, edges) -> "Tournament":
        beats = np.zeros((n, n), dtype=bool)
        for k, i in edges:
            if k == i or beats[i, k] or beats[k, i]:
                raise ModelError(f"edge ({k},{i}) is a loop or repeats a pair")
            beats[k, i] = True
        missing = [(k, i) for k in range(n) for i in range(k + 1, n) if not (beats[k, i] or beats[i, k])]
        if missing:
            raise ModelError(f"tournament is missing pairs {missing}")
        beats.flags.writeable = False
        return cls(beats)

    def edges(self) -> list[tuple[int, int]]:
        return [(int(k), int(i)) for k, i in zip(*np.nonzero(self.beats))]


def build_tournament(a, tol: float = TIE_TOL) -> Tournament:
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    tied = [(k, i) for k in range(n) for i in range(k + 1, n) if abs(a[k, i]) <= tol]
    if tied:
        raise DegenerateCoefficients(tied)
    beats = a < 0
    np.fill_diagonal(beats, False)
    beats.flags.writeable = False
    return Tournament(beats)


def strong_components(beats) -> list[list[int]]:
    """Tarjan's algorithm, iterative. Components come out sinks first."""
    beats = np.asarray(beats, dtype=bool)
    n = beats.shape[0]
    succ = [list(np.flatnonzero(beats[v])) for v in range(n)]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    out = []
    counter = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            for p in range(pos, len(succ[v])):
                w = succ[v][p]
                if index[w] < 0:
                    work.append((v, p + 1))
                    work.append((w, 0))
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            else:
                if low[v] == index[v]:
                    block = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        block.append(w)
                        if w == v:
                            break
                    out.append(sorted(block))
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
    return out


@dataclass(frozen=True)
class Condensation:
    classes: tuple[tuple[int, ...], ...]

    @property
    def sink(self) -> tuple[int, ...]:
        return self.classes[-1]


def condensation(t: Tournament) -> Condensation:
    """Strong components ordered so that every edge between classes points forward."""
    blocks = strong_components(t.beats)[::-1]
    return Condensation(tuple(tuple(b) for b in blocks))


def is_strong(t: Tournament) -> bool:
    return len(strong_components(t.beats)) <= 1


@dataclass(frozen=True)
class DecayPrediction:
    survivors: tuple[int, ...]
    decaying: tuple[int, ...]
    condensation: Condensation
    strong: bool


def predict_decay(a) -> DecayPrediction:
    """Types outside the sink class go extinct geometrically from interior starts."""
    t = build_tournament(a)
    cond = condensation(t)
    survivors = tuple(sorted(cond.sink))
    decaying = tuple(v for v in range(t.n) if v not in survivors)
    return DecayPrediction(survivors, decaying, cond, len(cond.classes) == 1)


@dataclass(frozen=True)
class DecayFit:
    coordinate: int
    slope: float
    intercept: float
    r2: float
    samples: int
    extinct: bool

    @property
    def rate(self) -> float:
        """Fitted per-step ratio x_j(l+1) / x_j(l)."""
        return float(np.exp(self.slope))

    @property
    def geometric(self) -> bool:
        return self.slope < 0 and self.r2 >= 0.99


def decay_fit(trajectory, j: int, min_points: int = 100, max_samples: int = 1000) -> DecayFit:
    """Least-squares line through ``log x_j`` against the step index.

    Uses the second half of the recorded points where ``x_j`` is above
    1e-300, keeping at most the last ``max_samples`` of them.
    """
    steps = np.asarray(trajectory.indices)
    x = np.asarray(trajectory.points)[:, j]
    if x[0] <= EXTINCT:
        raise CoordinateZero(f"coordinate {j + 1} is already zero at the first recorded point")
    alive = x > EXTINCT
    extinct = not alive[-1]
    steps, x = steps[alive], x[alive]
    start = max(len(x) // 2, len(x) - max_samples)
    steps, x = steps[start:], x[start:]
    if len(x) < min_points:
        raise InsufficientData(f"coordinate {j + 1}: {len(x)} usable points, need {min_points}")
    y = np.log(x)
    slope, intercept = np.polyfit(steps.astype(float), y, 1)
    resid = y - (slope * steps + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(j, float(slope), float(intercept), r2, len(x), extinct)
