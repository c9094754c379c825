"""Graphs, their components, configuration spaces and product measures.

Indexing conventions used throughout the package:

* components are ordered by their smallest vertex identifier;
* inside a component, vertices are ascending and a configuration is a
  tuple of symbols, one per vertex, enumerated lexicographically with
  the alphabet order as digit order;
* a cell is a tuple of per-component configuration indices and its
  0-based index is the mixed-radix number with the first component as
  the most significant digit.

For the two-vertex, edgeless graph with alphabet ``(A, a)`` this gives
the order ``(A,A), (A,a), (a,A), (a,a)``.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapExceeded, ModelError

DEFAULT_CELL_CAP = 4096
WEIGHT_FLOOR = 1e-12
SUM_TOL = 1e-9


def cell_cap() -> int:
    """Cell-count cap, overridable through ``QSO_CELL_CAP``."""
    raw = os.environ.get("QSO_CELL_CAP")
    if raw is None:
        return DEFAULT_CELL_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ModelError(f"QSO_CELL_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ModelError(f"QSO_CELL_CAP must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class Graph:
    """Finite simple graph. Edges are stored as sorted vertex pairs."""

    vertices: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    @classmethod
    def from_lists(cls, vertices: Iterable[int], edges: Iterable[Sequence[int]] = ()) -> "Graph":
        vertices = tuple(vertices)
        problems = []
        for v in vertices:
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                problems.append(f"vertex {v!r} is not a positive integer")
        if len(set(vertices)) != len(vertices):
            problems.append("duplicate vertex identifiers")
        known = set(vertices)
        seen = set()
        for e in edges:
            e = tuple(e)
            if len(e) != 2:
                problems.append(f"edge {e!r} does not have two endpoints")
                continue
            u, v = e
            if u == v:
                problems.append(f"loop at vertex {u}")
                continue
            if u not in known or v not in known:
                problems.append(f"edge ({u},{v}) uses an unknown vertex")
                continue
            key = (min(u, v), max(u, v))
            if key in seen:
                problems.append(f"multiple edge ({u},{v})")
            seen.add(key)
        if problems:
            raise ModelError("invalid graph", problems)
        return cls(tuple(int(v) for v in vertices), frozenset((int(u), int(v)) for u, v in seen))


@dataclass(frozen=True)
class Component:
    """A maximal connected subgraph together with its alphabet."""

    index: int
    vertices: tuple[int, ...]
    alphabet: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return len(self.alphabet) ** len(self.vertices)

    def configurations(self) -> list[tuple[str, ...]]:
        return list(itertools.product(self.alphabet, repeat=len(self.vertices)))

    def configuration_label(self, k: int) -> str:
        return ",".join(self.configurations()[k])

    def with_alphabet(self, alphabet: Sequence[str]) -> "Component":
        alphabet = tuple(str(s) for s in alphabet)
        if not alphabet:
            raise ModelError(f"component {self.index} has an empty alphabet")
        if len(set(alphabet)) != len(alphabet):
            raise ModelError(f"component {self.index} alphabet has repeated symbols")
        return Component(self.index, self.vertices, alphabet)


def connected_components(graph: Graph) -> list[Component]:
    """Maximal connected vertex sets in canonical order, alphabets left empty."""
    parent = {v: v for v in graph.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in graph.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)

    groups: dict[int, list[int]] = {}
    for v in graph.vertices:
        groups.setdefault(find(v), []).append(v)
    blocks = sorted((sorted(vs) for vs in groups.values()), key=lambda vs: vs[0])
    return [Component(i + 1, tuple(vs)) for i, vs in enumerate(blocks)]


class ConfigurationSpace:
    """Product of the per-component configuration spaces."""

    def __init__(self, components: Sequence[Component], cap: int | None = None):
        self.components = tuple(components)
        for c in self.components:
            if not c.alphabet:
                raise ModelError(f"component {c.index} has no alphabet")
        self.sizes = tuple(c.size for c in self.components)
        self.n = math.prod(self.sizes)
        self.cap = cell_cap() if cap is None else cap
        self.check_cap()
        self._digits = None

    @property
    def m(self) -> int:
        return len(self.components)

    def check_cap(self):
        if self.n > self.cap:
            raise CapExceeded("configuration space", self.n, self.cap)

    @property
    def digits(self) -> np.ndarray:
        """``(n, m)`` array, row ``k`` holding the component digits of cell ``k``."""
        if self._digits is None:
            self.check_cap()
            if self.m == 0:
                self._digits = np.zeros((1, 0), dtype=np.int64)
            else:
                grid = np.indices(self.sizes).reshape(self.m, -1).T
                self._digits = np.ascontiguousarray(grid, dtype=np.int64)
            self._digits.flags.writeable = False
        return self._digits

    def index_of(self, cell: Sequence[int]) -> int:
        cell = tuple(int(d) for d in cell)
        if len(cell) != self.m or any(not 0 <= d < s for d, s in zip(cell, self.sizes)):
            raise ModelError(f"cell {cell} is not in a space of shape {self.sizes}")
        return int(np.ravel_multi_index(cell, self.sizes)) if self.m else 0

    def cell_of(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.n:
            raise ModelError(f"cell index {index} out of range 0..{self.n - 1}")
        if self.m == 0:
            return ()
        return tuple(int(d) for d in np.unravel_index(index, self.sizes))

    def enumerate_cells(self) -> list[tuple[int, ...]]:
        self.check_cap()
        return [tuple(int(d) for d in row) for row in self.digits]

    def label(self, index: int) -> tuple[tuple[str, ...], ...]:
        cell = self.cell_of(index)
        return tuple(c.configurations()[d] for c, d in zip(self.components, cell))

    def label_str(self, index: int) -> str:
        return "(" + "; ".join(",".join(conf) for conf in self.label(index)) + ")"

    def __repr__(self):
        return f"ConfigurationSpace(sizes={self.sizes}, n={self.n})"


def make_space(graph: Graph, alphabet=None, alphabets=None, cap=None) -> ConfigurationSpace:
    """Attach alphabets to the components of ``graph``.

    ``alphabet`` is shared by every component; ``alphabets`` gives one per
    component, either as a list in canonical order or a mapping keyed by
    the 1-based component index.
    """
    comps = connected_components(graph)
    if (alphabet is None) == (alphabets is None):
        raise ModelError("give exactly one of a shared alphabet or per-component alphabets")
    if alphabet is not None:
        comps = [c.with_alphabet(alphabet) for c in comps]
    else:
        if isinstance(alphabets, Mapping):
            keyed = {int(k): v for k, v in alphabets.items()}
            missing = [c.index for c in comps if c.index not in keyed]
            if missing or len(keyed) != len(comps):
                raise ModelError(f"alphabets must be given for components 1..{len(comps)}")
            comps = [c.with_alphabet(keyed[c.index]) for c in comps]
        else:
            alphabets = list(alphabets)
            if len(alphabets) != len(comps):
                raise ModelError(f"expected {len(comps)} alphabets, got {len(alphabets)}")
            comps = [c.with_alphabet(a) for c, a in zip(comps, alphabets)]
    return ConfigurationSpace(comps, cap=cap)


def component_measure(component: Component, weights) -> np.ndarray:
    """Validate one component's weight table and renormalize it exactly."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (component.size,):
        raise ModelError(
            f"component {component.index} needs {component.size} weights, got shape {w.shape}"
        )
    problems = []
    for k, value in enumerate(w):
        if not np.isfinite(value) or value <= WEIGHT_FLOOR:
            problems.append(
                f"component {component.index} configuration "
                f"{component.configuration_label(k)!r} has non-positive weight {float(value)!r}"
            )
    if problems:
        raise ModelError("measure weights must be strictly positive", problems)
    total = w.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise ModelError(f"component {component.index} weights sum to {total!r}, not 1")
    return w / total


class ProductMeasure:
    """mu(sigma) = prod_i mu_i(sigma_i) over a configuration space."""

    def __init__(self, space: ConfigurationSpace, weights: Sequence):
        weights = list(weights)
        if len(weights) != space.m:
            raise ModelError(f"expected {space.m} component measures, got {len(weights)}")
        factors = []
        for comp, w in zip(space.components, weights):
            f = component_measure(comp, w)
            f.flags.writeable = False
            factors.append(f)
        self.space = space
        self.factors = tuple(factors)
        self._vector = None

    def measure_of(self, cell: Sequence[int]) -> float:
        cell = self.space.cell_of(self.space.index_of(cell))
        return math.prod(float(f[d]) for f, d in zip(self.factors, cell))

    def vector(self) -> np.ndarray:
        """Masses of all cells in index order."""
        if self._vector is None:
            self.space.check_cap()
            v = np.ones(1)
            for f in self.factors:
                v = np.multiply.outer(v, f).ravel()
            v.flags.writeable = False
            self._vector = v
        return self._vector


@dataclass(frozen=True)
class Model:
    """Graph, alphabets and product measure: everything that generates an operator."""

    graph: Graph
    space: ConfigurationSpace
    measure: ProductMeasure

    @classmethod
    def build(cls, vertices, edges, measures, alphabet=None, alphabets=None, cap=None) -> "Model":
        graph = Graph.from_lists(vertices, edges)
        if alphabet is None and alphabets is None:
            raise ModelError("an alphabet is required")
        space = make_space(graph, alphabet=alphabet, alphabets=alphabets, cap=cap)
        return cls(graph, space, ProductMeasure(space, measures))

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def factors(self) -> tuple[np.ndarray, ...]:
        return self.measure.factors


def two_vertex_example(alpha1: float = 0.7, beta1: float = 0.6) -> Model:
    """Two isolated vertices with alleles ``A, a``; mu_1=(alpha1, 1-alpha1), mu_2=(beta1, 1-beta1)."""
    return Model.build(
        [1, 2], [], [[alpha1, 1.0 - alpha1], [beta1, 1.0 - beta1]], alphabet=["A", "a"]
    )
