"""Heredity coefficients, quadratic stochastic operators and their Volterra form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapExceeded, DimensionMismatch, ModelError, NotVolterra
from .model import Model

TENSOR_CAP = 64
VOLTERRA_TOL = 1e-12
INPUT_TOL = 1e-9


def admissible_set(model: Model, phi: int, psi: int) -> list[int]:
    """Cells whose projection on every component matches ``phi`` or ``psi`` there."""
    d = model.space.digits
    mask = np.all((d == d[phi]) | (d == d[psi]), axis=1)
    return [int(k) for k in np.flatnonzero(mask)]


def heredity_row(model: Model, phi: int, psi: int) -> np.ndarray:
    """p_{phi psi, .} straight from the definition: mu restricted to the admissible set, normalized."""
    d = model.space.digits
    mask = np.all((d == d[phi]) | (d == d[psi]), axis=1)
    w = np.where(mask, model.measure.vector(), 0.0)
    return w / w.sum()


def heredity_coefficient(model: Model, phi: int, psi: int, sigma: int) -> float:
    return float(heredity_row(model, phi, psi)[sigma])


def pair_share(weights) -> np.ndarray:
    """``G[a, b]``: chance that the child copies parent ``a``'s projection, given parents ``a, b``.

    ``w[a] / (w[a] + w[b])``, and 1 on the diagonal where the projections
    coincide and the admissible set is the single configuration ``a``.
    """
    w = np.asarray(weights, dtype=float)
    g = w[:, None] / (w[:, None] + w[None, :])
    np.fill_diagonal(g, 1.0)
    return g


def component_kernel(weights) -> np.ndarray:
    """Dense ``F[a, b, c]``, one component's factor of p for parents ``a, b`` and child ``c``.

    The denominator is the mass of the set ``{a, b}``, which is ``w[a]`` alone
    when the two parental projections coincide.
    """
    w = np.asarray(weights, dtype=float)
    eye = np.eye(len(w), dtype=bool)
    support = eye[:, None, :] | eye[None, :, :]
    mass = w[:, None] + w[None, :]
    mass[eye] = w
    return np.where(support, w[None, None, :], 0.0) / mass[:, :, None]


def product_coefficient(factors: Sequence, phi: Sequence[int], psi: Sequence[int], sigma: Sequence[int]) -> float:
    """Closed-form coefficient for a product measure, cells given as component digits."""
    value = 1.0
    for w, a, b, c in zip(factors, phi, psi, sigma):
        if c != a and c != b:
            return 0.0
        value *= w[c] / (w[a] if a == b else w[a] + w[b])
    return float(value)


def _kron_all(mats):
    out = np.ones((1, 1))
    for mat in mats:
        out = np.kron(out, mat)
    return out


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple
    magnitude: float

    def __str__(self):
        idx = ",".join(str(i + 1) for i in self.indices)
        return f"{self.kind} at ({idx}): {self.magnitude:.3g}"


def validate(p, tol: float = INPUT_TOL) -> list[Violation]:
    """Every violated stochasticity or symmetry constraint; empty means valid."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 3 or not (p.shape[0] == p.shape[1] == p.shape[2]) or p.shape[0] == 0:
        return [Violation("Shape", (), float("nan"))]
    out = []
    for idx in zip(*np.nonzero(~np.isfinite(p))):
        out.append(Violation("NonFinite", tuple(int(i) for i in idx), float("nan")))
    if out:
        return out
    for idx in zip(*np.nonzero(p < -tol)):
        out.append(Violation("Negative", tuple(int(i) for i in idx), float(p[idx])))
    dev = p.sum(axis=2) - 1.0
    for i, j in zip(*np.nonzero(np.abs(dev) > tol)):
        out.append(Violation("RowSum", (int(i), int(j)), float(dev[i, j])))
    asym = np.abs(p - p.transpose(1, 0, 2))
    for i, j, k in zip(*np.nonzero(asym > tol)):
        if i < j:
            out.append(Violation("Symmetry", (int(i), int(j), int(k)), float(asym[i, j, k])))
    return out


@dataclass(frozen=True)
class HeredityTensor:
    """Dense cubic matrix ``p[i, j, k]`` satisfying the QSO axioms."""

    p: np.ndarray

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @classmethod
    def from_array(cls, arr, tol: float = INPUT_TOL) -> "HeredityTensor":
        p = np.array(arr, dtype=float)
        problems = validate(p, tol)
        if problems:
            raise ModelError("invalid heredity tensor", [str(v) for v in problems])
        p = (p + p.transpose(1, 0, 2)) / 2
        p = np.clip(p, 0.0, None)
        p /= p.sum(axis=2, keepdims=True)
        p.flags.writeable = False
        return cls(p)


class GeneratedOperator:
    """Operator generated by a product-measure model; never stores the cubic tensor.

    Per component the child's projection is one of the two parental ones,
    so each component factor is described by its ``s x s`` pair-share matrix.
    """

    def __init__(self, model: Model):
        self.model = model
        self.n = model.n
        self.shares = tuple(pair_share(w) for w in model.factors)

    def _digits(self, index):
        return self.model.space.cell_of(index)

    def coefficient(self, i: int, j: int, k: int) -> float:
        return product_coefficient(self.model.factors, self._digits(i), self._digits(j), self._digits(k))

    def row(self, i: int, j: int) -> np.ndarray:
        out = np.ones(1)
        for g, a, b in zip(self.shares, self._digits(i), self._digits(j)):
            v = np.zeros(len(g))
            v[b] = g[b, a]
            v[a] = g[a, b]
            out = np.kron(out, v)
        return out

    def self_share(self) -> np.ndarray:
        """``S[i, j] = p_{ij,i}``, the chance that the child copies parent ``i``."""
        return _kron_all(self.shares)

    def apply(self, x) -> np.ndarray:
        """One step on a point or a batch of points (last axis = cells)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionMismatch(f"point has {x.shape[-1]} coordinates, operator has {self.n}")
        sizes = self.model.space.sizes
        m = len(sizes)
        flat = x.reshape(-1, self.n)
        B = flat.shape[0]
        t = flat.reshape((B,) + sizes + (1,) * m) * flat.reshape((B,) + (1,) * m + sizes)
        for step, g in enumerate(self.shares):
            # bring this component's (first parent, second parent) axes to the end
            t = np.moveaxis(t, [1, 1 + m - step], [-2, -1])
            child = (
                np.einsum("...cb,cb->...c", t, g)
                + np.einsum("...ac,ca->...c", t, g)
                - np.einsum("...cc->...c", t)
            )
            t = child
        return t.reshape(x.shape)


class ExplicitOperator:
    def __init__(self, tensor: HeredityTensor):
        self.tensor = tensor
        self.n = tensor.n

    def coefficient(self, i: int, j: int, k: int) -> float:
        return float(self.tensor.p[i, j, k])

    def row(self, i: int, j: int) -> np.ndarray:
        return self.tensor.p[i, j].copy()

    def self_share(self) -> np.ndarray:
        return np.einsum("iji->ij", self.tensor.p)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionMismatch(f"point has {x.shape[-1]} coordinates, operator has {self.n}")
        return np.einsum("...i,...j,ijk->...k", x, x, self.tensor.p)


def materialize(source, cap: int = TENSOR_CAP, method: str = "product") -> HeredityTensor:
    """Dense tensor of a generated operator.

    ``method="product"`` multiplies the per-component kernels together;
    ``method="direct"`` normalizes mu over each admissible set, one parent
    pair at a time. The two are independent routes to the same numbers.
    """
    model = source.model if isinstance(source, GeneratedOperator) else source
    if isinstance(source, ExplicitOperator):
        return source.tensor
    if model.n > cap:
        raise CapExceeded("heredity tensor", model.n**3, cap**3)
    n = model.n
    if method == "product":
        p = np.ones((1, 1, 1))
        for w in model.factors:
            F = component_kernel(w)
            s = len(w)
            k = p.shape[0]
            p = np.einsum("abc,def->adbecf", p, F).reshape(k * s, k * s, k * s)
    elif method == "direct":
        p = np.empty((n, n, n))
        for i in range(n):
            for j in range(i, n):
                p[i, j] = p[j, i] = heredity_row(model, i, j)
    else:
        raise ValueError(f"unknown method {method!r}")
    p.flags.writeable = False
    return HeredityTensor(p)


def operator_from_model(model: Model) -> GeneratedOperator:
    return GeneratedOperator(model)


class SkewMatrix:
    """Volterra coefficient matrix: skew-symmetric, zero diagonal, entries in [-1, 1]."""

    def __init__(self, a, tol: float = VOLTERRA_TOL):
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ModelError(f"skew matrix must be square and nonempty, got shape {a.shape}")
        problems = []
        if not np.all(np.isfinite(a)):
            problems.append("non-finite entries")
        else:
            skew = np.abs(a + a.T)
            for k, i in zip(*np.nonzero(skew > tol)):
                if k <= i:
                    problems.append(f"a[{k + 1},{i + 1}] + a[{i + 1},{k + 1}] = {a[k, i] + a[i, k]:.3g}")
            for k, i in zip(*np.nonzero(np.abs(a) > 1 + tol)):
                problems.append(f"|a[{k + 1},{i + 1}]| = {abs(a[k, i]):.6g} exceeds 1")
        if problems:
            raise ModelError("invalid skew matrix", problems)
        a = np.clip((a - a.T) / 2, -1.0, 1.0)
        a.flags.writeable = False
        self.a = a
        self.n = a.shape[0]

    def apply(self, x) -> np.ndarray:
        """x'_k = x_k (1 + sum_i a_ki x_i), raw (no re-projection).

        Evaluated as ``x_k * sum_i (1 + a_ki) x_i``, identical on the simplex
        but free of cancellation because every ``1 + a_ki >= 0``.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionMismatch(f"point has {x.shape[-1]} coordinates, matrix is {self.n}x{self.n}")
        return x * (x @ (1.0 + self.a).T)

    def growth(self, x) -> np.ndarray:
        """Per-coordinate factor ``1 + (a x)_k``; above 1 the coordinate grows near ``x``."""
        return 1.0 + self.a @ np.asarray(x, dtype=float)

    def __array__(self, dtype=None, copy=None):
        return self.a if dtype is None else self.a.astype(dtype)

    def __repr__(self):
        return f"SkewMatrix({self.a.tolist()})"


def is_volterra(op, tol: float = VOLTERRA_TOL) -> bool:
    """True when no parent pair ``(i, j)`` produces a child outside ``{i, j}``."""
    if isinstance(op, SkewMatrix):
        return True
    if isinstance(op, ExplicitOperator):
        n = op.n
        eye = np.eye(n, dtype=bool)
        off = ~(eye[:, None, :] | eye[None, :, :])
        return bool(n == 1 or op.tensor.p[off].max() <= tol)
    # Rows are stochastic, so the mass left outside {i, j} bounds every such entry.
    share = op.self_share()
    outside = 1.0 - share - share.T
    np.fill_diagonal(outside, 1.0 - np.diag(share))
    return bool(outside.max() <= tol)


def volterra_canonical(op) -> SkewMatrix:
    """a_ki = 2 p_{ik,k} - 1 off the diagonal."""
    if isinstance(op, SkewMatrix):
        return op
    if not is_volterra(op):
        raise NotVolterra("operator produces offspring outside the parental types")
    a = 2.0 * op.self_share() - 1.0
    np.fill_diagonal(a, 0.0)
    return SkewMatrix(a)


def skew_to_tensor(a: SkewMatrix) -> HeredityTensor:
    """Heredity tensor of a Volterra operator: p_{ik,k} = (1 + a_ki) / 2, p_{ii,i} = 1."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    p = np.zeros((n, n, n))
    idx = np.arange(n)
    # p[i, k, k] = (1 + a[k, i]) / 2 and p[i, k, i] = (1 + a[i, k]) / 2
    p[:, idx, idx] = (1.0 + a.T) / 2
    p[idx, :, idx] = (1.0 + a) / 2
    p[idx, idx, idx] = 1.0
    p.flags.writeable = False
    return HeredityTensor(p)
