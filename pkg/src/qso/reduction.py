"""Splitting a product-measure operator into one Volterra operator per component.

Component positions are 0-based here (the CLI prints them 1-based).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construct import GeneratedOperator, SkewMatrix
from .dynamics import apply_volterra, iterate
from .errors import DimensionMismatch, InconsistentMarginals
from .model import ConfigurationSpace, Model

RANK_TOL = 1e-10
MARGINAL_TOL = 1e-9


def marginalize(space: ConfigurationSpace, lam, i: int) -> np.ndarray:
    """X_{i,w}: total mass of the cells whose component-``i`` configuration is ``w``.

    Works on a single point or a batch (last axis = cells).
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != space.n:
        raise DimensionMismatch(f"point has {lam.shape[-1]} coordinates, space has {space.n} cells")
    batch = lam.shape[:-1]
    t = lam.reshape(batch + space.sizes)
    other = tuple(len(batch) + k for k in range(space.m) if k != i)
    return t.sum(axis=other)


def marginals(space: ConfigurationSpace, lam) -> list[np.ndarray]:
    return [marginalize(space, lam, i) for i in range(space.m)]


def product_state(parts) -> np.ndarray:
    """lambda(sigma) = prod_i X_{i, sigma_i}, flattened in cell order."""
    out = np.ones(1)
    for x in parts:
        out = np.multiply.outer(out, np.asarray(x, dtype=float)).ravel()
    return out


def is_product_form(space: ConfigurationSpace, lam, tol: float = 1e-12) -> bool:
    lam = np.asarray(lam, dtype=float)
    return bool(np.max(np.abs(lam - product_state(marginals(space, lam)))) <= tol)


def reduced_matrix(weights) -> np.ndarray:
    """a_{w,v} = (mu(w) - mu(v)) / (mu(w) + mu(v))."""
    w = np.asarray(weights, dtype=float)
    return (w[:, None] - w[None, :]) / (w[:, None] + w[None, :])


@dataclass(frozen=True)
class ReducedSystem:
    matrices: tuple[SkewMatrix, ...]
    weights: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return len(self.matrices)


def reduce(model: Model) -> ReducedSystem:
    """One Volterra operator per component, read straight off the component measures."""
    mats = tuple(SkewMatrix(reduced_matrix(w)) for w in model.factors)
    return ReducedSystem(mats, tuple(model.factors))


def reduced_step(system: ReducedSystem, parts) -> list[np.ndarray]:
    return [apply_volterra(a, x) for a, x in zip(system.matrices, parts)]


def step_skew_form(system: ReducedSystem, parts) -> list[np.ndarray]:
    """X' = X (1 + a X), written out literally."""
    out = []
    for a, x in zip(system.matrices, parts):
        x = np.asarray(x, dtype=float)
        out.append(x * (1.0 + x @ a.a.T))
    return out


def step_replicator_form(system: ReducedSystem, parts) -> list[np.ndarray]:
    """X'_w = X_w (X_w + sum_{v != w} 2 mu(w) / (mu(w) + mu(v)) X_v)."""
    out = []
    for w, x in zip(system.weights, parts):
        x = np.asarray(x, dtype=float)
        gain = 2.0 * w[:, None] / (w[:, None] + w[None, :])
        np.fill_diagonal(gain, 1.0)
        out.append(x * (x @ gain.T))
    return out


def commutation_residual(model: Model, lam, system: ReducedSystem | None = None, op=None) -> float:
    """Largest gap between marginals of V(lambda) and the reduced step of lambda's marginals.

    ``lam`` may be a batch; the maximum is taken over all of it.
    """
    system = reduce(model) if system is None else system
    op = GeneratedOperator(model) if op is None else op
    lam = np.asarray(lam, dtype=float)
    full = op.apply(lam)
    worst = 0.0
    for i in range(model.m):
        before = marginalize(model.space, lam, i)
        after = marginalize(model.space, full, i)
        predicted = system.matrices[i].apply(before)
        worst = max(worst, float(np.max(np.abs(after - predicted))))
    return worst


@dataclass(frozen=True)
class Reconstruction:
    product: np.ndarray
    dimension: int
    unique: bool
    forced_zero: int
    residual: float


def _constraints(space: ConfigurationSpace) -> np.ndarray:
    d = space.digits
    rows = []
    for i, s in enumerate(space.sizes):
        rows.append((d[:, i][None, :] == np.arange(s)[:, None]).astype(float))
    return np.vstack(rows) if rows else np.zeros((0, space.n))


def reconstruct(space: ConfigurationSpace, limits) -> Reconstruction:
    """Joint states with prescribed marginals: the product one, and how many others.

    ``dimension`` is the dimension of the set of nonnegative solutions.  Cells
    whose configuration has zero marginal mass are forced to zero; on the
    rest the product solution is strictly positive, so the dimension is the
    null-space dimension of the constraint system restricted to them.
    """
    limits = [np.asarray(x, dtype=float) for x in limits]
    if len(limits) != space.m:
        raise InconsistentMarginals(f"expected {space.m} marginals, got {len(limits)}")
    for i, (x, s) in enumerate(zip(limits, space.sizes)):
        if x.shape != (s,) or x.min() < -MARGINAL_TOL or abs(x.sum() - 1.0) > MARGINAL_TOL:
            raise InconsistentMarginals(f"marginal {i + 1} is not a probability vector of length {s}")
    limits = [np.clip(x, 0.0, None) / np.clip(x, 0.0, None).sum() for x in limits]
    A = _constraints(space)
    b = np.concatenate(limits) if limits else np.zeros(0)
    product = product_state(limits)
    residual = float(np.max(np.abs(A @ product - b))) if b.size else 0.0
    if residual > MARGINAL_TOL:
        raise InconsistentMarginals(f"no joint state matches the marginals (residual {residual:.3g})")
    alive = np.ones(space.n, dtype=bool)
    for i, x in enumerate(limits):
        alive &= x[space.digits[:, i]] > 0
    sub = A[:, alive]
    rank = np.linalg.matrix_rank(sub, tol=RANK_TOL) if sub.size else 0
    dim = int(alive.sum()) - int(rank)
    return Reconstruction(product, dim, dim == 0, int((~alive).sum()), residual)


def run_reduced(system: ReducedSystem, parts, **kwargs):
    """Iterate every component operator from its own marginal."""
    return [iterate(a, x, **kwargs) for a, x in zip(system.matrices, parts)]
