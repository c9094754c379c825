"""Quadratic stochastic operators generated by a graph and a product measure.

Build the operator of a model, iterate it on the simplex, split it into
one Volterra operator per connected component, and predict which types
die out from the tournament of each Volterra operator.
"""

from .construct import (
    ExplicitOperator,
    GeneratedOperator,
    HeredityTensor,
    SkewMatrix,
    is_volterra,
    materialize,
    volterra_canonical,
)
from .dynamics import FixedSet, Limit, classify_limit, iterate
from .errors import QsoError
from .model import Graph, Model, make_space, two_vertex_example
from .reduction import commutation_residual, marginalize, reconstruct, reduce
from .tournament import build_tournament, condensation, decay_fit, is_strong, predict_decay

__version__ = "0.1.0"

__all__ = [
    "ExplicitOperator",
    "FixedSet",
    "GeneratedOperator",
    "Graph",
    "HeredityTensor",
    "Limit",
    "Model",
    "QsoError",
    "SkewMatrix",
    "build_tournament",
    "classify_limit",
    "commutation_residual",
    "condensation",
    "decay_fit",
    "is_strong",
    "is_volterra",
    "iterate",
    "make_space",
    "marginalize",
    "materialize",
    "predict_decay",
    "reconstruct",
    "reduce",
    "two_vertex_example",
    "volterra_canonical",
]
