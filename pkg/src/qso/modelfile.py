"""JSON model files.

A file holds exactly one of:

* ``graph`` (``vertices``, ``edges``) with ``alphabet`` or ``alphabets`` and
  ``measures`` (one weight table per component, a list in configuration
  order or a mapping from configuration label such as ``"A,a"``);
* ``tensor``: a nested ``n x n x n`` list of heredity coefficients;
* ``skew``: an ``n x n`` Volterra coefficient matrix.

Optional keys: ``name``, ``description``, ``fixed_sets`` (name ->
``{"zero": [...], "equal": [[i, j], ...]}`` with 1-based coordinates) and
``presets`` (name -> keys that override the top level).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .construct import ExplicitOperator, GeneratedOperator, HeredityTensor, SkewMatrix
from .dynamics import FixedSet
from .errors import ModelError
from .model import Graph, Model, ProductMeasure, make_space

OPTIONAL_KEYS = {"name", "description", "fixed_sets", "presets", "parameters"}
GRAPH_KEYS = {"graph", "alphabet", "alphabets", "measures"}


@dataclass
class LoadedModel:
    kind: str
    operator: object
    model: Model | None = None
    fixed_sets: tuple[FixedSet, ...] = ()
    name: str = ""
    presets: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n(self) -> int:
        return self.operator.n


def _weights(component, table):
    if isinstance(table, dict):
        labels = [",".join(conf) for conf in component.configurations()]
        short = {"".join(conf): lab for conf, lab in zip(component.configurations(), labels)}
        table = {short.get(k, k): v for k, v in table.items()}
        unknown = sorted(set(table) - set(labels))
        missing = [lab for lab in labels if lab not in table]
        if unknown or missing:
            raise ModelError(
                f"component {component.index} measure does not match its configurations",
                [f"unknown: {u}" for u in unknown] + [f"missing: {m}" for m in missing],
            )
        return [table[lab] for lab in labels]
    return table


def _fixed_sets(raw, n) -> tuple[FixedSet, ...]:
    out = []
    for name, spec in (raw or {}).items():
        zero = tuple(int(k) - 1 for k in spec.get("zero", ()))
        equal = tuple((int(i) - 1, int(j) - 1) for i, j in spec.get("equal", ()))
        if any(not 0 <= k < n for k in zero) or any(not (0 <= i < n and 0 <= j < n) for i, j in equal):
            raise ModelError(f"fixed set {name!r} refers to coordinates outside 1..{n}")
        out.append(FixedSet(str(name), zero, equal))
    return tuple(out)


def parse_model(doc: dict, preset: str | None = None) -> LoadedModel:
    if not isinstance(doc, dict):
        raise ModelError("model file must contain a JSON object")
    presets = doc.get("presets") or {}
    if preset is not None:
        if preset not in presets:
            raise ModelError(f"unknown preset {preset!r}; available: {', '.join(sorted(presets)) or 'none'}")
        doc = {**doc, **presets[preset]}
    unknown = set(doc) - OPTIONAL_KEYS - GRAPH_KEYS - {"tensor", "skew"}
    if unknown:
        raise ModelError(f"unknown keys {sorted(unknown)}")
    kinds = [k for k in ("graph", "tensor", "skew") if k in doc]
    if len(kinds) != 1:
        raise ModelError("model must contain exactly one of 'graph', 'tensor' or 'skew'")
    kind = kinds[0]
    name = str(doc.get("name", ""))
    if kind == "graph":
        g = doc["graph"]
        if "measures" not in doc:
            raise ModelError("graph models need 'measures'")
        graph = Graph.from_lists(g.get("vertices", []), g.get("edges", []))
        space = make_space(graph, alphabet=doc.get("alphabet"), alphabets=doc.get("alphabets"))
        tables = doc["measures"]
        if isinstance(tables, dict):
            tables = [tables[k] for k in sorted(tables, key=int)]
        if len(tables) != space.m:
            raise ModelError(f"expected {space.m} component measures, got {len(tables)}")
        weights = [_weights(c, t) for c, t in zip(space.components, tables)]
        model = Model(graph, space, ProductMeasure(space, weights))
        op = GeneratedOperator(model)
    elif kind == "tensor":
        model = None
        op = ExplicitOperator(HeredityTensor.from_array(doc["tensor"]))
    else:
        model = None
        op = SkewMatrix(doc["skew"], tol=1e-9)
    extra = GRAPH_KEYS & set(doc) if kind != "graph" else set()
    if extra:
        raise ModelError(f"keys {sorted(extra)} only apply to graph models")
    return LoadedModel(kind, op, model, _fixed_sets(doc.get("fixed_sets"), op.n), name, tuple(sorted(presets)))


def load_model(path, preset: str | None = None) -> LoadedModel:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path} is not valid JSON: {exc}") from None
    return parse_model(doc, preset)


def model_to_doc(model: Model) -> dict:
    return {
        "graph": {
            "vertices": list(model.graph.vertices),
            "edges": [list(e) for e in sorted(model.graph.edges)],
        },
        "alphabets": [list(c.alphabet) for c in model.space.components],
        "measures": [[float(v) for v in w] for w in model.factors],
    }


def tensor_to_doc(tensor: HeredityTensor) -> dict:
    return {"tensor": np.asarray(tensor.p).tolist()}


def example_file() -> Path:
    return Path(str(resources.files("qso") / "data" / "two_vertex.json"))
