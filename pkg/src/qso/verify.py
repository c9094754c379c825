"""Seeded randomized property harness behind ``qso verify``.

Every trial draws from its own generator, seeded by ``(seed, property,
trial)``, so results do not depend on trial order or on which other
properties ran.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .construct import GeneratedOperator, SkewMatrix, is_volterra, materialize, validate, volterra_canonical
from .dynamics import iterate
from .errors import CapExceeded
from .model import Graph, Model, make_space
from .modelfile import model_to_doc
from .reduction import commutation_residual, is_product_form, product_state, reduce
from .tournament import build_tournament, condensation, strong_components

VERIFY_CELL_CAP = 1024


def random_graph(rng, max_vertices: int):
    nv = int(rng.integers(1, max_vertices + 1))
    p = rng.uniform(0.0, 0.7)
    edges = [(u, v) for u in range(1, nv + 1) for v in range(u + 1, nv + 1) if rng.random() < p]
    return list(range(1, nv + 1)), edges


def random_weights(rng, size: int, low: float = 0.05) -> np.ndarray:
    w = rng.uniform(low, 1.0, size)
    return w / w.sum()


def random_model(rng, max_vertices: int = 6, max_symbols: int = 3, cell_cap: int = VERIFY_CELL_CAP) -> Model:
    """Random graph, alphabets of 2..max_symbols symbols, random positive product measure."""
    while True:
        vertices, edges = random_graph(rng, max_vertices)
        graph = Graph.from_lists(vertices, edges)
        ncomp = len(make_space(graph, alphabet=["0"]).components)
        space = None
        for _ in range(20):
            alph = [[str(s) for s in range(int(rng.integers(2, max_symbols + 1)))] for _ in range(ncomp)]
            try:
                space = make_space(graph, alphabets=alph, cap=cell_cap)
                break
            except CapExceeded:
                continue
        if space is not None:
            break
    weights = [random_weights(rng, s) for s in space.sizes]
    return Model.build(vertices, edges, weights, alphabets=alph, cap=cell_cap)


def product_model(rng, sizes) -> Model:
    """Isolated vertices, one per component, with the given alphabet sizes."""
    alph = [[str(s) for s in range(k)] for k in sizes]
    weights = [random_weights(rng, k) for k in sizes]
    return Model.build(list(range(1, len(sizes) + 1)), [], weights, alphabets=alph)


@dataclass
class PropertyResult:
    name: str
    passed: int = 0
    failed: int = 0
    reproducers: list = field(default_factory=list)


def _volterra_iff_connected(rng, opts):
    model = random_model(rng, opts["max_vertices"], 3)
    ok = is_volterra(GeneratedOperator(model)) == (model.m == 1)
    return ok, model


def _commutation(rng, opts):
    m = int(rng.integers(1, 4))
    model = product_model(rng, [int(rng.integers(2, 5)) for _ in range(m)])
    system = reduce(model)
    if opts["inject_fault"]:
        a = np.array(system.matrices[0].a)
        a[0, 1] *= 1 - 1e-6
        a[1, 0] = -a[0, 1]
        system = type(system)((SkewMatrix(a),) + system.matrices[1:], system.weights)
    lam = rng.dirichlet(np.ones(model.n), 20)
    return commutation_residual(model, lam, system) <= 1e-12, model


def _closed_form(rng, opts):
    model = random_model(rng, min(opts["max_vertices"], 6), 3, cell_cap=64)
    direct = materialize(model, method="direct").p
    closed = materialize(model, method="product").p
    return float(np.max(np.abs(direct - closed))) <= 1e-12, model


def _stochastic(rng, opts):
    model = random_model(rng, min(opts["max_vertices"], 6), 3, cell_cap=64)
    return not validate(materialize(model).p), model


def _forms(rng, opts):
    model = random_model(rng, min(opts["max_vertices"], 4), 3, cell_cap=64)
    op = GeneratedOperator(model)
    if model.m != 1:
        return True, model
    a = volterra_canonical(op)
    x = rng.dirichlet(np.ones(model.n), 20)
    return float(np.max(np.abs(op.apply(x) - a.apply(x)))) <= 1e-12, model


def _simplex(rng, opts):
    model = random_model(rng, min(opts["max_vertices"], 5), 3, cell_cap=256)
    t = iterate(GeneratedOperator(model), rng.dirichlet(np.ones(model.n)), max_steps=300)
    return t.max_sum_drift <= 1e-9 and t.min_raw >= -1e-12, model


def _product(rng, opts):
    m = int(rng.integers(1, 4))
    model = product_model(rng, [int(rng.integers(2, 5)) for _ in range(m)])
    op = GeneratedOperator(model)
    lam = product_state([rng.dirichlet(np.ones(s)) for s in model.space.sizes])
    for _ in range(50):
        lam = op.apply(lam)
        lam = lam / lam.sum()
    return is_product_form(model.space, lam, 1e-10), model


def _tournament(rng, opts):
    model = product_model(rng, [int(rng.integers(2, 6))])
    w = model.factors[0]
    if len(set(w.tolist())) < len(w):
        return True, model
    a = reduce(model).matrices[0].a
    t = build_tournament(a)
    cond = condensation(t)
    transitive = all(len(c) == 1 for c in cond.classes)
    closure = _reach(t.beats)
    oracle = sorted({tuple(sorted(np.flatnonzero(closure[v] & closure[:, v]))) for v in range(t.n)})
    ok = transitive and cond.sink == (int(np.argmax(w)),)
    ok = ok and sorted(tuple(c) for c in strong_components(t.beats)) == oracle
    return ok, model


def _reach(beats):
    r = np.asarray(beats, dtype=bool) | np.eye(len(beats), dtype=bool)
    for k in range(len(r)):
        r = r | (r[:, [k]] & r[[k], :])
    return r


PROPERTIES = [
    ("volterra_iff_connected", _volterra_iff_connected),
    ("marginals_commute", _commutation),
    ("closed_form_matches_definition", _closed_form),
    ("tensor_stochastic", _stochastic),
    ("volterra_forms_agree", _forms),
    ("simplex_preserved", _simplex),
    ("product_form_preserved", _product),
    ("tournament_transitive_by_mass", _tournament),
]


def run(trials: int = 50, seed: int = 0, max_vertices: int = 10, inject_fault: bool = False) -> list[PropertyResult]:
    opts = {"max_vertices": max_vertices, "inject_fault": inject_fault}
    results = []
    for p_index, (name, check) in enumerate(PROPERTIES):
        res = PropertyResult(name)
        for trial in range(trials):
            rng = np.random.default_rng([seed, p_index, trial])
            ok, model = check(rng, opts)
            if ok:
                res.passed += 1
            else:
                res.failed += 1
                if len(res.reproducers) < 1:
                    res.reproducers.append(
                        {"seed": seed, "property": name, "trial": trial, "model": model_to_doc(model)}
                    )
        results.append(res)
    return results


def format_results(results) -> list[str]:
    lines = []
    for r in results:
        status = "PASS" if r.failed == 0 else "FAIL"
        lines.append(f"{status} {r.name}: {r.passed}/{r.passed + r.failed}")
        for rep in r.reproducers:
            lines.append("  reproducer: " + json.dumps(rep, sort_keys=True))
    return lines
