"""Command-line entry point: ``qso build|iterate|reduce|tournament|verify``.

Exit codes: 0 ok, 1 property failure, 2 input or validation error,
3 numerical-integrity abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .construct import (
    is_volterra,
    materialize,
    skew_to_tensor,
    volterra_canonical,
)
from .dynamics import Limit, classify_limit, iterate, random_point, simplex_point, uniform_point
from .errors import (
    CapExceeded,
    DegenerateCoefficients,
    ModelError,
    NotVolterra,
    NumericalIntegrityError,
    QsoError,
    TooShort,
)
from .modelfile import load_model, tensor_to_doc
from .reduction import commutation_residual, reduce
from .tournament import decay_fit, predict_decay

EXIT_OK, EXIT_PROPERTY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
COMMUTATION_TOL = 1e-12


class UsageError(QsoError):
    pass


def _fmt_set(items) -> str:
    return "{" + ",".join(str(i + 1) for i in items) + "}"


def _fmt_point(x, digits: int = 6) -> str:
    vals = [round(float(v), digits) + 0.0 for v in x]
    return "(" + ",".join(f"{v:g}" for v in vals) + ")"


def _out(*parts):
    print(*parts)


# build ---------------------------------------------------------------------

def cmd_build(args) -> int:
    loaded = load_model(args.file, args.preset)
    op = loaded.operator
    volterra = "yes" if is_volterra(op) else "no"
    if loaded.kind == "graph":
        space = loaded.model.space
        _out(f"{space.n} cells, {space.m} components, Volterra: {volterra}")
        for c in space.components:
            verts = ",".join(str(v) for v in c.vertices)
            _out(f"  component {c.index}: vertices {{{verts}}}, {c.size} configurations")
    else:
        what = "explicit tensor" if loaded.kind == "tensor" else "skew matrix"
        _out(f"{op.n} cells, {what}, Volterra: {volterra}")
    if args.export:
        if loaded.kind == "graph":
            tensor = materialize(op)
        elif loaded.kind == "tensor":
            tensor = op.tensor
        else:
            tensor = skew_to_tensor(op)
        Path(args.export).write_text(json.dumps(tensor_to_doc(tensor)))
        _out(f"wrote {op.n}x{op.n}x{op.n} tensor to {args.export}")
    return EXIT_OK


# iterate -------------------------------------------------------------------

def _parse_x0(values) -> np.ndarray:
    parts = []
    for v in values:
        parts.extend(s for s in v.replace(",", " ").split() if s)
    try:
        return np.array([float(s) for s in parts])
    except ValueError:
        raise ModelError(f"cannot parse initial point {' '.join(values)!r}") from None


def _initial_point(args, n: int) -> np.ndarray:
    if args.x0 is not None:
        return simplex_point(_parse_x0(args.x0), n)
    if args.random:
        return random_point(n, np.random.default_rng(args.seed))
    return uniform_point(n)


def write_csv(path, traj) -> None:
    n = traj.points.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l"] + [f"x_{k + 1}" for k in range(n)])
        for l, x in zip(traj.indices, traj.points):
            w.writerow([int(l)] + [repr(float(v)) for v in x])


def cmd_iterate(args) -> int:
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    if args.stride is not None and args.stride < 1:
        raise UsageError("--stride must be at least 1")
    loaded = load_model(args.file, args.preset)
    op = loaded.operator
    x0 = _initial_point(args, op.n)
    traj = iterate(op, x0, max_steps=args.steps, tol=args.tol, record_stride=args.stride)
    if args.csv:
        write_csv(args.csv, traj)
    try:
        rep = classify_limit(traj, loaded.fixed_sets)
    except TooShort as exc:
        _out(f"Undecided {_fmt_point(traj.final)}")
        _out(f"  {exc}")
        return EXIT_OK
    if rep.classification is Limit.POINT:
        _out(f"{rep.classification.value} {_fmt_point(rep.limit)}")
    elif rep.classification is Limit.SET:
        _out(f"{rep.classification.value} {rep.fixed_set} {_fmt_point(rep.final)}")
    else:
        _out(f"{rep.classification.value} {_fmt_point(rep.final)}")
    _out(f"  steps: {traj.steps} ({traj.reason})")
    _out(f"  final: [{', '.join(repr(float(v)) for v in rep.final)}]")
    _out(f"  last-window residual: {rep.residual:.3g}; final-half amplitude: {rep.amplitude:.3g}")
    _out(f"  max |sum - 1|: {traj.max_sum_drift:.3g}; min raw coordinate: {traj.min_raw:.3g}")
    if rep.escaping:
        _out(f"  still escaping the boundary along {_fmt_set(rep.escaping)}")
    if rep.memberships:
        inside = [k for k, v in rep.memberships.items() if v]
        _out(f"  fixed sets containing the final point: {', '.join(inside) if inside else 'none'}")
    for j, fit in sorted(rep.decay.items()):
        if isinstance(fit, QsoError):
            _out(f"  x_{j + 1}: {fit}")
        else:
            verdict = "geometric decay" if fit.geometric else "no geometric decay"
            _out(f"  x_{j + 1}: slope {fit.slope:.4g}, r2 {fit.r2:.4f}, {verdict}")
    if args.csv:
        _out(f"  wrote {len(traj.indices)} rows to {args.csv}")
    return EXIT_OK


# reduce --------------------------------------------------------------------

def _print_matrix(a, indent="    "):
    for row in np.asarray(a):
        _out(indent + "[" + ", ".join(f"{v: .6g}" for v in row) + "]")


def cmd_reduce(args) -> int:
    loaded = load_model(args.file, args.preset)
    if loaded.kind != "graph":
        raise UsageError(f"{loaded.kind} models carry no measure to reduce")
    model = loaded.model
    system = reduce(model)
    for i, (c, a) in enumerate(zip(model.space.components, system.matrices)):
        labels = " ".join(",".join(conf) for conf in c.configurations())
        _out(f"component {i + 1}: configurations {labels}")
        _print_matrix(a.a)
    if model.m == 1:
        _out("note: operator is already Volterra")
    rng = np.random.default_rng(args.seed)
    lam = rng.dirichlet(np.ones(model.n), args.points)
    res = commutation_residual(model, lam, system)
    ok = res <= COMMUTATION_TOL
    _out(f"max commutation residual {'<=' if ok else '>'} {COMMUTATION_TOL:g} ({res:.3g} over {args.points} points)")
    return EXIT_OK if ok else EXIT_PROPERTY


# tournament ----------------------------------------------------------------

def _volterra_matrices(loaded, component):
    """(label, skew matrix) pairs the command should analyse."""
    if loaded.kind == "skew":
        pairs = [("skew matrix", loaded.operator)]
    elif loaded.kind == "tensor":
        try:
            pairs = [("tensor", volterra_canonical(loaded.operator))]
        except NotVolterra:
            raise UsageError("the tensor is not Volterra and has no measure to reduce") from None
    else:
        mats = reduce(loaded.model).matrices
        pairs = [(f"component {i + 1}", a) for i, a in enumerate(mats)]
    if component is not None:
        if not 1 <= component <= len(pairs):
            raise UsageError(f"--component must be in 1..{len(pairs)}")
        pairs = [pairs[component - 1]]
    return pairs


def _confirm(a, args, note):
    rng = np.random.default_rng(args.seed)
    x0 = random_point(a.n, rng)
    traj = iterate(a, x0, max_steps=args.steps, tol=0.0)
    _out(f"  {note} from {_fmt_point(x0, 4)}: {traj.steps} steps, final {_fmt_point(traj.final)}")
    return traj


def cmd_tournament(args) -> int:
    loaded = load_model(args.file, args.preset)
    for label, a in _volterra_matrices(loaded, args.component):
        try:
            pred = predict_decay(a)
        except DegenerateCoefficients as exc:
            _out(f"{label}: degenerate, {exc}; tournament undefined")
            traj = _confirm(a, args, "empirical run")
            rep = classify_limit(traj) if traj.steps + 1 >= 2 * traj.window else None
            if rep is not None:
                _out(f"  {rep.classification.value} {_fmt_point(rep.final)}")
            continue
        if pred.strong:
            _out(f"{label}: strong; no decay prediction")
        else:
            _out(f"{label}: not strong; survivors {_fmt_set(pred.survivors)}; decaying {_fmt_set(pred.decaying)}")
            _out("  condensation: " + " -> ".join(_fmt_set(c) for c in pred.condensation.classes))
        if args.confirm:
            traj = _confirm(a, args, "confirming run")
            for j in range(a.n):
                try:
                    fit = decay_fit(traj, j)
                except QsoError as exc:
                    _out(f"  x_{j + 1}: {exc}")
                    continue
                verdict = "geometric decay" if fit.geometric else "no geometric decay"
                _out(f"  x_{j + 1}: slope {fit.slope:.4g}, r2 {fit.r2:.4f}, {verdict}")
    return EXIT_OK


# verify --------------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.trials < 1 or args.max_vertices < 1:
        raise UsageError("--trials and --max-vertices must be at least 1")
    results = verify_mod.run(args.trials, args.seed, args.max_vertices, args.inject_fault)
    for line in verify_mod.format_results(results):
        _out(line)
    return EXIT_PROPERTY if any(r.failed for r in results) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qso", description="Quadratic stochastic operators on graphs with product measures.")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_file(p):
        p.add_argument("file", help="model JSON file")
        p.add_argument("--preset", help="named preset inside the model file")

    p = sub.add_parser("build", help="construct the operator and report its structure")
    with_file(p)
    p.add_argument("--export", metavar="PATH", help="write the dense heredity tensor as JSON")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("iterate", help="run a trajectory and classify its limit")
    with_file(p)
    start = p.add_mutually_exclusive_group()
    start.add_argument("--x0", nargs="+", help="initial point, space or comma separated")
    start.add_argument("--uniform", action="store_true", help="start from the barycenter (default)")
    start.add_argument("--random", action="store_true", help="random interior start, see --seed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--stride", type=int, default=None, help="record every k-th point")
    p.add_argument("--csv", metavar="PATH", help="write recorded points as CSV")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("reduce", help="per-component Volterra operators and commutation check")
    with_file(p)
    p.add_argument("--points", type=int, default=20, help="random states for the commutation check")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("tournament", help="tournament, condensation and extinction prediction")
    with_file(p)
    p.add_argument("--component", type=int, default=None, help="1-based component (default: all)")
    p.add_argument("--confirm", action="store_true", help="run a trajectory and fit decay rates")
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_tournament)

    p = sub.add_parser("verify", help="seeded randomized property suite")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-vertices", type=int, default=10)
    p.add_argument("--inject-fault", action="store_true", help="test only: perturb one reduced coefficient")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalIntegrityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (QsoError, CapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", None) or []:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
