"""Command-line front end: ``dyna-analyze types|bound|run``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import semiring as semirings
from .corpus import corpus_path
from .cost import CardinalityDB, analyze_bounds
from .program import BUILTINS, AnalysisSpec, Program
from .propagate import Limits, LimitExceeded
from .solver import NonConvergence, SolverError, run
from .symbolic import SymExpr, asymptotic
from .syntax import DynaSyntaxError, canonical_text, format_rule, format_subgoal, format_term, format_type, parse_analysis_spec, parse_program
from .typeinfer import Diverged, dead_rules, infer_types

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_DIVERGED = 3
EXIT_NONCONVERGENCE = 4


class _ParseFailure(Exception):
    pass


def _resolve(path: str) -> str:
    """Fall back to a bundled example (``cky``, ``cky.dtype``) for missing paths."""
    if os.path.exists(path):
        return path
    try:
        return str(corpus_path(path))
    except FileNotFoundError:
        return path


def _read(path: str) -> str:
    try:
        with open(_resolve(path), encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise _ParseFailure(f"{path}: {e.strerror}") from None


def _load_program(path: str) -> Program:
    try:
        return parse_program(_read(path))
    except DynaSyntaxError as e:
        raise _ParseFailure(f"{path}:{e}") from None


def _load_spec(path: str | None) -> AnalysisSpec:
    if path is None:
        return AnalysisSpec()
    try:
        return parse_analysis_spec(_read(path))
    except DynaSyntaxError as e:
        raise _ParseFailure(f"{path}:{e}") from None


def lint(program: Program, spec: AnalysisSpec) -> list[str]:
    """Warnings for body predicates that nothing defines."""
    defined = program.head_functors() | program.params | spec.params | set(BUILTINS)
    defined |= {t.functor for t in spec.input_types}
    out = []
    seen = set()
    for r in program.rules:
        for g in r.body:
            if g.functor == "?" and g.args:
                g = g.args[0]
            if g.is_number() or g.functor in defined or g.functor in seen:
                continue
            seen.add(g.functor)
            out.append(f"`{g.functor}` is used in a rule body but has no rules, input type or params declaration")
    return out


def _show(e: SymExpr, text: bool) -> str:
    if e.infinite:
        return "∞" if text else "inf"
    return str(e)


def _big_o(e: SymExpr, text: bool) -> str:
    return f"O({_show(asymptotic(e), text)})"


def _infer(args, program, spec):
    limits = Limits(max_constraints=args.max_constraints)
    return infer_types(program, spec, depth=args.depth, max_rounds=args.max_rounds,
                       limits=limits, semiring=args.semiring)


def cmd_types(args) -> tuple[dict, str]:
    program = _load_program(args.program)
    spec = _load_spec(args.spec)
    warnings = lint(program, spec)
    env = _infer(args, program, spec)
    dead = dead_rules(program, env, args.semiring)
    derived = sorted(env.derived, key=canonical_text)
    inputs = sorted(env.inputs, key=canonical_text)
    report = {
        "rounds": env.rounds,
        "derived_types": [format_type(s, annotate=True) for s in derived],
        "input_types": [format_type(s, annotate=True) for s in inputs],
        "canonical_types": env.keys(),
        "dead_rules": [format_rule(program.rules[i]) for i in dead],
        "diagnostics": warnings,
    }
    lines = [f"% derived types (fixpoint after {env.rounds} rounds)"]
    lines += report["derived_types"]
    lines.append("% input types")
    lines += report["input_types"]
    if dead:
        lines.append("% dead rules")
        lines += [f"%   {r}" for r in report["dead_rules"]]
    else:
        lines.append("% dead rules: none")
    return report, "\n".join(lines)


def cmd_bound(args) -> tuple[dict, str]:
    program = _load_program(args.program)
    spec = _load_spec(args.spec)
    warnings = lint(program, spec)
    env = _infer(args, program, spec)
    db = CardinalityDB.from_spec(spec)
    rep = analyze_bounds(program, env, db, args.semiring)
    sizes = sorted(((format_type(s, annotate=True), size) for s, size in rep.type_sizes), key=lambda x: x[0])
    unbounded = sorted(format_type(s, annotate=True) for s in rep.unbounded_types())
    if rep.greedy:
        warnings.append("a type had too many constraints for exact ordering; a greedy order was used")
    drivers = []
    for d in rep.drivers:
        drivers.append({
            "rule": d.rule_index,
            "driver": format_subgoal(program_body(program, d.rule_index, d.driver, args.semiring)),
            "driver_type": format_type(d.type),
            "size": _show(d.size, False),
            "runtime": _show(d.plan.cost, False),
        })
    report = {
        "type_sizes": {t: _show(e, False) for t, e in sizes},
        "space": _show(rep.space, False),
        "space_big_o": _big_o(rep.space, False),
        "time": _show(rep.time, False),
        "time_big_o": _big_o(rep.time, False),
        "drivers": drivers,
        "unbounded_types": unbounded,
        "diagnostics": warnings,
    }
    lines = ["% size of each type"]
    lines += [f"% {t}  size {_show(e, True)}" for t, e in sizes]
    lines.append("% work per rule and driver subgoal: size * runtime")
    for d in rep.drivers:
        drv = drivers[rep.drivers.index(d)]
        lines.append(f"%   rule {d.rule_index + 1}, driver {drv['driver']}: "
                     f"({_show(d.size, True)}) * ({_show(d.plan.cost, True)})")
    for t in unbounded:
        lines.append(f"% unbounded type: {t}")
    lines.append(f"space = {_show(rep.space, True)}")
    lines.append(f"space = {_big_o(rep.space, True)}")
    lines.append(f"time = {_show(rep.time, True)}")
    lines.append(f"time = {_big_o(rep.time, True)}")
    return report, "\n".join(lines)


def program_body(program: Program, ri: int, pos: int, semiring):
    sr = semirings.select(program, semiring)
    return semirings.booleanize_rule(program.rules[ri], sr).body[pos]


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v)


def cmd_run(args) -> tuple[dict, str]:
    program = _load_program(args.program)
    data = _load_program(args.data) if args.data else None
    nu, stats = run(program, data, semiring=args.semiring, max_iters=args.max_iters)
    items = sorted(nu.support(), key=format_term)
    values = {format_term(k): _fmt_value(nu[k]) for k in items}
    report = {"semiring": nu.semiring.name, "values": values}
    lines = [f"{k} = {v}" for k, v in values.items()]
    if args.stats:
        report["stats"] = stats.as_dict()
        lines.append("% stats")
        lines += [f"% {k}: {v}" for k, v in sorted(stats.as_dict().items())]
    if stats.cyclic:
        report.setdefault("diagnostics", []).append("the ground dependency graph is cyclic")
    return report, "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyna-analyze", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--semiring", choices=semirings.names() + ["minplus", "viterbi", "boolean", "real"],
                       help="override the program's semiring")
        p.add_argument("--format", choices=("text", "json"), default="text")

    def analysis(p):
        p.add_argument("program")
        p.add_argument("spec", nargs="?")
        p.add_argument("--depth", type=int, default=4, help="term depth limit for derived heads (0 = none)")
        p.add_argument("--max-rounds", type=int, default=100)
        p.add_argument("--max-constraints", type=int, default=512)
        common(p)

    p = sub.add_parser("types", help="infer item types and dead rules")
    analysis(p)
    p.set_defaults(fn=cmd_types)
    p = sub.add_parser("bound", help="symbolic space and time bounds")
    analysis(p)
    p.set_defaults(fn=cmd_bound)
    p = sub.add_parser("run", help="evaluate a program on ground data")
    p.add_argument("program")
    p.add_argument("data", nargs="?")
    p.add_argument("--stats", action="store_true", help="report iteration and prefix-firing counts")
    p.add_argument("--max-iters", type=int, default=10_000)
    common(p)
    p.set_defaults(fn=cmd_run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "depth", None) == 0:
        args.depth = None
    try:
        report, text = args.fn(args)
    except _ParseFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (Diverged, LimitExceeded) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except NonConvergence as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (SolverError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    for w in report.get("diagnostics", []):
        print(f"warning: {w}", file=sys.stderr)
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False))
    elif text:
        print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
