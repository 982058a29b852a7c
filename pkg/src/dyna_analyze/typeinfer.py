"""Type inference by abstract forward chaining over simple types.

The item type of a program is approximated by a finite set of simple types
(a *type environment*).  Starting from the empty set, every rule of the
booleanized program, together with the declared input types, is expanded
against the current environment; each resulting type is propagated, relaxed
and depth-truncated, and redundant types are pruned.  Iteration stops when
the environment is unchanged up to variable renaming.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping

from .program import FAIL, AnalysisSpec, Program, Rule, SimpleType, eval_builtin, is_builtin
from .propagate import DEFAULT_LIMITS, Limits, apply_equalities, saturate, subtype, with_defaults
from .semiring import booleanize_rule, select
from .syntax import canonical_text
from .term import Term, fresh, instantiate, iter_vars, match, subst, truncate, unify


class Diverged(Exception):
    def __init__(self, rounds: int, env: "TypeEnv | None" = None):
        super().__init__(f"type inference did not converge within {rounds} rounds")
        self.rounds = rounds
        self.env = env


@dataclass
class TypeEnv:
    """A finite union of simple types plus the context needed to reason about it."""

    types: list = field(default_factory=list)
    params: frozenset = frozenset()
    rules: tuple = ()
    depth: int | None = 4
    limits: Limits = DEFAULT_LIMITS
    input_functors: frozenset = frozenset()
    rounds: int = 0

    def __iter__(self):
        return iter(self.types)

    def __len__(self):
        return len(self.types)

    def keys(self) -> list[str]:
        return sorted(canonical_text(s) for s in self.types)

    @property
    def derived(self) -> list:
        return [s for s in self.types if s.functor not in self.input_functors]

    @property
    def inputs(self) -> list:
        return [s for s in self.types if s.functor in self.input_functors]

    def with_types(self, types) -> "TypeEnv":
        return TypeEnv(list(types), self.params, self.rules, self.depth, self.limits,
                       self.input_functors, self.rounds)

    def covers(self, item: Term, interp: Mapping, domain: Iterable | None = None) -> bool:
        # items of untyped params are given by the interpretation itself
        if item.functor in self.params and item.functor not in self.input_functors:
            return tuple(item.args) in interp.get(item.functor, ())
        return any(covers(s, item, interp, domain) for s in self.types)


def make_env(program: Program, spec: AnalysisSpec | None = None, depth: int | None = 4,
             limits: Limits = DEFAULT_LIMITS) -> TypeEnv:
    spec = spec or AnalysisSpec()
    typed = {t.functor for t in spec.input_types}
    params = frozenset((program.params - typed) | spec.params)
    return TypeEnv([], params, with_defaults(spec.rules), depth, limits, frozenset(typed))


# -- abstract step -------------------------------------------------------------------


def lookup(env: TypeEnv, goal: Term, theta: dict) -> Iterator[tuple[dict, frozenset]]:
    """Ways the subgoal can be covered: a delayed constraint, or a unifying type."""
    if is_builtin(goal) or (isinstance(goal, Term) and goal.functor in env.params):
        yield theta, frozenset({goal})
        return
    for s in env.types:
        if s.head.signature != getattr(goal, "signature", None):
            continue
        s = fresh(s)
        # fresh head first, so the rule's own variable names survive
        t2 = unify(s.head, goal, theta)
        if t2 is not None:
            yield t2, s.constraints


def expand(env: TypeEnv, r: Rule) -> list[SimpleType]:
    """All simple types obtained by covering ``r``'s subgoals with ``env``."""
    out = []

    def go(k: int, theta: dict, cons: frozenset):
        if k == len(r.body):
            out.append(SimpleType(subst(r.head, theta), (subst(c, theta) for c in cons)))
            return
        for t2, c2 in lookup(env, r.body[k], theta):
            go(k + 1, t2, cons | c2)

    go(0, {}, frozenset())
    return out


def inflate(env: TypeEnv, rules: Iterable[Rule]) -> list[SimpleType]:
    out = []
    for r in rules:
        out.extend(expand(env, r))
    return out


# -- per-type normalization -------------------------------------------------------------


def relax(s: SimpleType) -> SimpleType:
    """Drop every constraint that mentions a variable not in the head."""
    hv = s.head_vars()
    return SimpleType(s.head, (c for c in s.constraints if all(v.name in hv for v in iter_vars(c))))


def propagate(s: SimpleType, env: TypeEnv) -> SimpleType:
    s = apply_equalities(s)
    return SimpleType(s.head, saturate(s.constraints, env.rules, env.limits))


def normalize(s: SimpleType, env: TypeEnv, do_relax: bool = True) -> SimpleType | None:
    """Propagate, relax and truncate one type; None if it is empty."""
    s = propagate(s, env)
    if FAIL in s.constraints:
        return None
    if do_relax:
        s = relax(s)
    if env.depth is not None:
        head = truncate(s.head, env.depth)
        if head != s.head:
            s = SimpleType(head, s.constraints)
            if do_relax:
                s = relax(s)
    return s


def dedupe(types: Iterable[SimpleType]) -> list[SimpleType]:
    seen: dict = {}
    for s in types:
        seen.setdefault(canonical_text(s), s)
    return [seen[k] for k in sorted(seen)]


def remove_redundant(types: Iterable[SimpleType], rules=None, limits: Limits = DEFAULT_LIMITS) -> list:
    """Greedily drop any type that is a subtype of another remaining type."""
    rules = with_defaults() if rules is None else rules
    kept = dedupe(types)
    i = 0
    while i < len(kept):
        s = kept[i]
        if any(j != i and t.head.signature == s.head.signature and subtype(s, t, rules, limits)
               for j, t in enumerate(kept)):
            kept.pop(i)
        else:
            i += 1
    return kept


def _program_rules(program: Program, semiring) -> list:
    sr = select(program, semiring)
    rules = [booleanize_rule(r, sr) for r in program.rules]
    return [r for r in rules if r is not None]


def _input_rules(spec: AnalysisSpec) -> list:
    return [Rule(t.head, ":-", tuple(sorted(t.constraints, key=canonical_text_of))) for t in spec.input_types]


def canonical_text_of(c) -> str:
    from .syntax import format_subgoal

    return format_subgoal(c)


def infer_types(
    program: Program,
    spec: AnalysisSpec | None = None,
    depth: int | None = 4,
    max_rounds: int = 100,
    relax_types: bool = True,
    prune_subtypes: bool = True,
    limits: Limits = DEFAULT_LIMITS,
    semiring=None,
    on_round: Callable[[int, list], None] | None = None,
) -> TypeEnv:
    """Fixpoint of the abstract step operator, starting from the empty set.

    ``relax_types`` and ``prune_subtypes`` exist to observe the inference
    without its convergence aids; both are on in normal use.
    """
    spec = spec or AnalysisSpec()
    env = make_env(program, spec, depth, limits)
    rules = _program_rules(program, semiring) + _input_rules(spec)
    prev = env.keys()
    for rnd in range(1, max_rounds + 1):
        raw = inflate(env, rules)
        types = [t for t in (normalize(s, env, relax_types) for s in raw) if t is not None]
        types = remove_redundant(types, env.rules, limits) if prune_subtypes else dedupe(types)
        env = env.with_types(types)
        env.rounds = rnd
        if on_round:
            on_round(rnd, types)
        keys = env.keys()
        if keys == prev:
            return env
        prev = keys
    raise Diverged(max_rounds, env)


def dead_rules(program: Program, env: TypeEnv, semiring=None) -> list[int]:
    """Indices of rules that cannot fire given the inferred types."""
    sr = select(program, semiring)
    dead = []
    for i, r in enumerate(program.rules):
        b = booleanize_rule(r, sr)
        if b is None or all(normalize(s, env) is None for s in expand(env, b)):
            dead.append(i)
    return dead


def refine(env: TypeEnv, goal: Term) -> list[tuple[dict, SimpleType]]:
    """Types of ``env`` intersected with a subgoal pattern, with the unifier."""
    out = []
    for theta, cons in lookup(env, goal, {}):
        out.append((theta, SimpleType(subst(goal, theta), (subst(c, theta) for c in cons))))
    return out


# -- ground membership -------------------------------------------------------------------


def covers(s: SimpleType, item: Term, interp: Mapping, domain: Iterable | None = None) -> bool:
    """Is the ground ``item`` in the denotation of ``s`` under ``interp``?

    ``interp`` maps each parametric functor to a set of argument tuples.
    Variables constrained only by builtins range over ``domain`` (default:
    every constant mentioned in ``interp`` or the item).
    """
    theta = match(s.head, item)
    if theta is None:
        return False
    cons = [instantiate(c, theta) for c in s.constraints]
    if domain is None:
        domain = _domain(interp, item)
    return _satisfiable(cons, interp, list(domain))


def _domain(interp: Mapping, item: Term) -> set:
    out = set()
    for tuples in interp.values():
        for tup in tuples:
            out.update(tup)
    stack = [item]
    while stack:
        t = stack.pop()
        out.add(t)
        stack.extend(a for a in t.args)
    return out


def _satisfiable(cons: list, interp: Mapping, domain: list) -> bool:
    if not cons:
        return True
    for i, c in enumerate(cons):
        if c.is_ground:
            ok = eval_builtin(c) if is_builtin(c) else tuple(c.args) in interp.get(c.functor, ())
            return ok and _satisfiable(cons[:i] + cons[i + 1:], interp, domain)
    for i, c in enumerate(cons):
        if not is_builtin(c):
            rest = cons[:i] + cons[i + 1:]
            for tup in interp.get(c.functor, ()):
                if len(tup) != len(c.args):
                    continue
                b = match(c, Term(c.functor, tup))
                if b is not None and _satisfiable([instantiate(x, b) for x in rest], interp, domain):
                    return True
            return False
    # only non-ground builtins remain: enumerate their variables
    names = sorted({v.name for c in cons for v in iter_vars(c)})
    for values in itertools.product(domain, repeat=len(names)):
        b = dict(zip(names, values))
        if all(eval_builtin(instantiate(c, b)) for c in cons):
            return True
    return False
