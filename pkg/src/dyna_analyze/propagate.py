"""Constraint propagation, intersection and subtype tests on simple types."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .program import FAIL, TRUE, PropagationRule, SimpleType, eval_builtin, is_builtin
from .syntax import canonical_text, parse_prop_rule
from .term import Term, depth, fresh, instantiate, match, subst, unify


class LimitExceeded(Exception):
    pass


@dataclass(frozen=True)
class Limits:
    max_constraints: int = 512
    max_depth: int | None = None


DEFAULT_LIMITS = Limits()

DEFAULT_RULES = tuple(
    parse_prop_rule(text)
    for text in (
        "(I < K) <== (I < J), (J < K).",
        "fail <== (I < I).",
        "(I <= K) <== (I <= J), (J <= K).",
        "(I < K) <== (I < J), (J <= K).",
        "(I < K) <== (I <= J), (J < K).",
    )
)


def with_defaults(rules: Iterable[PropagationRule] = ()) -> tuple:
    out = list(DEFAULT_RULES)
    for r in rules:
        if r not in out:
            out.append(r)
    return tuple(out)


def _decide(c: Term):
    """True/False for decidable builtins, None for everything else."""
    if c == TRUE:
        return True
    if c == FAIL:
        return False
    if is_builtin(c):
        return eval_builtin(c)
    return None


def saturate(constraints: Iterable[Term], rules: Iterable[PropagationRule] = DEFAULT_RULES,
             limits: Limits = DEFAULT_LIMITS) -> frozenset:
    """Close a constraint set under the propagation rules.

    Premises are matched one way: rule variables bind to (possibly
    non-ground) pieces of the constraints, whose own variables are never
    instantiated.  Decidable builtins are evaluated; a false one, or a
    derived ``fail``, collapses the result to ``{fail}``.  Premise-free ground
    rules such as ``k(s) <== true`` act as background facts that may satisfy
    premises but are not reported.
    """
    rules = tuple(rules)
    facts: dict = {}  # signature -> list
    known: set = set()
    agenda: list = []

    def add(c) -> bool:
        """Record ``c``; returns False if it makes the set empty."""
        verdict = _decide(c)
        if verdict is False:
            return False
        if verdict is True or c in known:
            return True
        if limits.max_depth is not None and depth(c) > limits.max_depth + 1:
            raise LimitExceeded(f"derived constraint {c} exceeds depth {limits.max_depth}")
        if len(known) >= limits.max_constraints:
            raise LimitExceeded(f"more than {limits.max_constraints} constraints")
        known.add(c)
        facts.setdefault(c.signature, []).append(c)
        agenda.append(c)
        return True

    given = set(constraints)
    for c in given:
        if not add(c):
            return frozenset({FAIL})
    background = set()
    for r in rules:
        if r.is_fact() and r.conclusion.is_ground:
            background.add(r.conclusion)
            if not add(r.conclusion):
                return frozenset({FAIL})
    active = [r for r in rules if r.premises]

    def extend(prem, k, skip, b):
        if k == len(prem):
            yield b
            return
        if k == skip:
            yield from extend(prem, k + 1, skip, b)
            return
        p = prem[k]
        for c in list(facts.get(p.signature, ())):
            b2 = match(p, c, b)
            if b2 is not None:
                yield from extend(prem, k + 1, skip, b2)

    while agenda:
        new = agenda.pop()
        for r in active:
            prem = r.premises
            for j, p in enumerate(prem):
                if p.signature != new.signature:
                    continue
                b0 = match(p, new)
                if b0 is None:
                    continue
                for b in extend(prem, 0, j, b0):
                    concl = instantiate(r.conclusion, b)
                    if concl == FAIL or not add(concl):
                        return frozenset({FAIL})
    return frozenset(known - background)


def saturate_type(s: SimpleType, rules=DEFAULT_RULES, limits: Limits = DEFAULT_LIMITS) -> SimpleType:
    return SimpleType(s.head, saturate(s.constraints, rules, limits))


def apply_equalities(s: SimpleType) -> SimpleType:
    """Solve ``X = t`` constraints by substitution into the whole type."""
    theta: dict = {}
    rest = []
    for c in s.constraints:
        if c.functor == "eq" and len(c.args) == 2:
            theta = unify(c.args[0], c.args[1], theta)
            if theta is None:
                return SimpleType(s.head, [FAIL])
        else:
            rest.append(c)
    if not theta:
        return s
    return SimpleType(subst(s.head, theta), (subst(c, theta) for c in rest))


def intersect(s: SimpleType, t: SimpleType) -> SimpleType | None:
    """``s ∩ t`` by head unification, or None if the heads clash."""
    t = fresh(t)
    theta = unify(s.head, t.head)
    if theta is None:
        return None
    return SimpleType(subst(s.head, theta), (subst(c, theta) for c in s.constraints | t.constraints))


def subtype(s: SimpleType, t: SimpleType, rules=DEFAULT_RULES, limits: Limits = DEFAULT_LIMITS) -> bool:
    """One-sided test for ``s ⊆ t``: True is definite, False is inconclusive."""
    try:
        ss = saturate_type(s, rules, limits)
        if FAIL in ss.constraints:
            return True
        both = intersect(s, t)
        if both is None:
            return False
        return canonical_text(saturate_type(both, rules, limits)) == canonical_text(ss)
    except LimitExceeded:
        return False
