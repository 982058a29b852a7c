"""Semirings and booleanization of weighted programs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

from .program import TRUE, Program, Rule, is_constant_subgoal, is_question


@dataclass(frozen=True)
class Semiring:
    name: str
    zero: Any
    one: Any
    plus: Callable[[Any, Any], Any]
    times: Callable[[Any, Any], Any]
    exact: bool = False
    # turns a numeric literal from a rule body into a carrier value
    lift: Callable[[Any], Any] = lambda x: x

    def approx_eq(self, a, b, tol: float = 1e-9) -> bool:
        if self.exact or a == b:
            return a == b
        if math.isinf(a) or math.isinf(b) or math.isnan(a) or math.isnan(b):
            return False
        return abs(a - b) <= tol * max(abs(a), abs(b))

    def is_zero(self, a) -> bool:
        return a == self.zero

    def sum(self, values) -> Any:
        out = self.zero
        for v in values:
            out = self.plus(out, v)
        return out

    def prod(self, values) -> Any:
        out = self.one
        for v in values:
            out = self.times(out, v)
        return out

    def __repr__(self):
        return f"Semiring({self.name})"


BOOL = Semiring("bool", False, True, lambda a, b: a or b, lambda a, b: a and b, exact=True, lift=bool)
REAL = Semiring("real_plus_times", 0.0, 1.0, lambda a, b: a + b, lambda a, b: a * b, lift=float)
MIN_PLUS = Semiring("min_plus", math.inf, 0.0, min, lambda a, b: a + b, lift=float)
MAX_TIMES = Semiring("max_times", 0.0, 1.0, max, lambda a, b: a * b, lift=float)
def _count_lift(x) -> int:
    if float(x) != int(x) or x < 0:
        raise ValueError(f"the count semiring needs nonnegative integer weights, got {x}")
    return int(x)


COUNT = Semiring("count", 0, 1, lambda a, b: a + b, lambda a, b: a * b, exact=True, lift=_count_lift)

_INSTANCES = {s.name: s for s in (BOOL, REAL, MIN_PLUS, MAX_TIMES, COUNT)}
_ALIASES = {
    "boolean": "bool",
    "real": "real_plus_times",
    "plus_times": "real_plus_times",
    "sum_product": "real_plus_times",
    "minplus": "min_plus",
    "tropical": "min_plus",
    "maxtimes": "max_times",
    "viterbi": "max_times",
    "counting": "count",
}


def instance(name: str) -> Semiring:
    key = name.strip().lower().replace("-", "_")
    key = _ALIASES.get(key, key)
    try:
        return _INSTANCES[key]
    except KeyError:
        raise ValueError(f"unknown semiring {name!r}; choose from {', '.join(sorted(_INSTANCES))}") from None


def names() -> list[str]:
    return sorted(_INSTANCES)


def select(program: Program, override: str | None = None) -> Semiring:
    """Pick the semiring for a program: explicit flag, then pragma, then aggregators."""
    if override:
        return instance(override)
    if program.semiring:
        return instance(program.semiring)
    aggs = {r.aggregator for r in program.rules}
    if "min=" in aggs:
        return MIN_PLUS
    if "max=" in aggs:
        return MAX_TIMES
    if aggs and aggs <= {":-"}:
        return BOOL
    return REAL


# -- booleanization --------------------------------------------------------------


def booleanize_rule(r: Rule, sr: Semiring) -> Rule | None:
    """The ``:-`` version of ``r``, or ``None`` if a zero constant kills it."""
    body = []
    for b in r.body:
        if is_constant_subgoal(b):
            if sr.is_zero(sr.lift(b.functor)):
                return None
            continue
        if is_question(b):
            body.append(b.args[0])
        else:
            body.append(b)
    # constants become true, and a true conjunct is redundant
    body = [b for b in body if b != TRUE]
    return Rule(r.head, ":-", tuple(body))


def booleanize(program: Program, semiring: Semiring | str | None = None) -> Program:
    """Replace every aggregator by ``:-`` and constants by ``true``.

    Rules with a constant equal to the semiring zero are deleted, ``?``
    markers are dropped and params are kept.
    """
    sr = semiring if isinstance(semiring, Semiring) else select(program, semiring)
    rules = [booleanize_rule(r, sr) for r in program.rules]
    return Program(tuple(r for r in rules if r is not None), program.params, "bool")
