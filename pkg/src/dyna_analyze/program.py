"""Program objects: rules, programs, simple types, propagation rules, size declarations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

from .symbolic import SymExpr
from .term import Term, Var, iter_vars

AGGREGATORS = ("+=", "min=", "max=", "=", ":-")

# name -> arity
BUILTINS = {
    "lessthan": 2,
    "leq": 2,
    "eq": 2,
    "plus": 3,
    "times": 3,
    "true": 0,
    "fail": 0,
}

TRUE = Term("true")
FAIL = Term("fail")


def is_builtin(t) -> bool:
    return isinstance(t, Term) and BUILTINS.get(t.functor) == len(t.args)


def is_constant_subgoal(t) -> bool:
    """Numeric literals in a rule body stand for their own semiring value."""
    return isinstance(t, Term) and t.is_number()


def is_question(t) -> bool:
    return isinstance(t, Term) and t.functor == "?" and len(t.args) == 1


def eval_builtin(c: Term) -> bool | None:
    """Truth value of a builtin constraint, or ``None`` if not yet decidable.

    Order comparisons and arithmetic apply to integers only; a ground
    comparison involving anything else is false.
    """
    f = c.functor
    if f == "true":
        return True
    if f == "fail":
        return False
    if f == "eq":
        a, b = c.args
        if a == b:
            return True
        if a.is_ground and b.is_ground:
            return False
        return None
    if not c.is_ground:
        if f in ("lessthan", "leq") and c.args[0] == c.args[1]:
            return f == "leq"
        return None
    vals = [a.functor if (not a.args and type(a.functor) is int) else None for a in c.args]
    if any(v is None for v in vals):
        return False
    if f == "lessthan":
        return vals[0] < vals[1]
    if f == "leq":
        return vals[0] <= vals[1]
    if f == "plus":
        return vals[0] + vals[1] == vals[2]
    if f == "times":
        return vals[0] * vals[1] == vals[2]
    raise ValueError(f"not a builtin: {c}")


@dataclass(frozen=True)
class Rule:
    head: Term
    aggregator: str
    body: tuple = ()

    def __post_init__(self):
        if self.aggregator not in AGGREGATORS:
            raise ValueError(f"unknown aggregator {self.aggregator!r}")
        if is_builtin(self.head):
            raise ValueError(f"rule head {self.head} is a builtin")

    def terms(self) -> Iterator:
        yield self.head
        yield from self.body

    def map_terms(self, fn: Callable) -> "Rule":
        return Rule(fn(self.head), self.aggregator, tuple(fn(b) for b in self.body))

    def is_axiom(self) -> bool:
        return all(is_constant_subgoal(b) or b == TRUE for b in self.body)

    def range_restricted(self) -> bool:
        body_vars = {v.name for b in self.body for v in iter_vars(b)}
        return all(v.name in body_vars for v in iter_vars(self.head))

    def __str__(self):
        from .syntax import format_rule

        return format_rule(self)


@dataclass(frozen=True)
class Program:
    rules: tuple = ()
    params: frozenset = frozenset()
    semiring: str | None = None

    def __post_init__(self):
        for r in self.rules:
            if r.head.functor in self.params:
                raise ValueError(f"param {r.head.functor} appears as the head of a rule")

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def __add__(self, other: "Program") -> "Program":
        return Program(self.rules + other.rules, self.params | other.params, self.semiring or other.semiring)

    def head_functors(self) -> set:
        return {r.head.functor for r in self.rules}

    def param_signatures(self) -> set[tuple]:
        """Functor/arity pairs of params as they are used in the rules."""
        out = set()
        for r in self.rules:
            for t in r.terms():
                for sub in _subterms_top(t):
                    if sub.functor in self.params:
                        out.add(sub.signature)
        return out

    def __str__(self):
        from .syntax import format_program

        return format_program(self)


def _subterms_top(t) -> Iterator[Term]:
    if isinstance(t, Term):
        if is_question(t):
            yield from _subterms_top(t.args[0])
        else:
            yield t


@dataclass(frozen=True)
class SimpleType:
    """The set ``{head | constraints}`` of ground instances of ``head``."""

    head: Term
    constraints: frozenset = frozenset()

    def __init__(self, head, constraints=()):
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "constraints", frozenset(constraints))

    def terms(self) -> Iterator:
        yield self.head
        yield from self.constraints

    def map_terms(self, fn: Callable) -> "SimpleType":
        return SimpleType(fn(self.head), (fn(c) for c in self.constraints))

    @property
    def functor(self):
        return self.head.functor

    def is_empty(self) -> bool:
        return FAIL in self.constraints

    def head_vars(self) -> set[str]:
        return {v.name for v in iter_vars(self.head)}

    def __str__(self):
        from .syntax import format_type

        return format_type(self)

    def __repr__(self):
        return f"SimpleType({self})"


@dataclass(frozen=True)
class PropagationRule:
    """``conclusion <== premises``; the conclusion may be ``fail``."""

    conclusion: Term
    premises: tuple = ()

    def __post_init__(self):
        prem = {v.name for p in self.premises for v in iter_vars(p)}
        if self.premises and any(v.name not in prem for v in iter_vars(self.conclusion)):
            raise ValueError(f"conclusion variables of {self} must occur in its premises")

    def terms(self) -> Iterator:
        yield self.conclusion
        yield from self.premises

    def map_terms(self, fn: Callable) -> "PropagationRule":
        return PropagationRule(fn(self.conclusion), tuple(fn(p) for p in self.premises))

    def is_fact(self) -> bool:
        return not self.premises

    def __str__(self):
        from .syntax import format_prop_rule

        return format_prop_rule(self)


@dataclass(frozen=True)
class CardinalityDecl:
    """``|p1, ..., pm| <= bound`` given values of the ``bound_vars`` (``+X``)."""

    pattern: tuple
    bound_vars: frozenset
    bound: SymExpr

    def terms(self) -> Iterator:
        yield from self.pattern

    def map_terms(self, fn: Callable) -> "CardinalityDecl":
        mapped = tuple(fn(p) for p in self.pattern)
        renamed = {fn(Var(v)).name for v in self.bound_vars}
        return CardinalityDecl(mapped, frozenset(renamed), self.bound)

    def __str__(self):
        from .syntax import format_decl

        return format_decl(self)


@dataclass
class AnalysisSpec:
    """Contents of a ``.dtype`` file."""

    input_types: list = field(default_factory=list)
    params: frozenset = frozenset()
    rules: list = field(default_factory=list)
    decls: list = field(default_factory=list)
    sizes: set = field(default_factory=set)

    def __add__(self, other: "AnalysisSpec") -> "AnalysisSpec":
        return AnalysisSpec(
            self.input_types + other.input_types,
            self.params | other.params,
            self.rules + other.rules,
            self.decls + other.decls,
            self.sizes | other.sizes,
        )
