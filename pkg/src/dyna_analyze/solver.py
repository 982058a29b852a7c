"""Naive bottom-up evaluation of weighted programs over ground data.

:func:`run` iterates the step operator from the all-zero valuation until the
values stop changing.  At the fixpoint it replays one full step in the
driver/passenger style of an agenda-based chart parser and counts *prefix
firings*: every driver item matched against a rule subgoal, and every partial
match extended by a passenger, costs one unit.  That count is what the time
bounds of :mod:`dyna_analyze.cost` are checked against.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Protocol

from .program import (
    TRUE,
    Program,
    Rule,
    eval_builtin,
    is_builtin,
    is_constant_subgoal,
    is_question,
)
from .semiring import Semiring, select
from .term import Term, instantiate, iter_vars, match


class SolverError(Exception):
    pass


class NonRangeRestricted(SolverError):
    def __init__(self, rule: Rule):
        super().__init__(f"head variables of `{rule}` do not all occur in its body")
        self.rule = rule


class UnboundBuiltin(SolverError):
    def __init__(self, rule: Rule, goal: Term):
        super().__init__(f"builtin `{goal}` is not sufficiently instantiated in `{rule}`")
        self.rule = rule
        self.goal = goal


class NonConvergence(SolverError):
    def __init__(self, max_iters: int):
        super().__init__(f"no fixpoint after {max_iters} iterations")
        self.max_iters = max_iters


class MultipleAssignment(SolverError):
    pass


class Valuation(dict):
    """Ground term -> semiring value; absent keys are zero."""

    def __init__(self, semiring: Semiring, items=()):
        super().__init__(items)
        self.semiring = semiring

    def __missing__(self, key):
        return self.semiring.zero

    def support(self) -> set:
        return support(self)

    def approx_eq(self, other: "Valuation") -> bool:
        sr = self.semiring
        if self.support() != other.support():
            return False
        return all(sr.approx_eq(v, other[k]) for k, v in self.items() if not sr.is_zero(v))


def support(nu: Valuation) -> set:
    sr = nu.semiring
    return {k for k, v in nu.items() if not sr.is_zero(v)}


# -- chart ------------------------------------------------------------------------


class Chart:
    """Items grouped by functor/arity with lazily built per-argument indices."""

    def __init__(self, items: Iterable[Term] = ()):
        self.items = set()
        self.by_sig: dict = {}
        self._index: dict = {}
        for it in items:
            self.add(it)

    def add(self, item: Term):
        if item in self.items:
            return
        self.items.add(item)
        self.by_sig.setdefault(item.signature, []).append(item)
        self._index.clear()

    def __contains__(self, item):
        return item in self.items

    def lookup(self, pattern) -> list:
        """All items that are instances of ``pattern`` (ground arguments act as keys)."""
        if not isinstance(pattern, Term):
            return []
        if pattern.is_ground:
            return [pattern] if pattern in self.items else []
        sig = pattern.signature
        bucket = self.by_sig.get(sig)
        if not bucket:
            return []
        positions = tuple(i for i, a in enumerate(pattern.args) if a.is_ground)
        if not positions:
            cands = bucket
        else:
            idx = self._index.get((sig, positions))
            if idx is None:
                idx = {}
                for it in bucket:
                    idx.setdefault(tuple(it.args[i] for i in positions), []).append(it)
                self._index[(sig, positions)] = idx
            cands = idx.get(tuple(pattern.args[i] for i in positions), ())
        return [it for it in cands if match(pattern, it) is not None]


# -- subgoal matching ---------------------------------------------------------------


def _query_of(goal: Term) -> Term:
    return goal.args[0] if is_question(goal) else goal


def builtin_ready(goal: Term, theta: dict) -> bool:
    g = instantiate(goal, theta)
    if g.is_ground:
        return True
    f, a = g.functor, g.args
    if f == "eq":
        return a[0].is_ground or a[1].is_ground
    if f in ("plus", "times"):
        known = [x.is_ground for x in a]
        if f == "times" and not known[2]:
            return known[0] and known[1]
        return sum(known) >= 2 and (f == "plus" or known[2])
    return False


def solve_builtin(goal: Term, theta: dict) -> list[dict]:
    """Extensions of ``theta`` satisfying a ready builtin (zero or one)."""
    g = instantiate(goal, theta)
    if g.is_ground:
        return [theta] if eval_builtin(g) else []
    f, a = g.functor, g.args
    if f == "eq":
        lhs, rhs = (a[0], a[1]) if not a[0].is_ground else (a[1], a[0])
        b = match(lhs, rhs, theta)
        return [b] if b is not None else []
    ints = [x.functor if x.is_ground and not x.args and type(x.functor) is int else None for x in a]
    if any(x.is_ground and v is None for x, v in zip(a, ints)):
        return []
    x, y, z = ints
    if f == "plus":
        if z is None:
            val, slot = x + y, 2
        elif x is None:
            val, slot = z - y, 0
        else:
            val, slot = z - x, 1
    else:
        if z is None:
            val, slot = x * y, 2
        else:
            known = y if x is None else x
            if known == 0 or z % known:
                return []
            val, slot = z // known, 0 if x is None else 1
    b = match(a[slot], Term(val), theta)
    return [b] if b is not None else []


def match_subgoal(goal: Term, theta: dict, chart: Chart) -> list[tuple[dict, Term]]:
    """Extensions of ``theta`` by one subgoal, paired with the matched item."""
    if is_builtin(goal):
        return [(b, instantiate(goal, b)) for b in solve_builtin(goal, theta)]
    if is_constant_subgoal(goal) or goal == TRUE:
        return [(theta, TRUE)]
    pattern = instantiate(_query_of(goal), theta)
    out = []
    for item in chart.lookup(pattern):
        b = match(pattern, item)
        merged = dict(theta)
        merged.update(b)
        out.append((merged, item))
    return out


def default_next(body: tuple, remaining: Iterable[int], theta: dict) -> int | None:
    """Leftmost remaining subgoal that is a chart query or a ready builtin."""
    for i in sorted(remaining):
        g = body[i]
        if not is_builtin(g) or builtin_ready(g, theta):
            return i
    return None


# -- step operator -------------------------------------------------------------------


def _check_rule(r: Rule):
    body_vars = {v.name for b in r.body for v in iter_vars(b)}
    if any(v.name not in body_vars for v in iter_vars(r.head)):
        raise NonRangeRestricted(r)


def groundings(r: Rule, chart: Chart) -> Iterator[tuple[dict, list]]:
    """All satisfying assignments of ``r``'s body, with the matched items."""

    def go(remaining: frozenset, theta: dict, items: list):
        if not remaining:
            yield theta, items
            return
        i = default_next(r.body, remaining, theta)
        if i is None:
            raise UnboundBuiltin(r, instantiate(r.body[min(remaining)], theta))
        for b, item in match_subgoal(r.body[i], theta, chart):
            yield from go(remaining - {i}, b, items + [(i, item)])

    yield from go(frozenset(range(len(r.body))), {}, [])


def _value(sr: Semiring, r: Rule, items: list, nu: Valuation):
    vals = []
    for i, item in items:
        g = r.body[i]
        if is_constant_subgoal(g):
            vals.append(sr.lift(g.functor))
        elif is_builtin(g) or is_question(g):
            vals.append(sr.one)
        else:
            vals.append(nu[item])
    return sr.prod(vals)


def step(program: Program | Iterable[Rule], nu: Valuation, semiring: Semiring | None = None,
         _edges: list | None = None) -> Valuation:
    """One parallel application of every rule to ``nu``."""
    sr = semiring or nu.semiring
    rules = program.rules if isinstance(program, Program) else tuple(program)
    chart = Chart(support(nu))
    out = Valuation(sr)
    assigned: dict = {}
    for r in rules:
        _check_rule(r)
        for theta, items in groundings(r, chart):
            head = instantiate(r.head, theta)
            if not head.is_ground:
                raise UnboundBuiltin(r, head)
            v = _value(sr, r, items, nu)
            if r.aggregator == "=":
                if head in assigned:
                    raise MultipleAssignment(f"`{head}` receives more than one value under `=`")
                assigned[head] = v
            out[head] = sr.plus(out[head], v)
            if _edges is not None:
                for i, item in items:
                    if not (is_builtin(r.body[i]) or is_constant_subgoal(r.body[i])):
                        _edges.append((item, head))
    return Valuation(sr, {k: v for k, v in out.items() if not sr.is_zero(v)})


# -- prefix-firing instrumentation ------------------------------------------------------


class Chooser(Protocol):
    """Decides the order in which passengers are joined after a driver."""

    def start(self, rule_index: int, driver: int, item: Term, theta: dict):
        ...

    def next(self, state, remaining: frozenset, theta: dict) -> int | None:
        ...

    def advance(self, state, pos: int, item: Term, theta: dict):
        ...


def _countable(g) -> bool:
    return not (is_constant_subgoal(g) or g == TRUE)


def _strip(r: Rule) -> Rule:
    """Drop compile-time constants so body positions match the boolean program."""
    return Rule(r.head, r.aggregator, tuple(_query_of(g) for g in r.body if _countable(g)))


def count_prefix_firings(rules: list[Rule | None], chart: Chart, chooser: Chooser | None = None) -> list[int]:
    """Per-rule prefix firings of one full step with every chart item as a driver.

    A driver matched to a subgoal, and every partial match extended by one
    more passenger, each count once.  Builtins are never drivers.
    """
    counts = []
    for ri, r in enumerate(rules):
        if r is None:
            counts.append(0)
            continue
        body = r.body
        total = 0
        for d, goal in enumerate(body):
            if is_builtin(goal):
                continue
            for theta, item in match_subgoal(goal, {}, chart):
                state = chooser.start(ri, d, item, theta) if chooser else None
                total += _count(r, body, frozenset(range(len(body))) - {d}, theta, chart, chooser, state)
        counts.append(total)
    return counts


def _count(r, body, remaining, theta, chart, chooser, state) -> int:
    if not remaining:
        return 1
    i = chooser.next(state, remaining, theta) if chooser else None
    if i is None or i not in remaining or (is_builtin(body[i]) and not builtin_ready(body[i], theta)):
        i = default_next(body, remaining, theta)
    if i is None:
        raise UnboundBuiltin(r, instantiate(body[min(remaining)], theta))
    n = 1
    for b, item in match_subgoal(body[i], theta, chart):
        child = chooser.advance(state, i, item, b) if chooser else None
        n += _count(r, body, remaining - {i}, b, chart, chooser, child)
    return n


# -- driver ------------------------------------------------------------------------------


@dataclass
class RunStats:
    iterations: int = 0
    prefix_firings: int = 0
    rule_prefix_firings: list = field(default_factory=list)
    rule_firings: int = 0
    cyclic: bool = False

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "prefix_firings": self.prefix_firings,
            "rule_prefix_firings": list(self.rule_prefix_firings),
            "rule_firings": self.rule_firings,
            "cyclic": self.cyclic,
        }


def _data_rules(data) -> tuple:
    if data is None:
        return ()
    rules = data.rules if isinstance(data, Program) else tuple(data)
    for r in rules:
        if not r.is_axiom() or not r.head.is_ground:
            raise SolverError(f"data must consist of ground axioms, got `{r}`")
    return rules


def run(
    program: Program,
    data=None,
    semiring: Semiring | str | None = None,
    max_iters: int = 10_000,
    tol: float = 1e-9,
    chooser: Chooser | None = None,
) -> tuple[Valuation, RunStats]:
    """Iterate the step operator on ``program ++ data`` from the zero valuation."""
    sr = semiring if isinstance(semiring, Semiring) else select(program, semiring)
    drules = _data_rules(data)
    prules = tuple(program.rules)
    for r in prules:
        _check_rule(r)
    # rules carrying the zero constant can never contribute and are compiled away
    live = [
        r for r in prules
        if not any(is_constant_subgoal(g) and sr.is_zero(sr.lift(g.functor)) for g in r.body)
    ]
    all_rules = tuple(live) + drules
    nu = Valuation(sr)
    stats = RunStats()
    for it in range(1, max_iters + 1):
        nxt = step(all_rules, nu, sr)
        stats.iterations = it
        if _close(nxt, nu, tol):
            nu = nxt
            break
        nu = nxt
    else:
        raise NonConvergence(max_iters)

    chart = Chart(support(nu))
    edges: list = []
    step(all_rules, nu, sr, _edges=edges)
    stats.cyclic = _has_cycle(edges)
    stats.rule_firings = sum(sum(1 for _ in groundings(r, chart)) for r in all_rules)
    # zero-constant rules report no work
    live_ids = {id(r) for r in live}
    stripped = [_strip(r) if id(r) in live_ids else None for r in prules]
    stats.rule_prefix_firings = count_prefix_firings(stripped, chart, chooser)
    stats.prefix_firings = sum(stats.rule_prefix_firings)
    return nu, stats


def _close(a: Valuation, b: Valuation, tol: float) -> bool:
    sr = a.semiring
    if support(a) != support(b):
        return False
    return all(sr.approx_eq(v, b[k], tol) for k, v in a.items())


def _has_cycle(edges: list) -> bool:
    graph: dict = {}
    for src, dst in edges:
        graph.setdefault(dst, set()).add(src)
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError:
        return True
    return False
