"""Symbolic space and time bounds from inferred types.

Sizes come from conditional cardinality declarations ``|c(+X, Y)| <= n``: no
assignment to the ``+`` variables extends to more than ``n`` satisfying
assignments of the pattern.  The bound on a constraint set multiplies such
conditional bounds along an elimination order; the best order is found by
dynamic programming over subsets of the constraints.

Time is measured in prefix firings.  For each rule, each subgoal can act as
the driver; :func:`suffix_runtime` bounds the work of joining the remaining
subgoals, choosing the next subgoal to minimize the bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .program import FAIL, AnalysisSpec, CardinalityDecl, Program, Rule, SimpleType, is_builtin
from .propagate import LimitExceeded, saturate
from .semiring import booleanize_rule, select
from .symbolic import INF, ONE, ZERO, SymExpr, asymptotic, choice_key, minimum
from .syntax import canonical_text, parse_decl
from .term import Term, Var, iter_vars, match, subst, term_vars
from .typeinfer import TypeEnv, lookup

MAX_EXACT = 16

DEFAULT_DECLS = tuple(
    parse_decl(text)
    for text in (
        "|plus(+X, +Y, Z)| <= 1.",
        "|plus(X, +Y, +Z)| <= 1.",
        "|plus(+X, Y, +Z)| <= 1.",
        "|times(+X, +Y, Z)| <= 1.",
        "|eq(+X, Y)| <= 1.",
        "|eq(X, +Y)| <= 1.",
    )
)


def _vars(t) -> frozenset:
    return frozenset(v.name for v in iter_vars(t))


class CardinalityDB:
    """Cardinality declarations plus the implicit ones.

    Implicitly ``|c | V| <= 1`` whenever every variable of ``c`` is in ``V``,
    and ``|fail| <= 0``.
    """

    def __init__(self, decls: Iterable[CardinalityDecl] = (), defaults: bool = True):
        self.decls = list(DEFAULT_DECLS if defaults else ()) + list(decls)
        self.single: dict = {}
        self.composite = []
        for d in self.decls:
            if len(d.pattern) == 1:
                self.single.setdefault(d.pattern[0].signature, []).append(d)
            else:
                self.composite.append(d)
        self.greedy_used = False
        self._cache: dict = {}

    @classmethod
    def from_spec(cls, spec: AnalysisSpec) -> "CardinalityDB":
        return cls(spec.decls)

    def bound(self, c: Term, bound_vars: frozenset) -> SymExpr:
        """``|c | V|`` from single-constraint declarations (INF if none applies)."""
        if c == FAIL:
            return ZERO
        if _vars(c) <= bound_vars:
            return ONE
        cands = []
        for d in self.single.get(c.signature, ()):
            b = match(d.pattern[0], c)
            if b is not None and _plus_ok(d, b, bound_vars):
                cands.append(d.bound)
        return minimum(cands)

    def composite_steps(self, cons: list, avail: frozenset, bound_vars: frozenset):
        """(indices, bound) for composite declarations matching distinct constraints."""
        for d in self.composite:
            m = len(d.pattern)
            for combo in itertools.permutations(sorted(avail), m):
                b: dict | None = {}
                for p, i in zip(d.pattern, combo):
                    b = match(p, cons[i], b)
                    if b is None:
                        break
                if b is not None and _plus_ok(d, b, bound_vars):
                    yield frozenset(combo), d.bound


def _plus_ok(d: CardinalityDecl, b: dict, bound_vars: frozenset) -> bool:
    for v in d.bound_vars:
        t = b.get(v)
        if t is None or not _vars(t) <= bound_vars:
            return False
    return True


# -- conditional cardinality of a constraint set ---------------------------------------


def card_bound(cons: Iterable[Term], bound_vars: Iterable[str], db: CardinalityDB,
               target: Iterable[str] | None = None) -> SymExpr:
    """Upper bound on assignments to ``target`` satisfying ``cons`` given ``bound_vars``.

    ``target`` defaults to every variable of ``cons``.  Minimizes the product
    of conditional bounds over elimination orders; constraints never used in
    the product are simply not relied on.  INF if ``target`` cannot be covered.
    """
    cons = sorted(set(cons), key=canonical_text_of)
    V0 = frozenset(bound_vars)
    if FAIL in cons:
        return ZERO
    allv = frozenset().union(*(_vars(c) for c in cons)) if cons else frozenset()
    goal = (allv if target is None else frozenset(target)) - V0
    if not goal:
        return ONE
    key = (tuple(cons), V0, goal)
    hit = db._cache.get(key)
    if hit is not None:
        return hit
    if len(cons) > MAX_EXACT:
        out = _greedy(cons, V0, goal, db)
    else:
        out = _exact(cons, V0, goal, db)
    db._cache[key] = out
    return out


def canonical_text_of(c) -> str:
    from .syntax import format_subgoal

    return format_subgoal(c)


def _steps(cons, used: frozenset, V: frozenset, db: CardinalityDB):
    avail = frozenset(range(len(cons))) - used
    for i in sorted(avail):
        c = cons[i]
        if _vars(c) <= V:
            continue
        b = db.bound(c, V)
        if not b.infinite:
            yield frozenset({i}), b
    if db.composite:
        for idx, b in db.composite_steps(cons, avail, V):
            if not frozenset().union(*(_vars(cons[i]) for i in idx)) <= V:
                yield idx, b


def _exact(cons, V0, goal, db) -> SymExpr:
    var_sets = [_vars(c) for c in cons]

    def bound_of(S):
        out = V0
        for i in S:
            out = out | var_sets[i]
        return out

    best = {frozenset(): ONE}
    # every step consumes at least one constraint, so sizes only grow
    by_size: dict = {0: [frozenset()]}
    answers = []
    for size in range(len(cons) + 1):
        for S in sorted(by_size.get(size, ()), key=sorted):
            V = bound_of(S)
            if goal <= V:
                answers.append(best[S])
                continue
            for idx, b in _steps(cons, S, V, db):
                T = S | idx
                val = best[S] * b
                cur = best.get(T)
                if cur is None:
                    by_size.setdefault(len(T), []).append(T)
                if cur is None or choice_key(val) < choice_key(cur):
                    best[T] = val
    return minimum(answers)


def _greedy(cons, V0, goal, db) -> SymExpr:
    db.greedy_used = True
    S = frozenset()
    V = V0
    total = ONE
    while not goal <= V:
        options = list(_steps(cons, S, V, db))
        if not options:
            return INF
        idx, b = min(options, key=lambda ob: (choice_key(ob[1]), sorted(ob[0])))
        total = total * b
        S = S | idx
        for i in idx:
            V = V | _vars(cons[i])
    return total


# -- types ---------------------------------------------------------------------------------


def type_size(s: SimpleType, db: CardinalityDB, bound_vars: Iterable[str] = (),
              rules=None, limits=None) -> SymExpr:
    """Bound on the number of ground instances of ``s`` (given ``bound_vars``).

    The head itself counts as a constraint, so declarations about an input
    relation bound its type directly.  A head variable that no usable
    constraint covers makes the size INF.
    """
    cons = set(s.constraints)
    if rules is not None:
        try:
            cons = set(saturate(cons, rules, limits) if limits else saturate(cons, rules))
        except LimitExceeded:
            pass
    if FAIL in cons:
        return ZERO
    cons.add(s.head)
    return card_bound(cons, bound_vars, db, target=s.head_vars())


def space_bound(env: TypeEnv, db: CardinalityDB) -> SymExpr:
    total = ZERO
    for s in env.types:
        total = total + type_size(s, db, rules=env.rules, limits=env.limits)
    return total


# -- time ------------------------------------------------------------------------------------


def builtin_ready(goal: Term, bound: frozenset) -> bool:
    """Whether the interpreter can evaluate ``goal`` once ``bound`` are ground."""
    known = [_vars(a) <= bound for a in goal.args]
    f = goal.functor
    if all(known):
        return True
    if f == "eq":
        return any(known)
    if f == "plus":
        return sum(known) >= 2
    if f == "times":
        return (known[0] and known[1]) or (known[2] and (known[0] or known[1]))
    return False


@dataclass
class Branch:
    theta: dict
    constraints: frozenset  # of the covering type
    accumulated: frozenset
    passengers: SymExpr
    child: "PlanNode"


@dataclass
class PlanNode:
    cost: SymExpr
    choice: int | None = None
    branches: list = field(default_factory=list)


LEAF = PlanNode(ONE)


class _Runtime:
    def __init__(self, env: TypeEnv, db: CardinalityDB):
        self.env = env
        self.db = db
        self.memo: dict = {}

    def suffix(self, r: Rule, prefix: frozenset, C: frozenset, theta: dict) -> PlanNode:
        body = r.body
        if len(prefix) == len(body):
            return LEAF
        key = (r, prefix, _state_key(body, C, theta))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        bound = frozenset().union(*(_vars(subst(body[i], theta)) for i in prefix)) if prefix else frozenset()
        best: PlanNode | None = None
        for p in range(len(body)):
            if p in prefix:
                continue
            goal = subst(body[p], theta)
            if is_builtin(goal) and not builtin_ready(goal, bound):
                continue
            total = ZERO
            branches = []
            for t2, c2 in lookup(self.env, body[p], theta):
                try:
                    c3 = saturate(subst_set(C, t2) | subst_set(c2, t2), self.env.rules, self.env.limits)
                except LimitExceeded:
                    c3 = subst_set(C, t2) | subst_set(c2, t2)
                if FAIL in c3:
                    continue
                pbar = subst(body[p], t2)
                V = frozenset().union(*(_vars(subst(body[i], t2)) for i in prefix)) if prefix else frozenset()
                q = card_bound(c3 | {pbar}, V, self.db, target=_vars(pbar) - V)
                child = self.suffix(r, prefix | {p}, c3, t2)
                total = total + q * child.cost
                branches.append(Branch(t2, frozenset(c2), c3, q, child))
            cost = ONE + total
            if best is None or choice_key(cost) < choice_key(best.cost):
                best = PlanNode(cost, p, branches)
        if best is None:
            best = PlanNode(INF)
        self.memo[key] = best
        return best


def subst_set(cs, theta) -> frozenset:
    return frozenset(subst(c, theta) for c in cs)


def _state_key(body, C, theta) -> str:
    head = Term("$state", tuple(subst(b, theta) for b in body))
    return canonical_text(SimpleType(head, C))


def suffix_runtime(r: Rule, prefix: Iterable[int], constraints: Iterable[Term], theta: dict,
                   env: TypeEnv, db: CardinalityDB) -> SymExpr:
    """Bound on prefix firings to finish joining ``r`` after the ``prefix`` subgoals."""
    return _Runtime(env, db).suffix(r, frozenset(prefix), frozenset(constraints), dict(theta)).cost


@dataclass
class DriverTerm:
    rule_index: int
    driver: int
    type: SimpleType
    theta: dict
    size: SymExpr
    plan: PlanNode

    @property
    def cost(self) -> SymExpr:
        return self.size * self.plan.cost


def driver_terms(program: Program, env: TypeEnv, db: CardinalityDB, semiring=None) -> list[DriverTerm]:
    sr = select(program, semiring)
    rt = _Runtime(env, db)
    out = []
    for ri, r in enumerate(program.rules):
        b = booleanize_rule(r, sr)
        if b is None:
            continue
        for d, goal in enumerate(b.body):
            if is_builtin(goal):
                continue
            for theta, cons in lookup(env, goal, {}):
                t = SimpleType(subst(goal, theta), subst_set(cons, theta))
                try:
                    c0 = saturate(t.constraints, env.rules, env.limits)
                except LimitExceeded:
                    c0 = t.constraints
                if FAIL in c0:
                    continue
                size = type_size(SimpleType(t.head, c0), db)
                plan = rt.suffix(b, frozenset({d}), c0, theta)
                out.append(DriverTerm(ri, d, t, theta, size, plan))
    return out


def time_bound(program: Program, env: TypeEnv, db: CardinalityDB, semiring=None) -> SymExpr:
    """Sum over rules and driver subgoals of driver-type size times suffix runtime."""
    total = ZERO
    for term in driver_terms(program, env, db, semiring):
        total = total + term.cost
    return total


# -- full report ---------------------------------------------------------------------------


@dataclass
class BoundReport:
    type_sizes: list  # (SimpleType, SymExpr)
    space: SymExpr
    time: SymExpr
    drivers: list
    greedy: bool = False

    @property
    def space_big_o(self) -> SymExpr:
        return asymptotic(self.space)

    @property
    def time_big_o(self) -> SymExpr:
        return asymptotic(self.time)

    def unbounded_types(self) -> list:
        return [s for s, size in self.type_sizes if size.infinite]


def analyze_bounds(program: Program, env: TypeEnv, db: CardinalityDB, semiring=None) -> BoundReport:
    sizes = [(s, type_size(s, db, rules=env.rules, limits=env.limits)) for s in env.types]
    space = ZERO
    for _, size in sizes:
        space = space + size
    drivers = driver_terms(program, env, db, semiring)
    time = ZERO
    for d in drivers:
        time = time + d.cost
    return BoundReport(sizes, space, time, drivers, db.greedy_used)


# -- following a plan at run time --------------------------------------------------------------


class PlanFollower:
    """Solver chooser that joins subgoals in the order the analysis planned.

    Each matched item is assigned to the first plan branch whose type covers
    it under the interpretation ``interp``; unmatched items fall back to the
    interpreter's default order.
    """

    def __init__(self, drivers: list[DriverTerm], interp, domain=None):
        from .typeinfer import _satisfiable

        self._sat = _satisfiable
        self.interp = interp
        self.domain = domain
        self.by_driver: dict = {}
        for d in drivers:
            self.by_driver.setdefault((d.rule_index, d.driver), []).append(d)

    def _fits(self, theta_plan: dict, cons, concrete: dict) -> bool:
        sigma: dict = {}
        from .term import unify

        for name, val in concrete.items():
            sigma = unify(subst(Var(name), theta_plan), val, sigma)
            if sigma is None:
                return False
        ground = [subst(subst(c, theta_plan), sigma) for c in cons]
        domain = self.domain
        if domain is None:
            domain = set()
            for tuples in self.interp.values():
                for tup in tuples:
                    domain.update(tup)
            for v in concrete.values():
                domain.add(v)
        return self._sat(ground, self.interp, list(domain))

    def start(self, rule_index: int, driver: int, item: Term, theta: dict):
        for d in self.by_driver.get((rule_index, driver), ()):
            if self._fits(d.theta, d.type.constraints, theta):
                return d.plan
        return None

    def next(self, state, remaining, theta):
        return state.choice if state is not None else None

    def advance(self, state, pos, item, theta):
        if state is None or state.choice != pos:
            return None
        for br in state.branches:
            if self._fits(br.theta, br.constraints, theta):
                return br.child
        return None


__all__ = [
    "BoundReport",
    "CardinalityDB",
    "DriverTerm",
    "PlanFollower",
    "PlanNode",
    "analyze_bounds",
    "asymptotic",
    "card_bound",
    "driver_terms",
    "space_bound",
    "suffix_runtime",
    "term_vars",
    "time_bound",
    "type_size",
]
