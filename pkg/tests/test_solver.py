from __future__ import annotations

import itertools
import math
import random

import pytest

from conftest import load
from randprog import SEED

from dyna_analyze import Program, Term, Valuation, parse_program, parse_term, run, step, support
from dyna_analyze.program import eval_builtin, is_builtin, is_constant_subgoal, is_question
from dyna_analyze.semiring import BOOL, COUNT, MIN_PLUS, REAL, select
from dyna_analyze.solver import MultipleAssignment, NonConvergence, NonRangeRestricted, UnboundBuiltin
from dyna_analyze.term import instantiate, term_vars

T = parse_term


class TestStep:
    def test_no_axioms(self):
        p = load("cky")
        assert step(p, Valuation(REAL)) == {}

    def test_axioms_fire_once(self):
        p = parse_program("a += 2.\nb += a * 3.")
        nu1 = step(p, Valuation(REAL))
        assert nu1 == {T("a"): 2.0}
        nu2 = step(p, nu1)
        assert nu2 == {T("a"): 2.0, T("b"): 6.0}

    def test_aggregation_sums_groundings(self):
        p = parse_program("params: f.\ntotal += f(X).")
        nu = Valuation(REAL, {T("f(1)"): 1.5, T("f(2)"): 2.5})
        assert step(p, nu)[T("total")] == 4.0


class TestSupport:
    def test_real_zero_removed(self):
        assert support(Valuation(REAL, {T("a"): 0.0, T("b"): 2.0})) == {T("b")}

    def test_min_plus_infinity_is_zero(self):
        assert support(Valuation(MIN_PLUS, {T("a"): math.inf, T("b"): 0.0})) == {T("b")}

    def test_bool(self):
        assert support(Valuation(BOOL, {T("a"): True})) == {T("a")}

    def test_missing_is_zero(self):
        assert Valuation(MIN_PLUS)[T("x")] == math.inf


class TestRun:
    def test_inside_value(self):
        # two parse trees of "a a" share the same weight 0.75 * 0.75 * 0.25
        nu, stats = run(load("cky"), load("cky_data"))
        assert abs(nu[T("goal")] - 0.75 * 0.75 * 0.25) <= 1e-9
        assert nu[T("beta(s,0,2)")] == pytest.approx(0.140625)
        assert not stats.cyclic

    def test_empty_data(self):
        nu, _ = run(load("cky"))
        assert nu.support() == set()

    def test_count_paths(self):
        p = parse_program("params: e.\npath(X,Y) += e(X,Y).\npath(X,Z) += path(X,Y) * e(Y,Z).")
        d = parse_program("e(0,1) += 1.\ne(0,2) += 1.\ne(1,3) += 1.\ne(2,3) += 1.\ne(3,4) += 1.")
        nu, _ = run(p, d, semiring="count")
        assert nu[T("path(0,4)")] == 2 and nu[T("path(0,3)")] == 2

    def test_question_marks_map_to_one(self):
        p = parse_program("params: b.\na += ?b(X) * 3.")
        nu, _ = run(p, parse_program("b(1) += 5.\nb(2) += 7."))
        assert nu[T("a")] == 6.0

    def test_negative_cycle(self):
        p = parse_program("params: e.\nd(Y) min= start(Y).\nd(Y) min= d(X) + e(X,Y).\nstart(0) min= 0.")
        with pytest.raises(NonConvergence):
            run(p, parse_program("e(0,1) min= 1.\ne(1,0) min= -3."), max_iters=200)

    def test_cyclic_flag(self):
        p = parse_program("params: e.\nr(X,Y) :- e(X,Y).\nr(X,Z) :- r(X,Y), e(Y,Z).")
        _, stats = run(p, parse_program("e(0,1).\ne(1,0)."))
        assert stats.cyclic
        _, stats = run(p, parse_program("e(0,1).\ne(1,2)."))
        assert not stats.cyclic

    def test_non_range_restricted(self):
        with pytest.raises(NonRangeRestricted):
            run(parse_program("params: b.\na(X) += b(Y)."), parse_program("b(1) += 1."))

    def test_unbound_builtin(self):
        with pytest.raises(UnboundBuiltin):
            run(parse_program("params: b.\na += b(Y) * X < Y."), parse_program("b(1) += 1."))

    def test_builtin_deferred(self):
        p = parse_program("params: b.\na(Y) += Y < 3 * b(Y).")
        nu, _ = run(p, parse_program("b(1) += 1.\nb(5) += 1."))
        assert nu.support() >= {T("a(1)")} and T("a(5)") not in nu.support()

    def test_arithmetic(self):
        p = parse_program("params: b.\nc(Z) += b(X) * b(Y) * Z is X + Y.")
        nu, _ = run(p, parse_program("b(1) += 1.\nb(2) += 1."))
        assert nu[T("c(3)")] == 2.0 and nu[T("c(4)")] == 1.0

    def test_single_assignment(self):
        p = parse_program("params: b.\na = b(X).")
        with pytest.raises(MultipleAssignment):
            run(p, parse_program("b(1) += 1.\nb(2) += 1."))

    def test_zero_constant_rule_does_no_work(self):
        p = parse_program("params: b.\na += b(X) * 0.")
        nu, stats = run(p, parse_program("b(1) += 1."))
        assert T("a") not in nu.support() and stats.rule_prefix_firings == [0]


# -- oracles -------------------------------------------------------------------------


def closure_by_matrix_powers(size: int, edges: set) -> set:
    m = [[(i, j) in edges for j in range(size)] for i in range(size)]
    reach = [row[:] for row in m]
    power = [row[:] for row in m]
    for _ in range(size):
        power = [[any(power[i][k] and m[k][j] for k in range(size)) for j in range(size)] for i in range(size)]
        reach = [[reach[i][j] or power[i][j] for j in range(size)] for i in range(size)]
    return {(i, j) for i in range(size) for j in range(size) if reach[i][j]}


class TestTransitiveClosure:
    def test_against_matrix_powers(self):
        rng = random.Random(SEED)
        p = parse_program("params: e.\nr(X,Y) :- e(X,Y).\nr(X,Z) :- r(X,Y), e(Y,Z).")
        for _ in range(30):
            size = rng.randint(1, 7)
            edges = {(i, j) for i in range(size) for j in range(size) if rng.random() < 0.25}
            data = parse_program("".join(f"e({i},{j}).\n" for i, j in edges))
            nu, _ = run(p, data)
            got = {(t.args[0].functor, t.args[1].functor) for t in nu.support() if t.functor == "r"}
            assert got == closure_by_matrix_powers(size, edges)


UNIVERSE = [Term(i) for i in range(4)]
DATA_RELS = {"e": 2, "c": 1}
DERIVED = ["p", "q", "goal"]
ARITY = {"e": 2, "c": 1, "p": 1, "q": 2, "goal": 0}


def random_acyclic(rng: random.Random) -> tuple[str, str]:
    rules = []
    for level, head in enumerate(DERIVED):
        lower = list(DATA_RELS) + DERIVED[:level]
        for _ in range(rng.randint(1, 2)):
            body, vars_ = [], []
            for _ in range(rng.randint(1, 3)):
                f = rng.choice(lower)
                args = [rng.choice("XYZ") if rng.random() < 0.85 else str(rng.randint(0, 3)) for _ in range(ARITY[f])]
                vars_ += [a for a in args if a.isalpha()]
                body.append(f + (f"({','.join(args)})" if args else ""))
            if len(set(vars_)) >= 2 and rng.random() < 0.3:
                a, b = rng.sample(sorted(set(vars_)), 2)
                body.append(f"{a} < {b}")
            if rng.random() < 0.3:
                body.append(rng.choice(["0.5", "2"]))
            hv = [rng.choice(vars_) if vars_ else "0" for _ in range(ARITY[head])]
            h = head + (f"({','.join(hv)})" if hv else "")
            rules.append(f"{h} += {' * '.join(body)}.")
    data = []
    for f, n in DATA_RELS.items():
        for args in itertools.product(range(4), repeat=n):
            if rng.random() < 0.3:
                data.append(f"{f}({','.join(map(str, args))}) += {rng.choice(['0.5', '1', '3'])}.")
    return "params: e; c.\n" + "\n".join(rules), "\n".join(data)


def enumerate_proofs(program: Program, data: Program, item: Term, sr, budget: list) -> list:
    """Every proof of ``item`` as the list of its leaf values (explicit, no sharing)."""
    out = []
    for r in data.rules:
        if r.head == item:
            out.append([sr.lift(r.body[0].functor)])
    for r in program.rules:
        names = sorted(term_vars(r.head) | set().union(*(term_vars(b) for b in r.body)))
        for values in itertools.product(UNIVERSE, repeat=len(names)):
            g = dict(zip(names, values))
            if instantiate(r.head, g) != item:
                continue
            partial = [[]]
            for b in r.body:
                if is_constant_subgoal(b):
                    partial = [p + [sr.lift(b.functor)] for p in partial]
                elif is_builtin(b):
                    if not eval_builtin(instantiate(b, g)):
                        partial = []
                elif is_question(b):
                    sub = enumerate_proofs(program, data, instantiate(b.args[0], g), sr, budget)
                    partial = partial if sr.sum(sr.prod(p) for p in sub) != sr.zero else []
                else:
                    sub = enumerate_proofs(program, data, instantiate(b, g), sr, budget)
                    partial = [p + q for p in partial for q in sub]
                if not partial:
                    break
            out.extend(partial)
            budget[0] -= len(partial)
            assert budget[0] > 0, "proof enumeration budget exceeded"
    return out


class TestAcyclicExactness:
    def test_values_match_proof_sums(self):
        rng = random.Random(SEED)
        compared = 0
        for _ in range(40):
            ptext, dtext = random_acyclic(rng)
            program, data = parse_program(ptext), parse_program(dtext)
            sr = select(program)
            nu, stats = run(program, data)
            assert not stats.cyclic
            budget = [10_000]
            items = set(nu.support())
            for f in DERIVED:
                for args in itertools.product(UNIVERSE, repeat=ARITY[f]):
                    items.add(Term(f, args))
            for item in items:
                if item.functor not in DERIVED:
                    continue
                want = sr.sum(sr.prod(p) for p in enumerate_proofs(program, data, item, sr, budget))
                assert sr.approx_eq(nu[item], want), (ptext, item)
                compared += want != 0
        assert compared > 20


class TestInvariants:
    def _cases(self):
        rng = random.Random(SEED + 3)
        for _ in range(20):
            ptext, dtext = random_acyclic(rng)
            yield parse_program(ptext), parse_program(dtext)

    def test_fixpoint(self):
        for program, data in self._cases():
            nu, _ = run(program, data)
            again = step(program.rules + data.rules, nu)
            assert nu.approx_eq(again)

    def test_prefix_firings_cover_rule_firings(self):
        for program, data in self._cases():
            _, stats = run(program, data)
            assert stats.prefix_firings >= stats.rule_firings - len(data.rules)

    def test_boolean_support_grows(self):
        p = parse_program("params: e.\nr(X,Y) :- e(X,Y).\nr(X,Z) :- r(X,Y), e(Y,Z).")
        d = parse_program("e(0,1).\ne(1,2).\ne(2,3).\ne(3,0).")
        nu = Valuation(BOOL)
        for _ in range(8):
            nxt = step(p.rules + d.rules, nu)
            assert support(nu) <= support(nxt)
            nu = nxt

    def test_prefix_firings_on_cky(self):
        _, stats = run(load("cky"), load("cky_data"))
        assert stats.prefix_firings >= stats.rule_firings - 6
        assert len(stats.rule_prefix_firings) == 4
        assert stats.as_dict()["prefix_firings"] == stats.prefix_firings


class TestCountSemiring:
    def test_counts_derivations(self):
        p = parse_program("%% semiring: count\nparams: b.\na += b(X) * b(Y).")
        nu, _ = run(p, parse_program("b(1) += 1.\nb(2) += 1.\nb(3) += 1."))
        assert nu[T("a")] == 9 and nu.semiring is COUNT
