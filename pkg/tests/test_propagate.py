from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyna_analyze import LimitExceeded, SimpleType, Term, Var, intersect, parse_term, parse_type, saturate, subtype
from dyna_analyze.program import FAIL, eval_builtin, is_builtin
from dyna_analyze.propagate import DEFAULT_RULES, Limits, apply_equalities, saturate_type, with_defaults
from dyna_analyze.syntax import canonical_text, parse_prop_rule
from dyna_analyze.term import instantiate, match, term_vars, variant

T = parse_term
DISJOINT = with_defaults([parse_prop_rule("fail <== k(X), n(X).")])


class TestSaturate:
    def test_transitivity(self):
        out = saturate({T("lessthan(I,J)"), T("lessthan(J,K)")})
        assert T("lessthan(I,K)") in out

    def test_disjointness(self):
        assert saturate({T("k(X)"), T("n(X)")}, DISJOINT) == {FAIL}

    def test_empty(self):
        assert saturate(set()) == frozenset()

    def test_irreflexive(self):
        assert saturate({T("lessthan(I,J)"), T("lessthan(J,I)")}) == {FAIL}

    def test_ground_builtins_decided(self):
        assert saturate({T("lessthan(1,2)"), T("n(X)")}) == {T("n(X)")}
        assert saturate({T("lessthan(2,1)")}) == {FAIL}

    def test_mixed_order(self):
        out = saturate({T("leq(I,J)"), T("lessthan(J,K)")})
        assert T("lessthan(I,K)") in out

    def test_background_facts_not_reported(self):
        rules = with_defaults([parse_prop_rule("k(s) <== true."), *DISJOINT])
        assert saturate({T("k(s)"), T("n(X)")}, rules) == {T("n(X)")}
        assert saturate({T("n(s)")}, rules) == {FAIL}

    def test_matching_is_one_way(self):
        # the premise k(s) must not bind the constraint variable X to s
        rules = (parse_prop_rule("bad <== k(s)."),)
        assert saturate({T("k(X)")}, rules) == {T("k(X)")}

    def test_list_rules(self):
        rules = [parse_prop_rule("k(X) <== ks([X|Xs])."), parse_prop_rule("ks(Xs) <== ks([X|Xs]).")]
        out = saturate({T("ks([A,B|R])")}, rules)
        assert {T("k(A)"), T("k(B)"), T("ks(R)"), T("ks([B|R])")} <= out

    def test_constraint_cap(self):
        grow = [parse_prop_rule("n(s(X)) <== n(X).")]
        with pytest.raises(LimitExceeded):
            saturate({T("n(0)")}, grow, Limits(max_constraints=50))
        with pytest.raises(LimitExceeded):
            saturate({T("n(0)")}, grow, Limits(max_depth=5))


class TestEqualities:
    def test_substituted(self):
        s = apply_equalities(parse_type("f(X,Y) :- eq(X,Y), n(Y)."))
        assert variant(s.head, T("f(Z,Z)")) and len(s.constraints) == 1

    def test_clash(self):
        assert FAIL in apply_equalities(parse_type("f(X) :- eq(X,1), eq(X,2).")).constraints


class TestIntersect:
    def test_head_unification(self):
        a = parse_type("beta(X,I,K) :- k(X).")
        b = parse_type("beta(s,0,N) :- n(N).")
        got = intersect(a, b)
        assert canonical_text(got) == canonical_text(parse_type("beta(s,0,N) :- k(s), n(N)."))

    def test_identical(self):
        s = parse_type("beta(S) :- n(S).")
        assert canonical_text(intersect(s, s)) == canonical_text(s)

    def test_clash(self):
        assert intersect(parse_type("f(X)."), parse_type("g(Y).")) is None


class TestSubtype:
    def test_reflexive(self):
        s = parse_type("beta(X,I,K) :- k(X), n(I), n(K), I < K.")
        assert subtype(s, s)

    def test_local_variable(self):
        assert subtype(parse_type("beta(T) :- n(S), n(T)."), parse_type("beta(S) :- n(S)."))

    def test_missing_order(self):
        s = parse_type("beta(X,I,K) :- k(X), n(I), n(K).")
        t = parse_type("beta(X,I,K) :- k(X), n(I), n(K), I < K.")
        assert not subtype(s, t)
        assert subtype(t, s)

    def test_empty_is_subtype(self):
        assert subtype(parse_type("f(X) :- X < X."), parse_type("f(1)."))

    def test_specific_head(self):
        assert subtype(parse_type("f(1) :- n(1)."), parse_type("f(X) :- n(X)."))
        assert not subtype(parse_type("f(X) :- n(X)."), parse_type("f(1) :- n(1)."))


# -- enumeration oracles ----------------------------------------------------------------

UNIV = [Term(i) for i in range(5)]
PARAM_INTERPS = [
    {"n": {(Term(i),) for i in range(5)}, "k": set()},
    {"n": {(Term(i),) for i in (0, 2, 4)}, "k": {(Term(1),), (Term(3),)}},
    {"n": {(Term(1),)}, "k": {(Term(0),)}},
]


def holds(c: Term, interp) -> bool:
    if c == FAIL:
        return False
    if is_builtin(c):
        return bool(eval_builtin(c))
    return tuple(c.args) in interp.get(c.functor, ())


def models(cons, interp, names):
    for values in itertools.product(UNIV, repeat=len(names)):
        g = dict(zip(names, values))
        if all(holds(instantiate(c, g), interp) for c in cons):
            yield g


ATOMS_OF = st.sampled_from(
    ["lessthan(A,B)", "lessthan(B,C)", "lessthan(C,A)", "lessthan(A,C)", "leq(A,B)", "leq(B,C)",
     "leq(C,A)", "lessthan(A,2)", "leq(1,B)", "n(A)", "n(B)", "k(C)", "k(A)", "eq(A,B)"]
).map(T)


class TestSaturateProperties:
    @settings(max_examples=150, deadline=None)
    @given(st.sets(ATOMS_OF, max_size=5))
    def test_sound_on_finite_interpretations(self, cons):
        out = saturate(cons, DISJOINT)
        names = sorted(set().union(*(term_vars(c) for c in cons)) if cons else set())
        for interp in PARAM_INTERPS:
            for g in models(cons, interp, names):
                assert all(holds(instantiate(c, g), interp) for c in out), (cons, out, g)

    @settings(max_examples=100, deadline=None)
    @given(st.sets(ATOMS_OF, max_size=5), st.sets(ATOMS_OF, max_size=3))
    def test_extensive_idempotent_monotone(self, cons, more):
        out = saturate(cons, DISJOINT)
        if FAIL not in out:
            decided = {c for c in cons if is_builtin(c) and not term_vars(c)}
            assert cons - decided <= out
        assert saturate(out, DISJOINT) == out
        bigger = saturate(cons | more, DISJOINT)
        assert FAIL in bigger or FAIL not in out and out <= bigger


def denotation(s: SimpleType, interp, heads) -> set:
    out = set()
    for h in heads:
        theta = match(s.head, h)
        if theta is None:
            continue
        cons = [instantiate(c, theta) for c in s.constraints]
        names = sorted(set().union(*(term_vars(c) for c in cons)) if cons else set())
        if any(True for _ in models(cons, interp, names)):
            out.add(h)
    return out


TYPE_TEXTS = [
    "f(X) :- n(X).", "f(X) :- n(X), n(Y), X < Y.", "f(X) :- n(X), k(Y), Y < X.", "f(X) :- X < 3.",
    "f(X) :- n(X), X < 2.", "f(1).", "f(X).", "f(X) :- k(X).", "f(X) :- n(X), n(Y), Y < X, X < 3.",
    "g(X,Y) :- n(X), n(Y), X < Y.", "g(X,X) :- n(X).", "g(X,Y) :- n(X), n(Y).", "g(X,Y) :- X <= Y, n(Y).",
    "g(1,Y) :- n(Y).", "g(X,Y) :- n(X), n(Y), n(Z), X < Z, Z < Y.",
]


class TestSubtypeOracle:
    def test_true_implies_containment(self):
        types = [parse_type(t) for t in TYPE_TEXTS]
        heads = [Term("f", [u]) for u in UNIV] + [Term("g", [a, b]) for a in UNIV for b in UNIV]
        proved = 0
        for s, t in itertools.product(types, repeat=2):
            if s.functor != t.functor or not subtype(s, t, DISJOINT):
                continue
            proved += 1
            for interp in PARAM_INTERPS:
                assert denotation(s, interp, heads) <= denotation(t, interp, heads), (s, t)
        assert proved > len(types)

    def test_worked_examples_by_enumeration(self):
        interp = {"n": {(Term(i),) for i in range(3)}, "k": set()}
        heads = [Term("beta", [u]) for u in UNIV]
        s = parse_type("beta(T) :- n(S), n(T).")
        t = parse_type("beta(S) :- n(S).")
        assert denotation(s, interp, heads) <= denotation(t, interp, heads)
        interp0 = {"n": {(Term(0),)}, "k": {(Term(0),)}}
        heads3 = [Term("beta", [Term(0), Term(0), Term(0)])]
        a = parse_type("beta(X,I,K) :- k(X), n(I), n(K).")
        b = parse_type("beta(X,I,K) :- k(X), n(I), n(K), I < K.")
        assert denotation(a, interp0, heads3) - denotation(b, interp0, heads3)


class TestDefaults:
    def test_default_inventory(self):
        assert len(DEFAULT_RULES) == 5
        extra = parse_prop_rule("fail <== k(X), n(X).")
        assert with_defaults([extra])[-1] == extra
        assert len(with_defaults(DEFAULT_RULES)) == 5

    def test_saturate_type_keeps_head(self):
        s = saturate_type(parse_type("f(I,K) :- I < J, J < K."))
        assert s.head == T("f(I,K)") and T("lessthan(I,K)") in s.constraints
        assert isinstance(s.head.args[0], Var)
