from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load, load_spec
from randprog import SEED, random_instance

from dyna_analyze import (
    Diverged,
    SimpleType,
    Term,
    dead_rules,
    expand,
    infer_types,
    parse_analysis_spec,
    parse_program,
    parse_term,
    parse_type,
    relax,
    remove_redundant,
    run,
)
from dyna_analyze.syntax import canonical_text
from dyna_analyze.term import subst
from dyna_analyze.typeinfer import covers, inflate, lookup, make_env, normalize

T = parse_term
BETA = "beta(X,I,K) :- k(X), n(I), n(K), I < K."


def keys(types):
    return sorted(canonical_text(s) for s in types)


class TestLookup:
    def test_builtin(self):
        env = make_env(parse_program("a."))
        theta = {"I": T("1")}
        assert list(lookup(env, T("lessthan(I,K)"), theta)) == [(theta, frozenset({T("lessthan(I,K)")}))]

    def test_unifies_with_type(self):
        env = make_env(parse_program("a.")).with_types([parse_type(BETA)])
        (theta, cons), = lookup(env, T("beta(Y,0,J)"), {})
        got = SimpleType(subst(T("beta(Y,0,J)"), theta), (subst(c, theta) for c in cons))
        assert canonical_text(got) == canonical_text(parse_type("beta(Y,0,J) :- k(Y), n(0), n(J), 0 < J."))

    def test_no_match(self):
        env = make_env(parse_program("a.")).with_types([parse_type(BETA)])
        assert list(lookup(env, T("g(X)"), {})) == []


class TestExpand:
    def test_params_are_delayed(self):
        p = parse_program("params: gamma; word.\nbeta(X,I,K) :- gamma(X,W), word(W,I,K).")
        (s,) = expand(make_env(p), p.rules[0])
        assert canonical_text(s) == canonical_text(parse_type("beta(X,I,K) :- gamma(X,W), word(W,I,K)."))

    def test_binary_rule(self):
        p = parse_program("params: gamma.\nbeta(X,I,K) :- gamma(X,Y,Z), beta(Y,I,J), beta(Z,J,K).")
        env = make_env(p).with_types([parse_type(BETA)])
        (s,) = expand(env, p.rules[0])
        want = parse_type("beta(X,I,K) :- k(Y), n(I), n(J), I < J, k(Z), n(K), J < K, gamma(X,Y,Z).")
        assert canonical_text(s) == canonical_text(want)

    def test_empty_env(self):
        p = parse_program("a :- b.")
        assert expand(make_env(p), p.rules[0]) == []

    def test_inflate_collects_all_rules(self):
        p = parse_program("params: b.\na :- b.\nc :- b.")
        assert len(inflate(make_env(p), p.rules)) == 2


class TestRelax:
    def test_drops_local_constraints(self):
        got = relax(parse_type("beta(S1) :- n(S1), n(S2)."))
        assert canonical_text(got) == canonical_text(parse_type("beta(S) :- n(S)."))

    def test_no_locals(self):
        s = parse_type(BETA)
        assert relax(s) == s

    def test_after_propagation(self):
        env = make_env(parse_program("a."))
        s = parse_type("beta(X,I,K) :- k(X), k(Y), k(Z), n(I), n(J), n(K), I < J, J < K.")
        assert canonical_text(normalize(s, env)) == canonical_text(parse_type(BETA))


class TestRemoveRedundant:
    def test_variants_merge(self):
        a, b = parse_type("beta(S) :- n(S)."), parse_type("beta(T) :- n(T).")
        assert len(remove_redundant([a, b])) == 1

    def test_disjoint_heads(self):
        a, b = parse_type("s(X)."), parse_type("t(X).")
        assert keys(remove_redundant([a, b])) == keys([a, b])

    def test_subtype_dropped(self):
        a, b = parse_type("beta(T) :- n(S), n(T)."), parse_type("beta(S) :- n(S).")
        assert keys(remove_redundant([a, b])) == keys([b])


class TestInferTypes:
    def test_cky(self, cky):
        program, spec = cky
        env = infer_types(program, spec)
        assert keys(env.derived) == keys([parse_type(BETA), parse_type("goal.")])
        assert len(env.inputs) == 5

    def test_path(self, path_program):
        env = infer_types(*path_program)
        assert keys(env.derived) == keys([parse_type("beta(S) :- n(S).")])
        assert env.rounds <= 3

    def test_only_params(self):
        spec = parse_analysis_spec("params: n.\nstop(S:n).")
        env = infer_types(parse_program("params: stop."), spec)
        assert keys(env.types) == keys(spec.input_types)

    def test_divergence_without_relax(self, path_program):
        with pytest.raises(Diverged) as e:
            infer_types(*path_program, max_rounds=10, relax_types=False, prune_subtypes=False)
        assert e.value.rounds == 10

    def test_depth_limit_terminates(self):
        p = parse_program("params: n.\nlist(nil).\nlist([X|Xs]) :- n(X), list(Xs).")
        with pytest.raises(Diverged):
            infer_types(p, depth=None, max_rounds=15)
        env = infer_types(p, depth=4)
        assert env.covers(T("list([1,2,3,4,5,6])"), {"n": {(Term(i),) for i in range(7)}})

    def test_on_round_hook(self, path_program):
        seen = []
        infer_types(*path_program, on_round=lambda r, types: seen.append(r))
        assert seen == list(range(1, len(seen) + 1))

    def test_fixpoint_stable(self, cky):
        program, spec = cky
        env = infer_types(program, spec)
        # one more abstract step from the fixpoint changes nothing
        from dyna_analyze.typeinfer import _input_rules, _program_rules

        raw = inflate(env, _program_rules(program, None) + _input_rules(spec))
        types = [t for t in (normalize(s, env) for s in raw) if t is not None]
        assert keys(remove_redundant(types, env.rules)) == env.keys()


class TestDeadRules:
    def test_cky_has_none(self, cky):
        program, spec = cky
        assert dead_rules(program, infer_types(program, spec)) == []

    def test_disjointness_kills_rule(self):
        program = load("cky") + parse_program("goal += beta(0,0,N) * len(N).")
        spec = load_spec("cky.dtype")
        assert dead_rules(program, infer_types(program, spec)) == [4]

    def test_undefined_predicate(self):
        p = parse_program("params: b.\na += b.\nc += mystery(X).")
        spec = parse_analysis_spec("b.")
        assert dead_rules(p, infer_types(p, spec)) == [1]


class TestCovers:
    def test_membership(self):
        s = parse_type(BETA)
        interp = {"k": {(Term("s"),)}, "n": {(Term(i),) for i in range(3)}}
        assert covers(s, T("beta(s,0,2)"), interp)
        assert not covers(s, T("beta(s,2,0)"), interp)
        assert not covers(s, T("beta(np,0,2)"), interp)

    def test_local_variables_are_existential(self):
        s = parse_type("f(X) :- n(X), n(Y), X < Y.")
        interp = {"n": {(Term(i),) for i in range(3)}}
        assert covers(s, T("f(1)"), interp)
        assert not covers(s, T("f(2)"), interp)


# -- properties ----------------------------------------------------------------------

UNIV = [Term(i) for i in range(4)]
CONS = st.sampled_from(["n(X)", "n(Y)", "n(Z)", "X < Y", "Y < Z", "Z < X", "k(Y)", "X <= Z"])


class TestRelaxProperty:
    @settings(max_examples=100, deadline=None)
    @given(st.sets(CONS, max_size=5), st.sampled_from(["f(X)", "f(X,Y)", "f(Y,Y)"]))
    def test_extensive(self, cons, head):
        s = parse_type(f"{head} :- {', '.join(sorted(cons))}." if cons else f"{head}.")
        r = relax(s)
        interps = [
            {"n": {(u,) for u in UNIV}, "k": {(Term(1),)}},
            {"n": {(Term(0),), (Term(2),)}, "k": set()},
        ]
        arity = s.head.arity
        for interp in interps:
            for args in itertools.product(UNIV, repeat=arity):
                item = Term("f", args)
                if covers(s, item, interp, UNIV):
                    assert covers(r, item, interp, UNIV)


class TestSoundness:
    def test_random_programs(self):
        rng = random.Random(SEED + 11)
        for _ in range(60):
            inst = random_instance(rng)
            env = infer_types(inst.program, inst.spec, semiring=inst.semiring)
            nu, _ = run(inst.program, inst.data, semiring=inst.semiring)
            interp = inst.interp()
            for item in nu.support():
                assert env.covers(item, interp), (inst.program_text, item)

    def test_dead_rules_never_fire(self):
        from dyna_analyze.solver import Chart, groundings

        rng = random.Random(SEED + 12)
        found = 0
        for _ in range(80):
            inst = random_instance(rng)
            env = infer_types(inst.program, inst.spec, semiring=inst.semiring)
            nu, _ = run(inst.program, inst.data, semiring=inst.semiring)
            chart = Chart(nu.support())
            for i in dead_rules(inst.program, env, inst.semiring):
                found += 1
                assert not any(True for _ in groundings(inst.program.rules[i], chart))
        assert found > 0
