"""Type inference, complexity bounds and a reference interpreter for weighted logic programs."""

from .corpus import corpus_path
from .cost import CardinalityDB, analyze_bounds, card_bound, space_bound, suffix_runtime, time_bound, type_size
from .program import AnalysisSpec, CardinalityDecl, Program, PropagationRule, Rule, SimpleType
from .propagate import LimitExceeded, intersect, saturate, subtype
from .semiring import booleanize, instance
from .solver import NonConvergence, RunStats, Valuation, run, step, support
from .symbolic import INF, ONE, ZERO, SymExpr, asymptotic, big_o, sym
from .syntax import (
    DynaSyntaxError,
    format,
    parse_analysis_spec,
    parse_program,
    parse_rule,
    parse_term,
    parse_type,
)
from .term import Term, Var, fresh, subst, term_vars, truncate, unify
from .typeinfer import Diverged, TypeEnv, dead_rules, expand, infer_types, inflate, lookup, relax, remove_redundant

__version__ = "0.1.0"

__all__ = [
    "AnalysisSpec",
    "CardinalityDB",
    "CardinalityDecl",
    "Diverged",
    "DynaSyntaxError",
    "INF",
    "LimitExceeded",
    "NonConvergence",
    "ONE",
    "Program",
    "PropagationRule",
    "Rule",
    "RunStats",
    "SimpleType",
    "SymExpr",
    "Term",
    "TypeEnv",
    "Valuation",
    "Var",
    "ZERO",
    "analyze_bounds",
    "asymptotic",
    "big_o",
    "booleanize",
    "card_bound",
    "corpus_path",
    "dead_rules",
    "expand",
    "format",
    "fresh",
    "infer_types",
    "inflate",
    "instance",
    "intersect",
    "lookup",
    "parse_analysis_spec",
    "parse_program",
    "parse_rule",
    "parse_term",
    "parse_type",
    "relax",
    "remove_redundant",
    "run",
    "saturate",
    "space_bound",
    "step",
    "subst",
    "subtype",
    "suffix_runtime",
    "support",
    "sym",
    "term_vars",
    "time_bound",
    "truncate",
    "type_size",
    "unify",
]
