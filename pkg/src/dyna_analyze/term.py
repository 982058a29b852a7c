"""Herbrand terms, substitutions, unification and renaming.

Terms are immutable and hashable.  A :class:`Term` with no arguments is a
constant; its functor may be a ``str`` (an atom), an ``int`` or a ``float``.
Constants of different Python types never compare equal, so ``f(1)`` and
``f(1.0)`` are distinct terms.

Substitutions are plain ``dict`` objects mapping variable *names* to terms.
They are kept in triangular form (a binding may mention other bound
variables); :func:`walk` and :func:`subst` resolve chains.
"""

from __future__ import annotations

import itertools
import re
from typing import Any, Iterable, Iterator, Mapping

Subst = dict  # variable name -> Term | Var


class Var:
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    is_ground = False

    def __eq__(self, other):
        return isinstance(other, Var) and other.name == self.name

    def __hash__(self):
        return hash(("$var", self.name))

    def __repr__(self):
        return self.name

    def __lt__(self, other):
        return sort_key(self) < sort_key(other)


class Term:
    __slots__ = ("functor", "args", "_hash", "is_ground")

    def __init__(self, functor, args: Iterable = ()):
        self.functor = functor
        self.args = tuple(args)
        self.is_ground = all(a.is_ground for a in self.args)
        self._hash = hash((type(functor).__name__, functor, self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> tuple:
        return (self.functor, len(self.args))

    def is_const(self) -> bool:
        return not self.args

    def is_number(self) -> bool:
        return not self.args and isinstance(self.functor, (int, float))

    def __eq__(self, other):
        if self is other:
            return True
        return (
            isinstance(other, Term)
            and self._hash == other._hash
            and type(self.functor) is type(other.functor)
            and self.functor == other.functor
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        from .syntax import format_term

        return format_term(self)

    def __lt__(self, other):
        return sort_key(self) < sort_key(other)


def term(functor, *args) -> Term:
    """Build a term, promoting Python ints/floats/strs in ``args`` to constants."""
    return Term(functor, [a if isinstance(a, (Term, Var)) else _promote(a) for a in args])


def _promote(x) -> Term | Var:
    if isinstance(x, str) and x[:1].isupper():
        return Var(x)
    return Term(x)


def sort_key(t) -> tuple:
    """Total order over terms: variables, numbers, atoms, then compounds."""
    if isinstance(t, Var):
        return (0, t.name)
    if not t.args:
        if isinstance(t.functor, (int, float)):
            return (1, t.functor)
        return (2, str(t.functor))
    return (3, str(t.functor), len(t.args), tuple(sort_key(a) for a in t.args))


# -- substitution -----------------------------------------------------------


def walk(t, theta: Mapping):
    while isinstance(t, Var):
        b = theta.get(t.name)
        if b is None:
            return t
        t = b
    return t


def subst(x, theta: Mapping):
    """Apply ``theta`` to a term or to anything exposing ``map_terms``."""
    if isinstance(x, (Var, Term)):
        return _subst_term(x, theta) if theta else x
    if not theta:
        return x
    return x.map_terms(lambda t: _subst_term(t, theta))


def _subst_term(t, theta):
    if isinstance(t, Var):
        b = theta.get(t.name)
        if b is None:
            return t
        return _subst_term(b, theta)
    if t.is_ground:
        return t
    return Term(t.functor, [_subst_term(a, theta) for a in t.args])


def _occurs(name: str, t, theta) -> bool:
    t = walk(t, theta)
    if isinstance(t, Var):
        return t.name == name
    if t.is_ground:
        return False
    return any(_occurs(name, a, theta) for a in t.args)


def unify(a, b, theta: Mapping | None = None) -> Subst | None:
    """Most general unifier of ``a`` and ``b`` extending ``theta``.

    Returns a new substitution, or ``None`` if the terms do not unify
    (including occurs-check failures).  ``theta`` is never mutated.
    When two unbound variables meet, the one from ``a`` is bound to the one
    from ``b``, so callers can choose which side's names survive.
    """
    out = dict(theta) if theta else {}
    return out if _unify(a, b, out) else None


def _unify(a, b, theta: dict) -> bool:
    stack = [(a, b)]
    while stack:
        a, b = stack.pop()
        a = walk(a, theta)
        b = walk(b, theta)
        if a is b:
            continue
        if isinstance(a, Var):
            if isinstance(b, Var) and a.name == b.name:
                continue
            if _occurs(a.name, b, theta):
                return False
            theta[a.name] = b
        elif isinstance(b, Var):
            if _occurs(b.name, a, theta):
                return False
            theta[b.name] = a
        else:
            if a.is_ground and b.is_ground:
                if a != b:
                    return False
                continue
            if (
                len(a.args) != len(b.args)
                or type(a.functor) is not type(b.functor)
                or a.functor != b.functor
            ):
                return False
            stack.extend(zip(a.args, b.args))
    return True


def match(pattern, t, bindings: Mapping | None = None) -> dict | None:
    """One-way matching: bind variables of ``pattern`` so it equals ``t``.

    Variables occurring in ``t`` are treated as opaque constants and are never
    bound.  ``bindings`` maps pattern-variable names to terms and is applied
    without chasing chains.
    """
    out = dict(bindings) if bindings else {}
    return out if _match(pattern, t, out) else None


def _match(p, t, b: dict) -> bool:
    if isinstance(p, Var):
        cur = b.get(p.name)
        if cur is None:
            b[p.name] = t
            return True
        return cur == t
    if isinstance(t, Var):
        return False
    if p.is_ground:
        return p == t
    if len(p.args) != len(t.args) or type(p.functor) is not type(t.functor) or p.functor != t.functor:
        return False
    for pa, ta in zip(p.args, t.args):
        if not _match(pa, ta, b):
            return False
    return True


def instantiate(pattern, bindings: Mapping):
    """Replace pattern variables by their bindings (single pass, no chasing)."""
    if isinstance(pattern, Var):
        return bindings.get(pattern.name, pattern)
    if pattern.is_ground:
        return pattern
    return Term(pattern.functor, [instantiate(a, bindings) for a in pattern.args])


# -- variables and renaming ---------------------------------------------------


def iter_vars(t) -> Iterator[Var]:
    """Variables of ``t`` in left-to-right first-occurrence order (with repeats)."""
    if isinstance(t, Var):
        yield t
    elif not t.is_ground:
        for a in t.args:
            yield from iter_vars(a)


def term_vars(x) -> set[str]:
    """Names of the variables occurring in a term, rule, simple type or iterable."""
    out: set[str] = set()
    for t in _terms_of(x):
        out.update(v.name for v in iter_vars(t))
    return out


def _terms_of(x) -> Iterator:
    if isinstance(x, (Var, Term)):
        yield x
    elif hasattr(x, "terms"):
        yield from x.terms()
    else:
        for y in x:
            yield from _terms_of(y)


# itertools.count.__next__ is atomic under the GIL, so concurrent callers
# never receive the same suffix.
_counter = itertools.count(1)
_SUFFIX = re.compile(r"_\d+$")


def base_name(name: str) -> str:
    """Strip the numeric suffix added by :func:`fresh`."""
    b = _SUFFIX.sub("", name)
    return b or "V"


def fresh_var(hint: str = "V") -> Var:
    return Var(f"{base_name(hint)}_{next(_counter)}")


def fresh(x, mapping: dict | None = None):
    """Rename every variable in ``x`` to a never-before-issued name.

    Works on terms, on objects with ``map_terms`` and on lists, tuples,
    sets and frozensets of those.  One renaming is shared across the whole
    argument, so variables shared between parts stay shared.
    """
    if mapping is None:
        mapping = {}

    def ren(t):
        if isinstance(t, Var):
            v = mapping.get(t.name)
            if v is None:
                v = mapping[t.name] = fresh_var(t.name)
            return v
        if t.is_ground:
            return t
        return Term(t.functor, [ren(a) for a in t.args])

    return _map(x, ren)


def _map(x, fn):
    if isinstance(x, (Var, Term)):
        return fn(x)
    if hasattr(x, "map_terms"):
        return x.map_terms(fn)
    if isinstance(x, (list, tuple, set, frozenset)):
        return type(x)(_map(y, fn) for y in x)
    raise TypeError(f"cannot rename {type(x).__name__}")


def rename(x, mapping: Mapping[str, Any]):
    """Rename variables according to ``mapping`` (name -> new name or Var)."""

    def ren(t):
        if isinstance(t, Var):
            v = mapping.get(t.name)
            if v is None:
                return t
            return v if isinstance(v, Var) else Var(v)
        if t.is_ground:
            return t
        return Term(t.functor, [ren(a) for a in t.args])

    return _map(x, ren)


def canonical_names(terms: Iterable) -> dict[str, str]:
    """Map variables to ``V0, V1, ...`` in order of first occurrence."""
    names: dict[str, str] = {}
    for t in terms:
        for v in iter_vars(t):
            if v.name not in names:
                names[v.name] = f"V{len(names)}"
    return names


def canonical(t):
    """Rename a term's variables to ``V0, V1, ...`` in first-occurrence order."""
    return rename(t, canonical_names([t]))


def variant(a, b) -> bool:
    """True iff ``a`` and ``b`` are equal up to consistent variable renaming."""
    return canonical(a) == canonical(b)


# -- depth truncation ---------------------------------------------------------


def depth(t) -> int:
    """Height of a term; constants and variables have depth 0."""
    if isinstance(t, Var) or not t.args:
        return 0
    return 1 + max(depth(a) for a in t.args)


def truncate(t, limit: int | None):
    """Replace every subterm at depth ``limit`` (root = 0) by a fresh variable."""
    if limit is None:
        return t
    if limit < 1:
        raise ValueError("depth limit must be >= 1")

    def go(u, d):
        if d == limit:
            return fresh_var("T")
        if isinstance(u, Var) or not u.args:
            return u
        return Term(u.functor, [go(a, d + 1) for a in u.args])

    return go(t, 0)
