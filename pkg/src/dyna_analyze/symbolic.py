"""Nonnegative symbolic expressions over size parameters.

A :class:`SymExpr` is kept in normal form: a sum of monomials with positive
integer coefficients, or the absorbing value infinity.  A monomial is a sorted
tuple of ``(factor, power)`` pairs where a factor is either a size-parameter
name or a :class:`Max` node.  Max nodes only appear after :func:`asymptotic`
and are treated as opaque factors by the arithmetic.
"""

from __future__ import annotations

import math
from functools import total_ordering
from typing import Iterable, Mapping

Monomial = tuple  # tuple[(factor, power), ...], sorted by factor key


def _fkey(f) -> tuple:
    return (0, f) if isinstance(f, str) else (1, str(f))


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    powers: dict = {}
    for f, p in a:
        powers[f] = powers.get(f, 0) + p
    for f, p in b:
        powers[f] = powers.get(f, 0) + p
    return tuple(sorted(powers.items(), key=lambda fp: _fkey(fp[0])))


def _mono_divides(a: Monomial, b: Monomial) -> bool:
    """True iff the multiset of ``a``'s factors is contained in ``b``'s."""
    pb = dict(b)
    return all(pb.get(f, 0) >= p for f, p in a)


def _mono_str(m: Monomial) -> str:
    parts = []
    for f, p in m:
        s = str(f)
        parts.append(s if p == 1 else f"{s}^{p}")
    return "*".join(parts)


@total_ordering
class Max:
    """``max(a, b, ...)`` over monomials; a single opaque factor."""

    __slots__ = ("args",)

    def __init__(self, args: Iterable["SymExpr"]):
        uniq = {a for a in args}
        self.args = tuple(sorted(uniq, key=str))

    def eval(self, env: Mapping[str, float]) -> float:
        return max(a.eval(env) for a in self.args)

    def __eq__(self, other):
        return isinstance(other, Max) and self.args == other.args

    def __lt__(self, other):
        return str(self) < str(other)

    def __hash__(self):
        return hash(("max", self.args))

    def __str__(self):
        return "max(" + ",".join(str(a) for a in self.args) + ")"

    __repr__ = __str__


class SymExpr:
    __slots__ = ("terms", "infinite")

    def __init__(self, terms: Mapping[Monomial, int] | None = None, infinite: bool = False):
        self.infinite = infinite
        self.terms = {} if infinite else {m: c for m, c in (terms or {}).items() if c}

    # -- constructors
    @classmethod
    def const(cls, c: int) -> "SymExpr":
        if c < 0:
            raise ValueError("expressions are nonnegative")
        return cls({(): c})

    @classmethod
    def sym(cls, name: str) -> "SymExpr":
        return cls({((name, 1),): 1})

    @classmethod
    def monomial(cls, m: Monomial, coeff: int = 1) -> "SymExpr":
        return cls({m: coeff})

    # -- predicates
    def is_zero(self) -> bool:
        return not self.infinite and not self.terms

    def is_const(self) -> bool:
        return not self.infinite and all(not m for m in self.terms)

    def symbols(self) -> set[str]:
        out: set[str] = set()
        for m in self.terms:
            for f, _ in m:
                if isinstance(f, str):
                    out.add(f)
                else:
                    for a in f.args:
                        out |= a.symbols()
        return out

    def degree(self) -> float:
        if self.infinite:
            return math.inf
        return max((sum(p for _, p in m) for m in self.terms), default=0)

    # -- arithmetic
    def __add__(self, other):
        other = _coerce(other)
        if self.infinite or other.infinite:
            return INF
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return SymExpr(out)

    __radd__ = __add__

    def __mul__(self, other):
        other = _coerce(other)
        # zero passengers means zero work, even below an unbounded subtree
        if self.is_zero() or other.is_zero():
            return ZERO
        if self.infinite or other.infinite:
            return INF
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return SymExpr(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = ONE
        for _ in range(k):
            out = out * self
        return out

    def eval(self, env: Mapping[str, float]) -> float:
        """Numeric value under an assignment of the size parameters."""
        if self.infinite:
            return math.inf
        total = 0
        for m, c in self.terms.items():
            v = c
            for f, p in m:
                v *= (env[f] if isinstance(f, str) else f.eval(env)) ** p
            total += v
        return total

    # -- comparison / hashing
    def _key(self):
        return (self.infinite, tuple(sorted(self.terms.items(), key=lambda mc: _mono_sortkey(mc[0]))))

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = _coerce(other)
        return isinstance(other, SymExpr) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __str__(self):
        if self.infinite:
            return "inf"
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items(), key=lambda mc: _mono_sortkey(mc[0]), reverse=True):
            if not m:
                parts.append(str(c))
            elif c == 1:
                parts.append(_mono_str(m))
            else:
                parts.append(f"{c}*{_mono_str(m)}")
        return " + ".join(parts)

    def __repr__(self):
        return f"SymExpr({self})"


def _mono_sortkey(m: Monomial):
    return (sum(p for _, p in m), tuple((_fkey(f), p) for f, p in m))


def _coerce(x) -> SymExpr:
    if isinstance(x, SymExpr):
        return x
    if isinstance(x, float) and math.isinf(x):
        return INF
    return SymExpr.const(int(x))


ZERO = SymExpr()
ONE = SymExpr.const(1)
INF = SymExpr(infinite=True)


def sym(name: str) -> SymExpr:
    return SymExpr.sym(name)


def max_of(*args: SymExpr) -> SymExpr:
    """A single-factor expression ``max(args)``; args must be monomials."""
    if any(a.infinite for a in args):
        return INF
    uniq = {a for a in args}
    if len(uniq) == 1:
        return next(iter(uniq))
    return SymExpr.monomial(((Max(uniq), 1),))


def choice_key(e: SymExpr) -> tuple:
    """Heuristic order used to pick the tightest of several valid bounds.

    Bounds that are pointwise comparable are ordered correctly; incomparable
    ones (e.g. ``k*n`` and ``n^2``) are broken by degree, then by value at a
    large and a small uniform size, then textually.
    """
    if e.infinite:
        return (1, 0, 0, 0, "")
    syms = e.symbols()
    big = e.eval({s: 1024 for s in syms})
    small = e.eval({s: 2 for s in syms})
    return (0, e.degree(), big, small, str(e))


def minimum(candidates: Iterable[SymExpr]) -> SymExpr:
    best = None
    for c in candidates:
        if best is None or choice_key(c) < choice_key(best):
            best = c
    return INF if best is None else best


def asymptotic(e: SymExpr) -> SymExpr:
    """Big-O normal form assuming every size parameter is at least 1.

    Dominated monomials are dropped and coefficients normalized to 1.  If
    several incomparable monomials remain, their common factor is hoisted and
    the rest is joined under ``max``: ``k*n^2 + k^2*n`` becomes ``k*n*max(k,n)``.
    """
    if e.infinite:
        return INF
    if not e.terms:
        return ZERO
    monos = list(e.terms)
    maximal = []
    for i, m in enumerate(monos):
        dominated = any(
            j != i and _mono_divides(m, o) and (m != o) for j, o in enumerate(monos)
        )
        if not dominated and m not in maximal:
            maximal.append(m)
    if len(maximal) == 1:
        return SymExpr.monomial(maximal[0])
    common = dict(maximal[0])
    for m in maximal[1:]:
        pm = dict(m)
        common = {f: min(p, pm.get(f, 0)) for f, p in common.items()}
        common = {f: p for f, p in common.items() if p}
    g = tuple(sorted(common.items(), key=lambda fp: _fkey(fp[0])))
    residuals = []
    for m in maximal:
        pm = dict(m)
        r = tuple((f, p - common.get(f, 0)) for f, p in pm.items() if p - common.get(f, 0))
        residuals.append(SymExpr.monomial(tuple(sorted(r, key=lambda fp: _fkey(fp[0])))))
    return SymExpr.monomial(g) * max_of(*residuals)


def big_o(e: SymExpr) -> str:
    return f"O({asymptotic(e)})"


def parse_size(text: str) -> SymExpr:
    """Parse a product of size parameters and positive integers: ``2*k^2*n``."""
    out = ONE
    for part in text.replace(" ", "").split("*"):
        if not part:
            raise ValueError(f"malformed size expression {text!r}")
        base, _, power = part.partition("^")
        k = int(power) if power else 1
        if base.isdigit():
            c = int(base)
            if c <= 0:
                raise ValueError("constants in size bounds must be positive")
            out = out * SymExpr.const(c**k)
        elif base.isidentifier():
            out = out * sym(base) ** k
        else:
            raise ValueError(f"malformed size expression {text!r}")
    return out


def _without_max(e: SymExpr) -> SymExpr:
    """Replace each ``max`` factor by the sum of its arguments (same big-O)."""
    out = ZERO
    for m, c in e.terms.items():
        part = SymExpr.const(c)
        for f, p in m:
            if isinstance(f, Max):
                base = ZERO
                for a in f.args:
                    base = base + _without_max(a)
            else:
                base = sym(f)
            part = part * base**p
        out = out + part
    return out


def maximal_monomials(e: SymExpr) -> list[SymExpr]:
    """Monomials of ``e`` (coefficient 1) not dominated by another monomial."""
    if e.infinite:
        return [INF]
    monos = list(_without_max(e).terms)
    out = []
    for m in monos:
        if not any(o != m and _mono_divides(m, o) for o in monos) and m not in out:
            out.append(m)
    return [SymExpr.monomial(m) for m in sorted(out, key=_mono_sortkey, reverse=True)]


def dominant_monomial(e: SymExpr) -> SymExpr | None:
    """The unique highest-degree maximal monomial, or None if there is a tie."""
    ms = maximal_monomials(e)
    if not ms:
        return None
    top = max(m.degree() for m in ms)
    best = [m for m in ms if m.degree() == top]
    return best[0] if len(best) == 1 else None
