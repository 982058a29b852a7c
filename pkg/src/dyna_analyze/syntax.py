"""Parsing and printing of programs (``.dyna``) and analysis specs (``.dtype``).

Surface syntax::

    % comment                         %% semiring: minplus    (pragma)
    params: word; len; gamma.
    beta(X,I,K) += gamma(X,Y,Z) * beta(Y,I,J) * beta(Z,J,K).
    goal += f(X) for X < 9.           % side condition -> extra subgoal
    beta(I) min= cost(I,J) + beta(J).

    word(W:w,I:n,K:n) :- I < K.       % input simple type (X:t sugar)
    (I < K) <== (I < J), (J < K).     % propagation rule
    k(s) <== true.
    |word(W, +I, K)| <= 1.            % cardinality declaration
    |gamma(X,Y), k(Y)| <= g.

Builtins print infix: ``lessthan(A,B)`` is ``A < B``, ``leq`` is ``<=``,
``eq`` is ``=``, ``plus(X,Y,Z)`` is ``Z is X+Y`` and ``times`` is ``Z is X*Y``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .program import (
    BUILTINS,
    FAIL,
    TRUE,
    AnalysisSpec,
    CardinalityDecl,
    Program,
    PropagationRule,
    Rule,
    SimpleType,
    is_builtin,
    is_question,
)
from .symbolic import ONE, SymExpr, sym
from .term import Term, Var, base_name, fresh_var, iter_vars


class DynaSyntaxError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


# -- lexer ----------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<float>\d+\.\d+(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+)
  | (?P<int>\d+)
  | (?P<agg>(?:min|max)=(?!=))
  | (?P<var>[A-Z_][A-Za-z0-9_']*)
  | (?P<atom>[a-z][A-Za-z0-9_']*)
  | (?P<string>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<op><==|:-|\+=|<=|>=|[<>=(),.\[\]|*+\-?:;^/])
    """,
    re.VERBOSE,
)

_PRAGMA_RE = re.compile(r"^\s*%%\s*semiring\s*:\s*([A-Za-z_]+)", re.MULTILINE)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise DynaSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            toks.append(Tok(kind, s, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


# -- parser ---------------------------------------------------------------------

_CMP = {"<": "lessthan", "<=": "leq", ">": "lessthan", ">=": "leq", "=": "eq"}
_RESERVED = {"is", "for", "params"}


@dataclass
class Statement:
    kind: str  # rule | prop | decl | params
    value: object
    line: int = 0
    annotations: tuple = ()


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.anon = 0
        self._annots: list | None = None
        self._plus: set | None = None

    # token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "agg") and t.text == text

    def at_word(self, word: str) -> bool:
        return self.tok.kind == "atom" and self.tok.text == word

    def advance(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def error(self, msg: str, tok: Tok | None = None):
        t = tok or self.tok
        raise DynaSyntaxError(msg, t.line, t.col)

    # terms
    def primary(self):
        t = self.tok
        if t.kind == "var":
            self.advance()
            if t.text == "_":
                self.anon += 1
                v = fresh_var("_G")
            else:
                v = Var(t.text)
            return self._maybe_annot(v)
        if t.kind == "int":
            self.advance()
            return self._maybe_annot(Term(int(t.text)))
        if t.kind == "float":
            self.advance()
            return Term(float(t.text))
        if t.kind == "string":
            self.advance()
            return self._maybe_annot(Term(bytes(t.text[1:-1], "utf-8").decode("unicode_escape")))
        if t.kind == "atom":
            if t.text in _RESERVED:
                self.error(f"reserved word {t.text!r} cannot start a term")
            self.advance()
            if self.at("("):
                self.advance()
                args = self.arglist(")")
                return self._maybe_annot(Term(t.text, args))
            return self._maybe_annot(Term(t.text))
        if self.at("-") and self.peek().kind in ("int", "float"):
            self.advance()
            n = self.advance()
            return Term(-(int(n.text) if n.kind == "int" else float(n.text)))
        if self.at("+") and self._plus is not None and self.peek().kind == "var":
            self.advance()
            v = self.primary()
            if isinstance(v, Var):
                self._plus.add(v.name)
            return v
        if self.at("["):
            self.advance()
            if self.at("]"):
                self.advance()
                return Term("nil")
            items = [self.primary()]
            while self.at(","):
                self.advance()
                items.append(self.primary())
            tail = Term("nil")
            if self.at("|"):
                self.advance()
                tail = self.primary()
            self.expect("]")
            for x in reversed(items):
                tail = Term("cons", (x, tail))
            return tail
        self.error(f"expected a term, found {t.text or 'end of input'!r}")

    def _maybe_annot(self, t):
        if self._annots is not None and self.at(":") and self.peek().kind == "atom":
            self.advance()
            name = self.advance().text
            self._annots.append(Term(name, (t,)))
        return t

    def arglist(self, close: str) -> list:
        args = []
        if self.at(close):
            self.advance()
            return args
        args.append(self.primary())
        while self.at(","):
            self.advance()
            args.append(self.primary())
        self.expect(close)
        return args

    def arith(self):
        a = self.primary()
        if self.at("+") or self.at("*"):
            op = self.advance().text
            b = self.primary()
            return ("plus" if op == "+" else "times", a, b)
        return ("id", a)

    def subgoal(self, allow_eq: bool = True):
        if self.at("?"):
            self.advance()
            return Term("?", (self.primary(),))
        if self.at("("):
            self.advance()
            g = self.subgoal()
            self.expect(")")
            return g
        a = self.primary()
        if self.at_word("is"):
            self.advance()
            op, *xs = self.arith()
            if op == "id":
                return Term("eq", (a, xs[0]))
            return Term(op, (xs[0], xs[1], a))
        t = self.tok
        if t.kind == "op" and t.text in _CMP and (allow_eq or t.text != "="):
            self.advance()
            b = self.primary()
            if t.text in (">", ">="):
                a, b = b, a
            return Term(_CMP[t.text], (a, b))
        return a

    # statements
    def statements(self):
        while self.tok.kind != "eof":
            yield self.statement()

    def statement(self) -> Statement:
        start = self.tok
        if self.at_word("params") and self.peek().text == ":":
            self.advance()
            self.advance()
            names = []
            while True:
                t = self.tok
                if t.kind != "atom":
                    self.error("expected a functor name in params declaration")
                self.advance()
                if self.at("/") and self.peek().kind == "int":
                    self.advance()
                    self.advance()
                names.append(t.text)
                if self.at(";") or self.at(","):
                    self.advance()
                    continue
                break
            self.expect(".")
            return Statement("params", frozenset(names), start.line)
        if self.at("|"):
            return self._decl(start)

        self._annots = []
        head = self.subgoal(allow_eq=False)
        annots = tuple(self._annots)
        self._annots = None
        t = self.tok
        if self.at("."):
            self.advance()
            return Statement("rule", Rule(self._head(head, start), ":-", ()), start.line, annots)
        if self.at("<=="):
            self.advance()
            body = self._body(",")
            self.expect(".")
            prem = tuple(b for b in body if b != TRUE)
            try:
                return Statement("prop", PropagationRule(head, prem), start.line, annots)
            except ValueError as e:
                self.error(str(e), start)
        if t.kind in ("op", "agg") and t.text in ("+=", "min=", "max=", "=", ":-"):
            agg = self.advance().text
            seps = {":-": (",",), "min=": (",", "*", "+"), "max=": (",", "*", "+")}.get(agg, (",", "*"))
            body = self._body(*seps)
            if self.at_word("for"):
                self.advance()
                body += self._body(",")
            self.expect(".")
            return Statement("rule", Rule(self._head(head, start), agg, tuple(body)), start.line, annots)
        self.error(f"expected an aggregator, '<==' or '.', found {t.text or 'end of input'!r}")

    def _head(self, head, start: Tok) -> Term:
        if not isinstance(head, Term) or is_builtin(head) or is_question(head) or head.is_number():
            self.error(f"invalid rule head {format_subgoal(head)}", start)
        return head

    def _body(self, *seps) -> list:
        body = [self.subgoal()]
        while self.tok.kind == "op" and self.tok.text in seps:
            self.advance()
            body.append(self.subgoal())
        if self.at("+") and "+" not in seps:
            self.error("'+' between subgoals is only allowed in min= and max= rules")
        return body

    def _decl(self, start: Tok) -> Statement:
        self.expect("|")
        self._plus = set()
        pattern = [self.subgoal()]
        while self.at(","):
            self.advance()
            pattern.append(self.subgoal())
        self.expect("|")
        plus, self._plus = self._plus, None
        self.expect("<=")
        bound = ONE
        while True:
            t = self.tok
            if t.kind == "int":
                self.advance()
                factor = SymExpr.const(int(t.text))
                if int(t.text) <= 0:
                    self.error("cardinality bounds must use positive integer constants", t)
            elif t.kind == "atom":
                self.advance()
                factor = sym(t.text)
            else:
                self.error("cardinality bound must be a product of size parameters and positive integers")
            if self.at("^"):
                self.advance()
                if self.tok.kind != "int":
                    self.error("expected an integer exponent")
                factor = factor ** int(self.advance().text)
            bound = bound * factor
            if self.at("*"):
                self.advance()
                continue
            break
        self.expect(".")
        return Statement("decl", CardinalityDecl(tuple(pattern), frozenset(plus), bound), start.line)


# -- public parse API -------------------------------------------------------------


def _pragma(text: str) -> str | None:
    m = _PRAGMA_RE.search(text)
    return m.group(1) if m else None


def parse_program(text: str) -> Program:
    """Parse a weighted (``.dyna``) program, desugaring side conditions and lists."""
    params: set = set()
    rules = []
    p = Parser(text)
    for st in p.statements():
        if st.kind == "params":
            params |= st.value
        elif st.kind == "rule":
            if st.annotations:
                raise DynaSyntaxError("type annotations (X:t) belong in a .dtype file", st.line)
            rules.append(st.value)
        else:
            raise DynaSyntaxError(f"{st.kind} statements belong in a .dtype file", st.line)
    for r in rules:
        if r.head.functor in params:
            raise DynaSyntaxError(f"param {r.head.functor} appears as the head of a rule")
    return Program(tuple(rules), frozenset(params), _pragma(text))


def parse_analysis_spec(text: str) -> AnalysisSpec:
    """Parse a ``.dtype`` file: params, input types, propagation rules, size declarations."""
    spec = AnalysisSpec()
    params: set = set()
    pending = []
    p = Parser(text)
    for st in p.statements():
        if st.kind == "params":
            params |= st.value
        elif st.kind == "rule":
            r = st.value
            if r.aggregator != ":-":
                raise DynaSyntaxError("input types must use ':-'", st.line)
            pending.append((st, SimpleType(r.head, st.annotations + r.body)))
        elif st.kind == "prop":
            spec.rules.append(st.value)
        else:
            decl = st.value
            spec.decls.append(decl)
            spec.sizes |= decl.bound.symbols()
    for st, t in pending:
        if t.head.functor in params:
            raise DynaSyntaxError(f"param {t.head.functor} cannot have an input type", st.line)
        for c in t.constraints:
            if c.functor not in params and not is_builtin(c):
                raise DynaSyntaxError(
                    f"constraint {format_subgoal(c)} of input type {t.head.functor} "
                    f"is neither a declared param nor a builtin",
                    st.line,
                )
        spec.input_types.append(t)
    spec.params = frozenset(params)
    return spec


def parse_term(text: str):
    """Parse a single term or subgoal (e.g. ``"f(X, [1,2])"`` or ``"I < K"``)."""
    p = Parser(text)
    t = p.subgoal()
    if p.tok.kind != "eof":
        p.error("trailing input after term")
    return t


def parse_rule(text: str) -> Rule:
    prog = parse_program(text)
    if len(prog.rules) != 1:
        raise DynaSyntaxError("expected exactly one rule")
    return prog.rules[0]


def parse_type(text: str) -> SimpleType:
    """Parse one simple type, e.g. ``"beta(X:k,I:n,K:n) :- I < K."``."""
    p = Parser(text if text.rstrip().endswith(".") else text + ".")
    st = p.statement()
    if st.kind != "rule" or st.value.aggregator != ":-" or p.tok.kind != "eof":
        raise DynaSyntaxError("expected a single ':-' simple type")
    return SimpleType(st.value.head, st.annotations + st.value.body)


def parse_prop_rule(text: str) -> PropagationRule:
    st = Parser(text).statement()
    if st.kind != "prop":
        raise DynaSyntaxError("expected a '<==' rule")
    return st.value


def parse_decl(text: str) -> CardinalityDecl:
    st = Parser(text).statement()
    if st.kind != "decl":
        raise DynaSyntaxError("expected a cardinality declaration")
    return st.value


# -- printing -----------------------------------------------------------------------

_ATOM_RE = re.compile(r"^[a-z][A-Za-z0-9_']*$")


def _fmt_const(f) -> str:
    if isinstance(f, float):
        return repr(f)
    if isinstance(f, int):
        return str(f)
    if _ATOM_RE.match(f) and f not in _RESERVED:
        return f
    return '"' + f.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_term(t, names: dict | None = None) -> str:
    if isinstance(t, Var):
        return names.get(t.name, t.name) if names else t.name
    if not t.args:
        return _fmt_const(t.functor)
    if t.functor == "cons" and len(t.args) == 2:
        items = []
        cur = t
        while isinstance(cur, Term) and cur.functor == "cons" and len(cur.args) == 2:
            items.append(format_term(cur.args[0], names))
            cur = cur.args[1]
        inner = ",".join(items)
        if isinstance(cur, Term) and cur.functor == "nil" and not cur.args:
            return f"[{inner}]"
        return f"[{inner}|{format_term(cur, names)}]"
    return f"{_fmt_const(t.functor)}(" + ",".join(format_term(a, names) for a in t.args) + ")"


def format_subgoal(t, names: dict | None = None) -> str:
    """Like :func:`format_term` but prints builtins and ``?`` in surface syntax."""
    if isinstance(t, Term):
        f, a = t.functor, t.args
        ft = lambda x: format_term(x, names)  # noqa: E731
        if is_builtin(t):
            if f == "lessthan":
                return f"{ft(a[0])} < {ft(a[1])}"
            if f == "leq":
                return f"{ft(a[0])} <= {ft(a[1])}"
            if f == "eq":
                return f"{ft(a[0])} = {ft(a[1])}"
            if f == "plus":
                return f"{ft(a[2])} is {ft(a[0])}+{ft(a[1])}"
            if f == "times":
                return f"{ft(a[2])} is {ft(a[0])}*{ft(a[1])}"
        if is_question(t):
            return "?" + ft(a[0])
    return format_term(t, names)


def _paren(t, names) -> str:
    s = format_subgoal(t, names)
    return f"({s})" if is_builtin(t) and t.args else s


_SEP = {":-": ", ", "min=": " + "}


def format_rule(r: Rule, names: dict | None = None) -> str:
    head = format_term(r.head, names)
    if not r.body:
        return f"{head}." if r.aggregator == ":-" else f"{head} {r.aggregator} true."
    sep = _SEP.get(r.aggregator, " * ")
    if sep == " + ":
        # "Z is X+Y" would swallow a following "+" separator
        body = sep.join(_paren(b, names) if b.functor in ("plus", "times") else format_subgoal(b, names) for b in r.body)
    else:
        body = sep.join(format_subgoal(b, names) for b in r.body)
    return f"{head} {r.aggregator} {body}."


def format_program(p: Program) -> str:
    lines = []
    if p.semiring:
        lines.append(f"%% semiring: {p.semiring}")
    if p.params:
        lines.append("params: " + "; ".join(sorted(p.params)) + ".")
    lines.extend(format_rule(r) for r in p.rules)
    return "\n".join(lines) + ("\n" if lines else "")


def format_prop_rule(r: PropagationRule, names: dict | None = None) -> str:
    concl = _paren(r.conclusion, names)
    prem = ", ".join(_paren(p, names) for p in r.premises) if r.premises else "true"
    return f"{concl} <== {prem}."


def format_decl(d: CardinalityDecl) -> str:
    seen: set = set()

    def fmt(t):
        if isinstance(t, Var):
            if t.name in d.bound_vars and t.name not in seen:
                seen.add(t.name)
                return "+" + t.name
            return t.name
        if not t.args:
            return _fmt_const(t.functor)
        return f"{_fmt_const(t.functor)}(" + ",".join(fmt(a) for a in t.args) + ")"

    pattern = ", ".join(fmt(p) for p in d.pattern)
    return f"|{pattern}| <= {format_size(d.bound)}."


def format_size(e: SymExpr) -> str:
    return str(e).replace(" ", "")


# -- simple types ---------------------------------------------------------------------


def _masked(t, names: dict) -> str:
    """Subgoal text with not-yet-named variables shown as ``_``."""
    return format_subgoal(t, {**{v.name: "_" for v in iter_vars(t) if v.name not in names}, **names})


def type_order(st: SimpleType, names: dict | None = None) -> tuple[dict, list]:
    """Deterministic variable naming and constraint order for a simple type.

    Head variables are numbered by first occurrence; constraint-only variables
    are numbered as constraints are consumed in sorted order.  When several
    constraints look alike until their fresh variables are named, every choice
    is tried and the one giving the smallest text wins, so the result never
    depends on set iteration order.  Returns ``(names, ordered_constraints)``
    where ``names`` maps to ``V0, V1, ...``.
    """
    names = dict(names or {})
    for v in iter_vars(st.head):
        if v.name not in names:
            names[v.name] = f"V{len(names)}"
    budget = [64]

    def go(names, remaining):
        if not remaining:
            return (), names, ()
        keyed = sorted(((is_builtin(c), _masked(c, names)), i) for i, c in enumerate(remaining))
        first = keyed[0][0]
        tied = [i for k, i in keyed if k == first]
        if len(tied) > 1 and budget[0] > 0:
            budget[0] -= len(tied)
        else:
            tied = tied[:1]
        best = None
        for i in tied:
            c = remaining[i]
            nn = dict(names)
            for v in iter_vars(c):
                if v.name not in nn:
                    nn[v.name] = f"V{len(nn)}"
            rest = remaining[:i] + remaining[i + 1:]
            text, final, order = go(nn, rest)
            text = (format_subgoal(c, nn),) + text
            if best is None or sorted(text) < sorted(best[0]):
                best = (text, final, (c,) + order)
        return best

    start = sorted(st.constraints, key=lambda c: (is_builtin(c), _masked(c, names), format_term(c)))
    _, names, ordered = go(names, tuple(start))
    return names, list(ordered)


def canonical_text(st: SimpleType) -> str:
    """Text that is identical for simple types equal up to renaming."""
    names, cons = type_order(st)
    body = sorted(format_subgoal(c, names) for c in cons)
    head = format_term(st.head, names)
    return f"{head} :- {', '.join(body)}." if body else f"{head}."


def canonical_key(st: SimpleType) -> str:
    return canonical_text(st)


def display_names(vars_in_order) -> dict:
    """Readable names: strip fresh-renaming suffixes, disambiguating clashes."""
    order = []
    for name in vars_in_order:
        if name not in order:
            order.append(name)
    reserved = {base_name(n) for n in order}
    used: set = set()
    out = {}
    for n in order:
        b = base_name(n)
        cand = b
        k = 1
        while cand in used or (cand != b and cand in reserved):
            cand = f"{b}{k}"
            k += 1
        used.add(cand)
        out[n] = cand
    return out


def format_type(st: SimpleType, canonical: bool = False, annotate: bool = False) -> str:
    """Print a simple type in ``.dtype`` syntax.

    ``canonical`` renames variables to ``V0, V1, ...`` and sorts constraints so
    alpha-equivalent types print identically.  ``annotate`` folds unary
    constraints on head variables into ``X:t`` sugar.
    """
    vnames, cons = type_order(st)
    if canonical:
        names = vnames
        cons = sorted(cons, key=lambda c: format_subgoal(c, names))
    else:
        names = display_names(sorted(vnames, key=lambda v: int(vnames[v][1:])))
        head_pos = {v.name: i for i, v in reversed(list(enumerate(iter_vars(st.head))))}

        def key(c):
            first = min((head_pos.get(v.name, 10**6) for v in iter_vars(c)), default=-1)
            return (is_builtin(c), first, format_subgoal(c, vnames))

        cons = sorted(cons, key=key)
    head_text = format_term(st.head, names)
    if annotate:
        folded = {}
        for c in cons:
            if (
                len(c.args) == 1
                and isinstance(c.args[0], Var)
                and not is_builtin(c)
                and c.args[0].name not in folded
                and c.args[0].name in st.head_vars()
            ):
                folded[c.args[0].name] = c
        cons = [c for c in cons if c not in folded.values()]
        head_text = _format_annotated(st.head, names, {v: c.functor for v, c in folded.items()})
    if not cons:
        return f"{head_text}."
    return f"{head_text} :- " + ", ".join(format_subgoal(c, names) for c in cons) + "."


def _format_annotated(t, names, annots: dict, done: set | None = None) -> str:
    done = set() if done is None else done
    if isinstance(t, Var):
        s = names.get(t.name, t.name)
        if t.name in annots and t.name not in done:
            done.add(t.name)
            return f"{s}:{_fmt_const(annots[t.name])}"
        return s
    if not t.args:
        return _fmt_const(t.functor)
    return f"{_fmt_const(t.functor)}(" + ",".join(_format_annotated(a, names, annots, done) for a in t.args) + ")"


def format_spec(spec: AnalysisSpec) -> str:
    lines = []
    if spec.params:
        lines.append("params: " + "; ".join(sorted(spec.params)) + ".")
    lines += [format_type(t, annotate=True) for t in spec.input_types]
    lines += [format_prop_rule(r) for r in spec.rules]
    lines += [format_decl(d) for d in spec.decls]
    return "\n".join(lines) + "\n"


def format(x, canonical: bool = False) -> str:  # noqa: A001 - mirrors the operation name
    """Print any program object in re-parseable surface syntax."""
    if isinstance(x, SimpleType):
        return format_type(x, canonical=canonical)
    if isinstance(x, Rule):
        if canonical:
            from .term import canonical_names

            return format_rule(x, canonical_names(x.terms()))
        return format_rule(x)
    if isinstance(x, Program):
        return format_program(x)
    if isinstance(x, PropagationRule):
        return format_prop_rule(x)
    if isinstance(x, CardinalityDecl):
        return format_decl(x)
    if isinstance(x, SymExpr):
        return str(x)
    if isinstance(x, (Term, Var)):
        return format_subgoal(x)
    raise TypeError(f"cannot format {type(x).__name__}")


__all__ = [
    "BUILTINS",
    "FAIL",
    "TRUE",
    "DynaSyntaxError",
    "canonical_key",
    "canonical_text",
    "format",
    "format_decl",
    "format_program",
    "format_prop_rule",
    "format_rule",
    "format_spec",
    "format_subgoal",
    "format_term",
    "format_type",
    "parse_analysis_spec",
    "parse_decl",
    "parse_program",
    "parse_prop_rule",
    "parse_rule",
    "parse_term",
    "parse_type",
    "tokenize",
]
