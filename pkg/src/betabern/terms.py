"""Abstract syntax for Beta-Bernoulli choice terms.

A term is one of:

* ``VarApp(x, (p, q))``      -- continuation variable applied to parameters
* ``RatioChoice(i, j, l, r)`` -- pick ``l`` with probability i/(i+j)
* ``ParamChoice(p, l, r)``    -- pick ``l`` with probability given by ``p``
* ``Nu(i, j, p, body)``       -- bind a fresh Beta(i, j)-distributed parameter

Terms live in a two-zone :class:`Context`: an ordered list of free
parameters and an ordered list of variables with arities.  Everything here
is immutable and operations are pure functions, so terms can be shared
freely between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

RESERVED_WORDS = frozenset({"rch", "pch", "nu", "params", "vars"})

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class TermError(Exception):
    """Malformed term, context, or operation input."""


class SubstitutionError(TermError):
    """Arity mismatch between a variable occurrence and its replacement."""


class ParseError(TermError):
    """Syntax or scoping error in term/context text, with position info."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


def _check_ident(name: str, what: str) -> None:
    if not _IDENT_RE.match(name):
        raise TermError(f"{what} {name!r} is not a valid identifier")
    if name in RESERVED_WORDS:
        raise TermError(f"{what} {name!r} is a reserved word")


@dataclass(frozen=True)
class Context:
    """Two-zone context: free parameter names and variables with arities."""

    params: tuple[str, ...] = ()
    vars: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        names = list(self.params) + [v for v, _ in self.vars]
        for name in self.params:
            _check_ident(name, "parameter")
        for name, arity in self.vars:
            _check_ident(name, "variable")
            if arity < 0:
                raise TermError(f"variable {name!r} has negative arity")
        if len(set(names)) != len(names):
            raise TermError("context names must be pairwise distinct")

    def arity(self, var: str) -> int | None:
        for name, m in self.vars:
            if name == var:
                return m
        return None

    def param_position(self, param: str) -> int:
        """1-based position of a free parameter."""
        return self.params.index(param) + 1

    def var_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.vars)

    def all_names(self) -> frozenset[str]:
        return frozenset(self.params) | frozenset(self.var_names())

    def __str__(self) -> str:
        return format_context(self)


class Term:
    """Base class for term nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_term(self)


@dataclass(frozen=True, repr=False)
class VarApp(Term):
    var: str
    args: tuple[str, ...] = ()

    def __repr__(self):
        return f"VarApp({self.var!r}, {self.args!r})"


@dataclass(frozen=True, repr=False)
class RatioChoice(Term):
    i: int
    j: int
    left: Term
    right: Term

    def __repr__(self):
        return f"RatioChoice({self.i}, {self.j}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class ParamChoice(Term):
    param: str
    left: Term
    right: Term

    def __repr__(self):
        return f"ParamChoice({self.param!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Nu(Term):
    i: int
    j: int
    param: str
    body: Term

    def __repr__(self):
        return f"Nu({self.i}, {self.j}, {self.param!r}, {self.body!r})"


# ---------------------------------------------------------------------------
# Paths into terms.  Selectors: "l"/"r" pick a choice branch, "b" enters a
# nu body.  The empty path is the root.

Path = tuple[str, ...]


def child(t: Term, sel: str) -> Term:
    if sel == "l" and isinstance(t, (RatioChoice, ParamChoice)):
        return t.left
    if sel == "r" and isinstance(t, (RatioChoice, ParamChoice)):
        return t.right
    if sel == "b" and isinstance(t, Nu):
        return t.body
    raise TermError(f"selector {sel!r} does not apply to {type(t).__name__}")


def subterm_at(t: Term, path: Path) -> Term:
    for sel in path:
        t = child(t, sel)
    return t


def replace_at(t: Term, path: Path, new: Term) -> Term:
    if not path:
        return new
    sel, rest = path[0], path[1:]
    inner = replace_at(child(t, sel), rest, new)
    if isinstance(t, RatioChoice):
        return RatioChoice(t.i, t.j, inner, t.right) if sel == "l" else RatioChoice(t.i, t.j, t.left, inner)
    if isinstance(t, ParamChoice):
        return ParamChoice(t.param, inner, t.right) if sel == "l" else ParamChoice(t.param, t.left, inner)
    assert isinstance(t, Nu)
    return Nu(t.i, t.j, t.param, inner)


def format_path(path: Path) -> str:
    return ".".join(path) if path else "."


def parse_path(text: str) -> Path:
    text = text.strip()
    if text in ("", "."):
        return ()
    parts = tuple(text.split("."))
    for sel in parts:
        if sel not in ("l", "r", "b"):
            raise TermError(f"bad path selector {sel!r}")
    return parts


# ---------------------------------------------------------------------------
# Free parameters, well-formedness.


def free_params(t: Term) -> frozenset[str]:
    """Parameters occurring free in choice subscripts or variable arguments."""
    if isinstance(t, VarApp):
        return frozenset(t.args)
    if isinstance(t, RatioChoice):
        return free_params(t.left) | free_params(t.right)
    if isinstance(t, ParamChoice):
        return free_params(t.left) | free_params(t.right) | {t.param}
    if isinstance(t, Nu):
        return free_params(t.body) - {t.param}
    raise TermError(f"not a term: {t!r}")


def all_params(t: Term) -> frozenset[str]:
    """Every parameter name occurring in ``t``, free or bound."""
    if isinstance(t, VarApp):
        return frozenset(t.args)
    if isinstance(t, (RatioChoice, ParamChoice)):
        extra = frozenset((t.param,)) if isinstance(t, ParamChoice) else frozenset()
        return all_params(t.left) | all_params(t.right) | extra
    if isinstance(t, Nu):
        return all_params(t.body) | {t.param}
    raise TermError(f"not a term: {t!r}")


def vars_used(t: Term) -> frozenset[str]:
    if isinstance(t, VarApp):
        return frozenset((t.var,))
    if isinstance(t, (RatioChoice, ParamChoice)):
        return vars_used(t.left) | vars_used(t.right)
    if isinstance(t, Nu):
        return vars_used(t.body)
    raise TermError(f"not a term: {t!r}")


@dataclass(frozen=True)
class Violation:
    """A single well-formedness defect, located by a path into the term."""

    path: Path
    message: str

    def __str__(self):
        return f"at {format_path(self.path)}: {self.message}"


def check_wellformed(ctx: Context, t: Term) -> list[Violation]:
    """Collect every scoping/arity/side-condition violation in ``t``.

    An empty list means the term is well-formed in ``ctx``.
    """
    out: list[Violation] = []

    def go(t: Term, scope: frozenset[str], path: Path) -> None:
        if isinstance(t, VarApp):
            arity = ctx.arity(t.var)
            if arity is None:
                out.append(Violation(path, f"unknown variable {t.var!r}"))
            elif arity != len(t.args):
                out.append(Violation(
                    path, f"variable {t.var!r} expects {arity} parameters, got {len(t.args)}"))
            for a in t.args:
                if a not in scope:
                    out.append(Violation(path, f"parameter {a!r} not in scope"))
        elif isinstance(t, RatioChoice):
            if t.i < 0 or t.j < 0:
                out.append(Violation(path, "ratio weights must be nonnegative"))
            if t.i + t.j <= 0:
                out.append(Violation(path, "ratio choice needs total weight i+j > 0"))
            go(t.left, scope, path + ("l",))
            go(t.right, scope, path + ("r",))
        elif isinstance(t, ParamChoice):
            if t.param not in scope:
                out.append(Violation(path, f"parameter {t.param!r} not in scope"))
            go(t.left, scope, path + ("l",))
            go(t.right, scope, path + ("r",))
        elif isinstance(t, Nu):
            if t.i < 1 or t.j < 1:
                out.append(Violation(
                    path, f"nu hyperparameters must be positive, got ({t.i},{t.j})"))
            if t.param in scope or t.param in ctx.all_names():
                out.append(Violation(path, f"binder {t.param!r} rebinds a name in scope"))
            go(t.body, scope | {t.param}, path + ("b",))
        else:
            out.append(Violation(path, f"not a term: {t!r}"))

    go(t, frozenset(ctx.params), ())
    return out


# ---------------------------------------------------------------------------
# Alpha-equivalence: compare bound parameters by binding depth.


def alpha_eq(t: Term, u: Term) -> bool:
    """True iff the terms differ only by renaming of bound parameters."""

    def go(t: Term, u: Term, env_t: dict, env_u: dict, depth: int) -> bool:
        if type(t) is not type(u):
            return False
        if isinstance(t, VarApp):
            if t.var != u.var or len(t.args) != len(u.args):
                return False
            return all(env_t.get(a, a) == env_u.get(b, b)
                       for a, b in zip(t.args, u.args))
        if isinstance(t, RatioChoice):
            return (t.i, t.j) == (u.i, u.j) and \
                go(t.left, u.left, env_t, env_u, depth) and \
                go(t.right, u.right, env_t, env_u, depth)
        if isinstance(t, ParamChoice):
            return env_t.get(t.param, t.param) == env_u.get(u.param, u.param) and \
                go(t.left, u.left, env_t, env_u, depth) and \
                go(t.right, u.right, env_t, env_u, depth)
        assert isinstance(t, Nu) and isinstance(u, Nu)
        if (t.i, t.j) != (u.i, u.j):
            return False
        return go(t.body, u.body,
                  {**env_t, t.param: depth}, {**env_u, u.param: depth}, depth + 1)

    return go(t, u, {}, {}, 0)


# ---------------------------------------------------------------------------
# Substitution of terms for variables, avoiding capture of free parameters.


def fresh_param(base: str, avoid) -> str:
    """Deterministic fresh name: smallest numeric suffix not in ``avoid``."""
    n = 1
    while f"{base}{n}" in avoid:
        n += 1
    return f"{base}{n}"


def rename_params(t: Term, mapping: dict[str, str]) -> Term:
    """Simultaneously rename free parameters, freshening binders on clashes."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    if not mapping:
        return t
    if isinstance(t, VarApp):
        return VarApp(t.var, tuple(mapping.get(a, a) for a in t.args))
    if isinstance(t, RatioChoice):
        return RatioChoice(t.i, t.j, rename_params(t.left, mapping),
                           rename_params(t.right, mapping))
    if isinstance(t, ParamChoice):
        return ParamChoice(mapping.get(t.param, t.param),
                           rename_params(t.left, mapping),
                           rename_params(t.right, mapping))
    assert isinstance(t, Nu)
    sub = {k: v for k, v in mapping.items() if k != t.param}
    if t.param in sub.values():
        avoid = set(sub) | set(sub.values()) | all_params(t.body)
        fresh = fresh_param(t.param, avoid)
        sub[t.param] = fresh
        return Nu(t.i, t.j, fresh, rename_params(t.body, sub))
    return Nu(t.i, t.j, t.param, rename_params(t.body, sub))


def substitute(t: Term, bindings: dict[str, tuple[tuple[str, ...], Term]]) -> Term:
    """Simultaneously substitute variables by parameterized replacement terms.

    ``bindings`` maps a variable name to ``(formals, replacement)``; an
    occurrence ``x(q1..qm)`` becomes the replacement with each formal mapped
    to the corresponding actual.  Binders in ``t`` are renamed (fresh numeric
    suffix) whenever they would capture a replacement's free parameter, or
    coincide with one of its bound names (keeps terms shadowing-free).
    """
    inject: set[str] = set()
    for formals, rep in bindings.values():
        inject |= all_params(rep) - set(formals)

    def go(t: Term) -> Term:
        if isinstance(t, VarApp):
            if t.var not in bindings:
                return t
            formals, rep = bindings[t.var]
            if len(formals) != len(t.args):
                raise SubstitutionError(
                    f"occurrence {t} has {len(t.args)} arguments but the "
                    f"replacement declares {len(formals)} formals")
            return rename_params(rep, dict(zip(formals, t.args)))
        if isinstance(t, RatioChoice):
            return RatioChoice(t.i, t.j, go(t.left), go(t.right))
        if isinstance(t, ParamChoice):
            return ParamChoice(t.param, go(t.left), go(t.right))
        assert isinstance(t, Nu)
        if t.param in inject:
            fresh = fresh_param(t.param, inject | all_params(t.body))
            body = rename_params(t.body, {t.param: fresh})
            return Nu(t.i, t.j, fresh, go(body))
        return Nu(t.i, t.j, t.param, go(t.body))

    return go(t)


# ---------------------------------------------------------------------------
# Concrete syntax.
#
#   term   := app | "rch[" NAT "," NAT "](" term "," term ")"
#           | "pch[" IDENT "](" term "," term ")"
#           | "nu[" NAT "," NAT "]" IDENT "." term
#   app    := IDENT | IDENT "(" IDENT ("," IDENT)* ")"


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT NAT PUNCT EOF
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Token]:
    toks = []
    line, col = 1, 1
    i = 0
    while i < len(src):
        c = src[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            col += 1
            i += 1
            continue
        if c.isalpha():
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(_Token("IDENT", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < len(src) and src[j].isdigit():
                j += 1
            toks.append(_Token("NAT", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c in "[](),.;:-":
            toks.append(_Token("PUNCT", c, line, col))
            col += 1
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(_Token("EOF", "", line, col))
    return toks


class _TermParser:
    def __init__(self, src: str, ctx: Context):
        self.toks = _tokenize(src)
        self.pos = 0
        self.ctx = ctx

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def expect_punct(self, text: str) -> _Token:
        tok = self.next()
        if tok.kind != "PUNCT" or tok.text != text:
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def expect_nat(self) -> int:
        tok = self.next()
        if tok.kind != "NAT":
            self.fail(f"expected a number, found {tok.text or 'end of input'!r}", tok)
        return int(tok.text)

    def expect_ident(self) -> _Token:
        tok = self.next()
        if tok.kind != "IDENT":
            self.fail(f"expected an identifier, found {tok.text or 'end of input'!r}", tok)
        return tok

    def term(self, scope: frozenset[str]) -> Term:
        tok = self.peek()
        if tok.kind != "IDENT":
            self.fail(f"expected a term, found {tok.text or 'end of input'!r}")
        if tok.text == "rch":
            self.next()
            self.expect_punct("[")
            i = self.expect_nat()
            self.expect_punct(",")
            j = self.expect_nat()
            if i + j == 0:
                self.fail("ratio choice needs total weight i+j > 0", tok)
            self.expect_punct("]")
            self.expect_punct("(")
            left = self.term(scope)
            self.expect_punct(",")
            right = self.term(scope)
            self.expect_punct(")")
            return RatioChoice(i, j, left, right)
        if tok.text == "pch":
            self.next()
            self.expect_punct("[")
            p = self.expect_ident()
            if p.text not in scope:
                self.fail(f"parameter {p.text!r} not in scope", p)
            self.expect_punct("]")
            self.expect_punct("(")
            left = self.term(scope)
            self.expect_punct(",")
            right = self.term(scope)
            self.expect_punct(")")
            return ParamChoice(p.text, left, right)
        if tok.text == "nu":
            self.next()
            self.expect_punct("[")
            i = self.expect_nat()
            self.expect_punct(",")
            j = self.expect_nat()
            if i < 1 or j < 1:
                self.fail(f"nu binder needs positive hyperparameters, got ({i},{j})", tok)
            self.expect_punct("]")
            p = self.expect_ident()
            if p.text in RESERVED_WORDS:
                self.fail(f"{p.text!r} is a reserved word", p)
            if p.text in scope or p.text in self.ctx.all_names():
                self.fail(f"binder {p.text!r} rebinds a name in scope", p)
            self.expect_punct(".")
            body = self.term(scope | {p.text})
            return Nu(i, j, p.text, body)
        # variable application
        self.next()
        name = tok.text
        if name in RESERVED_WORDS:
            self.fail(f"{name!r} is a reserved word", tok)
        arity = self.ctx.arity(name)
        if arity is None:
            if name in scope:
                self.fail(f"parameter {name!r} used as a term", tok)
            self.fail(f"unknown variable {name!r}", tok)
        args: list[str] = []
        if self.peek().kind == "PUNCT" and self.peek().text == "(":
            self.next()
            if not (self.peek().kind == "PUNCT" and self.peek().text == ")"):
                while True:
                    a = self.expect_ident()
                    if a.text not in scope:
                        self.fail(f"parameter {a.text!r} not in scope", a)
                    args.append(a.text)
                    if self.peek().kind == "PUNCT" and self.peek().text == ",":
                        self.next()
                        continue
                    break
            self.expect_punct(")")
        if len(args) != arity:
            self.fail(f"variable {name!r} expects {arity} parameters, got {len(args)}", tok)
        return VarApp(name, tuple(args))


def parse_term(src: str, ctx: Context) -> Term:
    """Parse a term against a context; raise :class:`ParseError` on defects."""
    parser = _TermParser(src, ctx)
    t = parser.term(frozenset(ctx.params))
    tok = parser.peek()
    if tok.kind != "EOF":
        parser.fail(f"trailing input {tok.text!r}", tok)
    return t


def parse_context(src: str) -> Context:
    """Parse a context declaration like ``params: p, q ; vars: x:2, y:0``."""
    toks = _tokenize(src)
    pos = 0

    def peek():
        return toks[pos]

    def advance():
        nonlocal pos
        tok = toks[pos]
        pos += 1
        return tok

    def fail(message, tok=None):
        tok = tok or peek()
        raise ParseError(message, tok.line, tok.col)

    def expect(kind, text=None):
        tok = advance()
        if tok.kind != kind or (text is not None and tok.text != text):
            fail(f"expected {text or kind!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def name_list(section):
        # '-' or empty means no entries
        out = []
        if peek().kind == "PUNCT" and peek().text == "-":
            advance()
            return out
        while peek().kind == "IDENT":
            tok = advance()
            if tok.text in RESERVED_WORDS:
                fail(f"{tok.text!r} is a reserved word", tok)
            if section == "vars":
                arity = 0
                if peek().kind == "PUNCT" and peek().text == ":":
                    advance()
                    t = advance()
                    if t.kind != "NAT":
                        fail("expected an arity", t)
                    arity = int(t.text)
                out.append((tok.text, arity))
            else:
                out.append(tok.text)
            if peek().kind == "PUNCT" and peek().text == ",":
                advance()
                continue
            break
        return out

    expect("IDENT", "params")
    expect("PUNCT", ":")
    params = name_list("params")
    expect("PUNCT", ";")
    expect("IDENT", "vars")
    expect("PUNCT", ":")
    vars_ = name_list("vars")
    if peek().kind != "EOF":
        fail(f"trailing input {peek().text!r}")
    try:
        return Context(tuple(params), tuple(vars_))
    except TermError as e:
        raise ParseError(str(e), 1, 1) from None


def format_term(t: Term) -> str:
    """Canonical text form; ``parse_term`` inverts it up to alpha-renaming."""
    if isinstance(t, VarApp):
        if not t.args:
            return t.var
        return f"{t.var}({','.join(t.args)})"
    if isinstance(t, RatioChoice):
        return f"rch[{t.i},{t.j}]({format_term(t.left)}, {format_term(t.right)})"
    if isinstance(t, ParamChoice):
        return f"pch[{t.param}]({format_term(t.left)}, {format_term(t.right)})"
    if isinstance(t, Nu):
        return f"nu[{t.i},{t.j}]{t.param}.{format_term(t.body)}"
    raise TermError(f"not a term: {t!r}")


def format_context(ctx: Context) -> str:
    params = ", ".join(ctx.params) if ctx.params else "-"
    vars_ = ", ".join(f"{v}:{m}" for v, m in ctx.vars) if ctx.vars else "-"
    return f"params: {params} ; vars: {vars_}"
