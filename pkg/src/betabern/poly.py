"""Multivariate polynomials with exact rational coefficients.

The carrier for all denotational computations: values of terms under the
functional interpretation, Bernstein basis elements, and chain moment
matrices.  No floating point anywhere.
"""

from __future__ import annotations

from fractions import Fraction


class PolyError(Exception):
    pass


class Poly:
    """Polynomial over named variables, as ``{exponent tuple: coefficient}``.

    Normal form invariants: variables are sorted and each occurs with a
    positive exponent in at least one monomial; no zero coefficients are
    stored.  Equality is therefore plain structural equality.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, vars: tuple[str, ...], terms: dict[tuple[int, ...], Fraction]):
        self.vars = vars
        self.terms = terms

    @staticmethod
    def make(vars, terms) -> Poly:
        """Build and normalize from possibly unsorted/sparse data."""
        vars = tuple(vars)
        cleaned = {}
        for exps, coeff in terms.items():
            coeff = Fraction(coeff)
            if coeff:
                cleaned[tuple(exps)] = cleaned.get(tuple(exps), Fraction(0)) + coeff
        cleaned = {e: c for e, c in cleaned.items() if c}
        if not cleaned:
            return Poly((), {})
        used = [any(e[i] for e in cleaned) for i in range(len(vars))]
        order = sorted((v, i) for i, v in enumerate(vars) if used[i])
        new_vars = tuple(v for v, _ in order)
        idx = [i for _, i in order]
        out: dict[tuple[int, ...], Fraction] = {}
        for exps, coeff in cleaned.items():
            key = tuple(exps[i] for i in idx)
            out[key] = out.get(key, Fraction(0)) + coeff
        return Poly(new_vars, {e: c for e, c in out.items() if c})

    @staticmethod
    def const(value) -> Poly:
        value = Fraction(value)
        return Poly((), {(): value}) if value else Poly((), {})

    @staticmethod
    def var(name: str) -> Poly:
        return Poly((name,), {(1,): Fraction(1)})

    @staticmethod
    def zero() -> Poly:
        return Poly((), {})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    def _aligned(self, other: Poly):
        if self.vars == other.vars:
            return self.vars, self.terms, other.terms
        union = tuple(sorted(set(self.vars) | set(other.vars)))

        def remap(p: Poly):
            pos = [union.index(v) for v in p.vars]
            out = {}
            for exps, coeff in p.terms.items():
                key = [0] * len(union)
                for e, target in zip(exps, pos):
                    key[target] = e
                out[tuple(key)] = coeff
            return out

        return union, remap(self), remap(other)

    def __add__(self, other: Poly) -> Poly:
        union, a, b = self._aligned(other)
        out = dict(a)
        for exps, coeff in b.items():
            s = out.get(exps, Fraction(0)) + coeff
            if s:
                out[exps] = s
            elif exps in out:
                del out[exps]
        return Poly.make(union, out)

    def __neg__(self) -> Poly:
        return Poly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: Poly) -> Poly:
        return self + (-other)

    def __mul__(self, other: Poly) -> Poly:
        if self.is_zero() or other.is_zero():
            return Poly.zero()
        union, a, b = self._aligned(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                key = tuple(x + y for x, y in zip(e1, e2))
                s = out.get(key, Fraction(0)) + c1 * c2
                if s:
                    out[key] = s
                elif key in out:
                    del out[key]
        return Poly.make(union, out)

    def scale(self, factor) -> Poly:
        factor = Fraction(factor)
        if not factor:
            return Poly.zero()
        return Poly(self.vars, {e: c * factor for e, c in self.terms.items()})

    def degree(self, name: str) -> int:
        if name not in self.vars:
            return 0
        i = self.vars.index(name)
        return max((e[i] for e in self.terms), default=0)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def compose_monomials(self, formals: tuple[str, ...], actuals: tuple[str, ...]) -> Poly:
        """Rename variables positionally via ``formals -> actuals``.

        Repeated actual names merge exponents (the diagonal substitution).
        """
        if len(formals) != len(actuals):
            raise PolyError("formal/actual length mismatch")
        mapping = dict(zip(formals, actuals))
        missing = [v for v in self.vars if v not in mapping]
        if missing:
            raise PolyError(f"polynomial uses undeclared formals {missing}")
        targets = tuple(sorted(set(actuals)))
        pos = {v: i for i, v in enumerate(targets)}
        out: dict[tuple[int, ...], Fraction] = {}
        for exps, coeff in self.terms.items():
            key = [0] * len(targets)
            for e, v in zip(exps, self.vars):
                key[pos[mapping[v]]] += e
            k = tuple(key)
            s = out.get(k, Fraction(0)) + coeff
            if s:
                out[k] = s
            elif k in out:
                del out[k]
        return Poly.make(targets, out)

    def integrate_out(self, name: str, moment) -> Poly:
        """Integrate a variable away, monomial by monomial.

        ``moment(e)`` must return the exact value of the integral of
        ``name**e`` under the intended measure.
        """
        if name not in self.vars:
            return self.scale(moment(0))
        i = self.vars.index(name)
        rest = self.vars[:i] + self.vars[i + 1:]
        out: dict[tuple[int, ...], Fraction] = {}
        for exps, coeff in self.terms.items():
            key = exps[:i] + exps[i + 1:]
            s = out.get(key, Fraction(0)) + coeff * moment(exps[i])
            if s:
                out[key] = s
            elif key in out:
                del out[key]
        return Poly.make(rest, out)

    def eval(self, values: dict[str, Fraction]) -> Fraction:
        missing = [v for v in self.vars if v not in values]
        if missing:
            raise PolyError(f"no value for {missing}")
        total = Fraction(0)
        for exps, coeff in self.terms.items():
            prod = coeff
            for e, v in zip(exps, self.vars):
                if e:
                    prod *= Fraction(values[v]) ** e
            total += prod
        return total

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"Poly({format_poly(self)!r})"


def monomial(vars_exps: dict[str, int]) -> Poly:
    """The monomial with the given variable exponents, coefficient 1."""
    items = sorted((v, e) for v, e in vars_exps.items() if e)
    return Poly(tuple(v for v, _ in items),
                {tuple(e for _, e in items): Fraction(1)}) if items else Poly.const(1)


def format_poly(p: Poly) -> str:
    """Canonical text: monomials in graded-lexicographic descending order."""
    if p.is_zero():
        return "0"
    keyed = sorted(p.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)
    parts = []
    for exps, coeff in keyed:
        factors = [f"{v}^{e}" if e > 1 else v
                   for v, e in zip(p.vars, exps) if e]
        if not factors:
            body = str(coeff)
        elif abs(coeff) == 1:
            body = "*".join(factors)
        else:
            body = "*".join([str(abs(coeff))] + factors)
        sign = "-" if coeff < 0 else "+"
        if not parts:
            parts.append(body if sign == "+" else f"-{body}")
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts)


def parse_poly(src: str, allowed_vars=None) -> Poly:
    """Parse ``a*b^2 + 1/2 - q`` style polynomial text."""
    tokens = _poly_tokens(src)
    pos = 0

    def peek():
        return tokens[pos]

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def fail(msg):
        raise PolyError(f"{msg} (at token {pos}: {peek()[1]!r})")

    def parse_expr() -> Poly:
        sign = 1
        while peek()[0] == "op" and peek()[1] in "+-":
            if advance()[1] == "-":
                sign = -sign
        acc = parse_term().scale(sign)
        while peek()[0] == "op" and peek()[1] in "+-":
            op = advance()[1]
            term = parse_term()
            acc = acc + term if op == "+" else acc - term
        return acc

    def parse_term() -> Poly:
        acc = parse_factor()
        while peek()[0] == "op" and peek()[1] == "*":
            advance()
            acc = acc * parse_factor()
        return acc

    def parse_factor() -> Poly:
        base = parse_base()
        if peek()[0] == "op" and peek()[1] == "^":
            advance()
            if peek()[0] != "nat":
                fail("expected an exponent")
            e = int(advance()[1])
            out = Poly.const(1)
            for _ in range(e):
                out = out * base
            return out
        return base

    def parse_base() -> Poly:
        kind, text = peek()
        if kind == "nat":
            advance()
            if peek()[0] == "op" and peek()[1] == "/":
                advance()
                if peek()[0] != "nat":
                    fail("expected a denominator")
                den = int(advance()[1])
                if den == 0:
                    fail("zero denominator")
                return Poly.const(Fraction(int(text), den))
            return Poly.const(int(text))
        if kind == "ident":
            advance()
            if allowed_vars is not None and text not in allowed_vars:
                raise PolyError(f"unknown polynomial variable {text!r}")
            return Poly.var(text)
        if kind == "op" and text == "(":
            advance()
            inner = parse_expr()
            if not (peek()[0] == "op" and peek()[1] == ")"):
                fail("expected ')'")
            advance()
            return inner
        fail("expected a number, variable, or '('")

    out = parse_expr()
    if peek()[0] != "end":
        fail("trailing input")
    return out


def _poly_tokens(src: str):
    tokens = []
    i = 0
    while i < len(src):
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("ident", src[i:j]))
            i = j
            continue
        if c.isdigit():
            j = i
            while j < len(src) and src[j].isdigit():
                j += 1
            tokens.append(("nat", src[i:j]))
            i = j
            continue
        if c in "+-*/^()":
            tokens.append(("op", c))
            i += 1
            continue
        raise PolyError(f"unexpected character {c!r} in polynomial")
    tokens.append(("end", ""))
    return tokens
