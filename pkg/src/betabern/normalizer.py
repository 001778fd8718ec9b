"""Normalization of choice terms into unique canonical forms.

The pipeline has three stages, each a derivable-equality-preserving
transformation:

1. ``push_nu_to_leaves`` -- conjugacy and commutativity move every binder
   down until binders sit in *chains*: maximal nu-runs ending in a variable
   application.
2. ``raise_level`` -- every binder is expanded until its hyperparameters
   sum to a common level ``n`` (a ``nu[i,j]`` below level ``n`` becomes the
   beta-binomial mixture of the level-``n`` binders it refines to).
3. ``stratify`` -- choices on each free parameter are averaged into a
   permutation-invariant depth-``k`` tree diagram whose leaves depend only
   on the number of right branches taken per parameter.

Collecting each leaf into a weighted multichoice over the distinct
alpha-canonical chains yields a :class:`NormalForm`: two well-formed terms
are derivably equal exactly when their joined normal forms coincide.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd, lcm

from .terms import (
    Context,
    Nu,
    ParamChoice,
    RatioChoice,
    Term,
    TermError,
    VarApp,
    check_wellformed,
    format_term,
    free_params,
)

# argmap entries: ("F", g) is the g-th free parameter (1-based in the
# context), ("B", b) the b-th binder of the chain (1-based, outermost first).
ArgRef = tuple[str, int]


@dataclass(frozen=True)
class Chain:
    """Alpha-canonical nu-run applied to a single variable occurrence.

    Binders are listed outermost first and numbered by first use in the
    argument map, every binder is used, and (inside a normal form) each
    binder's hyperparameters sum to the common level ``n``.
    """

    binders: tuple[tuple[int, int], ...]
    var: str
    argmap: tuple[ArgRef, ...]

    @property
    def dimension(self) -> int:
        return len(self.binders)

    def sort_key(self):
        encoded = tuple((0, idx) if tag == "F" else (1, idx) for tag, idx in self.argmap)
        return (self.var, self.dimension, encoded, self.binders)

    def levels(self) -> set[int]:
        return {i + j for i, j in self.binders}

    def to_term(self, ctx: Context, bound_names: tuple[str, ...] | None = None) -> Term:
        names = bound_names or chain_binder_names(ctx, self.dimension)
        args = tuple(ctx.params[idx - 1] if tag == "F" else names[idx - 1]
                     for tag, idx in self.argmap)
        t: Term = VarApp(self.var, args)
        for (i, j), name in reversed(tuple(zip(self.binders, names))):
            t = Nu(i, j, name, t)
        return t

    def describe(self, ctx: Context) -> str:
        return format_term(self.to_term(ctx))


def chain_binder_names(ctx: Context, count: int) -> tuple[str, ...]:
    """Deterministic binder names for rebuilding chains as terms."""
    taken = ctx.all_names()
    names = []
    idx = 1
    while len(names) < count:
        candidate = f"b{idx}"
        if candidate not in taken:
            names.append(candidate)
        idx += 1
    return tuple(names)


def chain_from_term(ctx: Context, node: Term) -> Chain:
    """Canonicalize a nu-run: drop unused binders, order by first use."""
    binders: list[tuple[int, int, str]] = []
    while isinstance(node, Nu):
        binders.append((node.i, node.j, node.param))
        node = node.body
    if not isinstance(node, VarApp):
        raise TermError(f"chain tip must be a variable application, got {format_term(node)}")
    hyper = {name: (i, j) for i, j, name in binders}
    order: dict[str, int] = {}
    argmap: list[ArgRef] = []
    for a in node.args:
        if a in hyper:
            if a not in order:
                order[a] = len(order) + 1
            argmap.append(("B", order[a]))
        else:
            argmap.append(("F", ctx.param_position(a)))
    reordered = [None] * len(order)
    for name, pos in order.items():
        reordered[pos - 1] = hyper[name]
    return Chain(tuple(reordered), node.var, tuple(argmap))


@dataclass(eq=True)
class NormalForm:
    """Stratified tree-diagram depth ``k``, chain level ``n``, ordered
    distinct chains, and one primitive integer weight vector per multi-index.

    ``weights`` maps every multi-index in ``{0..k}^len(params)`` to a vector
    over ``chains``.  Forms produced by :func:`join_normalize` may carry
    all-zero columns for chains contributed only by the partner term.
    """

    ctx: Context
    k: int
    n: int
    chains: tuple[Chain, ...]
    weights: dict[tuple[int, ...], tuple[int, ...]]

    def indices(self):
        return itertools.product(range(self.k + 1), repeat=len(self.ctx.params))

    def leaf_fractions(self, index) -> dict[Chain, Fraction]:
        vec = self.weights[tuple(index)]
        total = sum(vec)
        return {c: Fraction(w, total) for c, w in zip(self.chains, vec) if w}

    def __str__(self):
        return format_normal_form(self)


def validate_normal_form(nf: NormalForm, allow_zero_columns: bool = False) -> list[str]:
    """Invariant checks; returns human-readable defects (empty = valid)."""
    defects = []
    if nf.n < 2:
        defects.append(f"level n={nf.n} below 2")
    if nf.k < 0:
        defects.append("negative depth k")
    if list(nf.chains) != sorted(nf.chains, key=Chain.sort_key):
        defects.append("chains not in canonical order")
    if len(set(nf.chains)) != len(nf.chains):
        defects.append("duplicate chains")
    for c in nf.chains:
        if c.levels() - {nf.n}:
            defects.append(f"chain {c.describe(nf.ctx)} not at level {nf.n}")
        used = {idx for tag, idx in c.argmap if tag == "B"}
        if used != set(range(1, c.dimension + 1)):
            defects.append(f"chain {c.describe(nf.ctx)} has unused binders")
        firsts = [idx for tag, idx in c.argmap if tag == "B"]
        seen: list[int] = []
        for idx in firsts:
            if idx not in seen:
                seen.append(idx)
        if seen != sorted(seen):
            defects.append(f"chain {c.describe(nf.ctx)} binders not in first-use order")
    expected = set(nf.indices())
    if set(nf.weights) != expected:
        defects.append("weight table does not cover the multi-index grid")
    nonzero = [False] * len(nf.chains)
    for index, vec in nf.weights.items():
        if len(vec) != len(nf.chains):
            defects.append(f"weight vector at {index} has wrong length")
            continue
        if any(w < 0 for w in vec):
            defects.append(f"negative weight at {index}")
        if not any(vec):
            defects.append(f"zero weight vector at {index}")
        elif gcd(*vec) != 1:
            defects.append(f"weight vector at {index} not primitive")
        for pos, w in enumerate(vec):
            if w:
                nonzero[pos] = True
    if not allow_zero_columns and not all(nonzero):
        defects.append("dead chain column")
    return defects


# ---------------------------------------------------------------------------
# Stage 1: push binders to the leaves.


def push_nu_to_leaves(t: Term) -> Term:
    """Rewrite until every binder body is another binder or the tip variable
    application that uses it; unused binders are discarded.

    Zero-weight ratio branches are pruned on the way (the zero-weight law),
    so the canonical level and depth downstream never depend on dead code.
    """
    if isinstance(t, VarApp):
        return t
    if isinstance(t, RatioChoice):
        if t.j == 0:
            return push_nu_to_leaves(t.left)
        if t.i == 0:
            return push_nu_to_leaves(t.right)
        return RatioChoice(t.i, t.j, push_nu_to_leaves(t.left), push_nu_to_leaves(t.right))
    if isinstance(t, ParamChoice):
        return ParamChoice(t.param, push_nu_to_leaves(t.left), push_nu_to_leaves(t.right))
    if isinstance(t, Nu):
        return _push_nu(t.i, t.j, t.param, push_nu_to_leaves(t.body))
    raise TermError(f"not a term: {t!r}")


def _push_nu(i: int, j: int, p: str, body: Term) -> Term:
    if p not in free_params(body):
        return body  # discard (D1)
    if isinstance(body, ParamChoice):
        if body.param == p:  # conjugate update (Conj)
            return RatioChoice(i, j,
                               _push_nu(i + 1, j, p, body.left),
                               _push_nu(i, j + 1, p, body.right))
        return ParamChoice(body.param,  # commute past a bias choice (C3)
                           _push_nu(i, j, p, body.left),
                           _push_nu(i, j, p, body.right))
    if isinstance(body, RatioChoice):  # commute past a ratio choice (C4)
        return RatioChoice(body.i, body.j,
                           _push_nu(i, j, p, body.left),
                           _push_nu(i, j, p, body.right))
    # VarApp using p, or a nested chain: a chain tip.
    return Nu(i, j, p, body)


# ---------------------------------------------------------------------------
# Stage 2: raise all binders to a common level n.


def max_level(t: Term) -> int:
    if isinstance(t, VarApp):
        return 0
    if isinstance(t, (RatioChoice, ParamChoice)):
        return max(max_level(t.left), max_level(t.right))
    if isinstance(t, Nu):
        return max(t.i + t.j, max_level(t.body))
    raise TermError(f"not a term: {t!r}")


def _rising(x: int, a: int) -> int:
    out = 1
    for s in range(a):
        out *= x + s
    return out


def multichoice(pairs) -> Term:
    """Right-nested ratio choice realizing integer weights; zeros dropped."""
    pairs = [(int(w), t) for w, t in pairs if w]
    if not pairs:
        raise TermError("multichoice needs a positive total weight")
    term = pairs[-1][1]
    tail = pairs[-1][0]
    for w, u in reversed(pairs[:-1]):
        term = RatioChoice(w, tail, u, term)
        tail += w
    return term


def raise_level(t: Term, n: int) -> Term:
    """Expand every binder of a nu-pushed term so hyperparameters sum to n."""
    lvl = max_level(t)
    if n < 2 or n < lvl:
        raise TermError(f"target level {n} below minimum {max(2, lvl)}")
    return _raise(t, n)


def _raise(t: Term, n: int) -> Term:
    if isinstance(t, VarApp):
        return t
    if isinstance(t, RatioChoice):
        return RatioChoice(t.i, t.j, _raise(t.left, n), _raise(t.right, n))
    if isinstance(t, ParamChoice):
        return ParamChoice(t.param, _raise(t.left, n), _raise(t.right, n))
    assert isinstance(t, Nu)
    return _nu_expand(t.i, t.j, t.param, _raise(t.body, n), n)


def _nu_expand(i: int, j: int, p: str, body: Term, n: int) -> Term:
    if isinstance(body, RatioChoice):
        # hoist mixture out of the binder (C4), then expand each branch
        return RatioChoice(body.i, body.j,
                           _nu_expand(i, j, p, body.left, n),
                           _nu_expand(i, j, p, body.right, n))
    if isinstance(body, ParamChoice):
        raise TermError("term is not in nu-pushed form")
    m = n - i - j
    if m == 0:
        return Nu(i, j, p, body)
    pairs = [(comb(m, a) * _rising(i, a) * _rising(j, m - a), Nu(i + a, j + m - a, p, body))
             for a in range(m, -1, -1)]
    return multichoice(pairs)


# ---------------------------------------------------------------------------
# Stage 3: stratify free-parameter choices into depth-k tree diagrams.


def choice_counts(t: Term) -> dict[str, int]:
    """Per parameter, the maximum number of its choices on any path."""
    if isinstance(t, (VarApp, Nu)):
        return {}
    if isinstance(t, (RatioChoice, ParamChoice)):
        left = choice_counts(t.left)
        right = choice_counts(t.right)
        out = dict(left)
        for p, c in right.items():
            out[p] = max(out.get(p, 0), c)
        if isinstance(t, ParamChoice):
            out[t.param] = out.get(t.param, 0) + 1
        return out
    raise TermError(f"not a term: {t!r}")


def _resolve(t: Term, param: str, bits: tuple[int, ...], pos: int = 0) -> Term:
    """Resolve successive choices on ``param`` along each path by ``bits``."""
    if isinstance(t, ParamChoice) and t.param == param:
        if pos >= len(bits):
            raise TermError("stratification depth k too small")
        branch = t.left if bits[pos] == 0 else t.right
        return _resolve(branch, param, bits, pos + 1)
    if isinstance(t, ParamChoice):
        return ParamChoice(t.param, _resolve(t.left, param, bits, pos),
                           _resolve(t.right, param, bits, pos))
    if isinstance(t, RatioChoice):
        return RatioChoice(t.i, t.j, _resolve(t.left, param, bits, pos),
                           _resolve(t.right, param, bits, pos))
    return t  # chains are atomic


@dataclass(frozen=True)
class TreeDiagram:
    """Nested permutation-invariant diagrams: one leaf per multi-index."""

    params: tuple[str, ...]
    k: int
    leaves: dict[tuple[int, ...], Term]

    def to_term(self) -> Term:
        # memoized per level: the subdiagram depends only on the count of
        # right branches, so equal-count nodes share one term object
        def build(axis: int, prefix: tuple[int, ...]) -> Term:
            if axis == len(self.params):
                return self.leaves[prefix]
            memo: dict[tuple[int, int], Term] = {}

            def node(depth: int, rights: int) -> Term:
                key = (depth, rights)
                if key not in memo:
                    if depth == self.k:
                        memo[key] = build(axis + 1, prefix + (rights,))
                    else:
                        memo[key] = ParamChoice(self.params[axis],
                                                node(depth + 1, rights),
                                                node(depth + 1, rights + 1))
                return memo[key]

            return node(0, 0)

        return build(0, ())


def stratify(ctx: Context, t: Term, k: int) -> TreeDiagram:
    """Average a nu-pushed, level-raised term into a depth-k diagram.

    Leaf ``s`` of each parameter's diagram is the uniform mixture of the
    ``C(k, s)`` resolutions whose bit vector has ``s`` right branches; the
    k! path permutations never get enumerated.
    """
    counts = choice_counts(t)
    if counts and k < max(counts.values()):
        raise TermError(f"depth k={k} below required {max(counts.values())}")

    def go(params: tuple[str, ...], term: Term) -> dict[tuple[int, ...], Term]:
        if not params:
            return {(): term}
        p, rest = params[0], params[1:]
        out: dict[tuple[int, ...], Term] = {}
        for s in range(k + 1):
            picks = [bits for bits in itertools.product((0, 1), repeat=k)
                     if sum(bits) == s]
            averaged = multichoice([(1, _resolve(term, p, bits)) for bits in picks])
            for index, leaf in go(rest, averaged).items():
                out[(s,) + index] = leaf
        return out

    return TreeDiagram(ctx.params, k, go(ctx.params, t))


# ---------------------------------------------------------------------------
# Stage 4: collect a leaf into a weighted multichoice over distinct chains.


def _pull_ratios(t: Term) -> Term:
    """Hoist ratio choices above binders (C4) so leaves become ratio trees."""
    if isinstance(t, VarApp):
        return t
    if isinstance(t, RatioChoice):
        return RatioChoice(t.i, t.j, _pull_ratios(t.left), _pull_ratios(t.right))
    if isinstance(t, Nu):
        return _nu_over(t.i, t.j, t.param, _pull_ratios(t.body))
    raise TermError("leaf contains a parameter choice")


def _nu_over(i: int, j: int, p: str, body: Term) -> Term:
    if isinstance(body, RatioChoice):
        return RatioChoice(body.i, body.j,
                           _nu_over(i, j, p, body.left),
                           _nu_over(i, j, p, body.right))
    return Nu(i, j, p, body)


def chain_distribution(ctx: Context, leaf: Term) -> dict[Chain, Fraction]:
    """Exact chain distribution of a leaf (ratio choices over nu-runs)."""
    out: dict[Chain, Fraction] = {}

    def walk(node: Term, weight: Fraction) -> None:
        if isinstance(node, RatioChoice):
            total = node.i + node.j
            if total <= 0:
                raise TermError("ratio choice with zero total weight")
            if node.i:
                walk(node.left, weight * Fraction(node.i, total))
            if node.j:
                walk(node.right, weight * Fraction(node.j, total))
            return
        chain = chain_from_term(ctx, node)
        out[chain] = out.get(chain, Fraction(0)) + weight

    walk(_pull_ratios(leaf), Fraction(1))
    return out


def _primitive(fractions) -> tuple[int, ...]:
    denom = 1
    for f in fractions:
        denom = lcm(denom, f.denominator)
    ints = [int(f * denom) for f in fractions]
    g = gcd(*ints) if any(ints) else 1
    return tuple(w // g for w in ints) if g else tuple(ints)


def collect_chains(ctx: Context, leaf: Term) -> tuple[tuple[Chain, ...], tuple[int, ...]]:
    """Distinct sorted chains of a leaf with primitive integer weights."""
    dist = chain_distribution(ctx, leaf)
    chains = tuple(sorted(dist, key=Chain.sort_key))
    weights = _primitive([dist[c] for c in chains])
    return chains, weights


# ---------------------------------------------------------------------------
# The full pipeline.


def _leaf_tables(ctx: Context, raised: Term, k: int) -> dict[tuple[int, ...], dict[Chain, Fraction]]:
    """Chain distribution of every stratified leaf, via the closed form.

    A path that consumes ``d`` choices on a parameter, ``r`` of them right
    branches, lands in leaf ``s`` of that parameter's depth-k diagram with
    probability C(k-d, s-r)/C(k, s); contributions multiply across
    parameters.  This is the stratify/collect composition without building
    the averaged terms.
    """
    ell = len(ctx.params)
    axis_of = {p: a for a, p in enumerate(ctx.params)}
    tables: dict[tuple[int, ...], dict[Chain, Fraction]] = {}
    chain_cache: dict[int, Chain] = {}

    def walk(node: Term, weight: Fraction, consumed: tuple[int, ...], rights: tuple[int, ...]):
        if isinstance(node, RatioChoice):
            total = node.i + node.j
            if node.i:
                walk(node.left, weight * Fraction(node.i, total), consumed, rights)
            if node.j:
                walk(node.right, weight * Fraction(node.j, total), consumed, rights)
            return
        if isinstance(node, ParamChoice):
            a = axis_of[node.param]
            bumped = consumed[:a] + (consumed[a] + 1,) + consumed[a + 1:]
            walk(node.left, weight, bumped, rights)
            walk(node.right, weight, bumped,
                 rights[:a] + (rights[a] + 1,) + rights[a + 1:])
            return
        chain = chain_cache.get(id(node))
        if chain is None:
            chain = chain_from_term(ctx, node)
            chain_cache[id(node)] = chain
        axes = []
        for a in range(ell):
            d, r = consumed[a], rights[a]
            axes.append([(s, Fraction(comb(k - d, s - r), comb(k, s)))
                         for s in range(r, r + (k - d) + 1)])
        for combo in itertools.product(*axes):
            w = weight
            for _, factor in combo:
                w *= factor
            index = tuple(s for s, _ in combo)
            leaf = tables.setdefault(index, {})
            leaf[chain] = leaf.get(chain, Fraction(0)) + w

    walk(raised, Fraction(1), (0,) * ell, (0,) * ell)
    return tables


def _assemble(ctx: Context, raised: Term, k: int, n: int) -> NormalForm:
    tables = _leaf_tables(ctx, raised, k)
    chains = tuple(sorted({c for leaf in tables.values() for c in leaf},
                          key=Chain.sort_key))
    weights = {}
    for index in itertools.product(range(k + 1), repeat=len(ctx.params)):
        leaf = tables[index]
        assert sum(leaf.values()) == 1, "leaf mass must be 1"
        weights[index] = _primitive([leaf.get(c, Fraction(0)) for c in chains])
    return NormalForm(ctx, k, n, chains, weights)


def _stage12(ctx: Context, t: Term, k: int | None, n: int | None):
    bad = check_wellformed(ctx, t)
    if bad:
        raise TermError(f"term ill-formed: {bad[0]}")
    pushed = push_nu_to_leaves(t)
    n_min = max(2, max_level(pushed))
    if n is None:
        n = n_min
    elif n < n_min:
        raise TermError(f"level n={n} below minimum {n_min}")
    raised = raise_level(pushed, n)
    counts = choice_counts(raised)
    k_min = max(counts.values(), default=0)
    if k is None:
        k = k_min
    elif k < k_min:
        raise TermError(f"depth k={k} below minimum {k_min}")
    return raised, k, n


def normalize(ctx: Context, t: Term, k: int | None = None, n: int | None = None) -> NormalForm:
    """Unique normal form of ``t`` at the canonical (or given) depth and level."""
    raised, k, n = _stage12(ctx, t, k, n)
    return _assemble(ctx, raised, k, n)


def _widen(nf: NormalForm, chains: tuple[Chain, ...]) -> NormalForm:
    position = {c: i for i, c in enumerate(nf.chains)}
    weights = {}
    for index, vec in nf.weights.items():
        weights[index] = tuple(vec[position[c]] if c in position else 0 for c in chains)
    return NormalForm(nf.ctx, nf.k, nf.n, chains, weights)


def join_normalize(ctx: Context, t: Term, u: Term) -> tuple[NormalForm, NormalForm]:
    """Normal forms of both terms at common depth/level over merged chains."""
    pushed_t = push_nu_to_leaves_checked(ctx, t)
    pushed_u = push_nu_to_leaves_checked(ctx, u)
    n = max(2, max_level(pushed_t), max_level(pushed_u))
    raised_t = raise_level(pushed_t, n)
    raised_u = raise_level(pushed_u, n)
    k = max([*choice_counts(raised_t).values(), *choice_counts(raised_u).values()],
            default=0)
    nf_t = _assemble(ctx, raised_t, k, n)
    nf_u = _assemble(ctx, raised_u, k, n)
    merged = tuple(sorted(set(nf_t.chains) | set(nf_u.chains), key=Chain.sort_key))
    return _widen(nf_t, merged), _widen(nf_u, merged)


def push_nu_to_leaves_checked(ctx: Context, t: Term) -> Term:
    bad = check_wellformed(ctx, t)
    if bad:
        raise TermError(f"term ill-formed: {bad[0]}")
    return push_nu_to_leaves(t)


def reify(nf: NormalForm) -> Term:
    """Deterministic term realizing a normal form: nested parameter diagrams
    in context order, each leaf a multichoice over chains in canonical
    order with zero-weight columns skipped."""
    ctx = nf.ctx
    chain_terms = [c.to_term(ctx) for c in nf.chains]
    leaves = {
        index: multichoice([(w, chain_terms[pos]) for pos, w in enumerate(vec) if w])
        for index, vec in nf.weights.items()
    }
    return TreeDiagram(ctx.params, nf.k, leaves).to_term()


# ---------------------------------------------------------------------------
# Serialization: stable across runs, used by golden tests and the CLI.


def _argref_text(ref: ArgRef) -> str:
    return f"{ref[0]}{ref[1]}"


def normal_form_to_dict(nf: NormalForm) -> dict:
    return {
        "k": nf.k,
        "n": nf.n,
        "params": list(nf.ctx.params),
        "vars": [[v, m] for v, m in nf.ctx.vars],
        "chains": [
            {
                "binders": [[i, j] for i, j in c.binders],
                "var": c.var,
                "args": [_argref_text(ref) for ref in c.argmap],
            }
            for c in nf.chains
        ],
        "weights": [list(nf.weights[index]) for index in nf.indices()],
    }


def format_normal_form(nf: NormalForm) -> str:
    lines = [f"k: {nf.k}", f"n: {nf.n}"]
    lines.append("chains:")
    for pos, c in enumerate(nf.chains):
        lines.append(f"  [{pos}] {c.describe(nf.ctx)}")
    lines.append("weights:")
    for index in nf.indices():
        key = ",".join(map(str, index))
        vec = " ".join(map(str, nf.weights[index]))
        lines.append(f"  I=({key}): {vec}")
    lines.append(f"reified: {format_term(reify(nf))}")
    return "\n".join(lines)
