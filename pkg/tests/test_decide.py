"""Decision procedure: golden verdicts, relational laws, oracle agreement."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from betabern import (
    Nu,
    ParamChoice,
    RatioChoice,
    Term,
    VarApp,
    equal,
    parse_context,
    parse_term,
    substitute,
)
import test_axioms
from betabern import apply_axiom
from betabern.papersuite import von_neumann_term
from betabern.semantics import functional_eq
from betabern.terms import TermError
from termgen import gen_term, rewrite_chain

XY = parse_context("params: p ; vars: x:0, y:0")


def von_neumann_round(ctx, t: Term) -> Term:
    """(t ?p x) ?p (y ?p t)"""
    x, y = VarApp("x"), VarApp("y")
    return ParamChoice("p", ParamChoice("p", t, x), ParamChoice("p", y, t))


class TestGoldenVerdicts:
    def test_von_neumann_fixed_point(self):
        fair = parse_term("rch[1,1](x,y)", XY)
        verdict = equal(XY, fair, von_neumann_term(XY))
        assert verdict.equal and verdict.witness is None

    def test_von_neumann_uniqueness(self):
        # no other primitive weighting is fixed by the biased-coin round
        from math import gcd

        for w1 in range(0, 7):
            for w2 in range(0, 7 - w1):
                if (w1, w2) in ((0, 0), (1, 1)) or w1 == w2 or gcd(w1, w2) != 1:
                    continue
                candidate = RatioChoice(w1, w2, VarApp("x"), VarApp("y"))
                verdict = equal(XY, candidate, von_neumann_round(XY, candidate))
                assert not verdict.equal, (w1, w2)

    def test_diagonal_vs_independent(self):
        ctx = parse_context("params: - ; vars: x:2")
        verdict = equal(ctx, parse_term("nu[1,1]p.x(p,p)", ctx),
                        parse_term("nu[1,1]p.nu[1,1]q.x(p,q)", ctx))
        assert not verdict.equal
        assert verdict.witness is not None
        assert verdict.witness.left_weight != verdict.witness.right_weight

    def test_witness_is_first_difference(self):
        ctx = parse_context("params: p ; vars: x:0, y:0")
        verdict = equal(ctx, parse_term("pch[p](x, y)", ctx),
                        parse_term("pch[p](y, x)", ctx))
        assert not verdict.equal
        assert verdict.witness.index == (0,)
        assert verdict.witness.column == 0

    def test_reflexivity(self):
        rng = random.Random(2)
        ctx = parse_context("params: p ; vars: x:2, y:0")
        for _ in range(10):
            t = gen_term(rng, ctx, 15, weight_max=3)
            assert equal(ctx, t, t).equal

    def test_ill_formed_propagates(self):
        with pytest.raises(TermError):
            equal(XY, VarApp("bogus"), VarApp("x"))


class TestRelationalLaws:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32))
    def test_symmetry(self, seed):
        rng = random.Random(seed)
        ctx = parse_context("params: p ; vars: x:1, y:0")
        t = gen_term(rng, ctx, 10, weight_max=3)
        u = gen_term(rng, ctx, 10, weight_max=3)
        assert equal(ctx, t, u).equal == equal(ctx, u, t).equal

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32))
    def test_transitivity_on_rewrite_chains(self, seed):
        rng = random.Random(seed)
        ctx = parse_context("params: p ; vars: x:1, y:0")
        t = gen_term(rng, ctx, 10, weight_max=3)
        u = rewrite_chain(rng, ctx, t, 3)
        v = rewrite_chain(rng, ctx, u, 3)
        assert equal(ctx, t, u).equal and equal(ctx, u, v).equal
        assert equal(ctx, t, v).equal

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 32))
    def test_congruence(self, seed):
        rng = random.Random(seed)
        ctx = parse_context("params: p ; vars: x:1, y:0")
        t = gen_term(rng, ctx, 8, weight_max=3)
        u = rewrite_chain(rng, ctx, t, rng.randint(1, 5))
        hole_ctx = rng.choice(["rch", "pch", "nu"])
        filler = gen_term(rng, ctx, 6, weight_max=3)
        if hole_ctx == "rch":
            wrap = lambda s: RatioChoice(2, 3, filler, s)
        elif hole_ctx == "pch":
            wrap = lambda s: ParamChoice("p", s, filler)
        else:
            wrap = lambda s: Nu(1, 2, "w", s)
        assert equal(ctx, wrap(t), wrap(u)).equal

    def test_substitutivity_instance(self):
        # substituting equals into the same template keeps equality
        tpl_ctx = parse_context("params: p ; vars: h:0, x:0, y:0")
        template = parse_term("pch[p](h, rch[1,2](h, x))", tpl_ctx)
        target = parse_context("params: p ; vars: x:0, y:0")
        a = parse_term("rch[2,4](x, y)", target)
        b = parse_term("rch[1,2](x, y)", target)
        assert equal(target, substitute(template, {"h": ((), a)}),
                     substitute(template, {"h": ((), b)})).equal


class TestAxiomClosure:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32))
    def test_random_axiom_instances_decide_equal(self, seed):
        rng = random.Random(seed)
        axiom = rng.choice(test_axioms.AXIOM_NAMES)
        lhs = test_axioms.random_instance(rng, axiom, size=7, wmax=4)
        rhs = apply_axiom(lhs, test_axioms.rs(axiom))
        assert equal(test_axioms.SCHEME_CTX, lhs, rhs).equal


class TestOracleAgreement:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32))
    def test_independent_pairs(self, seed):
        rng = random.Random(seed)
        ctx = parse_context("params: p, q ; vars: x:2, y:0")
        t = gen_term(rng, ctx, 11, weight_max=3)
        u = gen_term(rng, ctx, 11, weight_max=3)
        assert equal(ctx, t, u).equal == functional_eq(ctx, t, u)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 32))
    def test_rewritten_pairs(self, seed):
        rng = random.Random(seed)
        ctx = parse_context("params: p ; vars: x:1, y:0")
        t = gen_term(rng, ctx, 10, weight_max=3)
        u = rewrite_chain(rng, ctx, t, rng.randint(1, 6))
        assert equal(ctx, t, u).equal
        assert functional_eq(ctx, t, u)
