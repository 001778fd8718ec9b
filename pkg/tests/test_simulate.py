"""Sampler semantics: urn vs. direct Beta draws vs. exact distributions."""

import random
from fractions import Fraction

import pytest

from betabern import (
    compare,
    estimate,
    exact_distribution,
    parse_context,
    parse_term,
    run_betabern,
    run_polya,
)
from betabern.simulate import chi_square_stat, compare_counts, check_ground
from betabern.terms import TermError
from termgen import gen_ground_term

YZ = parse_context("params: - ; vars: y:0, z:0")
XYZ = parse_context("params: - ; vars: x:0, y:0, z:0")

F = Fraction


class TestGroundGuards:
    def test_rejects_free_parameters(self):
        ctx = parse_context("params: p ; vars: x:0")
        with pytest.raises(TermError):
            check_ground(ctx, parse_term("x", ctx))

    def test_rejects_positive_arity(self):
        ctx = parse_context("params: - ; vars: x:1")
        with pytest.raises(TermError, match="arity 0"):
            check_ground(ctx, parse_term("nu[1,1]p.x(p)", ctx))


class TestRunners:
    def test_deterministic_leaf(self):
        rng = random.Random(0)
        t = parse_term("y", YZ)
        assert run_polya(t, rng) == "y"
        assert run_betabern(t, rng) == "y"

    def test_estimate_single_trial(self):
        counts = estimate(YZ, parse_term("y", YZ), trials=1, seed=4, impl="polya")
        assert counts == {"y": 1, "z": 0}

    def test_seeded_determinism(self):
        t = parse_term("nu[2,1]p.pch[p](pch[p](y,z), z)", YZ)
        for impl in ("polya", "betabern"):
            a = estimate(YZ, t, trials=3000, seed=99, impl=impl)
            b = estimate(YZ, t, trials=3000, seed=99, impl=impl)
            assert a == b

    def test_impl_validated(self):
        with pytest.raises(TermError, match="unknown implementation"):
            estimate(YZ, parse_term("y", YZ), trials=1, seed=0, impl="exact")

    def test_fair_coin_concentration(self):
        t = parse_term("rch[1,1](y, z)", YZ)
        counts = estimate(YZ, t, trials=100000, seed=8, impl="polya")
        assert abs(counts["y"] / 100000 - 0.5) < 0.01

    def test_urn_counts_evolve(self):
        # three draws from the same binder: the diagonal x(p,p,p)-style term
        # leaves all-y mass 1/2 * 2/3 * 3/4 under the urn scheme
        ctx = parse_context("params: - ; vars: y:0, z:0")
        t = parse_term(
            "nu[1,1]p.pch[p](pch[p](pch[p](y,z), z), z)", ctx)
        assert exact_distribution(ctx, t)["y"] == F(1, 4)
        counts = estimate(ctx, t, trials=40000, seed=5, impl="polya")
        assert abs(counts["y"] / 40000 - 0.25) < 0.01


class TestExactDistribution:
    def test_stone_weights(self):
        t = parse_term("rch[2,8](x, rch[3,5](y,z))", XYZ)
        assert exact_distribution(XYZ, t) == {"x": F(1, 5), "y": F(3, 10), "z": F(1, 2)}

    def test_two_draw_masses(self):
        one = parse_term("nu[1,1]p.pch[p](pch[p](y,z), z)", YZ)
        two = parse_term("nu[1,1]p.nu[1,1]q.pch[p](pch[q](y,z), z)", YZ)
        assert exact_distribution(YZ, one) == {"y": F(1, 3), "z": F(2, 3)}
        assert exact_distribution(YZ, two) == {"y": F(1, 4), "z": F(3, 4)}

    def test_matches_indicator_interpretation(self):
        from betabern import interpret
        from betabern.poly import Poly
        from betabern.semantics import indicator_args

        rng = random.Random(12)
        for _ in range(15):
            t = gen_ground_term(rng, XYZ, 12)
            dist = exact_distribution(XYZ, t)
            for name, _ in XYZ.vars:
                value = interpret(XYZ, t, indicator_args(XYZ, name))
                assert value == Poly.const(dist[name])


class TestChiSquare:
    def test_deterministic_term_passes_trivially(self):
        ctx = parse_context("params: - ; vars: x:0")
        report = compare(ctx, parse_term("x", ctx), trials=100, seed=1, impl="polya")
        assert report.passed and report.chi_square == 0.0 and report.dof == 0

    def test_small_cells_merge(self):
        expected = {"a": F(1, 1000), "b": F(999, 1000), "c": F(0)}
        counts = {"a": 0, "b": 1000, "c": 0}
        stat, dof = chi_square_stat(counts, expected, 1000)
        assert dof == 0  # tiny cells all merge into the single big one
        assert stat == 0.0
        # with two healthy cells plus a tiny one, one merge leaves dof 1
        expected = {"a": F(1, 1000), "b": F(499, 1000), "c": F(1, 2)}
        counts = {"a": 1, "b": 499, "c": 500}
        stat, dof = chi_square_stat(counts, expected, 1000)
        assert dof == 1

    def test_zero_probability_cells_merge(self):
        expected = {"a": F(0), "b": F(1)}
        stat, dof = chi_square_stat({"a": 0, "b": 500}, expected, 500)
        assert stat == 0.0

    def test_report_lines_are_stable(self):
        t = parse_term("rch[1,1](y, z)", YZ)
        a = compare(YZ, t, trials=2000, seed=3, impl="polya")
        b = compare(YZ, t, trials=2000, seed=3, impl="polya")
        assert str(a) == str(b)
        assert any(line.startswith("leaf y ") for line in a.lines())

    def test_trials_too_small(self):
        t = parse_term("rch[1,1](y, z)", YZ)
        with pytest.raises(TermError, match="too small"):
            compare(YZ, t, trials=3, seed=0, impl="polya")


class TestAgreement:
    def test_both_impls_pass_appendix_terms(self):
        one = parse_term("nu[1,1]p.pch[p](pch[p](y,z), z)", YZ)
        two = parse_term("nu[1,1]p.nu[1,1]q.pch[p](pch[q](y,z), z)", YZ)
        for impl, seed in (("polya", 41), ("betabern", 42)):
            assert compare(YZ, one, trials=30000, seed=seed, impl=impl).passed
            assert compare(YZ, two, trials=30000, seed=seed + 1, impl=impl).passed

    def test_random_ground_terms_both_impls(self):
        rng = random.Random(77)
        for trial in range(6):
            t = gen_ground_term(rng, XYZ, 12)
            for impl in ("polya", "betabern"):
                report = compare(XYZ, t, trials=20000, seed=1000 + trial, impl=impl)
                assert report.passed, (trial, impl, str(report))

    def test_cross_comparison_fails(self):
        one = parse_term("nu[1,1]p.pch[p](pch[p](y,z), z)", YZ)
        two = parse_term("nu[1,1]p.nu[1,1]q.pch[p](pch[q](y,z), z)", YZ)
        counts = estimate(YZ, one, trials=30000, seed=91, impl="polya")
        wrong = compare_counts(counts, exact_distribution(YZ, two), 30000, "polya", 91)
        assert not wrong.passed
