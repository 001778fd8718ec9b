"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines.  Every tolerance is pinned here; runtime budgets are asserted
against wall-clock time.
"""

import itertools
import random
import time
from fractions import Fraction
from math import gcd

import test_axioms
from betabern import (
    AXIOM_NAMES,
    RatioChoice,
    VarApp,
    apply_axiom,
    equal,
    interpret,
    join_normalize,
    normalize,
    parse_context,
    parse_term,
    reify,
    substitute,
    term_from_bernstein,
)
from betabern.normalizer import validate_normal_form
from betabern.papersuite import square_subspace_chains, von_neumann_term
from betabern.semantics import (
    bernstein_expand,
    chain_rank_check,
    functional_eq,
    functional_eq_sampled,
    indicator_args,
)
from betabern.simulate import compare, compare_counts, estimate, exact_distribution
from termgen import gen_ground_term, gen_term, rewrite_chain

F = Fraction
YZ = parse_context("params: - ; vars: y:0, z:0")
APPENDIX_ONE = "nu[1,1]p.pch[p](pch[p](y,z), z)"
APPENDIX_TWO = "nu[1,1]p.nu[1,1]q.pch[p](pch[q](y,z), z)"


def report(number: int, budget: float, started: float, detail: str) -> None:
    elapsed = time.time() - started
    print(f"criterion {number}: PASS — {detail} ({elapsed:.1f}s / budget {budget:.0f}s)")
    assert elapsed < budget, f"criterion {number} exceeded its {budget}s budget"


def test_criterion_1_golden_normalizations():
    """Two-draw binder terms normalize to the exact weighted choices."""
    started = time.time()
    nf_one = normalize(YZ, parse_term(APPENDIX_ONE, YZ))
    assert reify(nf_one) == parse_term("rch[1,2](y, z)", YZ)
    nf_two = normalize(YZ, parse_term(APPENDIX_TWO, YZ))
    assert reify(nf_two) == parse_term("rch[1,3](y, z)", YZ)
    report(1, 1.0, started, "golden two-draw normal forms rch[1,2] and rch[1,3]")


def test_criterion_2_von_neumann_unique_fixed_point():
    """The fair coin is fixed by the biased-coin round; nothing else is."""
    started = time.time()
    ctx = parse_context("params: p ; vars: x:0, y:0")
    fair = parse_term("rch[1,1](x,y)", ctx)
    assert equal(ctx, fair, von_neumann_term(ctx)).equal

    others = 0
    for w1 in range(0, 7):
        for w2 in range(0, 7 - w1):
            if w1 + w2 == 0 or w1 == w2 or gcd(w1, w2) != 1:
                continue
            candidate = RatioChoice(w1, w2, VarApp("x"), VarApp("y"))
            template = parse_term(
                "pch[p](pch[p](h, x), pch[p](y, h))",
                parse_context("params: p ; vars: h:0, x:0, y:0"))
            rounded = substitute(template, {"h": ((), candidate)})
            assert not equal(ctx, candidate, rounded).equal, (w1, w2)
            others += 1
    assert others == 12
    report(2, 5.0, started,
           f"fair coin is a fixed point; {others} other primitive weightings are not")


def test_criterion_3_diagonal_vs_independent_with_witness():
    """The diagonal/independent binder pair is inequivalent, and the
    distinguishing substitution separates the weights as (1,2) vs (1,3)."""
    started = time.time()
    ctx = parse_context("params: - ; vars: x:2")
    lhs = parse_term("nu[1,1]p.x(p,p)", ctx)
    rhs = parse_term("nu[1,1]p.nu[1,1]q.x(p,q)", ctx)
    verdict = equal(ctx, lhs, rhs)
    assert not verdict.equal and verdict.witness is not None

    witness_ctx = parse_context("params: p, q ; vars: y:0, z:0")
    witness = parse_term("pch[p](pch[q](y,z), z)", witness_ctx)
    binding = {"x": (("p", "q"), witness)}
    nf_l, nf_r = join_normalize(YZ, substitute(lhs, binding), substitute(rhs, binding))
    assert [c.var for c in nf_l.chains] == ["y", "z"]
    assert nf_l.weights[()] == (1, 2)
    assert nf_r.weights[()] == (1, 3)
    report(3, 1.0, started, "not equal; witness substitution yields (1,2) vs (1,3) over (y,z)")


def test_criterion_4_axiom_soundness_sweep():
    """200 random instantiations per scheme agree exactly under the
    evaluator, on the full monomial grid up to the level-based degree."""
    started = time.time()
    failures = []
    per_scheme = 200
    for axiom in AXIOM_NAMES:
        rng = random.Random(0xBB0 + AXIOM_NAMES.index(axiom))
        for trial in range(per_scheme):
            lhs = test_axioms.random_instance(rng, axiom, size=10, wmax=5)
            rhs = apply_axiom(lhs, test_axioms.rs(axiom))
            if not functional_eq(test_axioms.SCHEME_CTX, lhs, rhs):
                failures.append((axiom, trial))
    assert not failures, failures
    report(4, 60.0, started,
           f"{per_scheme * len(AXIOM_NAMES)} scheme instances interpret-equal, 0 failures")


def test_criterion_5_normalizer_semantic_preservation():
    """500 random terms: the reified normal form denotes the same map and
    normalization is idempotent.  All 500 run the exact randomized-argument
    comparison; the first 50 additionally run the full monomial sweep."""
    started = time.time()
    ctx = parse_context("params: p1, p2, p3 ; vars: x:2, y:1, z:0")
    rng = random.Random(0xACCE5)
    failures = []
    for trial in range(500):
        t = gen_term(rng, ctx, 25, weight_max=4)
        nf = normalize(ctx, t)
        reified = reify(nf)
        if validate_normal_form(nf):
            failures.append(("invariants", trial))
        if not functional_eq_sampled(ctx, t, reified, rng):
            failures.append(("semantics", trial))
        if trial < 50 and not functional_eq(ctx, t, reified):
            failures.append(("semantics-full-sweep", trial))
        if normalize(ctx, reified) != nf:
            failures.append(("idempotence", trial))
    assert not failures, failures[:5]
    report(5, 120.0, started, "500 terms preserved exactly and idempotent, 0 failures")


def test_criterion_6_decision_coherence():
    """Rewriting never changes the verdict; independent pairs agree with
    the exhaustive monomial-basis oracle in both directions."""
    started = time.time()
    ctx = parse_context("params: p, q ; vars: x:2, y:0")
    rng = random.Random(0xDEC1DE)
    for trial in range(300):
        t = gen_term(rng, ctx, 12, weight_max=3)
        u = rewrite_chain(rng, ctx, t, rng.randint(1, 10))
        assert equal(ctx, t, u).equal, trial
    agreements = {True: 0, False: 0}
    for trial in range(300):
        t = gen_term(rng, ctx, 11, weight_max=3)
        u = gen_term(rng, ctx, 11, weight_max=3)
        decided = equal(ctx, t, u).equal
        oracled = functional_eq(ctx, t, u)
        assert decided == oracled, trial
        agreements[decided] += 1
    report(6, 120.0, started,
           f"300 rewrite pairs equal; 300 independent pairs agree with the oracle "
           f"({agreements[True]} equal / {agreements[False]} unequal)")


def test_criterion_7_bernstein_table_round_trip():
    """Random nonnegative unit-sum coefficient tables synthesize to terms
    whose interpretation and normal form reproduce the tables exactly."""
    started = time.time()
    rng = random.Random(0x57011E)
    failures = []
    for trial in range(100):
        ell = rng.randint(0, 2)
        k = rng.randint(0, 3)
        nvars = rng.randint(1, 3)
        params = tuple(f"p{i + 1}" for i in range(ell))
        names = tuple("abc"[:nvars])
        ctx = parse_context(
            f"params: {', '.join(params) if params else '-'} ; "
            f"vars: {', '.join(f'{v}:0' for v in names)}")
        coeffs = {}
        for index in itertools.product(range(k + 1), repeat=ell):
            raw = [F(rng.randint(0, 6)) for _ in names]
            while sum(raw) == 0:
                raw = [F(rng.randint(0, 6)) for _ in names]
            total = sum(raw)
            coeffs[index] = [c / total for c in raw]
        t = term_from_bernstein(ctx, k, coeffs)

        for pos, name in enumerate(names):
            got = interpret(ctx, t, indicator_args(ctx, name))
            want = bernstein_expand({i: vec[pos] for i, vec in coeffs.items()},
                                    k, params)
            if got != want:
                failures.append(("interpret", trial, name))

        nf = normalize(ctx, t, k=k, n=2)
        for index, vec in coeffs.items():
            expected = {name: vec[pos] for pos, name in enumerate(names) if vec[pos]}
            got = {c.var: w for c, w in nf.leaf_fractions(index).items()}
            if got != expected:
                failures.append(("normalform", trial, index))
    assert not failures, failures[:5]
    report(7, 30.0, started, "100 coefficient tables round-tripped exactly, 0 failures")


def test_criterion_8_chain_independence():
    """The ten square-subspace chains are independent at distinct points
    and dependent when the two parameters coincide."""
    started = time.time()
    ctx, chains = square_subspace_chains()
    assert len(chains) == 10
    assert chain_rank_check(ctx, chains, {"p1": F(1, 2), "p2": F(1, 3)}, degree=4)
    assert not chain_rank_check(ctx, chains, {"p1": F(1, 2), "p2": F(1, 2)},
                                degree=4, require_distinct=False)
    report(8, 10.0, started, "rank 10 at distinct points, deficient at coincident points")


def test_criterion_9_operational_agreement():
    """Both samplers match the exact distributions of 22 ground terms at
    100000 trials and significance 0.001; the distinguishable pair fails
    cross-comparison in both directions."""
    started = time.time()
    trials = 100000
    ctx3 = parse_context("params: - ; vars: x:0, y:0, z:0")
    rng = random.Random(0x0B5)
    terms = [(ctx3, gen_ground_term(rng, ctx3, 12)) for _ in range(20)]
    terms.append((YZ, parse_term(APPENDIX_ONE, YZ)))
    terms.append((YZ, parse_term(APPENDIX_TWO, YZ)))
    for pos, (ctx, t) in enumerate(terms):
        for impl in ("polya", "betabern"):
            outcome = compare(ctx, t, trials=trials, seed=12345 + pos, impl=impl)
            assert outcome.passed, (pos, impl, str(outcome))

    one = parse_term(APPENDIX_ONE, YZ)
    two = parse_term(APPENDIX_TWO, YZ)
    dist_one, dist_two = exact_distribution(YZ, one), exact_distribution(YZ, two)
    for impl in ("polya", "betabern"):
        counts_one = estimate(YZ, one, trials=trials, seed=777, impl=impl)
        counts_two = estimate(YZ, two, trials=trials, seed=778, impl=impl)
        assert not compare_counts(counts_one, dist_two, trials, impl, 777).passed
        assert not compare_counts(counts_two, dist_one, trials, impl, 778).passed
    report(9, 120.0, started,
           "22 ground terms pass both samplers at 100k trials; "
           "cross-comparison fails both ways")
