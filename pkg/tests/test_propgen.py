import pytest
from hypothesis import given, settings, strategies as st

from teamltl.formula import (
    BoolNeg, FlatAll, Fragment, Prop, Until, WeakUntil, classify_fragment, is_downward_closed,
    is_syntactically_flat, size, subformulas, NegProp, Or, Top,
)
from teamltl.propgen import (
    CLASSICAL, DOWNWARD_CLOSED, FRAGMENTS, SUITES, WITH_ATOMS, Case, MutantEvaluator, gen_formula,
    gen_kripke, gen_team, run_suite, shrink,
)
from teamltl.team_eval import TeamEvaluator
from teamltl.traces import lasso

seeds = st.integers(0, 2**30)


def test_team_determinism():
    assert gen_team(7) == gen_team(7)
    assert gen_formula(7, 4, Fragment.GENERAL) == gen_formula(7, 4, Fragment.GENERAL)
    assert gen_kripke(7) == gen_kripke(7)


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_team_bounds(seed):
    assert len(gen_team(seed, max_traces=1)) <= 1
    team = gen_team(seed, 4, 3, 2, 2)
    for t in team.traces:
        assert len(t.stem) <= 3 and len(t.loop) <= 2
        assert all(a <= {"p", "q"} for a in t.stem + t.loop)


def test_depth_zero_gives_literal():
    for seed in range(50):
        assert isinstance(gen_formula(seed, 0, Fragment.GENERAL), (Prop, NegProp))


def test_negation_only_when_allowed():
    with_neg = [gen_formula(s, 4, Fragment.KCOHERENT, allow_neg=True) for s in range(200)]
    assert any(isinstance(g, BoolNeg) for f in with_neg for g in subformulas(f))
    without = [gen_formula(s, 4, Fragment.KCOHERENT) for s in range(200)]
    assert not any(isinstance(g, BoolNeg) for f in without for g in subformulas(f))


def test_unknown_fragment_rejected():
    with pytest.raises(ValueError):
        gen_formula(0, 2, "Nonsense")


@settings(max_examples=300, deadline=None)
@given(seeds, st.sampled_from([f for f in Fragment]))
def test_formulas_classify_into_their_fragment(seed, fragment):
    assert fragment in classify_fragment(gen_formula(seed, 4, fragment))


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_special_generators(seed):
    assert is_downward_closed(gen_formula(seed, 4, DOWNWARD_CLOSED))
    classical = gen_formula(seed, 4, CLASSICAL)
    assert Fragment.GENERAL in classify_fragment(classical) or Fragment.KCOHERENT in classify_fragment(classical)
    lf = gen_formula(seed, 4, Fragment.LEFT_FLAT)
    for g in subformulas(lf):
        if isinstance(g, (Until, WeakUntil)):
            assert isinstance(g.left, FlatAll) or is_syntactically_flat(g.left)


def test_fragment_names():
    assert set(FRAGMENTS) >= {f.value for f in Fragment} | {DOWNWARD_CLOSED, CLASSICAL, WITH_ATOMS}


def test_mutation_is_detected():
    report = run_suite("kcoherent", 100, mutate=True)
    assert report.failed > 0 and report.counterexample is not None
    assert "formula" in report.counterexample


def test_clean_run_has_no_counterexample():
    report = run_suite("singleton", 50)
    assert report.ok and report.passed + report.skipped == 50
    assert report.to_json()["counterexample"] is None


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope", 1)


def test_shrinking_preserves_failure():
    t1, t2 = lasso([["p"]], [[]]), lasso([[], ["p"]], [[]])
    big = Case(Until(Top(), Prop("p")), (t1, t2, lasso([], [["q"]])), 2)

    def fails(c):
        # the mutant reads F p | F p as F p vv F p and misses the split
        f = Or(c.formula, c.formula)
        return TeamEvaluator(c.traces).holds(f, None, c.index) != MutantEvaluator(c.traces).holds(f, None, c.index)

    assert fails(Case(big.formula, (t1, t2), 0))
    small = shrink("full", Case(big.formula, (t1, t2, lasso([["q"]], [["q"], []])), 0), fails)
    assert fails(small)
    assert len(small.traces) <= 2 and size(small.formula) <= size(big.formula)


def test_every_suite_runs():
    for name in SUITES:
        report = run_suite(name, 3)
        assert report.trials == 3 and report.passed + report.failed + report.skipped == 3
        assert report.ok, report.counterexample
