import itertools

import pytest
from hypothesis import given, settings, strategies as st

from teamltl.formula import Fragment, Next, parse_team_formula, size
from teamltl.hyper import eval_hyper, hyper_size, render_hyper
from teamltl.propgen import gen_formula, gen_team
from teamltl.team_eval import eval_team
from teamltl.traces import lasso
from teamltl.translate import (
    FragmentMismatch, cover_count, full_translate, kcoherent_translate, leftflat_translate,
)

P = parse_team_formula

# measured maxima of |translation| / |input| over generated formulas are 14 and 24.3,
# both reached on single literals; large formulas stay near 5 and 15
LEFTFLAT_FACTOR = 16
FULL_FACTOR = 26


def test_kcoherent_literal():
    assert render_hyper(kcoherent_translate(P("p"), 2)) == "forall pi1. forall pi2. (p@pi1 & p@pi2)"


def test_kcoherent_split_single_variable():
    phi = kcoherent_translate(P("p | q"), 1)
    assert render_hyper(phi) == "forall pi1. (q@pi1 | (p@pi1 | (p@pi1 & q@pi1)))"


def test_kcoherent_boolean_negation():
    assert render_hyper(kcoherent_translate(P("~p"), 1)) == "forall pi1. !p@pi1"


def test_kcoherent_rejects_bad_input():
    with pytest.raises(ValueError):
        kcoherent_translate(P("p"), 0)
    with pytest.raises(FragmentMismatch):
        kcoherent_translate(P("p orl q"), 1)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_cover_count_per_split(k):
    assert cover_count(kcoherent_translate(P("p | q"), k).body) == 3 ** k
    nested = kcoherent_translate(P("X (F p | G q)"), k).body
    assert isinstance(nested, Next) and cover_count(nested.child) == 3 ** k


def test_leftflat_flat_eventually():
    assert render_hyper(leftflat_translate(P("A1 F p"))) == (
        "uexists[one] r. forall pi. ((r@pi & X G !r@pi) & G (!r@pi | F p@pi))")


def test_leftflat_literal():
    assert "G (!r@pi | q@pi)" in render_hyper(leftflat_translate(P("q")))


def test_leftflat_until_with_flat_left():
    team = [lasso([["a"], ["b"]], [[]])]
    f = P("(A1 a) U b")
    assert eval_team(team, 0, f)
    assert eval_hyper(team, None, 0, leftflat_translate(f))
    bad = [lasso([[], ["b"]], [[]])]
    assert eval_team(bad, 0, f) == eval_hyper(bad, None, 0, leftflat_translate(f)) is False


def test_leftflat_rejects_non_left_flat():
    with pytest.raises(FragmentMismatch):
        leftflat_translate(P("(F p) U q"))


def test_full_nonempty():
    text = render_hyper(full_translate(P("NE")))
    assert text.startswith("existsp qS. uexists[one] q. uexists[one] r.")
    assert "exists pi__1" in text and "F (q@pi__1 & qS@pi__1)" in text


def test_full_literal():
    assert "(G (!q@pi | !qS@pi) | F (r@pi & p@pi))" in render_hyper(full_translate(P("p")))


def test_full_split_on_two_traces():
    team = [lasso([["p"]], [[]]), lasso([["q"]], [[]])]
    f = P("p | q")
    assert eval_team(team, 0, f) and eval_hyper(team, None, 0, full_translate(f))
    g = P("p | X q")
    assert eval_team(team, 0, g) == eval_hyper(team, None, 0, full_translate(g)) is False


seeds = st.integers(0, 2**30)


@settings(max_examples=200, deadline=None)
@given(seeds, seeds, st.integers(1, 3), st.integers(0, 2))
def test_kcoherent_closed_form(fseed, tseed, k, i):
    # the universal closure holds iff every nonempty subteam of at most k traces satisfies f
    f = gen_formula(fseed, 3, Fragment.KCOHERENT)
    team = gen_team(tseed, max_traces=3).traces
    oracle = all(eval_team(sub, i, f) for n in range(1, k + 1) for sub in itertools.combinations(team, n))
    assert eval_hyper(team, None, i, kcoherent_translate(f, k)) == oracle


@settings(max_examples=100, deadline=None)
@given(seeds, seeds)
def test_leftflat_equivalence(fseed, tseed):
    f = gen_formula(fseed, 3, Fragment.LEFT_FLAT)
    team = gen_team(tseed, max_traces=3)
    assert eval_team(team.traces, 0, f) == eval_hyper(team.traces, None, 0, leftflat_translate(f))


@settings(max_examples=60, deadline=None)
@given(seeds, seeds)
def test_full_equivalence_on_nonempty_teams(fseed, tseed):
    f = gen_formula(fseed, 2, Fragment.GENERAL)
    team = gen_team(tseed, max_traces=2)
    if not team.traces:
        return
    assert eval_team(team.traces, 0, f) == eval_hyper(team.traces, None, 0, full_translate(f))


@pytest.mark.parametrize("depth", [1, 3, 6, 10])
def test_size_linear(depth):
    for seed in range(300):
        lf = gen_formula(seed, depth, Fragment.LEFT_FLAT)
        assert hyper_size(leftflat_translate(lf)) <= LEFTFLAT_FACTOR * size(lf)
        g = gen_formula(seed, depth, Fragment.GENERAL)
        assert hyper_size(full_translate(g)) <= FULL_FACTOR * size(g)
