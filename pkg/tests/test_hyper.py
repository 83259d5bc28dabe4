import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from teamltl.formula import Formula, Prop, NegProp, Fragment, rebuild, children
from teamltl.hyper import (
    BoundOverflow, HyperAssignment, HyperFormula, INegProp, IProp, QKind, QuantBounds, Quantifier,
    UnboundVariable, eval_hyper, parse_hyper, render_hyper,
)
from teamltl.propgen import gen_formula, gen_team
from teamltl.team_eval import eval_ltl
from teamltl.traces import lasso, letter_at, shape

TWO = [lasso([["p"]], [[]]), lasso([[], ["p"]], [[]])]


def test_forall_globally():
    assert eval_hyper([lasso([], [["p"]])], None, 0, parse_hyper("forall pi. G p@pi"))


def test_uniform_witness_marks_the_drop():
    phi = parse_hyper("uexists p. forall pi. F p & G (p -> G !a@pi)")
    team = [lasso([["a"], ["a"]], [[]]), lasso([[], ["a"]], [[]]), lasso([["a"]], [[]])]
    assert eval_hyper(team, None, 0, phi)
    # witness: p at step 2 only
    witness = HyperAssignment(props={"p": lasso([[], [], ["p"]], [[]])})
    assert eval_hyper(team, witness, 0, HyperFormula(phi.prefix[1:], phi.body))
    assert not eval_hyper(team + [lasso([], [["a"]])], None, 0, phi)


def test_pairwise_equivalence_fails():
    assert not eval_hyper(TWO, None, 0, parse_hyper("forall pi1. forall pi2. G (p@pi1 <-> p@pi2)"))


def test_empty_team():
    assert eval_hyper([], None, 0, parse_hyper("forall pi. p@pi"))
    assert not eval_hyper([], None, 0, parse_hyper("exists pi. p@pi"))


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        eval_hyper(TWO, None, 0, parse_hyper("forall pi. p@rho"))


def test_free_trace_variable_from_assignment():
    phi = parse_hyper("X p@rho")
    assert eval_hyper(TWO, HyperAssignment({"rho": TWO[1]}), 0, phi)
    assert not eval_hyper(TWO, HyperAssignment({"rho": TWO[0]}), 0, phi)


def test_bound_overflow_is_not_a_verdict():
    phi = parse_hyper("uexists r. forallp s. forall pi. G (r -> s@pi)")
    with pytest.raises(BoundOverflow):
        eval_hyper(TWO, None, 0, phi, QuantBounds(cap=2))


def test_exactly_one_shape():
    # a one-shaped variable is true somewhere, so it cannot be globally false
    assert not eval_hyper(TWO, None, 0, parse_hyper("uexists[one] r. G !r"))
    assert eval_hyper(TWO, None, 0, parse_hyper("uexists[opt] r. G !r"))


def test_nonuniform_relabels_each_trace():
    # each trace marks its own p-position, which no single uniform sequence can do
    body = "forall pi. G (s@pi <-> p@pi) & F s@pi"
    assert eval_hyper(TWO, None, 0, parse_hyper("existsp s. " + body))
    assert not eval_hyper(TWO, None, 0, parse_hyper("uexists s. forall pi. G (s <-> p@pi) & F s"))


# ---------------------------------------------------------------- brute-force trace quantifier oracle


def _index_props(f: Formula, rng: random.Random, variables) -> Formula:
    if isinstance(f, Prop):
        return IProp(f.name, rng.choice(variables))
    if isinstance(f, NegProp):
        return INegProp(f.name, rng.choice(variables))
    return rebuild(f, [_index_props(g, rng, variables) for g in children(f)])


def _flatten_props(f: Formula) -> Formula:
    if isinstance(f, IProp):
        return Prop(f"{f.name}_{f.trace}")
    if isinstance(f, INegProp):
        return NegProp(f"{f.name}_{f.trace}")
    return rebuild(f, [_flatten_props(g) for g in children(f)])


def random_trace_formula(seed: int) -> HyperFormula:
    rng = random.Random(seed)
    n = rng.randint(1, 3)
    variables = [f"pi{j}" for j in range(n)]
    body = _index_props(gen_formula(seed, 3, Fragment.PLAIN), rng, variables)
    prefix = tuple(Quantifier(rng.choice((QKind.EXISTS, QKind.FORALL)), v) for v in variables)
    return HyperFormula(prefix, body)


def brute_force(team, i, phi: HyperFormula) -> bool:
    team = list(team)
    stem, period = shape(team)
    body = _flatten_props(phi.body)

    def zipped(assign: dict):
        word = [frozenset(f"{a}_{v}" for v, t in assign.items() for a in letter_at(t, j))
                for j in range(stem + period)]
        return lasso(word[:stem], word[stem:])

    def go(k: int, assign: dict) -> bool:
        if k == len(phi.prefix):
            return eval_ltl(zipped(assign), i, body)
        q = phi.prefix[k]
        results = (go(k + 1, {**assign, q.var: t}) for t in team)
        return any(results) if q.kind is QKind.EXISTS else all(results)

    return go(0, {})


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2**30), st.integers(0, 2**30), st.integers(0, 3))
def test_trace_quantifiers_match_brute_force(fseed, tseed, i):
    team = gen_team(tseed, max_traces=3)
    phi = random_trace_formula(fseed)
    assert eval_hyper(team.traces, None, i, phi) == brute_force(team.traces, i, phi)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**30))
def test_render_parse_round_trip(seed):
    phi = random_trace_formula(seed)
    assert parse_hyper(render_hyper(phi)) == phi


# ---------------------------------------------------------------- bound monotonicity


def random_uniform_formula(seed: int, kind: QKind) -> HyperFormula:
    rng = random.Random(seed)
    f = gen_formula(seed, 3, Fragment.PLAIN, ap_count=2)
    # q becomes the quantified uniform proposition, p is read on the trace

    def index(g):
        if isinstance(g, (Prop, NegProp)):
            cls = IProp if isinstance(g, Prop) else INegProp
            return cls("q") if g.name == "q" else cls(g.name, "pi")
        return rebuild(g, [index(h) for h in children(g)])

    trace_kind = rng.choice((QKind.EXISTS, QKind.FORALL))
    return HyperFormula((Quantifier(kind, "q"), Quantifier(trace_kind, "pi")), index(f))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**30), st.integers(0, 2**30), st.sampled_from([QKind.UEXISTS, QKind.UFORALL]))
def test_bound_monotonicity(fseed, tseed, kind):
    team = gen_team(tseed, max_traces=2, stem_max=2, loop_max=2, ap_count=1)
    phi = random_uniform_formula(fseed, kind)
    _, period = shape(team.traces)
    small = eval_hyper(team.traces, None, 0, phi, QuantBounds(stem_max=1, loop_lcm=period))
    large = eval_hyper(team.traces, None, 0, phi, QuantBounds(stem_max=3, loop_lcm=math.lcm(period, 2)))
    if kind is QKind.UEXISTS:
        assert not small or large
    else:
        assert small or not large
