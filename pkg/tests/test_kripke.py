import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from teamltl.formula import (
    BoolOr, Fragment, Inc, parse_ltl, parse_team_formula, render,
)
from teamltl.hyper import parse_hyper
from teamltl.kripke import (
    ExactFail, Holds, KripkeError, KripkeStructure, check_exists_forall, check_forall_k,
    forall_k_counterexample, has_trace, kripke_from_json, ltl_to_buchi, mc_teamltl, one_coherence_reduction,
    traces_enumerate, verify_counterexample,
)
from teamltl.propgen import forall_k_oracle, gen_formula, gen_kripke, gen_trace
from teamltl.team_eval import eval_ltl, eval_team
from teamltl.traces import canonicalize, lasso
from teamltl.translate import leftflat_translate

P = parse_team_formula

K_P = KripkeStructure((["p"],), ((0,),))
K_EMPTY = KripkeStructure(([],), ((0,),))
# 0 branches to a p-loop and an empty loop
K_BRANCH = KripkeStructure(([], ["p"], []), ((1, 2), (1,), (2,)))


def test_kripke_json_round_trip():
    data = {"ap": ["a"], "states": [{"id": 0, "label": ["a"]}, {"id": 1, "label": []}],
            "init": 0, "edges": [[0, 1], [1, 1]]}
    K = kripke_from_json(json.dumps(data))
    assert K.succ == ((1,), (1,)) and kripke_from_json(K.to_json()) == K


def test_state_without_successor_rejected():
    with pytest.raises(KripkeError):
        kripke_from_json({"ap": [], "states": [{"id": 0, "label": []}], "init": 0, "edges": []})
    with pytest.raises(KripkeError):
        kripke_from_json({"ap": [], "states": [{"id": 0, "label": ["z"]}], "init": 0, "edges": [[0, 0]]})


def test_traces_enumerate_examples():
    assert traces_enumerate(K_P, 1, 1) == {lasso([], [["p"]])}
    cycle = KripkeStructure((["a"], ["b"]), ((1,), (0,)))
    assert traces_enumerate(cycle, 1, 2) == {lasso([], [["a"], ["b"]])}
    assert traces_enumerate(K_BRANCH, 1, 1) == {lasso([], [[]]), lasso([[]], [["p"]])}


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**30), st.integers(0, 2**30))
def test_has_trace_matches_enumeration(kseed, tseed):
    K = gen_kripke(kseed, max_states=3)
    t = canonicalize(gen_trace(random.Random(tseed), 2, 2, ("p", "q")))
    assert has_trace(K, t) == (t in traces_enumerate(K, 4, 4))
    for u in traces_enumerate(K, 2, 2):
        assert has_trace(K, u)


def _keys(word):
    return [frozenset((p, None) for p in a) for a in word]


def test_buchi_examples():
    g = ltl_to_buchi(parse_ltl("G p"))
    assert g.size == 2 and len(g.accepting) == 1
    f = ltl_to_buchi(parse_ltl("F p"))
    assert f.accepts_lasso(_keys([[], []]), _keys([["p"]]))
    assert not f.accepts_lasso([], _keys([[]]))
    u = ltl_to_buchi(parse_ltl("p U q"))
    assert u.accepts_lasso(_keys([["p"], ["p"]]), _keys([["q"]]))
    assert not u.accepts_lasso([], _keys([["p"]]))


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2**30), st.integers(0, 2**30))
def test_buchi_agrees_with_evaluator(fseed, tseed):
    psi = gen_formula(fseed, 4, Fragment.PLAIN)
    t = gen_trace(random.Random(tseed), 3, 3, ("p", "q"))
    aut = ltl_to_buchi(psi)
    assert aut.accepts_lasso(_keys(t.stem), _keys(t.loop)) == eval_ltl(t, 0, psi)


# ---------------------------------------------------------------- forall-k pipeline


def test_forall_k_examples():
    assert check_forall_k(K_P, P("A1 G p"), 1)
    assert not check_forall_k(K_P, P("~p"), 1)
    assert forall_k_counterexample(K_P, P("~p"), 1) == (lasso([], [["p"]]),)


def test_constancy_on_branching_structure():
    # both traces start in the same state, so p is constant at step 0
    assert check_forall_k(K_BRANCH, P("dep(;p)"), 2)
    cex = forall_k_counterexample(K_BRANCH, P("X dep(;p)"), 2)
    assert cex is not None and verify_counterexample(P("X dep(;p)"), 2, cex)
    assert not eval_team(cex, 0, P("X dep(;p)"))


def test_forall_k_rejects_other_fragments():
    with pytest.raises(ValueError):
        check_forall_k(K_P, P("p orl p"), 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**30), st.integers(0, 2**30), st.integers(1, 2))
def test_forall_k_agrees_with_enumeration(kseed, fseed, k):
    K = gen_kripke(kseed, max_states=3)
    phi = gen_formula(fseed, 2, Fragment.KCOHERENT)
    cex = forall_k_counterexample(K, phi, k)
    if cex is None:
        assert forall_k_oracle(K, phi, k, 2, 2)
    else:
        assert verify_counterexample(phi, k, cex)
        assert all(has_trace(K, t) for t in cex) and not eval_team(cex, 0, phi)


# ---------------------------------------------------------------- exists-forall pipeline


def test_exists_forall_examples():
    assert check_exists_forall(K_P, leftflat_translate(P("A1 F p"))) == Holds({"r": "0"})
    assert check_exists_forall(K_EMPTY, leftflat_translate(P("A1 F p"))) == ExactFail()
    one = parse_hyper("uexists[one] r. forall pi. G (r -> p@pi)")
    assert check_exists_forall(K_BRANCH, one) == ExactFail()


def test_exists_forall_trace_witness():
    out = check_exists_forall(K_BRANCH, parse_hyper("exists rho. forall pi. G (p@rho -> p@pi)"))
    assert out == Holds({"rho": "({})^w"})


def test_exists_forall_needs_final_universal():
    with pytest.raises(ValueError):
        check_exists_forall(K_P, parse_hyper("exists pi. p@pi"))


# ---------------------------------------------------------------- dispatch


def test_mc_modes():
    assert mc_teamltl(K_P, P("A1 F p"), "leftflat").status == "holds"
    assert mc_teamltl(K_BRANCH, P("A1 F p"), "leftflat").status == "refuted"
    assert mc_teamltl(K_BRANCH, P("A1 F p"), "kcoherent").detail["counterexample"] == ["({})^w"]
    assert mc_teamltl(K_P, P("F p"), "bounded").status == "holds-on-approx"


def test_bounded_refutation_only_for_downward_closed():
    down = mc_teamltl(K_BRANCH, P("F p"), "bounded")
    assert down.status == "refuted" and down.detail["traces"] == 2
    assert mc_teamltl(K_P, P("~ G p"), "bounded").status == "unknown"
    with pytest.raises(ValueError):
        mc_teamltl(K_P, P("p"), "exhaustive")


def layered_kripke(seed: int) -> KripkeStructure:
    """Edges only go forward except for a final self-loop or 2-cycle, so the
    structure has finitely many traces, all with stem < n and loop <= 2."""
    rng = random.Random(seed)
    n = rng.randint(2, 4)
    labels = [[a for a in ("p", "q") if rng.random() < 0.5] for _ in range(n)]
    succ = [tuple(sorted(rng.sample(range(w + 1, n), rng.randint(1, min(2, n - w - 1)))))
            for w in range(n - 1)]
    last = (n - 1,)
    if n >= 3 and rng.random() < 0.3:
        succ[n - 2], last = (n - 1,), (n - 2,)
    return KripkeStructure(tuple(labels), tuple(succ) + (last,))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**30), st.integers(0, 2**30))
def test_leftflat_mc_agrees_with_enumeration(kseed, fseed):
    K = layered_kripke(kseed)
    phi = gen_formula(fseed, 2, Fragment.LEFT_FLAT)
    verdict = mc_teamltl(K, phi, "leftflat")
    assert verdict.status in ("holds", "refuted")
    traces = sorted(traces_enumerate(K, len(K.labels), 2), key=str)
    assert (verdict.status == "holds") == eval_team(traces, 0, phi)


# ---------------------------------------------------------------- 1-coherence reduction


def test_one_coherence_examples():
    assert render(one_coherence_reduction(P("inc(a;b)"))) == "((a & b) | (!a & !b))"
    assert one_coherence_reduction(P("a vv b")) == P("a | b")
    plain = P("p U X q")
    assert one_coherence_reduction(plain) == plain
    with pytest.raises(ValueError):
        one_coherence_reduction(P("~p"))


def _inclusion_formula(seed: int):
    rng = random.Random(seed)
    parts = [gen_formula(seed * 7 + j, 2, Fragment.PLAIN) for j in range(4)]
    inc = Inc((parts[0], parts[1]), (parts[2], parts[3]))
    return BoolOr(inc, parts[rng.randrange(4)]) if rng.random() < 0.5 else Inc((parts[0],), (parts[1],))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**20), st.integers(0, 2**30), st.integers(0, 2))
def test_one_coherence_singleton_equivalence(fseed, tseed, i):
    phi = _inclusion_formula(fseed)
    t = gen_trace(random.Random(tseed), 3, 2, ("p", "q"))
    assert eval_team([t], i, phi) == eval_ltl(t, i, one_coherence_reduction(phi))
