"""Acceptance suite: one test per criterion, each printing a pass/fail line
in the terminal summary."""

import time

from teamltl.formula import Fragment, SubteamAll, parse_team_formula, size, subformulas
from teamltl.hyper import hyper_size
from teamltl.kripke import KripkeStructure, traces_enumerate
from teamltl.propgen import gen_formula, run_suite
from teamltl.reduction import (
    INITIAL, Run, build_formula_lossy, build_formula_nonlossy, build_kripke, build_sat_embedding,
    encode_computation, parse_machine,
)
from teamltl.team_eval import eval_team
from teamltl.traces import lasso
from teamltl.translate import cover_count, full_translate, kcoherent_translate, leftflat_translate

from test_translate import FULL_FACTOR, LEFTFLAT_FACTOR

P = parse_team_formula


def _suite(name: str, trials: int):
    report = run_suite(name, trials, seed=0)
    return report, f"{name}: {report.passed}/{trials} passed, {report.failed} failed, " \
                    f"{report.skipped} skipped, {report.seconds:.1f}s"


def _check(record_criterion, number, ok, detail):
    record_criterion(number, ok, detail)
    assert ok, detail


def test_criterion_1_semantic_properties(record_criterion):
    start = time.perf_counter()
    reports = [_suite(n, 1000) for n in ("downward-closure", "empty-team", "singleton", "flatness")]
    total = time.perf_counter() - start
    ok = all(r.ok and r.skipped == 0 for r, _ in reports) and total < 60
    _check(record_criterion, 1, ok, "; ".join(d for _, d in reports) + f"; total {total:.1f}s < 60s")


def test_criterion_2_kcoherent_translation(record_criterion):
    report, detail = _suite("kcoherent", 1000)
    _check(record_criterion, 2, report.ok and report.seconds < 120, detail + " (< 120s, k in 1..3)")


def test_criterion_3_leftflat_translation(record_criterion):
    report, detail = _suite("leftflat", 1000)
    _check(record_criterion, 3, report.ok and report.seconds < 120, detail + " (< 120s)")


def test_criterion_4_full_translation(record_criterion):
    report, detail = _suite("full", 300)
    escalations = sum(n.startswith("bound escalation") for n in report.notes)
    for note in report.notes:
        print(note)
    ok = report.ok and report.skipped == 0 and report.seconds < 600
    _check(record_criterion, 4, ok, detail + f", {escalations} escalations (< 600s)")


def test_criterion_5_atom_elimination(record_criterion):
    report, detail = _suite("atoms", 500)
    _check(record_criterion, 5, report.ok and report.seconds < 60, detail + " (< 60s)")


def test_criterion_6_flatness_separation(record_criterion):
    t_plus = [lasso([["p"]], [[]]), lasso([[], ["p"]], [[]])]
    t = t_plus + [lasso([], [[]])]
    got = (eval_team(t_plus, 0, P("A1 F p")), eval_team(t, 0, P("A1 F p")), eval_team(t_plus, 0, P("F p")))
    _check(record_criterion, 6, got == (True, False, False),
           f"A1 F p on T+ {got[0]}, A1 F p on T {got[1]}, F p on T+ {got[2]}")


def test_criterion_7_forall_k_pipeline(record_criterion):
    report, detail = _suite("forall-k", 200)
    _check(record_criterion, 7, report.ok and report.skipped == 0 and report.seconds < 300,
           detail + " (< 300s, counterexamples re-verified)")


def test_criterion_8_reduction_smoke(record_criterion):
    ifz = parse_machine("0: IFZ l ? 0 : 0")
    team = encode_computation(ifz, Run((), (INITIAL,)), 0)
    a = eval_team(team.traces, 0, build_formula_lossy(ifz, 0))

    machines = [ifz, parse_machine("0: INC l -> {1,2}\n1: DEC m -> {0,2}\n2: IFZ l ? 0 : 1")]
    b = all(len(build_kripke(m).labels) == 16 * len(m.instructions) for m in machines)

    nonlossy = build_formula_nonlossy(machines[1], 0)
    c = sum(isinstance(g, SubteamAll) for g in subformulas(nonlossy)) == 1

    K2, theta = build_sat_embedding(KripkeStructure((["a"], []), ((0, 1), (0, 1))))
    full = sorted(traces_enumerate(K2, 1, 2), key=str)
    d = eval_team(full, 0, theta) and not eval_team(full[:-1], 0, theta)

    _check(record_criterion, 8, a and b and c and d,
           f"(a) IfZero team {a}, (b) 16n states {b}, (c) one A node {c}, (d) sat embedding {d}")


def test_criterion_9_sizes_and_covers(record_criterion):
    worst_lf = worst_full = 0.0
    for depth in (1, 2, 3, 5, 8):
        for seed in range(200):
            lf = gen_formula(seed, depth, Fragment.LEFT_FLAT)
            worst_lf = max(worst_lf, hyper_size(leftflat_translate(lf)) / size(lf))
            g = gen_formula(seed, depth, Fragment.GENERAL)
            worst_full = max(worst_full, hyper_size(full_translate(g)) / size(g))
    covers = all(cover_count(kcoherent_translate(P("p | q"), k).body) == 3 ** k for k in (1, 2, 3))
    ok = worst_lf <= LEFTFLAT_FACTOR and worst_full <= FULL_FACTOR and covers
    _check(record_criterion, 9, ok,
           f"leftflat ratio {worst_lf:.2f} <= {LEFTFLAT_FACTOR}, full ratio {worst_full:.2f} <= {FULL_FACTOR}, "
           f"covers 3^k for k=1..3 {covers}")
