"""Seeded generators for teams, formulae and Kripke structures, and the
property suites built on them."""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .formula import (
    And, Bottom, BoolNeg, BoolOr, BoolRelationFamily, Dep, FlatAll, Formula, Fragment,
    GenAtom, Inc, LeftOr, Next, NonEmpty, NegProp, Or, Prop, SubteamAll, Top, Until,
    WeakUntil, children, classify_fragment, eliminate_generalized_atoms, is_downward_closed,
    rebuild, render, size, subformulas,
)
from .hyper import BoundOverflow, HyperAssignment, HyperFormula, QuantBounds, eval_hyper
from .kripke import (
    KripkeStructure, forall_k_counterexample, has_trace, traces_enumerate, verify_counterexample,
)
from .team_eval import TeamEvaluator, bits_of, eval_ltl, submasks
from .traces import LassoTrace, Team, canonicalize, lasso
from .translate import full_translate, kcoherent_body, kcoherent_translate, leftflat_translate, trace_vars

AP_NAMES = ("p", "q", "s", "t", "u", "v")

# Generator fragments beyond the classifier's: formulae that are downward
# closed, free of NE, ~ and left disjunction, or rich in atoms.
DOWNWARD_CLOSED = "DownwardClosed"
CLASSICAL = "Classical"
WITH_ATOMS = "WithAtoms"
FRAGMENTS = tuple(f.value for f in Fragment) + (DOWNWARD_CLOSED, CLASSICAL, WITH_ATOMS)

# Default grid.
MAX_TRACES, STEM_MAX, LOOP_MAX, AP_COUNT, DEPTH = 4, 3, 2, 2, 4


# ---------------------------------------------------------------- generators


def gen_letter(rng: random.Random, ap: tuple) -> list:
    return [p for p in ap if rng.random() < 0.5]


def gen_trace(rng: random.Random, stem_max: int, loop_max: int, ap: tuple) -> LassoTrace:
    stem = [gen_letter(rng, ap) for _ in range(rng.randint(0, stem_max))]
    loop = [gen_letter(rng, ap) for _ in range(rng.randint(1, loop_max))]
    return lasso(stem, loop)


def gen_team(seed: int, max_traces: int = MAX_TRACES, stem_max: int = STEM_MAX,
             loop_max: int = LOOP_MAX, ap_count: int = AP_COUNT) -> Team:
    rng = random.Random(seed)
    ap = AP_NAMES[:ap_count]
    n = rng.randint(0, max_traces)
    return Team(tuple(gen_trace(rng, stem_max, loop_max, ap) for _ in range(n)), 0, ap)


def _fragment_name(fragment) -> str:
    name = fragment.value if isinstance(fragment, Fragment) else str(fragment)
    if name not in FRAGMENTS:
        raise ValueError(f"unknown fragment {name!r}; expected one of {', '.join(FRAGMENTS)}")
    return name


class _FormulaGen:
    def __init__(self, rng: random.Random, ap: tuple, fragment: str, allow_neg: bool):
        self.rng, self.ap, self.fragment, self.allow_neg = rng, ap, fragment, allow_neg

    def literal(self) -> Formula:
        return self.rng.choice((Prop, NegProp))(self.rng.choice(self.ap))

    def ltl(self, depth: int) -> Formula:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.3:
            return self.literal() if rng.random() < 0.9 else rng.choice((Top(), Bottom()))
        op = rng.choice(("and", "or", "X", "U", "W"))
        if op == "X":
            return Next(self.ltl(depth - 1))
        kind = {"and": And, "or": Or, "U": Until, "W": WeakUntil}[op]
        return kind(self.ltl(depth - 1), self.ltl(depth - 1))

    def flat(self, depth: int) -> Formula:
        """Syntactically flat: literals, A1 and the connectives & | X."""
        rng = self.rng
        if depth <= 0 or rng.random() < 0.3:
            return self.literal()
        op = rng.choice(("and", "or", "X", "A1"))
        if op == "X":
            return Next(self.flat(depth - 1))
        if op == "A1":
            return FlatAll(self.team(depth - 1))
        return {"and": And, "or": Or}[op](self.flat(depth - 1), self.flat(depth - 1))

    def atom(self) -> Formula:
        rng = self.rng
        kind = rng.choice(("dep", "gen") if self.fragment == DOWNWARD_CLOSED else ("dep", "inc", "gen"))
        args = [self.ltl(1) for _ in range(rng.randint(1, 2))]
        if kind == "dep":
            return Dep(tuple(args[:-1]), args[-1])
        if kind == "inc":
            return Inc((args[0],), (self.ltl(1),))
        family = gen_family(rng, len(args), downward_closed=self.fragment == DOWNWARD_CLOSED)
        return GenAtom(family, tuple(args))

    def ops(self) -> tuple:
        common = ("and", "or", "X", "U", "W")
        return {
            Fragment.PLAIN.value: common,
            Fragment.KCOHERENT.value: common + ("vv", "A1", "A", "NE", "atom") + (("~",) if self.allow_neg else ()),
            Fragment.LEFT_FLAT.value: common + ("vv", "A1"),
            Fragment.GENERAL.value: common + ("vv", "A1", "NE"),
            DOWNWARD_CLOSED: common + ("vv", "A1", "A", "atom"),
            CLASSICAL: common + ("vv", "A1", "A", "dep", "inc"),
            WITH_ATOMS: common + ("vv", "atom", "atom", "atom"),
        }[self.fragment]

    def leaf(self) -> Formula:
        rng = self.rng
        if self.fragment == Fragment.GENERAL.value and rng.random() < 0.15:
            return NonEmpty()
        if self.fragment in (WITH_ATOMS, DOWNWARD_CLOSED, Fragment.KCOHERENT.value) and rng.random() < 0.2:
            return self.atom()
        return self.literal() if rng.random() < 0.85 else rng.choice((Top(), Bottom()))

    def team(self, depth: int) -> Formula:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.2:
            return self.leaf()
        op = rng.choice(self.ops())
        d = depth - 1
        if op in ("and", "or", "vv"):
            return {"and": And, "or": Or, "vv": BoolOr}[op](self.team(d), self.team(d))
        if op in ("U", "W"):
            left = self.flat(d) if self.fragment == Fragment.LEFT_FLAT.value else self.team(d)
            return (Until if op == "U" else WeakUntil)(left, self.team(d))
        if op == "X":
            return Next(self.team(d))
        if op == "A1":
            return FlatAll(self.team(d))
        if op == "A":
            return SubteamAll(self.team(d))
        if op == "~":
            return BoolNeg(self.team(d))
        if op == "NE":
            return And(NonEmpty(), self.team(d))
        if op == "dep":
            return Dep((self.ltl(1),), self.ltl(1))
        if op == "inc":
            return Inc((self.ltl(1),), (self.ltl(1),))
        return self.atom()


def gen_family(rng: random.Random, arity: int, downward_closed: bool = False) -> BoolRelationFamily:
    tuples = list(itertools.product((0, 1), repeat=arity))
    rels = {frozenset(t for t in tuples if rng.random() < 0.5) for _ in range(rng.randint(1, 3))}
    if downward_closed:
        rels = {frozenset(sub) for r in rels for n in range(len(r) + 1)
                for sub in itertools.combinations(sorted(r), n)}
    return BoolRelationFamily(arity, frozenset(rels))


def gen_formula(seed: int, depth: int = DEPTH, fragment=Fragment.PLAIN, ap_count: int = AP_COUNT,
                allow_neg: bool = False) -> Formula:
    """Random formula of the fragment with nesting depth at most depth; depth 0
    gives a literal."""
    rng = random.Random(seed)
    gen = _FormulaGen(rng, AP_NAMES[:ap_count], _fragment_name(fragment), allow_neg)
    if depth <= 0:
        return gen.literal()
    if gen.fragment == Fragment.PLAIN.value:
        return gen.ltl(depth)
    return gen.team(depth)


def gen_kripke(seed: int, max_states: int = 4, ap_count: int = AP_COUNT, max_branch: int = 2) -> KripkeStructure:
    rng = random.Random(seed)
    ap = AP_NAMES[:ap_count]
    n = rng.randint(1, max_states)
    labels = tuple(frozenset(gen_letter(rng, ap)) for _ in range(n))
    succ = tuple(tuple(sorted(rng.sample(range(n), rng.randint(1, min(max_branch, n))))) for _ in range(n))
    return KripkeStructure(labels, succ, 0, ap)


# ---------------------------------------------------------------- suites


class MutantEvaluator(TeamEvaluator):
    """Split disjunction treated as Boolean disjunction; used to check that
    the suites detect a broken clause."""

    def split(self, left, right, mask, i, nonempty_left):
        return self.holds(left, mask, i) or self.holds(right, mask, i)


@dataclass
class Case:
    formula: Formula
    traces: tuple
    index: int = 0
    k: int = 1
    kripke: KripkeStructure | None = None
    assignment: tuple = ()

    def describe(self) -> dict:
        out = {"formula": render(self.formula), "index": self.index,
               "team": [str(t) for t in self.traces]}
        if self.kripke is not None:
            out["kripke"] = self.kripke.to_json()
            out["k"] = self.k
        elif self.k != 1:
            out["k"] = self.k
        return out


@dataclass
class SuiteReport:
    name: str
    trials: int
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    seconds: float = 0.0
    counterexample: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def to_json(self) -> dict:
        return {"suite": self.name, "trials": self.trials, "passed": self.passed,
                "failed": self.failed, "skipped": self.skipped,
                "seconds": round(self.seconds, 3), "counterexample": self.counterexample,
                "notes": self.notes}


@dataclass(frozen=True)
class Suite:
    generate: Callable  # seed -> Case
    check: Callable  # (case, evaluator class, notes) -> True, False or None (skip)


def _team_case(seed: int, fragment, depth: int = DEPTH, max_traces: int = MAX_TRACES,
               max_index: int = 2, allow_neg: bool = False, nonempty: bool = False) -> Case:
    rng = random.Random(seed)
    team = gen_team(rng.randrange(1 << 30), max_traces)
    while nonempty and not team.traces:
        team = gen_team(rng.randrange(1 << 30), max_traces)
    f = gen_formula(rng.randrange(1 << 30), rng.randint(0, depth), fragment, allow_neg=allow_neg)
    return Case(f, team.traces, rng.randint(0, max_index))


def _check_downward(c: Case, ev_cls, notes) -> bool:
    ev = ev_cls(c.traces)
    if not ev.holds(c.formula, None, c.index):
        return True
    return all(ev.holds(c.formula, s, c.index) for s in submasks(ev.full))


def _check_empty(c: Case, ev_cls, notes) -> bool:
    return ev_cls(()).holds(c.formula, None, c.index)


def _singleton_case(seed: int) -> Case:
    rng = random.Random(seed)
    t = gen_trace(rng, STEM_MAX, LOOP_MAX, AP_NAMES[:AP_COUNT])
    return Case(gen_formula(rng.randrange(1 << 30), rng.randint(0, DEPTH)), (t,), rng.randint(0, 2))


def _check_singleton(c: Case, ev_cls, notes) -> bool:
    if not c.traces:
        return True
    return ev_cls(c.traces).holds(c.formula, None, c.index) == eval_ltl(c.traces[0], c.index, c.formula)


def _flatness_case(seed: int) -> Case:
    rng = random.Random(seed)
    c = _team_case(rng.randrange(1 << 30), Fragment.KCOHERENT, allow_neg=True)
    if rng.random() < 0.5:
        c.formula = FlatAll(c.formula)
    else:
        gen = _FormulaGen(rng, AP_NAMES[:AP_COUNT], Fragment.KCOHERENT.value, True)
        c.formula = gen.flat(DEPTH)
    return c


def _check_flatness(c: Case, ev_cls, notes) -> bool:
    ev = ev_cls(c.traces)
    whole = ev.holds(c.formula, None, c.index)
    return whole == all(ev.holds(c.formula, 1 << j, c.index) for j in bits_of(ev.full))


def _kcoherent_case(seed: int) -> Case:
    rng = random.Random(seed)
    c = _team_case(rng.randrange(1 << 30), Fragment.KCOHERENT, depth=3, allow_neg=True)
    c.k = rng.randint(1, 3)
    c.assignment = tuple(rng.randrange(MAX_TRACES) for _ in range(c.k))
    return c


def _check_kcoherent(c: Case, ev_cls, notes) -> bool:
    ev = ev_cls(c.traces)
    if c.traces:
        # body under an assignment whose image is the subteam S
        pis = trace_vars(c.k)
        image = [c.traces[j % len(c.traces)] for j in c.assignment]
        env = HyperAssignment(dict(zip(pis, image)))
        body = HyperFormula((), kcoherent_body(c.formula, pis))
        S = sum(1 << ev.traces.index(t) for t in {canonicalize(t) for t in image})
        if eval_hyper(c.traces, env, c.index, body) != ev.holds(c.formula, S, c.index):
            return False
    # closed form: every nonempty subteam of size <= k satisfies the formula
    small = all(ev.holds(c.formula, s, c.index) for s in submasks(ev.full)
                if 0 < bin(s).count("1") <= c.k)
    return eval_hyper(c.traces, None, c.index, kcoherent_translate(c.formula, c.k)) == small


def _check_leftflat(c: Case, ev_cls, notes) -> bool:
    return eval_hyper(c.traces, None, c.index, leftflat_translate(c.formula)) == \
        ev_cls(c.traces).holds(c.formula, None, c.index)


def _check_full(c: Case, ev_cls, notes) -> bool | None:
    phi = full_translate(c.formula)
    try:
        hyper = eval_hyper(c.traces, None, c.index, phi)
    except BoundOverflow:
        notes.append(f"bound escalation for {render(c.formula)}")
        try:
            hyper = eval_hyper(c.traces, None, c.index, phi, QuantBounds(cap=8 * QuantBounds().cap))
        except BoundOverflow:
            notes.append(f"skipped after escalation: {render(c.formula)}")
            return None
    return hyper == ev_cls(c.traces).holds(c.formula, None, c.index)


def _check_atoms(c: Case, ev_cls, notes) -> bool:
    ev = ev_cls(c.traces)
    return ev.holds(c.formula, None, c.index) == ev.holds(eliminate_generalized_atoms(c.formula), None, c.index)


def _forall_k_case(seed: int) -> Case:
    rng = random.Random(seed)
    K = gen_kripke(rng.randrange(1 << 30))
    f = gen_formula(rng.randrange(1 << 30), rng.randint(1, 3), Fragment.KCOHERENT)
    return Case(f, (), 0, rng.randint(1, 2), K)


def forall_k_oracle(K: KripkeStructure, phi: Formula, k: int, stem_max: int = 3, loop_max: int = 3) -> bool:
    """Every team of at most k traces of K up to the lasso bounds satisfies phi."""
    traces = sorted(traces_enumerate(K, stem_max, loop_max), key=LassoTrace.sort_key)
    for n in range(1, k + 1):
        for team in itertools.combinations(traces, n):
            if not TeamEvaluator(team).holds(phi, None, 0):
                return False
    return True


def _check_forall_k(c: Case, ev_cls, notes) -> bool:
    cex = forall_k_counterexample(c.kripke, c.formula, c.k)
    if cex is None:
        return forall_k_oracle(c.kripke, c.formula, c.k)
    if not verify_counterexample(c.formula, c.k, cex):
        return False
    # a counterexample is a team of at most k traces of K violating the formula
    return all(has_trace(c.kripke, t) for t in cex) and not ev_cls(cex).holds(c.formula, None, 0)


SUITES = {
    "downward-closure": Suite(lambda s: _team_case(s, DOWNWARD_CLOSED), _check_downward),
    "empty-team": Suite(lambda s: _team_case(s, CLASSICAL), _check_empty),
    "singleton": Suite(_singleton_case, _check_singleton),
    "flatness": Suite(_flatness_case, _check_flatness),
    "kcoherent": Suite(_kcoherent_case, _check_kcoherent),
    "leftflat": Suite(lambda s: _team_case(s, Fragment.LEFT_FLAT), _check_leftflat),
    "full": Suite(lambda s: _team_case(s, Fragment.GENERAL, depth=3, max_traces=3, nonempty=True), _check_full),
    "atoms": Suite(lambda s: _team_case(s, WITH_ATOMS, depth=3), _check_atoms),
    "forall-k": Suite(_forall_k_case, _check_forall_k),
}


# ---------------------------------------------------------------- shrinking


def _smaller_formulas(f: Formula):
    yield from children(f)
    if not isinstance(f, (Top, Bottom)):
        yield Top()
        yield Bottom()
    kids = children(f)
    for j, c in enumerate(kids):
        for c2 in _smaller_formulas(c):
            if size(c2) < size(c):
                yield rebuild(f, list(kids[:j]) + [c2] + list(kids[j + 1:]))


def _smaller_traces(t: LassoTrace):
    for j in range(len(t.stem)):
        yield lasso(t.stem[:j] + t.stem[j + 1:], t.loop)
    if len(t.loop) > 1:
        for j in range(len(t.loop)):
            yield lasso(t.stem, t.loop[:j] + t.loop[j + 1:])


def _candidates(c: Case):
    for j in range(len(c.traces)):
        yield Case(c.formula, c.traces[:j] + c.traces[j + 1:], c.index, c.k, c.kripke, c.assignment)
    for j, t in enumerate(c.traces):
        for t2 in _smaller_traces(t):
            yield Case(c.formula, c.traces[:j] + (t2,) + c.traces[j + 1:], c.index, c.k, c.kripke, c.assignment)
    if c.index > 0:
        yield Case(c.formula, c.traces, c.index - 1, c.k, c.kripke, c.assignment)
    for f2 in _smaller_formulas(c.formula):
        if size(f2) < size(c.formula):
            yield Case(f2, c.traces, c.index, c.k, c.kripke, c.assignment)


def _valid(suite_name: str, c: Case) -> bool:
    """Shrunk cases stay inside the suite's input class."""
    f = c.formula
    if suite_name == "downward-closure":
        return is_downward_closed(f)
    if suite_name == "empty-team":
        return not any(isinstance(g, (NonEmpty, BoolNeg, LeftOr, GenAtom)) for g in subformulas(f))
    if suite_name == "singleton":
        return len(c.traces) == 1 and Fragment.PLAIN in classify_fragment(f)
    if suite_name in ("kcoherent", "forall-k"):
        return Fragment.KCOHERENT in classify_fragment(f)
    if suite_name == "leftflat":
        return Fragment.LEFT_FLAT in classify_fragment(f)
    if suite_name == "full":
        return Fragment.GENERAL in classify_fragment(f)
    return True


def shrink(suite_name: str, case: Case, fails: Callable[[Case], bool], limit: int = 500) -> Case:
    """Greedy shrinking: take the first smaller candidate that still fails."""
    steps = 0
    improved = True
    while improved and steps < limit:
        improved = False
        for cand in _candidates(case):
            steps += 1
            if _valid(suite_name, cand) and fails(cand):
                case, improved = cand, True
                break
            if steps >= limit:
                break
    return case


def run_suite(name: str, trials: int = 1000, seed: int = 0, mutate: bool = False,
              minimize: bool = True) -> SuiteReport:
    """Run a registered suite; trial j uses seed + j. In mutation mode the
    evaluator has a broken split clause and the suite should report failures."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
    suite = SUITES[name]
    ev_cls = MutantEvaluator if mutate else TeamEvaluator
    report = SuiteReport(name, trials)
    t0 = time.perf_counter()
    for j in range(trials):
        case = suite.generate(seed + j)
        verdict = suite.check(case, ev_cls, report.notes)
        if verdict is None:
            report.skipped += 1
        elif verdict:
            report.passed += 1
        else:
            report.failed += 1
            if report.counterexample is None:
                if minimize:
                    case = shrink(name, case, lambda c: suite.check(c, ev_cls, []) is False)
                report.counterexample = {"seed": seed + j, **case.describe()}
    report.seconds = time.perf_counter() - t0
    return report
