"""Translations of TeamLTL fragments into HyperLTL / HyperQPTL(+)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .formula import (
    And, Bottom, BoolNeg, BoolOr, Dep, FlatAll, Formula, Fragment, GenAtom, Inc,
    NegProp, Next, NonEmpty, Or, Prop, SubteamAll, Top, Until, WeakUntil,
    F, G, _and, classify_fragment, conj, disj, eliminate_flat_nonclassical,
    negate, node, props, temporal_depth,
)
from .hyper import HyperFormula, INegProp, IProp, QKind, Quantifier


class FragmentMismatch(ValueError):
    pass


def index_formula(f: Formula, trace: str, memo: dict | None = None) -> Formula:
    """The LTL formula f with every proposition p read as p@trace."""
    memo = {} if memo is None else memo
    out = memo.get(f)
    if out is not None:
        return out
    if isinstance(f, Prop):
        out = IProp(f.name, trace)
    elif isinstance(f, NegProp):
        out = INegProp(f.name, trace)
    elif isinstance(f, (Top, Bottom)):
        out = f
    elif isinstance(f, Next):
        out = Next(index_formula(f.child, trace, memo))
    elif isinstance(f, (And, Or, Until, WeakUntil)):
        out = type(f)(index_formula(f.left, trace, memo), index_formula(f.right, trace, memo))
    else:
        raise ValueError(f"not an LTL formula: {type(f).__name__}")
    memo[f] = out
    return out


def _iff(a: Formula, b: Formula) -> Formula:
    return Or(And(a, b), And(negate(a), negate(b)))


# ---------------------------------------------------------------- k-coherent


def trace_vars(k: int) -> tuple:
    return tuple(f"pi{j}" for j in range(1, k + 1))


def kcoherent_body(phi: Formula, variables) -> Formula:
    """The quantifier-free translation of phi for the set of trace variables.

    Clauses for vv, A1, A, dep, inc and generalised atoms are additions of
    this package (checked against the team evaluator)."""
    memo: dict = {}
    index_memos: dict = {}

    def ix(f, pi):
        return index_formula(f, pi, index_memos.setdefault(pi, {}))

    def go(f, phis: tuple):
        key = (f, phis)
        out = memo.get(key)
        if out is not None:
            return out
        if isinstance(f, Prop):
            out = conj(IProp(f.name, pi) for pi in phis)
        elif isinstance(f, NegProp):
            out = conj(INegProp(f.name, pi) for pi in phis)
        elif isinstance(f, Top):
            out = Top()
        elif isinstance(f, Bottom):
            out = Bottom() if phis else Top()
        elif isinstance(f, NonEmpty):
            out = Top() if phis else Bottom()
        elif isinstance(f, And):
            out = _and(go(f.left, phis), go(f.right, phis))
        elif isinstance(f, Or):
            parts = []
            for choice in itertools.product("RLB", repeat=len(phis)):
                left = tuple(pi for pi, c in zip(phis, choice) if c != "R")
                right = tuple(pi for pi, c in zip(phis, choice) if c != "L")
                parts.append(_and(go(f.left, left), go(f.right, right)))
            out = disj(parts)
        elif isinstance(f, BoolOr):
            # invented clause: Boolean disjunction on the same team
            out = Or(go(f.left, phis), go(f.right, phis))
        elif isinstance(f, BoolNeg):
            out = negate(go(f.child, phis))
        elif isinstance(f, Next):
            out = Next(go(f.child, phis))
        elif isinstance(f, (Until, WeakUntil)):
            out = type(f)(go(f.left, phis), go(f.right, phis))
        elif isinstance(f, FlatAll):
            # invented clause: every singleton subteam
            out = conj(go(f.child, (pi,)) for pi in phis)
        elif isinstance(f, SubteamAll):
            # invented clause: every subteam is named by a subset of the variables
            out = conj(go(f.child, sub) for n in range(len(phis) + 1)
                       for sub in itertools.combinations(phis, n))
        elif isinstance(f, Dep):
            # invented clause: pairwise functional dependence
            parts = []
            for a, b in itertools.combinations(phis, 2):
                same_args = conj(_iff(ix(x, a), ix(x, b)) for x in f.args)
                parts.append(Or(negate(same_args), _iff(ix(f.target, a), ix(f.target, b))))
            out = conj(parts)
        elif isinstance(f, Inc):
            # invented clause: every left value tuple reappears as some right tuple
            out = conj(
                disj(conj(_iff(ix(x, a), ix(y, b)) for x, y in zip(f.left, f.right)) for b in phis)
                for a in phis
            )
        elif isinstance(f, GenAtom):
            # invented clause: the set of value tuples equals some relation of the family
            out = _gen_atom_body(f, phis, ix)
        else:
            raise FragmentMismatch(f"{type(f).__name__} is outside the k-coherent fragment")
        memo[key] = out
        return out

    return go(phi, tuple(variables))


def _gen_atom_body(f: GenAtom, phis: tuple, ix) -> Formula:
    if not phis:
        return Top() if frozenset() in f.family.relations else Bottom()

    def has_value(pi, tup):
        return conj(a if bit else negate(a) for a, bit in zip((ix(x, pi) for x in f.args), tup))

    options = []
    for rel in f.family.sorted_relations():
        tuples = sorted(rel)
        within = conj(disj(has_value(pi, t) for t in tuples) for pi in phis)
        covered = conj(disj(has_value(pi, t) for pi in phis) for t in tuples)
        options.append(_and(within, covered))
    return disj(options)


def kcoherent_translate(phi: Formula, k: int) -> HyperFormula:
    if k < 1:
        raise ValueError("k must be at least 1")
    if Fragment.KCOHERENT not in classify_fragment(phi):
        raise FragmentMismatch("formula is not in the k-coherent fragment")
    pis = trace_vars(k)
    prefix = tuple(Quantifier(QKind.FORALL, pi) for pi in pis)
    return HyperFormula(prefix, kcoherent_body(phi, pis), temporal_depth(phi))


def cover_count(body: Formula) -> int:
    """Number of top-level disjuncts of a translated split disjunction."""
    n, f = 1, body
    while isinstance(f, Or):
        n, f = n + 1, f.right
    return n


# ---------------------------------------------------------------- left-flat


PI = "pi"


class _Fresh:
    """Auxiliary names that avoid the propositions of the source formula."""

    def __init__(self, phi: Formula):
        self.taken = set(props(phi))
        self.counter = 0

    def root(self, name: str) -> str:
        while name in self.taken:
            name += "_"
        self.taken.add(name)
        return name

    def __call__(self, stem: str) -> str:
        self.counter += 1
        return self.root(f"{stem}__{self.counter}")


def _u(name: str) -> Formula:
    return IProp(name, PI)


def _nu(name: str) -> Formula:
    return INegProp(name, PI)


def flat_ltl(phi: Formula) -> Formula:
    """Per-trace LTL form of a flat operand, indexed by the universal variable."""
    return index_formula(eliminate_flat_nonclassical(phi), PI)


def leftflat_translate(phi: Formula, closed: bool = True) -> HyperFormula:
    """Closing form exists r . exists r1..rn . forall pi . r & X G !r & [phi, r].

    With closed=False the marker r is left free (to be preset at the
    evaluation index) and the conjunct pinning it is omitted."""
    if Fragment.LEFT_FLAT not in classify_fragment(phi):
        raise FragmentMismatch("formula is not in the left-flat fragment")
    fresh = _Fresh(phi)
    root = fresh.root("r")
    quants: list = []
    nesting = {root: 0}

    def go(f, r: str, present: bool) -> Formula:
        # present: r is known to be set exactly once; otherwise at most once
        level = "one" if present else "opt"
        if isinstance(f, (Prop, NegProp, Top, Bottom)):
            return G(Or(_nu(r), index_formula(f, PI)))
        if isinstance(f, FlatAll):
            return G(Or(_nu(r), flat_ltl(f)))
        if isinstance(f, Next):
            r1 = fresh("r")
            nesting[r1] = nesting[r] + 1
            quants.append(Quantifier(QKind.UEXISTS, r1, level))
            shift = G(_iff(_u(r), Next(_u(r1))))
            return And(shift, go(f.child, r1, present))
        if isinstance(f, And):
            return And(go(f.left, r, present), go(f.right, r, present))
        if isinstance(f, Or):
            return Or(go(f.left, r, present), go(f.right, r, present))
        if isinstance(f, BoolOr):
            d = fresh("d")
            quants.append(Quantifier(QKind.UEXISTS, d, "const"))
            return And(Or(_nu(d), go(f.left, r, present)), Or(_u(d), go(f.right, r, present)))
        if isinstance(f, (Until, WeakUntil)):
            rl, rr = fresh("r"), fresh("r")
            nesting[rl] = nesting[rr] = nesting[r] + 1
            weak = isinstance(f, WeakUntil)
            quants.append(Quantifier(QKind.UEXISTS, rl, "span"))
            quants.append(Quantifier(QKind.UEXISTS, rr, "opt" if weak or not present else "one"))
            target = And(_u(rr), Next(G(_nu(rr))))
            marker = (WeakUntil if weak else Until)(_u(rl), target)
            return conj([
                G(Or(_nu(r), marker)),
                G(Or(_nu(rl), flat_ltl(f.left))),
                go(f.right, rr, present and not weak),
            ])
        raise FragmentMismatch(f"{type(f).__name__} is outside the left-flat fragment")

    body = go(phi, root, True)
    forall = Quantifier(QKind.FORALL, PI)
    hint = tuple(sorted(nesting.items()))
    if not closed:
        return HyperFormula(tuple(quants) + (forall,), body, temporal_depth(phi), hint)
    pin = And(_u(root), Next(G(_nu(root))))
    prefix = (Quantifier(QKind.UEXISTS, root, "one"),) + tuple(quants) + (forall,)
    return HyperFormula(prefix, And(pin, body), temporal_depth(phi), hint)


def leftflat_root(phi: Formula) -> str:
    """Name of the marker variable left free by leftflat_translate(closed=False)."""
    return _Fresh(phi).root("r")


# ---------------------------------------------------------------- full translation


@node
class _Q(Formula):
    """Quantifier over a subformula; only used before prenexing."""

    q: Quantifier
    child: Formula


def _marker(qs: str, q: str, pi: str = PI) -> Formula:
    return F(And(IProp(q, pi), IProp(qs, pi)))


def _not_marker(qs: str, q: str, pi: str = PI) -> Formula:
    return G(Or(INegProp(q, pi), INegProp(qs, pi)))


def _before_eq(a: str, b: str) -> Formula:
    return G(Or(_nu(a), F(_u(b))))


def _not_before_eq(a: str, b: str) -> Formula:
    return F(And(_u(a), G(_nu(b))))


def _not_strictly_before(a: str, b: str) -> Formula:
    return F(And(_u(a), Next(G(_nu(b)))))


def _forall(body: Formula) -> Formula:
    return _Q(Quantifier(QKind.FORALL, PI), body)


def full_translate(phi: Formula) -> HyperFormula:
    """Prenex form of exists qS . exists q . exists r . TR(q, r)(phi) & aux.

    Subteams are points of a non-uniform labelling qS selected by one-level
    uniform variables q; r marks the time step. Every uniform variable is
    restricted to exactly one level."""
    if Fragment.GENERAL not in classify_fragment(phi):
        raise FragmentMismatch("formula is not in TeamLTL(vv, NE, A1)")
    fresh = _Fresh(phi)
    qs, q0, r0 = fresh.root("qS"), fresh.root("q"), fresh.root("r")
    nesting = {r0: 0}

    def level(r, parent):
        name = fresh(r)
        nesting[name] = nesting[parent] + 1
        return name

    def marker(q, pi=PI):
        return _marker(qs, q, pi)

    def not_marker(q):
        return _not_marker(qs, q)

    def one(kind, name, child):
        return _Q(Quantifier(kind, name, "one"), child)

    def tr(f, q: str, r: str) -> Formula:
        if isinstance(f, (Prop, NegProp, Top, Bottom)):
            return _forall(Or(not_marker(q), F(And(_u(r), index_formula(f, PI)))))
        if isinstance(f, FlatAll):
            return _forall(Or(not_marker(q), F(And(_u(r), flat_ltl(f)))))
        if isinstance(f, NonEmpty):
            pi = fresh("pi")
            return _Q(Quantifier(QKind.EXISTS, pi), marker(q, pi))
        if isinstance(f, BoolOr):
            return Or(tr(f.left, q, r), tr(f.right, q, r))
        if isinstance(f, And):
            return And(tr(f.left, q, r), tr(f.right, q, r))
        if isinstance(f, Next):
            r1 = level("r", r)
            return one(QKind.UEXISTS, r1, And(G(_iff(_u(r), Next(_u(r1)))), tr(f.child, q, r1)))
        if isinstance(f, Or):
            q1, q2 = fresh("q"), fresh("q")
            union = _forall(And(
                Or(not_marker(q), Or(marker(q1), marker(q2))),
                Or(marker(q), And(not_marker(q1), not_marker(q2))),
            ))
            body = conj([union, tr(f.left, q1, r), tr(f.right, q2, r)])
            return one(QKind.UEXISTS, q1, one(QKind.UEXISTS, q2, body))
        if isinstance(f, Until):
            r1, r2 = level("r", r), level("r", r)
            inner = one(QKind.UFORALL, r2, disj([
                _not_before_eq(r, r2), _not_strictly_before(r2, r1), tr(f.left, q, r2),
            ]))
            return one(QKind.UEXISTS, r1, conj([_before_eq(r, r1), tr(f.right, q, r1), inner]))
        if isinstance(f, WeakUntil):
            r1, r2 = level("r", r), level("r", r)
            witness = one(QKind.UEXISTS, r2, conj([
                _before_eq(r, r2), _before_eq(r2, r1), tr(f.right, q, r2),
            ]))
            return one(QKind.UFORALL, r1, disj([_not_before_eq(r, r1), tr(f.left, q, r1), witness]))
        raise FragmentMismatch(f"{type(f).__name__} is outside TeamLTL(vv, NE, A1)")

    aux = _forall(And(marker(q0), _u(r0)))
    structured = And(tr(phi, q0, r0), aux)
    uniform, exists_pi, selectors, _, matrix = _prenex(structured, fresh)
    prefix = (
        (Quantifier(QKind.PEXISTS, qs),
         Quantifier(QKind.UEXISTS, q0, "one"),
         Quantifier(QKind.UEXISTS, r0, "one"))
        + tuple(uniform)
        + tuple(Quantifier(QKind.UEXISTS, d, "const") for d in selectors)
        + tuple(Quantifier(QKind.EXISTS, pi) for pi in exists_pi)
        + (Quantifier(QKind.FORALL, PI),)
    )
    return HyperFormula(prefix, matrix, temporal_depth(phi), tuple(sorted(nesting.items())))


def _prenex(f: Formula, fresh) -> tuple:
    """(uniform quantifiers in order, existential trace vars, selector vars,
    whether a universal trace block occurs, matrix).

    Universal trace blocks merge through conjunctions; a disjunction of two
    such blocks gets a constant selector d: (!d | A) & (d | B)."""
    if isinstance(f, _Q):
        uni, ex, sel, has, mat = _prenex(f.child, fresh)
        kind = f.q.kind
        if kind.sort == "uniform":
            return [f.q] + uni, ex, sel, has, mat
        if kind is QKind.EXISTS:
            return uni, [f.q.var] + ex, sel, has, mat
        return uni, ex, sel, True, mat
    if isinstance(f, (And, Or)) and _has_quantifier(f):
        ua, ea, sa, ha, ma = _prenex(f.left, fresh)
        ub, eb, sb, hb, mb = _prenex(f.right, fresh)
        uni, ex, sel = ua + ub, ea + eb, sa + sb
        if isinstance(f, And):
            return uni, ex, sel, ha or hb, And(ma, mb)
        if ha and hb:
            d = fresh("d")
            return uni, ex, sel + [d], True, And(Or(_nu(d), ma), Or(_u(d), mb))
        return uni, ex, sel, ha or hb, Or(ma, mb)
    return [], [], [], False, f


def _has_quantifier(f: Formula) -> bool:
    if isinstance(f, _Q):
        return True
    if isinstance(f, (And, Or)):
        return _has_quantifier(f.left) or _has_quantifier(f.right)
    return False
