"""Lasso traces, teams, canonical forms and the periodicity horizon."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable


Letter = frozenset


def letter(props: Iterable[str]) -> Letter:
    return frozenset(props)


@dataclass(frozen=True)
class LassoTrace:
    """The infinite word stem . loop^omega."""

    stem: tuple
    loop: tuple

    def __post_init__(self):
        if not self.loop:
            raise ValueError("loop must be nonempty")
        object.__setattr__(self, "stem", tuple(frozenset(a) for a in self.stem))
        object.__setattr__(self, "loop", tuple(frozenset(a) for a in self.loop))

    def __getitem__(self, i: int) -> Letter:
        return letter_at(self, i)

    def __str__(self) -> str:
        def word(ls):
            return "".join("{" + ",".join(sorted(a)) + "}" for a in ls)

        return f"{word(self.stem)}({word(self.loop)})^w"

    def sort_key(self) -> tuple:
        return (len(self.stem), len(self.loop),
                tuple(sorted(a) for a in self.stem), tuple(sorted(a) for a in self.loop))

    def to_json(self) -> dict:
        return {"stem": [sorted(a) for a in self.stem], "loop": [sorted(a) for a in self.loop]}


def lasso(stem: Iterable[Iterable[str]], loop: Iterable[Iterable[str]]) -> LassoTrace:
    return LassoTrace(tuple(frozenset(a) for a in stem), tuple(frozenset(a) for a in loop))


def letter_at(t: LassoTrace, i: int) -> Letter:
    if i < len(t.stem):
        return t.stem[i]
    return t.loop[(i - len(t.stem)) % len(t.loop)]


def _primitive_root(word: tuple) -> tuple:
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word == word[:d] * (n // d):
            return word[:d]
    return word


def canonicalize(t: LassoTrace) -> LassoTrace:
    """Shortest stem and primitive loop; equal words get equal forms."""
    stem, loop = list(t.stem), _primitive_root(t.loop)
    while stem and stem[-1] == loop[-1]:
        loop = (stem.pop(),) + loop[:-1]
    return LassoTrace(tuple(stem), loop)


def project(t: LassoTrace, keep: Iterable[str]) -> LassoTrace:
    keep = frozenset(keep)
    return canonicalize(LassoTrace(tuple(a & keep for a in t.stem), tuple(a & keep for a in t.loop)))


def normalize_team(traces: Iterable[LassoTrace]) -> tuple:
    """Canonical, deduplicated traces in a fixed order."""
    return tuple(sorted({canonicalize(t) for t in traces}, key=LassoTrace.sort_key))


def shape(traces: Iterable[LassoTrace]) -> tuple[int, int]:
    """(S, P): maximal stem length and lcm of loop lengths; (0, 1) for no traces."""
    traces = list(traces)
    stem = max((len(t.stem) for t in traces), default=0)
    period = math.lcm(*(len(t.loop) for t in traces)) if traces else 1
    return stem, period


def horizon(traces: Iterable[LassoTrace], frm: int = 0) -> tuple[int, int, int]:
    traces = list(traces)
    if not traces:
        raise ValueError("horizon of the empty team is undefined")
    stem, period = shape(traces)
    return stem, period, max(frm, stem) + period


def reduce_index(i: int, stem: int, period: int) -> int:
    return i if i < stem else stem + (i - stem) % period


@dataclass(frozen=True)
class Team:
    traces: tuple
    index: int = 0
    ap: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "traces", normalize_team(self.traces))

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def to_json(self) -> dict:
        ap = sorted(set(self.ap) | {p for t in self.traces for a in t.stem + t.loop for p in a})
        return {"ap": ap, "index": self.index, "traces": [t.to_json() for t in self.traces]}


def team_from_json(data: dict | str) -> Team:
    if isinstance(data, str):
        data = json.loads(data)
    ap = set(data.get("ap", []))
    traces = []
    for entry in data.get("traces", []):
        for a in entry.get("stem", []) + entry["loop"]:
            unknown = set(a) - ap
            if unknown:
                raise ValueError(f"propositions {sorted(unknown)} not declared in ap")
        traces.append(lasso(entry.get("stem", []), entry["loop"]))
    return Team(tuple(traces), int(data.get("index", 0)), tuple(sorted(ap)))


# ---------------------------------------------------------------- LTL over lassos


def unroll(t: LassoTrace, stem: int, period: int) -> list:
    """Letters at positions 0..stem+period-1 of t read as a lasso of that shape."""
    return [letter_at(t, j) for j in range(stem + period)]


def ltl_bits(f, stem: int, period: int, atom: Callable, memo: dict | None = None) -> int:
    """Bitmask of the positions 0..stem+period-1 where f holds.

    The word has the lasso shape (stem, period); atom(g) returns the mask of a
    literal node. Until is a least and WeakUntil a greatest fixpoint of
    x = right | (left & X x).
    """
    from .formula import And, Bottom, Next, Or, Top, Until, WeakUntil

    memo = {} if memo is None else memo
    h = stem + period
    full = (1 << h) - 1

    def nxt(x):
        return (x >> 1) | (((x >> stem) & 1) << (h - 1))

    def go(g):
        v = memo.get(g)
        if v is not None:
            return v
        if isinstance(g, Top):
            v = full
        elif isinstance(g, Bottom):
            v = 0
        elif isinstance(g, And):
            v = go(g.left) & go(g.right)
        elif isinstance(g, Or):
            v = go(g.left) | go(g.right)
        elif isinstance(g, Next):
            v = nxt(go(g.child))
        elif isinstance(g, (Until, WeakUntil)):
            a, b = go(g.left), go(g.right)
            v = b if isinstance(g, Until) else full
            while True:
                w = b | (a & nxt(v))
                if w == v:
                    break
                v = w
        else:
            v = atom(g)
        memo[g] = v
        return v

    return go(f)
