"""Counter machines and their encodings into TeamLTL model checking and satisfiability."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass

from .formula import (
    And, BoolOr, Bottom, Formula, Inc, LeftOr, NegProp, Next, Or, Prop, SubteamAll, Top,
    F, G, bool_disj, conj, disj,
)
from .kripke import KripkeStructure
from .traces import Team, lasso

COUNTERS = ("l", "m", "r")


@dataclass(frozen=True)
class Instruction:
    """kind is INC, DEC or IFZ; for IFZ the targets are (zero, nonzero)."""

    kind: str
    counter: str
    targets: tuple

    def __str__(self) -> str:
        j1, j2 = self.targets
        if self.kind == "IFZ":
            return f"IFZ {self.counter} ? {j1} : {j2}"
        return f"{self.kind} {self.counter} -> {{{j1},{j2}}}"


@dataclass(frozen=True)
class CounterMachine:
    instructions: tuple

    def __post_init__(self):
        n = len(self.instructions)
        if n == 0:
            raise ValueError("a machine needs at least one instruction")
        for i, ins in enumerate(self.instructions):
            if ins.kind not in ("INC", "DEC", "IFZ") or ins.counter not in COUNTERS:
                raise ValueError(f"instruction {i} is malformed")
            if any(not 0 <= j < n for j in ins.targets) or len(ins.targets) != 2:
                raise ValueError(f"instruction {i} jumps outside 0..{n - 1}")

    def __len__(self) -> int:
        return len(self.instructions)

    def render(self) -> str:
        return "\n".join(f"{i}: {ins}" for i, ins in enumerate(self.instructions))


_LINE = re.compile(
    r"^\s*(\d+)\s*:\s*(?:(INC|DEC)\s+([lmr])\s*->\s*\{\s*(\d+)\s*,\s*(\d+)\s*\}"
    r"|IFZ\s+([lmr])\s*\?\s*(\d+)\s*:\s*(\d+))\s*$"
)


def parse_machine(text: str) -> CounterMachine:
    """Lines `i: INC l -> {j1,j2}`, `i: DEC m -> {j1,j2}`, `i: IFZ r ? j1 : j2`."""
    found = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        if not line.strip():
            continue
        m = _LINE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: cannot parse {line.strip()!r}")
        label = int(m.group(1))
        if label in found:
            raise ValueError(f"line {lineno}: label {label} defined twice")
        if m.group(2):
            found[label] = Instruction(m.group(2), m.group(3), (int(m.group(4)), int(m.group(5))))
        else:
            found[label] = Instruction("IFZ", m.group(6), (int(m.group(7)), int(m.group(8))))
    if sorted(found) != list(range(len(found))):
        raise ValueError("labels must be 0..n-1")
    return CounterMachine(tuple(found[i] for i in range(len(found))))


# ---------------------------------------------------------------- runs


Config = tuple  # (instruction, C_l, C_m, C_r)
INITIAL = (0, 0, 0, 0)


@dataclass(frozen=True)
class Run:
    """The configuration sequence stem . loop^omega."""

    stem: tuple
    loop: tuple

    def __post_init__(self):
        if not self.loop:
            raise ValueError("a run needs a nonempty loop")
        object.__setattr__(self, "stem", tuple(tuple(c) for c in self.stem))
        object.__setattr__(self, "loop", tuple(tuple(c) for c in self.loop))

    def __getitem__(self, j: int) -> Config:
        if j < len(self.stem):
            return self.stem[j]
        return self.loop[(j - len(self.stem)) % len(self.loop)]

    def pairs(self):
        """Every consecutive pair, the wrap-around of the loop included."""
        for j in range(len(self.stem) + len(self.loop)):
            yield self[j], self[j + 1]


_CONFIG = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)")


def parse_run(text: str) -> Run:
    """`stem:` and `loop:` sections, one `(i, l, m, r)` tuple per line."""
    sections = {"stem": [], "loop": []}
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.rstrip(":") in sections and line.endswith(":"):
            current = line.rstrip(":")
            continue
        m = _CONFIG.fullmatch(line)
        if not m or current is None:
            raise ValueError(f"line {lineno}: expected a configuration inside a stem: or loop: section")
        sections[current].append(tuple(int(x) for x in m.groups()))
    return Run(tuple(sections["stem"]), tuple(sections["loop"]))


def successors(I: CounterMachine, c: Config) -> set:
    """Configurations reachable in one exact step."""
    i, *vals = c
    ins = I.instructions[i]
    s = COUNTERS.index(ins.counter)
    out = set()
    if ins.kind == "IFZ":
        j = ins.targets[0] if vals[s] == 0 else ins.targets[1]
        out.add((j, *vals))
        return out
    delta = 1 if ins.kind == "INC" else -1
    if vals[s] + delta < 0:
        return out
    new = list(vals)
    new[s] += delta
    for j in ins.targets:
        out.add((j, *new))
    return out


def consecutive(I: CounterMachine, c1: Config, c2: Config) -> bool:
    return tuple(c2) in successors(I, tuple(c1))


def lossy_consecutive(I: CounterMachine, c1: Config, c2: Config) -> bool:
    """Some exact step from a configuration below c1 reaches one above c2."""
    i, *vals = c1
    for lowered in itertools.product(*(range(v + 1) for v in vals)):
        for d in successors(I, (i, *lowered)):
            if d[0] == c2[0] and all(a >= b for a, b in zip(d[1:], c2[1:])):
                return True
    return False


def check_run(I: CounterMachine, run: Run, lossy: bool = True) -> None:
    if run[0] != INITIAL:
        raise ValueError("a computation starts in (0, 0, 0, 0)")
    step = lossy_consecutive if lossy else consecutive
    for c1, c2 in run.pairs():
        if c1[0] >= len(I) or c2[0] >= len(I):
            raise ValueError(f"configuration {c1 if c1[0] >= len(I) else c2} names no instruction")
        if not step(I, c1, c2):
            raise ValueError(f"{c1} -> {c2} is not a {'lossy ' if lossy else ''}step of the machine")


def is_recurring(run: Run, b: int) -> bool:
    return any(c[0] == b for c in run.loop)


# ---------------------------------------------------------------- Kripke structure


def counter_prop(s: str) -> str:
    return f"c_{s}"


DUMMY = "d"


def machine_ap(n: int) -> list:
    return [counter_prop(s) for s in COUNTERS] + [DUMMY] + [str(i) for i in range(n)]


def kripke_states(n: int) -> list:
    """(i, j, k, t, l) tuples in the order used for state ids; id 0 is initial."""
    return [(i, *bits) for i in range(n) for bits in itertools.product((0, 1), repeat=4)]


def build_kripke(I: CounterMachine) -> KripkeStructure:
    """All label combinations of one instruction proposition and the flags
    c_l, c_m, c_r, d, with every transition present."""
    n = len(I)
    states = kripke_states(n)
    labels = []
    for i, j, k, t, l in states:
        flags = [name for name, bit in zip(machine_ap(n)[:4], (j, k, t, l)) if bit]
        labels.append(frozenset([str(i)] + flags))
    every = tuple(range(len(states)))
    return KripkeStructure(tuple(labels), tuple(every for _ in states), 0, tuple(machine_ap(n)))


# ---------------------------------------------------------------- formulae


def _c(s):
    return Prop(counter_prop(s))


def _nc(s):
    return NegProp(counter_prop(s))


def _label(j: int):
    return Prop(str(j))


def singleton(ap) -> Formula:
    return G(conj(BoolOr(Prop(a), NegProp(a)) for a in ap))


def decrease(s: str) -> Formula:
    return Or(_c(s), And(_nc(s), Next(_nc(s))))


def preserve(s: str) -> Formula:
    return Or(And(_c(s), Next(_c(s))), And(_nc(s), Next(_nc(s))))


def contains_true(f: Formula) -> Formula:
    """Some trace of the (nonempty) team satisfies f."""
    return Inc((Top(),), (f,))


def contains_false(f: Formula) -> Formula:
    return Inc((Bottom(),), (f,))


def instruction_formula(I: CounterMachine, i: int, lossy: bool = True) -> Formula:
    ins = I.instructions[i]
    s = ins.counter
    j1, j2 = ins.targets
    others = [x for x in COUNTERS if x != s]
    keep = decrease if lossy else preserve
    ap = machine_ap(len(I))
    if ins.kind == "IFZ":
        if lossy:
            branch = BoolOr(Next(And(_nc(s), _label(j1))), And(contains_true(_c(s)), Next(_label(j2))))
        else:
            branch = BoolOr(And(_nc(s), Next(_label(j1))), And(contains_true(_c(s)), Next(_label(j2))))
        return conj([branch] + [keep(x) for x in COUNTERS])
    goto = Next(BoolOr(_label(j1), _label(j2)))
    if ins.kind == "INC":
        change = Or(conj([singleton(ap), _nc(s), Next(_c(s))]), keep(s)) if lossy else \
            LeftOr(conj([singleton(ap), _nc(s), Next(_c(s))]), keep(s))
    else:
        change = LeftOr(And(_c(s), Next(_nc(s))), keep(s)) if lossy else \
            LeftOr(conj([singleton(ap), _c(s), Next(_nc(s))]), keep(s))
    return conj([goto, change] + [keep(x) for x in reversed(others)])


def computation_formula(I: CounterMachine, lossy: bool = True) -> Formula:
    return G(bool_disj(And(_label(i), instruction_formula(I, i, lossy)) for i in range(len(I))))


def recurrence_formula(b: int) -> Formula:
    return G(F(_label(b)))


def difference_formula() -> Formula:
    """Every subteam either agrees on c_l, c_m, c_r, d forever or disagrees
    on one of them infinitely often."""
    flags = [counter_prop(s) for s in COUNTERS] + [DUMMY]
    uniform = G(conj(BoolOr(Prop(a), NegProp(a)) for a in flags))
    split = G(F(bool_disj(And(contains_true(Prop(a)), contains_false(Prop(a))) for a in flags)))
    return SubteamAll(BoolOr(uniform, split))


def _check_label(I: CounterMachine, b: int) -> None:
    if not 0 <= b < len(I):
        raise ValueError(f"label {b} out of range 0..{len(I) - 1}")


def build_formula_lossy(I: CounterMachine, b: int) -> Formula:
    _check_label(I, b)
    return LeftOr(And(computation_formula(I, True), recurrence_formula(b)), Top())


def build_formula_nonlossy(I: CounterMachine, b: int) -> Formula:
    _check_label(I, b)
    body = conj([difference_formula(), computation_formula(I, False), recurrence_formula(b)])
    return LeftOr(body, Top())


# ---------------------------------------------------------------- satisfiability embedding


def build_sat_embedding(K: KripkeStructure) -> tuple:
    """(K', theta): K' marks each state w with a fresh proposition p_w.

    A nonempty team satisfies theta iff its traces are traces of K' and, at
    every step, the traces sitting in any state w move on to every successor
    of w. The full trace set qualifies, but so can a finite team."""
    taken = set(K.ap)
    names = []
    for w in K.states:
        name = f"p_{w}"
        while name in taken:
            name += "_"
        taken.add(name)
        names.append(name)
    K2 = KripkeStructure(
        tuple(K.labels[w] | {names[w]} for w in K.states), K.succ, K.init, K.ap + tuple(names)
    )
    cases = []
    for w in K.states:
        parts = [Prop(names[w])]
        parts += [NegProp(names[v]) for v in K.states if v != w]
        parts += [contains_true(Next(Prop(names[v]))) for v in K.succ[w]]
        parts.append(Next(disj(Prop(names[v]) for v in K.succ[w])))
        parts += [Prop(p) for p in sorted(K.labels[w])]
        parts += [NegProp(p) for p in K.ap if p not in K.labels[w]]
        cases.append(conj(parts))
    return K2, And(Prop(names[K.init]), G(disj(cases)))


# ---------------------------------------------------------------- run encodings


def encode_computation(I: CounterMachine, run: Run, b: int | None = None,
                       lossy: bool = True, max_traces: int = 16, check: bool = True) -> Team:
    """Team encoding the run: a base trace carrying only instruction labels
    and, per counter s and slot k, a trace holding c_s exactly while the
    counter exceeds k. Slot traces carry the dummy d at a slot-specific
    residue so that no two of them ever share a suffix. check=False skips
    the consecution check, for encoding arbitrary configuration sequences."""
    if check:
        check_run(I, run, lossy)
    if b is not None:
        _check_label(I, b)
    slots = [(s, k) for x, s in enumerate(COUNTERS)
             for k in range(max(c[1 + x] for c in run.stem + run.loop))]
    if len(slots) + 1 > max_traces:
        raise ValueError(f"the run needs {len(slots) + 1} traces, more than {max_traces}")
    modulus = len(slots) + 1
    stem_len = len(run.stem)
    period = math.lcm(len(run.loop), modulus)

    def word(slot):
        letters = []
        for j in range(stem_len + period):
            c = run[j]
            a = {str(c[0])}
            if slot is not None:
                s, k = slot
                if c[1 + COUNTERS.index(s)] > k:
                    a.add(counter_prop(s))
                if j % modulus == slots.index(slot) + 1:
                    a.add(DUMMY)
            letters.append(a)
        return lasso(letters[:stem_len], letters[stem_len:])

    return Team(tuple(word(slot) for slot in [None] + slots), 0, tuple(machine_ap(len(I))))
