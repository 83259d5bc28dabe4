"""Kripke structures, LTL to Buchi automata and the decidable model-checking pipelines."""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field

from .formula import (
    And, Bottom, BoolOr, Formula, Fragment, Inc, NegProp, Next, Or, Prop, Top, Until,
    WeakUntil, classify_fragment, conj, is_downward_closed, negate, rebuild,
)
from .hyper import HyperAssignment, HyperFormula, INegProp, IProp, QKind, eval_hyper
from .team_eval import eval_team
from .traces import LassoTrace, canonicalize, lasso, normalize_team, shape
from .translate import _iff, kcoherent_body, leftflat_translate, trace_vars


class KripkeError(ValueError):
    pass


@dataclass(frozen=True)
class KripkeStructure:
    """States 0..n-1 with labels, successor lists and an initial state."""

    labels: tuple
    succ: tuple
    init: int = 0
    ap: tuple = ()

    def __post_init__(self):
        n = len(self.labels)
        if len(self.succ) != n:
            raise KripkeError("labels and successor lists differ in length")
        if not 0 <= self.init < n:
            raise KripkeError("initial state out of range")
        for w, out in enumerate(self.succ):
            if not out:
                raise KripkeError(f"state {w} has no successor")
            if any(not 0 <= v < n for v in out):
                raise KripkeError(f"state {w} has an edge out of range")
        object.__setattr__(self, "labels", tuple(frozenset(a) for a in self.labels))
        object.__setattr__(self, "succ", tuple(tuple(sorted(set(s))) for s in self.succ))
        ap = set(self.ap) | {p for a in self.labels for p in a}
        object.__setattr__(self, "ap", tuple(sorted(ap)))

    @property
    def states(self) -> range:
        return range(len(self.labels))

    def to_json(self) -> dict:
        return {
            "ap": list(self.ap),
            "states": [{"id": w, "label": sorted(a)} for w, a in enumerate(self.labels)],
            "init": self.init,
            "edges": [[w, v] for w in self.states for v in self.succ[w]],
        }


def kripke_from_json(data: dict | str) -> KripkeStructure:
    if isinstance(data, str):
        data = json.loads(data)
    ids = [s["id"] for s in data["states"]]
    if len(set(ids)) != len(ids):
        raise KripkeError("duplicate state ids")
    pos = {sid: j for j, sid in enumerate(ids)}
    ap = set(data.get("ap", []))
    labels = []
    for s in data["states"]:
        unknown = set(s.get("label", [])) - ap
        if unknown:
            raise KripkeError(f"propositions {sorted(unknown)} not declared in ap")
        labels.append(frozenset(s.get("label", [])))
    succ = [[] for _ in ids]
    for a, b in data.get("edges", []):
        if a not in pos or b not in pos:
            raise KripkeError(f"edge {a}->{b} mentions an unknown state")
        succ[pos[a]].append(pos[b])
    if data.get("init", ids[0]) not in pos:
        raise KripkeError("unknown initial state")
    return KripkeStructure(tuple(labels), tuple(succ), pos[data.get("init", ids[0])], tuple(sorted(ap)))


def load_kripke(path: str) -> KripkeStructure:
    with open(path) as fh:
        return kripke_from_json(json.load(fh))


def traces_enumerate(K: KripkeStructure, stem_max: int, loop_max: int) -> set:
    """Canonical traces of the paths u v^omega from the initial state with
    |u| <= stem_max and |v| <= loop_max."""
    out = set()

    def cycles(start_from):
        # v0 ranges over start_from, v closes back to v0
        for v0 in start_from:
            stack = [(v0,)]
            while stack:
                path = stack.pop()
                if v0 in K.succ[path[-1]]:
                    yield path
                if len(path) < loop_max:
                    stack.extend(path + (v,) for v in K.succ[path[-1]])

    stems = [()]
    frontier = [()]
    for _ in range(stem_max):
        frontier = [u + (v,) for u in frontier for v in (K.succ[u[-1]] if u else (K.init,))]
        stems += frontier
    for u in stems:
        for v in cycles(K.succ[u[-1]] if u else (K.init,)):
            out.add(canonicalize(lasso([K.labels[w] for w in u], [K.labels[w] for w in v])))
    return out


def has_trace(K: KripkeStructure, t: LassoTrace) -> bool:
    """Whether some path from the initial state is labelled by t."""
    stem, loop = list(t.stem), list(t.loop)
    here = {K.init} if K.labels[K.init] == (stem or loop)[0] else set()
    for letter in (stem + loop[:1])[1:]:
        here = {v for w in here for v in K.succ[w] if K.labels[v] == letter}

    def read_loop(w):
        # states reached after reading the loop from w, back at its first letter
        reach = {w}
        for letter in loop[1:] + loop[:1]:
            reach = {v for u in reach for v in K.succ[u] if K.labels[v] == letter}
        return reach

    # greatest set of states from which the loop can be read forever
    alive = {w for w in K.states if K.labels[w] == loop[0]}
    while True:
        keep = {w for w in alive if read_loop(w) & alive}
        if keep == alive:
            return bool(here & alive)
        alive = keep


# ---------------------------------------------------------------- Buchi automata


def atom_key(g: Formula) -> tuple:
    if isinstance(g, (Prop, NegProp)):
        return (g.name, None)
    if isinstance(g, (IProp, INegProp)):
        return (g.name, g.trace)
    raise ValueError(f"not a literal: {type(g).__name__}")


@dataclass
class BuchiAutomaton:
    """Transitions enter a state; entering state s reads a letter satisfying
    guard[s] = (required atom keys, forbidden atom keys). State 0 is initial."""

    guards: list
    succ: list
    accepting: frozenset
    initial: int = 0

    def letter_ok(self, s: int, letter) -> bool:
        pos, neg = self.guards[s]
        return pos <= letter and not (neg & letter)

    def accepts_lasso(self, stem: list, loop: list) -> bool:
        """Acceptance of the word stem . loop^omega over letters of atom keys."""
        S, n = len(stem), len(stem) + len(loop)
        word = list(stem) + list(loop)

        def succ(node):
            j, s = node
            nj = j + 1 if j + 1 < n else S
            return [(nj, t) for t in self.succ[s] if self.letter_ok(t, word[nj])]

        starts = [(0, t) for t in self.succ[self.initial] if self.letter_ok(t, word[0])]
        return find_accepting_lasso(starts, succ, lambda node: node[1] in self.accepting) is not None

    @property
    def size(self) -> int:
        return len(self.guards)


def _is_literal(g) -> bool:
    return isinstance(g, (Prop, NegProp, IProp, INegProp))


def _positive(g) -> bool:
    return isinstance(g, (Prop, IProp))


def _complement(g):
    if isinstance(g, Prop):
        return NegProp(g.name)
    if isinstance(g, NegProp):
        return Prop(g.name)
    return g.negated()


def _pick(new, old):
    """Next obligation to expand: branching ones last, so that literals prune early."""
    for g in new:
        if not isinstance(g, (Or, Until, WeakUntil)) or g in old or g.right in old:
            return g
        if isinstance(g, Or) and g.left in old:
            return g
    return next(iter(new))


def _expand(formulas, literal_ok) -> list:
    """Tableau covers (old, next) of a set of NNF obligations.

    literal_ok(g, old) decides whether a literal may join the cover."""
    out = []
    work = [(frozenset(formulas), frozenset(), frozenset())]
    seen = set()
    while work:
        item = work.pop()
        if item in seen:
            continue
        seen.add(item)
        new, old, nxt = item
        if not new:
            out.append((old, nxt))
            continue
        g = _pick(new, old)
        new = new - {g}
        if g in old or isinstance(g, Top):
            work.append((new, old | {g}, nxt))
        elif isinstance(g, Bottom):
            continue
        elif _is_literal(g):
            if literal_ok(g, old):
                work.append((new, old | {g}, nxt))
        elif isinstance(g, And):
            work.append((new | ({g.left, g.right} - old), old | {g}, nxt))
        elif isinstance(g, Next):
            work.append((new, old | {g}, nxt | {g.child}))
        elif isinstance(g, (Or, Until, WeakUntil)) and g.right in old:
            # the branch through right already holds; the other one is dominated
            work.append((new, old | {g}, nxt))
        elif isinstance(g, Or) and g.left in old:
            work.append((new, old | {g}, nxt))
        elif isinstance(g, Or):
            work.append((new | ({g.left} - old), old | {g}, nxt))
            work.append((new | ({g.right} - old), old | {g}, nxt))
        elif isinstance(g, (Until, WeakUntil)):
            work.append((new | ({g.left} - old), old | {g}, nxt | {g}))
            work.append((new | ({g.right} - old), old | {g}, nxt))
        else:
            raise ValueError(f"not an LTL formula: {type(g).__name__}")
    return out


def _pending(old) -> frozenset:
    """Untils promised by a cover whose right side is not yet delivered."""
    return frozenset(g for g in old if isinstance(g, Until) and g.right not in old)


def _untils(psi) -> list:
    from .formula import subformulas

    return [g for g in dict.fromkeys(subformulas(psi)) if isinstance(g, Until)]


def _minimal(covers: set) -> list:
    """Drop covers that contain another one componentwise; a larger cover
    accepts a subset of the words of the smaller one."""
    covers = sorted(covers, key=lambda c: sum(map(len, c)))
    kept = []
    for c in covers:
        if not any(all(a <= b for a, b in zip(k, c)) for k in kept):
            kept.append(c)
    return kept


def _ranker(psi):
    """Sort key for sets of subformulas of psi, cheaper than repr."""
    from .formula import subformulas

    rank = {g: j for j, g in enumerate(dict.fromkeys(subformulas(psi)))}

    def key(fs):
        return sorted(rank[g] for g in fs)

    return key


def ltl_to_buchi(psi: Formula) -> BuchiAutomaton:
    """Tableau construction with generalised acceptance, then degeneralisation."""
    psi = negate(negate(psi))  # normalise to NNF
    untils = _untils(psi) or [None]
    m = len(untils)

    def consistent(g, old):
        return _complement(g) not in old

    rank = _ranker(psi)

    def summary(old, nxt):
        # everything a state needs: its guard, its pending untils, its obligations
        lits = [g for g in old if _is_literal(g)]
        return (frozenset(atom_key(g) for g in lits if _positive(g)),
                frozenset(atom_key(g) for g in lits if not _positive(g)), _pending(old), nxt)

    covers: dict = {}

    def covers_of(obligations):
        if obligations not in covers:
            found = _minimal({summary(*cv) for cv in _expand(obligations, consistent)})
            covers[obligations] = sorted(found, key=lambda c: (sorted(map(repr, c[0])), sorted(map(repr, c[1])),
                                                               rank(c[2]), rank(c[3])))
        return covers[obligations]

    ids: dict = {}
    guards = [(frozenset(), frozenset())]
    succ: list = [[]]
    accepting = set()
    queue: deque = deque()

    def sid(cover, c):
        key = (cover, c)
        if key not in ids:
            ids[key] = len(guards)
            guards.append(cover[:2])
            succ.append([])
            if c == 0 and untils[0] not in cover[2]:
                accepting.add(ids[key])
            queue.append(key)
        return ids[key]

    succ[0] = [sid(cv, 0) for cv in covers_of(frozenset([psi]))]
    while queue:
        cover, c = key = queue.popleft()
        nc = (c + 1) % m if untils[c] not in cover[2] else c
        succ[ids[key]] = [sid(cv, nc) for cv in covers_of(cover[3])]
    return BuchiAutomaton(guards, succ, frozenset(accepting))


class LazyBuchi:
    """The same tableau explored on the fly: literals are resolved against the
    letter actually read, so only covers consistent with it are built.

    A state is (obligations for the next position, pending untils, counter)."""

    def __init__(self, psi: Formula):
        self.psi = negate(negate(psi))
        self.untils = _untils(self.psi) or [None]
        self.atoms = frozenset(atom_key(g) for g in _literals(self.psi))
        self.rank = _ranker(self.psi)
        self.memo: dict = {}

    def _covers(self, obligations, letter):
        letter = letter & self.atoms
        key = (obligations, letter)
        out = self.memo.get(key)
        if out is None:
            def ok(g, old):
                return (atom_key(g) in letter) == _positive(g)

            found = _minimal({(nxt, _pending(old)) for old, nxt in _expand(obligations, ok)})
            out = sorted(found, key=lambda c: (self.rank(c[0]), self.rank(c[1])))
            self.memo[key] = out
        return out

    def start(self, letter) -> list:
        return [(nxt, pend, 0) for nxt, pend in self._covers(frozenset([self.psi]), letter)]

    def step(self, state, letter) -> list:
        obligations, pending, c = state
        nc = (c + 1) % len(self.untils) if self.untils[c] not in pending else c
        return [(nxt, pend, nc) for nxt, pend in self._covers(obligations, letter)]

    def accepting(self, state) -> bool:
        return state[2] == 0 and self.untils[0] not in state[1]


def _literals(f):
    from .formula import subformulas

    return [g for g in subformulas(f) if _is_literal(g)]


def find_accepting_lasso(starts, succ, accepting):
    """Nested depth-first search; returns (stem, cycle) node lists or None."""
    visited, flagged = set(), set()
    for start in starts:
        if start in visited:
            continue
        visited.add(start)
        stack = [(start, iter(succ(start)))]
        while stack:
            node, it = stack[-1]
            child = next(it, None)
            if child is not None:
                if child not in visited:
                    visited.add(child)
                    stack.append((child, iter(succ(child))))
                continue
            stack.pop()
            if accepting(node) and node not in flagged:
                if _inner_dfs(node, succ, flagged, {n for n, _ in stack} | {node}) is not None:
                    return _shortest_lasso(starts, succ, node)
    return None


def _shortest_path(sources, succ, target):
    """Breadth-first path from a source to target, target excluded."""
    parent = {s: None for s in sources}
    queue = deque(sources)
    while queue:
        node = queue.popleft()
        for child in succ(node):
            if child == target:
                path = [node]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            if child not in parent:
                parent[child] = node
                queue.append(child)
    return None


def _shortest_lasso(starts, succ, seed):
    """Stem to seed and cycle through seed, each of minimal length, so that
    witnesses stay short however deep the search wandered."""
    stem = [] if seed in starts else _shortest_path(list(dict.fromkeys(starts)), succ, seed)
    return stem, [seed] + (_shortest_path([seed], succ, seed)[1:])


def _inner_dfs(seed, succ, flagged, on_stack):
    flagged.add(seed)
    stack = [(seed, iter(succ(seed)))]
    while stack:
        node, it = stack[-1]
        child = next(it, None)
        if child is None:
            stack.pop()
            continue
        if child == seed:
            return [n for n, _ in stack]
        if child not in flagged:
            flagged.add(child)
            stack.append((child, iter(succ(child))))
    return None


def word_of_lasso(stem_nodes, cycle_nodes, letter):
    return [letter(n) for n in stem_nodes], [letter(n) for n in cycle_nodes]


# ---------------------------------------------------------------- forall^k pipeline


def _k_letter(K, ws, pis):
    return frozenset((p, pi) for w, pi in zip(ws, pis) for p in K.labels[w])


def forall_k_counterexample(K: KripkeStructure, phi: Formula, k: int):
    """k traces of K violating the k-variable translation of phi, or None.

    Product of the k-fold self-composition of K with an automaton for the
    negated body, searched for an accepting lasso."""
    if Fragment.KCOHERENT not in classify_fragment(phi):
        raise ValueError("formula is not in the k-coherent fragment")
    pis = trace_vars(k)
    aut = LazyBuchi(negate(kcoherent_body(phi, pis)))

    def succ(node):
        ws, s = node
        return [(ws2, t) for ws2 in itertools.product(*(K.succ[w] for w in ws))
                for t in aut.step(s, _k_letter(K, ws2, pis))]

    ws0 = (K.init,) * k
    starts = [(ws0, t) for t in aut.start(_k_letter(K, ws0, pis))]
    found = find_accepting_lasso(starts, succ, lambda n: aut.accepting(n[1]))
    if found is None:
        return None
    stem, cycle = found
    return tuple(
        canonicalize(lasso([K.labels[n[0][j]] for n in stem], [K.labels[n[0][j]] for n in cycle]))
        for j in range(k)
    )


def check_forall_k(K: KripkeStructure, phi: Formula, k: int) -> bool:
    return forall_k_counterexample(K, phi, k) is None


def verify_counterexample(phi: Formula, k: int, tup: tuple) -> bool:
    """True when the trace tuple falsifies the k-variable body of phi."""
    pis = trace_vars(k)
    body = HyperFormula((), kcoherent_body(phi, pis))
    env = HyperAssignment(dict(zip(pis, tup)))
    return not eval_hyper(list(tup), env, 0, body)


# ---------------------------------------------------------------- exists-forall pipeline


@dataclass(frozen=True)
class Holds:
    witnesses: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FailsUpTo:
    bounds: tuple


@dataclass(frozen=True)
class ExactFail:
    pass


_EVENT_SHAPES = {"one", "opt", "span"}


def check_exists_forall(K: KripkeStructure, phi: HyperFormula, stem_max: int = 2, loop_max: int = 2):
    """Decide exists-uniform / exists-trace / forall-trace formulae on Traces(K).

    Uniform variables of shape one, opt, span and const are decided exactly by
    a search over (reachable product states, placement status); variables of
    shape any and existential trace witnesses are enumerated as lassos up to
    the bounds, in order of total length."""
    prefix = phi.prefix
    if not prefix or prefix[-1].kind is not QKind.FORALL:
        raise ValueError("prefix must end with a single universal trace quantifier")
    body_vars = prefix[:-1]
    for q in body_vars:
        if q.kind not in (QKind.UEXISTS, QKind.EXISTS):
            raise ValueError(f"unsupported quantifier {q} before the universal block")
    pi = prefix[-1].var
    events = [q.var for q in body_vars if q.kind is QKind.UEXISTS and q.shape in _EVENT_SHAPES]
    consts = [q.var for q in body_vars if q.kind is QKind.UEXISTS and q.shape == "const"]
    free_seqs = [q.var for q in body_vars if q.kind is QKind.UEXISTS and q.shape == "any"]
    witnesses = [q.var for q in body_vars if q.kind is QKind.EXISTS]
    shapes = {q.var: q.shape for q in body_vars}

    aut = LazyBuchi(negate(phi.body))
    exact = not free_seqs and not witnesses
    seq_space = [lasso([], [[]])] if not free_seqs else _bit_lassos(stem_max, loop_max)
    trace_space = sorted(traces_enumerate(K, stem_max, loop_max), key=LassoTrace.sort_key)

    for seqs in itertools.product(seq_space, repeat=len(free_seqs)):
        for wits in itertools.product(trace_space, repeat=len(witnesses)):
            for cvals in itertools.product((False, True), repeat=len(consts)):
                context = _Context(dict(zip(free_seqs, seqs)), dict(zip(witnesses, wits)),
                                   dict(zip(consts, cvals)))
                placed = _event_search(K, aut, pi, context, events, shapes)
                if placed is not None:
                    found = {**{v: str(s) for v, s in zip(free_seqs, seqs)},
                             **{v: str(t) for v, t in zip(witnesses, wits)},
                             **dict(zip(consts, cvals)), **placed}
                    return Holds(found)
    if exact:
        return ExactFail()
    return FailsUpTo((stem_max, loop_max))


def _bit_lassos(stem_max: int, loop_max: int) -> list:
    out = set()
    for s in range(stem_max + 1):
        for l in range(1, loop_max + 1):
            for bits in itertools.product((False, True), repeat=s + l):
                out.add(canonicalize(lasso([["x"] if b else [] for b in bits[:s]],
                                           [["x"] if b else [] for b in bits[s:]])))
    return sorted(out, key=LassoTrace.sort_key)


class _Context:
    """Fixed lasso values of 'any' variables, trace witnesses and constants."""

    def __init__(self, seqs: dict, wits: dict, consts: dict):
        self.seqs, self.wits, self.consts = seqs, wits, consts
        self.stem, self.period = shape(list(seqs.values()) + list(wits.values()))

    def next(self, c: int) -> int:
        return c + 1 if c + 1 < self.stem + self.period else self.stem

    def letter(self, c: int) -> frozenset:
        out = set()
        for v, s in self.seqs.items():
            if s[c]:
                out.add(v)
        for v, val in self.consts.items():
            if val:
                out.add(v)
        return frozenset(out), {v: t[c] for v, t in self.wits.items()}


def _event_search(K, aut: LazyBuchi, pi, context: _Context, events: list, shapes: dict):
    """Placement of event variables for which no trace of K violates the body,
    as {var: description}, or None.

    Status per variable: 'wait' before it fires, 'on' while a span holds,
    'done' or 'never' afterwards. A search node is the set of reachable
    (state of K, automaton state) pairs with the context position and the
    statuses; the space is finite. Once every status is settled the rest of
    the context is periodic and the node succeeds when no accepting run of the
    negated body is reachable."""
    trace_names = {t for _, t in aut.atoms}

    def letter(w, c, active):
        uni, wit_letters = context.letter(c)
        out = {(p, pi) for p in K.labels[w]}
        for v, a in wit_letters.items():
            out |= {(p, v) for p in a}
        for name in uni | active:
            out |= {(name, t) for t in trace_names}
        return frozenset(out)

    def moves(w, s, c, active):
        out = []
        for w2 in (K.succ[w] if w is not None else (K.init,)):
            lt = letter(w2, c, active)
            out += [(w2, t) for t in (aut.step(s, lt) if s is not None else aut.start(lt))]
        return out

    def tail_empty(R, c, on):
        def succ(node):
            w, cc, s = node
            return [(w2, context.next(cc), t) for w2, t in moves(w, s, cc, on)]

        # R holds pairs that have read the position before context position c
        starts = [(w2, context.next(c), t) for w, s in R for w2, t in moves(w, s, c, on)]
        return find_accepting_lasso(starts, succ, lambda n: aut.accepting(n[2])) is None

    settled = ("done", "never", "on")
    start = (frozenset([(None, None)]), 0, tuple("wait" for _ in events))
    parent = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        R, c, status = state
        for choice in itertools.product(*(_moves(shapes[v], st) for v, st in zip(events, status))):
            active = frozenset(v for v, (fire, _) in zip(events, choice) if fire)
            new_status = tuple(st for _, st in choice)
            R2 = _reduce_pairs(pair for w, s in R for pair in moves(w, s, c, active))
            c2 = context.next(c)
            if all(st in settled for st in new_status):
                on = frozenset(v for v, st in zip(events, new_status) if st == "on")
                if tail_empty(R2, c2, on):
                    return _placement(parent, state, events, choice)
            nxt = (R2, c2, new_status)
            if nxt not in parent:
                parent[nxt] = (state, choice)
                queue.append(nxt)
    return None


def _reduce_pairs(pairs) -> frozenset:
    """Canonical reachable set. A tableau state accepts exactly the models of
    its obligations, so pending untils and the counter are reset, and a state
    whose obligations contain another's at the same world is dropped."""
    by_world: dict = {}
    for w, (nxt, _, _) in pairs:
        by_world.setdefault(w, set()).add(nxt)
    out = set()
    for w, sets in by_world.items():
        for o in sets:
            if not any(o2 < o for o2 in sets):
                out.add((w, (o, frozenset(), 0)))
    return frozenset(out)


def _moves(shape_: str, status: str):
    """(fires now, status after this position) options."""
    if shape_ in ("one", "opt"):
        if status == "wait":
            out = [(False, "wait"), (True, "done")]
            if shape_ == "opt":
                out.append((False, "never"))
            return out
        return [(False, status)]
    # span: wait -> on (holds from here) -> done (stops holding)
    if status == "wait":
        return [(False, "wait"), (True, "on"), (False, "never")]
    if status == "on":
        return [(True, "on"), (False, "done")]
    return [(False, status)]


def _placement(parent, state, events, last_choice):
    choices = [last_choice]
    while parent[state] is not None:
        state, choice = parent[state]
        choices.append(choice)
    choices.reverse()
    out = {}
    for j, v in enumerate(events):
        positions = [t for t, ch in enumerate(choices) if ch[j][0]]
        if positions and choices[-1][j][1] == "on":
            out[v] = f"from {positions[0]} on"
        elif positions:
            out[v] = ",".join(map(str, positions))
        else:
            out[v] = "never"
    return out


# ---------------------------------------------------------------- dispatch


def one_coherence_reduction(phi: Formula) -> Formula:
    """LTL formula equivalent to phi on singleton teams, for phi built from
    LTL connectives, vv and inclusion atoms."""
    memo: dict = {}

    def go(f):
        out = memo.get(f)
        if out is not None:
            return out
        if isinstance(f, (Prop, NegProp, Top, Bottom)):
            out = f
        elif isinstance(f, BoolOr):
            out = Or(go(f.left), go(f.right))
        elif isinstance(f, Inc):
            out = conj(_iff(x, y) for x, y in zip(f.left, f.right))
        elif isinstance(f, Next):
            out = Next(go(f.child))
        elif isinstance(f, (And, Or, Until, WeakUntil)):
            out = type(f)(go(f.left), go(f.right))
        else:
            raise ValueError(f"{type(f).__name__} is outside LTL with vv and inclusion atoms")
        memo[f] = out
        return out

    return go(phi)


@dataclass(frozen=True)
class Verdict:
    """status is holds, refuted, holds-on-approx or unknown."""

    status: str
    detail: dict = field(default_factory=dict)


def mc_teamltl(K: KripkeStructure, phi: Formula, mode: str = "bounded", k: int = 1,
               stem_max: int = 2, loop_max: int = 2) -> Verdict:
    """Model checking of phi on (Traces(K), 0).

    kcoherent: exact, valid when phi is k-coherent. leftflat: exact holds,
    exact or bounded failure. bounded: phi evaluated on the traces of K up to
    the given lasso bounds; a failure refutes phi when it is downward closed."""
    if mode == "kcoherent":
        cex = forall_k_counterexample(K, phi, k)
        if cex is None:
            return Verdict("holds", {"k": k})
        return Verdict("refuted", {"k": k, "counterexample": [str(t) for t in cex]})
    if mode == "leftflat":
        if Fragment.LEFT_FLAT not in classify_fragment(phi):
            raise ValueError("formula is not in the left-flat fragment")
        out = check_exists_forall(K, leftflat_translate(phi), stem_max, loop_max)
        if isinstance(out, Holds):
            return Verdict("holds", {"witnesses": out.witnesses})
        if isinstance(out, ExactFail):
            return Verdict("refuted", {})
        return Verdict("unknown", {"stem_max": stem_max, "loop_max": loop_max})
    if mode == "bounded":
        traces = sorted(traces_enumerate(K, stem_max, loop_max), key=LassoTrace.sort_key)
        bounds = {"stem_max": stem_max, "loop_max": loop_max, "traces": len(traces)}
        if eval_team(traces, 0, phi):
            return Verdict("holds-on-approx", bounds)
        if is_downward_closed(phi):
            return Verdict("refuted", bounds)
        return Verdict("unknown", bounds)
    raise ValueError(f"unknown mode {mode!r}")
