"""TeamLTL and LTL syntax: AST, parser, printer and source-level rewriters."""

from __future__ import annotations

import dataclasses
import enum
import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping


def node(cls):
    """Frozen dataclass whose hash is computed once; formulas are shared DAGs."""
    cls = dataclass(frozen=True, eq=False)(cls)
    names = tuple(f.name for f in dataclasses.fields(cls))

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((cls.__name__,) + tuple(getattr(self, n) for n in names))
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not type(self) or hash(self) != hash(other):
            return False
        return all(getattr(self, n) == getattr(other, n) for n in names)

    cls.__hash__ = __hash__
    cls.__eq__ = __eq__
    return cls


class Formula:
    """Base class of all TeamLTL nodes. LTL formulas are the subset built from
    literals, constants, And, Or, Next, Until and WeakUntil."""

    def __str__(self) -> str:
        return render(self)


@node
class Prop(Formula):
    name: str


@node
class NegProp(Formula):
    name: str


@node
class Top(Formula):
    pass


@node
class Bottom(Formula):
    pass


@node
class And(Formula):
    left: Formula
    right: Formula


@node
class Or(Formula):
    """Split disjunction; on LTL formulas it is ordinary disjunction."""

    left: Formula
    right: Formula


@node
class BoolOr(Formula):
    left: Formula
    right: Formula


@node
class BoolNeg(Formula):
    child: Formula


@node
class Next(Formula):
    child: Formula


@node
class Until(Formula):
    left: Formula
    right: Formula


@node
class WeakUntil(Formula):
    left: Formula
    right: Formula


@node
class Dep(Formula):
    args: tuple
    target: Formula


@node
class Inc(Formula):
    left: tuple
    right: tuple

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise ValueError("inclusion atom needs tuples of equal length")


@node
class FlatAll(Formula):
    child: Formula


@node
class SubteamAll(Formula):
    child: Formula


@node
class NonEmpty(Formula):
    pass


@node
class LeftOr(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class BoolRelationFamily:
    """A nonempty set of n-ary Boolean relations, each a frozenset of bit tuples."""

    arity: int
    relations: frozenset
    name: str | None = None

    def __post_init__(self):
        if not self.relations:
            raise ValueError("relation family must be nonempty")
        for rel in self.relations:
            for tup in rel:
                if len(tup) != self.arity or any(b not in (0, 1) for b in tup):
                    raise ValueError(f"bad tuple {tup} for arity {self.arity}")

    @property
    def downward_closed(self) -> bool:
        return all(
            frozenset(sub) in self.relations
            for rel in self.relations
            for sub in _subsets(sorted(rel))
        )

    def sorted_relations(self) -> list[frozenset]:
        return sorted(self.relations, key=lambda r: (len(r), sorted(r)))


@node
class GenAtom(Formula):
    family: BoolRelationFamily
    args: tuple

    def __post_init__(self):
        if len(self.args) != self.family.arity:
            raise ValueError("generalised atom arity mismatch")


SplitOr = Or
NE = NonEmpty

LTL_KINDS = (Prop, NegProp, Top, Bottom, And, Or, Next, Until, WeakUntil)


def _subsets(items: list) -> Iterator[tuple]:
    return itertools.chain.from_iterable(
        itertools.combinations(items, n) for n in range(len(items) + 1)
    )


# ---------------------------------------------------------------- helpers


def F(f: Formula) -> Formula:
    return Until(Top(), f)


def G(f: Formula) -> Formula:
    return WeakUntil(f, Bottom())


def conj(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    if not fs:
        return Top()
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


def disj(fs: Iterable[Formula]) -> Formula:
    """Split disjunction of a list; the empty disjunction is Bottom."""
    fs = list(fs)
    if not fs:
        return Bottom()
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = Or(f, out)
    return out


def bool_disj(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    if not fs:
        raise ValueError("empty Boolean disjunction")
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = BoolOr(f, out)
    return out


def children(f: Formula) -> tuple:
    if isinstance(f, (Prop, NegProp, Top, Bottom, NonEmpty)) or getattr(f, "is_atom", False):
        return ()
    if isinstance(f, (BoolNeg, Next, FlatAll, SubteamAll)):
        return (f.child,)
    if isinstance(f, Dep):
        return f.args + (f.target,)
    if isinstance(f, Inc):
        return f.left + f.right
    if isinstance(f, GenAtom):
        return f.args
    return (f.left, f.right)


def subformulas(f: Formula) -> Iterator[Formula]:
    """Distinct subformulas, each once (DAG-aware)."""
    seen = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        yield g
        stack.extend(children(g))


def size(f: Formula) -> int:
    """Tree size (number of nodes counting shared subterms repeatedly)."""
    memo: dict = {}

    def go(g):
        s = memo.get(g)
        if s is None:
            s = 1 + sum(go(c) for c in children(g))
            memo[g] = s
        return s

    return go(f)


def props(f: Formula) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, (Prop, NegProp))}


def is_ltl(f: Formula) -> bool:
    return all(isinstance(g, LTL_KINDS) for g in subformulas(f))


def temporal_depth(f: Formula) -> int:
    memo: dict = {}

    def go(g):
        d = memo.get(g)
        if d is None:
            sub = max((go(c) for c in children(g)), default=0)
            d = sub + 1 if isinstance(g, (Next, Until, WeakUntil)) else sub
            memo[g] = d
        return d

    return go(f)


def _and(a: Formula, b: Formula) -> Formula:
    if isinstance(a, Top):
        return b
    if isinstance(b, Top):
        return a
    if isinstance(a, Bottom) or isinstance(b, Bottom):
        return Bottom()
    return And(a, b)


def negate(f: Formula, memo: dict | None = None) -> Formula:
    """Negation normal form of the classical negation of an LTL formula."""
    memo = {} if memo is None else memo
    out = memo.get(f)
    if out is not None:
        return out
    if isinstance(f, Prop):
        out = NegProp(f.name)
    elif isinstance(f, NegProp):
        out = Prop(f.name)
    elif isinstance(f, Top):
        out = Bottom()
    elif isinstance(f, Bottom):
        out = Top()
    elif getattr(f, "is_atom", False):
        out = f.negated()
    elif isinstance(f, And):
        out = Or(negate(f.left, memo), negate(f.right, memo))
    elif isinstance(f, Or):
        out = And(negate(f.left, memo), negate(f.right, memo))
    elif isinstance(f, Next):
        out = Next(negate(f.child, memo))
    elif isinstance(f, Until):
        nb = negate(f.right, memo)
        out = WeakUntil(nb, _and(negate(f.left, memo), nb))
    elif isinstance(f, WeakUntil):
        nb = negate(f.right, memo)
        out = Until(nb, _and(negate(f.left, memo), nb))
    else:
        raise ValueError(f"negate expects an LTL formula, got {type(f).__name__}")
    memo[f] = out
    return out


def iff(a: Formula, b: Formula) -> Formula:
    """NNF of a <-> b for LTL arguments."""
    return Or(And(a, b), And(negate(a), negate(b)))


# ---------------------------------------------------------------- lexer

KEYWORDS = {"X", "U", "W", "F", "G", "A", "A1", "NE", "T", "bot", "vv", "orl", "dep", "inc", "gen"}

_TOKEN = re.compile(r"\s*(?:(<->|->|[()\[\]{},;&|!~.@])|([A-Za-z_][A-Za-z0-9_]*|[0-9]+))")


class FormulaSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


def tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        tokens.append((m.group(1) or m.group(2), m.start(1) if m.group(1) else m.start(2)))
        pos = m.end()
    tokens.append(("<eof>", len(text)))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> str:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)][0]

    @property
    def pos(self) -> int:
        return self.tokens[self.i][1]

    def next(self) -> str:
        tok = self.tokens[self.i][0]
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        if self.peek() != tok:
            raise FormulaSyntaxError(f"expected {tok!r}, found {self.peek()!r}", self.pos)
        self.next()

    def name(self) -> str:
        tok = self.peek()
        if not _is_name(tok):
            raise FormulaSyntaxError(f"expected a proposition name, found {tok!r}", self.pos)
        return self.next()

    def done(self) -> None:
        if self.peek() != "<eof>":
            raise FormulaSyntaxError(f"unexpected {self.peek()!r}", self.pos)


def _is_name(tok: str) -> bool:
    return bool(re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*|[0-9]+", tok)) and tok not in KEYWORDS


# ---------------------------------------------------------------- parser


def parse_team_formula(text: str, families: Mapping[str, BoolRelationFamily] | None = None) -> Formula:
    ts = TokenStream(text)
    f = _Parser(ts, families or {}).orl()
    ts.done()
    return f


def parse_ltl(text: str) -> Formula:
    f = parse_team_formula(text)
    if not is_ltl(f):
        raise ValueError(f"not an LTL formula: {text}")
    return f


class _Parser:
    def __init__(self, ts: TokenStream, families: Mapping[str, BoolRelationFamily]):
        self.ts = ts
        self.families = families

    def _left_assoc(self, op, sub, cls):
        f = sub()
        while self.ts.peek() == op:
            self.ts.next()
            f = cls(f, sub())
        return f

    def orl(self):
        return self._left_assoc("orl", self.vv, LeftOr)

    def vv(self):
        return self._left_assoc("vv", self.split, BoolOr)

    def split(self):
        return self._left_assoc("|", self.conj, Or)

    def conj(self):
        return self._left_assoc("&", self.until, And)

    def until(self):
        left = self.unary()
        op = self.ts.peek()
        if op in ("U", "W"):
            self.ts.next()
            right = self.until()
            return Until(left, right) if op == "U" else WeakUntil(left, right)
        return left

    def unary(self):
        ts = self.ts
        tok = ts.peek()
        if tok == "!":
            ts.next()
            if not _is_name(ts.peek()):
                raise FormulaSyntaxError("negation applies only to propositions", ts.pos)
            return NegProp(ts.next())
        wrap = {"~": BoolNeg, "X": Next, "F": F, "G": G, "A1": FlatAll, "A": SubteamAll}.get(tok)
        if wrap is not None:
            ts.next()
            return wrap(self.unary())
        return self.primary()

    def primary(self):
        ts = self.ts
        tok = ts.peek()
        if tok == "(":
            ts.next()
            f = self.orl()
            ts.expect(")")
            return f
        if tok == "T":
            ts.next()
            return Top()
        if tok == "bot":
            ts.next()
            return Bottom()
        if tok == "NE":
            ts.next()
            return NonEmpty()
        if tok == "dep":
            ts.next()
            ts.expect("(")
            args = self._ltl_list(";")
            ts.expect(";")
            target = self._ltl()
            ts.expect(")")
            return Dep(tuple(args), target)
        if tok == "inc":
            ts.next()
            ts.expect("(")
            left = self._ltl_list(";")
            ts.expect(";")
            right = self._ltl_list(")")
            ts.expect(")")
            if len(left) != len(right):
                raise FormulaSyntaxError("inclusion atom tuples differ in length", ts.pos)
            return Inc(tuple(left), tuple(right))
        if tok == "gen":
            ts.next()
            ts.expect("[")
            family = self._family()
            ts.expect("]")
            ts.expect("(")
            args = self._ltl_list(")")
            ts.expect(")")
            if family.arity != len(args):
                if any(family.relations - {frozenset()}):
                    raise FormulaSyntaxError("generalised atom arity mismatch", ts.pos)
                family = dataclasses.replace(family, arity=len(args))
            return GenAtom(family, tuple(args))
        if _is_name(tok):
            return Prop(ts.next())
        raise FormulaSyntaxError(f"unexpected {tok!r}", ts.pos)

    def _ltl(self):
        pos = self.ts.pos
        f = self.orl()
        if not is_ltl(f):
            raise FormulaSyntaxError("atom arguments must be LTL formulas", pos)
        return f

    def _ltl_list(self, stop: str) -> list:
        out = []
        if self.ts.peek() == stop:
            return out
        out.append(self._ltl())
        while self.ts.peek() == ",":
            self.ts.next()
            out.append(self._ltl())
        return out

    def _family(self) -> BoolRelationFamily:
        ts = self.ts
        if ts.peek() != "{":
            pos = ts.pos
            name = ts.next()
            if name not in self.families:
                raise FormulaSyntaxError(f"unknown relation family {name!r}", pos)
            return self.families[name]
        rels = [self._relation()]
        while ts.peek() == ";":
            ts.next()
            rels.append(self._relation())
        return _family_from_relations(rels, None)

    def _relation(self) -> frozenset:
        ts = self.ts
        ts.expect("{")
        tuples = []
        while ts.peek() != "}":
            tuples.append(_parse_tuple(ts))
            if ts.peek() == ",":
                ts.next()
        ts.expect("}")
        return frozenset(tuples)


def _parse_tuple(ts: TokenStream) -> tuple:
    if ts.peek() == "(":
        ts.next()
        ts.expect(")")
        return ()
    pos = ts.pos
    tok = ts.next()
    if not re.fullmatch(r"[01]+", tok):
        raise FormulaSyntaxError(f"bad bit tuple {tok!r}", pos)
    return tuple(int(c) for c in tok)


def _family_from_relations(rels: list, name: str | None, arity: int | None = None) -> BoolRelationFamily:
    lengths = {len(t) for r in rels for t in r}
    if len(lengths) > 1:
        raise ValueError("relation family mixes tuple lengths")
    if lengths:
        arity = lengths.pop()
    return BoolRelationFamily(arity or 0, frozenset(rels), name)


def parse_relation_family(text: str, name: str | None = None, arity: int | None = None) -> BoolRelationFamily:
    """One relation per line, e.g. ``{01,11}``; ``{}`` is the empty relation."""
    rels = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        ts = TokenStream(line)
        rels.append(_Parser(ts, {})._relation())
        ts.done()
    return _family_from_relations(rels, name, arity)


def render_relation(rel: frozenset) -> str:
    return "{" + ",".join("".join(map(str, t)) or "()" for t in sorted(rel)) + "}"


# ---------------------------------------------------------------- printer


def render(f: Formula) -> str:
    """Fully parenthesised canonical text with F/G sugar."""
    memo: dict = {}

    def go(g):
        s = memo.get(g)
        if s is None:
            s = _render_node(g, go)
            memo[g] = s
        return s

    return go(f)


_BINARY = {And: "&", Or: "|", BoolOr: "vv", LeftOr: "orl", Until: "U", WeakUntil: "W"}
_UNARY = {Next: "X ", FlatAll: "A1 ", SubteamAll: "A ", BoolNeg: "~"}


def _render_node(f, go) -> str:
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, NegProp):
        return "!" + f.name
    if isinstance(f, Top):
        return "T"
    if isinstance(f, Bottom):
        return "bot"
    if isinstance(f, NonEmpty):
        return "NE"
    if isinstance(f, Until) and isinstance(f.left, Top):
        return "F " + go(f.right)
    if isinstance(f, WeakUntil) and isinstance(f.right, Bottom):
        return "G " + go(f.left)
    if type(f) in _UNARY:
        return _UNARY[type(f)] + go(f.child)
    if type(f) in _BINARY:
        return f"({go(f.left)} {_BINARY[type(f)]} {go(f.right)})"
    if isinstance(f, Dep):
        return f"dep({','.join(map(go, f.args))};{go(f.target)})"
    if isinstance(f, Inc):
        return f"inc({','.join(map(go, f.left))};{','.join(map(go, f.right))})"
    if isinstance(f, GenAtom):
        fam = f.family
        label = fam.name or ";".join(render_relation(r) for r in fam.sorted_relations())
        return f"gen[{label}]({','.join(map(go, f.args))})"
    raise TypeError(f"unknown node {f!r}")


# ---------------------------------------------------------------- atom elimination


def dep_family(n: int) -> BoolRelationFamily:
    """Relations over n argument bits plus one target bit that are functional."""
    domain = list(itertools.product((0, 1), repeat=n))
    rels = set()
    for choice in itertools.product((None, 0, 1), repeat=len(domain)):
        rels.add(frozenset(a + (v,) for a, v in zip(domain, choice) if v is not None))
    return BoolRelationFamily(n + 1, frozenset(rels), f"dep{n}")


def inc_family(n: int) -> BoolRelationFamily:
    """Relations over 2n bits whose left halves occur among their right halves."""
    tuples = list(itertools.product((0, 1), repeat=2 * n))
    rels = set()
    for sub in _subsets(tuples):
        lefts = {t[:n] for t in sub}
        rights = {t[n:] for t in sub}
        if lefts <= rights:
            rels.add(frozenset(sub))
    return BoolRelationFamily(2 * n, frozenset(rels), f"inc{n}")


def _literal(f: Formula, bit: int) -> Formula:
    return f if bit else negate(f)


def expand_gen_atom(atom: GenAtom) -> Formula:
    """Boolean disjunction over R in G of the split disjunction over tuples of R."""
    fam = atom.family
    dc = fam.downward_closed
    disjuncts = []
    for rel in fam.sorted_relations():
        parts = []
        for tup in sorted(rel):
            flat = FlatAll(conj(_literal(a, b) for a, b in zip(atom.args, tup)))
            parts.append(flat if dc else And(flat, NonEmpty()))
        disjuncts.append(disj(parts))
    return bool_disj(disjuncts)


def eliminate_generalized_atoms(f: Formula) -> Formula:
    memo: dict = {}

    def go(g):
        out = memo.get(g)
        if out is not None:
            return out
        if isinstance(g, Dep):
            out = expand_gen_atom(GenAtom(dep_family(len(g.args)), g.args + (g.target,)))
        elif isinstance(g, Inc):
            out = expand_gen_atom(GenAtom(inc_family(len(g.left)), g.left + g.right))
        elif isinstance(g, GenAtom):
            out = expand_gen_atom(g)
        else:
            out = rebuild(g, [go(c) for c in children(g)])
        memo[g] = out
        return out

    return go(f)


def rebuild(f: Formula, kids: list) -> Formula:
    """Same node kind as f with new children."""
    if not kids:
        return f
    if isinstance(f, (BoolNeg, Next, FlatAll, SubteamAll)):
        return type(f)(kids[0])
    if isinstance(f, Dep):
        return Dep(tuple(kids[:-1]), kids[-1])
    if isinstance(f, Inc):
        n = len(f.left)
        return Inc(tuple(kids[:n]), tuple(kids[n:]))
    if isinstance(f, GenAtom):
        return GenAtom(f.family, tuple(kids))
    return type(f)(kids[0], kids[1])


# ---------------------------------------------------------------- NE elimination under A1


def eliminate_flat_nonclassical(f: Formula) -> Formula:
    """LTL formula psi with A1 f equivalent to A1 psi.

    Works bottom-up on pairs (has NE conjunct, LTL body); every rule preserves
    truth on teams with at most one trace. The final NE conjunct is dropped.
    """
    memo: dict = {}

    def go(g) -> tuple[bool, Formula]:
        out = memo.get(g)
        if out is not None:
            return out
        if isinstance(g, (Prop, NegProp, Top, Bottom)):
            out = (False, g)
        elif isinstance(g, NonEmpty):
            out = (True, Top())
        elif isinstance(g, FlatAll):
            out = (False, go(g.child)[1])
        elif isinstance(g, Next):
            ne, body = go(g.child)
            out = (ne, Next(body))
        elif isinstance(g, (And, Or, BoolOr, Until, WeakUntil)):
            lne, lb = go(g.left)
            rne, rb = go(g.right)
            out = _combine(type(g), lne, lb, rne, rb)
        else:
            raise ValueError(f"unsupported node {type(g).__name__} under A1")
        memo[g] = out
        return out

    return go(f)[1]


def _combine(kind, lne: bool, lb: Formula, rne: bool, rb: Formula) -> tuple[bool, Formula]:
    if kind is And:
        return lne or rne, _and(lb, rb)
    if kind is Or:
        if lne and rne:
            return True, _and(lb, rb)
        if lne:
            return True, lb
        if rne:
            return True, rb
        return False, Or(lb, rb)
    if kind is BoolOr:
        return lne and rne, Or(lb, rb)
    if kind is Until:
        return rne, Until(lb, rb)
    return lne and rne, WeakUntil(lb, rb)


# ---------------------------------------------------------------- fragments


class Fragment(enum.Enum):
    PLAIN = "PlainTeamLTL"
    KCOHERENT = "KCoherentEligible"
    LEFT_FLAT = "LeftFlat"
    GENERAL = "GeneralBorNEFlat"


@dataclass(frozen=True)
class Classification:
    """Every fragment the formula belongs to; reason is set when there is none."""

    fragments: frozenset
    reason: str | None = None

    def __contains__(self, frag: Fragment) -> bool:
        return frag in self.fragments

    @property
    def supported(self) -> bool:
        return bool(self.fragments)


_LITERALS = (Prop, NegProp, Top, Bottom)
_ALLOWED = {
    Fragment.PLAIN: set(LTL_KINDS),
    Fragment.KCOHERENT: set(LTL_KINDS) | {BoolOr, BoolNeg, NonEmpty, SubteamAll, FlatAll, Dep, Inc, GenAtom},
    Fragment.LEFT_FLAT: set(LTL_KINDS) | {BoolOr, FlatAll},
    Fragment.GENERAL: set(LTL_KINDS) | {BoolOr, NonEmpty, FlatAll},
}


def is_syntactically_flat(f: Formula) -> bool:
    if isinstance(f, _LITERALS) or isinstance(f, FlatAll):
        return True
    if isinstance(f, (And, Or)):
        return is_syntactically_flat(f.left) and is_syntactically_flat(f.right)
    if isinstance(f, Next):
        return is_syntactically_flat(f.child)
    return False


def classify_fragment(f: Formula) -> Classification:
    kinds = {type(g) for g in subformulas(f)}
    frags = {frag for frag, allowed in _ALLOWED.items() if kinds <= allowed}
    if Fragment.LEFT_FLAT in frags:
        lefts = [g.left for g in subformulas(f) if isinstance(g, (Until, WeakUntil))]
        if not all(is_syntactically_flat(x) for x in lefts):
            frags.discard(Fragment.LEFT_FLAT)
    if frags:
        return Classification(frozenset(frags))
    extra = sorted(k.__name__ for k in kinds - _ALLOWED[Fragment.KCOHERENT] - _ALLOWED[Fragment.GENERAL])
    return Classification(frozenset(), f"no supported fragment admits {', '.join(extra) or 'this mix'}")


def is_downward_closed(f: Formula) -> bool:
    """Syntactic check: built from LTL connectives, vv, A1, A, dep and
    generalised atoms over downward closed families."""
    for g in subformulas(f):
        if isinstance(g, GenAtom):
            if not g.family.downward_closed:
                return False
        elif not isinstance(g, LTL_KINDS + (BoolOr, FlatAll, SubteamAll, Dep)):
            return False
    return True
