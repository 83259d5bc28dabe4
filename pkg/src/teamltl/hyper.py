"""HyperLTL / HyperQPTL / HyperQPTL+ formulas and their bounded-exact evaluation
over finite teams of lassos.

Evaluation strategy:

* The prenex prefix is pushed back into the body (miniscoping), so every
  quantifier only ranges over the subformulas that mention its variable.
* Quantifier-free parts are evaluated as bit vectors over the positions of
  the joint lasso, for all assignments of the enclosing trace variables at
  once.
* An existential block over a universally quantified trace matrix is solved
  by propagating the sets of satisfying-trace masks bottom-up instead of
  enumerating the joint witness space.
* A non-uniform existential proposition that only occurs in subteam markers
  F(x & p) is replaced by subteam-valued variables, which is exact.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .formula import (
    And, Bottom, Formula, Next, Or, Top, TokenStream, Until, WeakUntil, F, G,
    FormulaSyntaxError, KEYWORDS, children, negate, node, temporal_depth, _is_name,
)
from .traces import LassoTrace, canonicalize, letter_at, normalize_team, reduce_index, shape


class QKind(enum.Enum):
    EXISTS = "exists"
    FORALL = "forall"
    UEXISTS = "uexists"
    UFORALL = "uforall"
    PEXISTS = "existsp"
    PFORALL = "forallp"

    @property
    def existential(self) -> bool:
        return self in (QKind.EXISTS, QKind.UEXISTS, QKind.PEXISTS)

    @property
    def sort(self) -> str:
        if self in (QKind.EXISTS, QKind.FORALL):
            return "trace"
        if self in (QKind.UEXISTS, QKind.UFORALL):
            return "uniform"
        return "nonuniform"


# Sequence shapes a propositional quantifier may range over.
# any: all bounded lassos; one: true at exactly one position; opt: at most one;
# span: an interval [a,b) or [a,inf), possibly empty; const: always or never.
SHAPES = ("any", "one", "opt", "span", "const")
LEVEL_SHAPES = ("one", "opt", "span")


@dataclass(frozen=True)
class Quantifier:
    kind: QKind
    var: str
    shape: str = "any"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")

    def __str__(self) -> str:
        tag = "" if self.shape == "any" else f"[{self.shape}]"
        return f"{self.kind.value}{tag} {self.var}."


@node
class IProp(Formula):
    """p@pi; a bare uniform proposition has trace None."""

    name: str
    trace: str | None = None
    is_atom = True

    def negated(self):
        return INegProp(self.name, self.trace)


@node
class INegProp(Formula):
    name: str
    trace: str | None = None
    is_atom = True

    def negated(self):
        return IProp(self.name, self.trace)


@node
class Member(Formula):
    """Internal: the trace of `trace` lies (or not) in the subteam variable `var`."""

    var: str
    trace: str
    positive: bool = True
    is_atom = True

    def negated(self):
        return Member(self.var, self.trace, not self.positive)


@dataclass(frozen=True)
class HyperFormula:
    prefix: tuple
    body: Formula
    depth_hint: int | None = None
    # (var, n) pairs: the level of var lies within n temporal steps of the
    # evaluation index, so its window can be max(i, S) + 1 + n * (P + 1)
    level_hint: tuple = ()

    def __str__(self) -> str:
        return render_hyper(self)

    @property
    def bound_vars(self) -> set:
        return {q.var for q in self.prefix}

    def free_vars(self) -> set:
        """Trace variables and non-AP propositions used but not bound.

        A literal p@pi contributes pi; a bare literal p contributes p."""
        out = set()
        for g in _atoms(self.body):
            if isinstance(g, Member):
                out |= {g.var, g.trace}
            elif g.trace is None:
                out.add(g.name)
            else:
                out.add(g.trace)
        return out - self.bound_vars


@dataclass(frozen=True)
class HyperAssignment:
    """Trace variables mapped to team members, uniform propositions to
    sequences (lassos over the single proposition)."""

    traces: Mapping = field(default_factory=dict)
    props: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class QuantBounds:
    stem_max: int | None = None
    loop_lcm: int | None = None
    cap: int = 200_000


class BoundOverflow(RuntimeError):
    """The bounded search space exceeds the configured cap; no verdict."""


class UnboundVariable(ValueError):
    pass


def _atoms(f: Formula):
    seen = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        if getattr(g, "is_atom", False):
            yield g
        else:
            stack.extend(children(g))


# ---------------------------------------------------------------- parser / printer


_QWORDS = {k.value: k for k in QKind}


def parse_hyper(text: str) -> HyperFormula:
    ts = TokenStream(text)
    prefix = []
    while ts.peek() in _QWORDS and ts.peek(1) not in ("@",):
        kind = _QWORDS[ts.next()]
        shape = "any"
        if ts.peek() == "[":
            ts.next()
            shape = ts.next()
            if shape not in SHAPES:
                raise FormulaSyntaxError(f"unknown shape {shape!r}", ts.pos)
            ts.expect("]")
        var = ts.name()
        ts.expect(".")
        prefix.append(Quantifier(kind, var, shape))
    names = [q.var for q in prefix]
    if len(set(names)) != len(names):
        raise FormulaSyntaxError("variable bound twice in prefix", 0)
    body = _HyperBodyParser(ts).iff()
    ts.done()
    return HyperFormula(tuple(prefix), body)


class _HyperBodyParser:
    def __init__(self, ts: TokenStream):
        self.ts = ts

    def iff(self):
        f = self.imp()
        while self.ts.peek() == "<->":
            self.ts.next()
            g = self.imp()
            f = Or(And(f, g), And(negate(f), negate(g)))
        return f

    def imp(self):
        f = self.disj()
        if self.ts.peek() == "->":
            self.ts.next()
            return Or(negate(f), self.imp())
        return f

    def disj(self):
        f = self.conj()
        while self.ts.peek() == "|":
            self.ts.next()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.until()
        while self.ts.peek() == "&":
            self.ts.next()
            f = And(f, self.until())
        return f

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
            return negate(self.unary())
        wrap = {"X": Next, "F": F, "G": G}.get(tok)
        if wrap is not None:
            ts.next()
            return wrap(self.unary())
        if tok == "(":
            ts.next()
            f = self.iff()
            ts.expect(")")
            return f
        if tok == "T":
            ts.next()
            return Top()
        if tok == "bot":
            ts.next()
            return Bottom()
        name = ts.name()
        if ts.peek() == "@":
            ts.next()
            return IProp(name, ts.name())
        return IProp(name)


def render_body(f: Formula) -> str:
    memo: dict = {}

    def go(g):
        s = memo.get(g)
        if s is not None:
            return s
        if isinstance(g, (IProp, INegProp)):
            s = ("!" if isinstance(g, INegProp) else "") + g.name + (f"@{g.trace}" if g.trace else "")
        elif isinstance(g, Member):
            s = f"{'' if g.positive else '!'}member({g.var},{g.trace})"
        elif isinstance(g, Top):
            s = "T"
        elif isinstance(g, Bottom):
            s = "bot"
        elif isinstance(g, Until) and isinstance(g.left, Top):
            s = "F " + go(g.right)
        elif isinstance(g, WeakUntil) and isinstance(g.right, Bottom):
            s = "G " + go(g.left)
        elif isinstance(g, Next):
            s = "X " + go(g.child)
        else:
            op = {And: "&", Or: "|", Until: "U", WeakUntil: "W"}[type(g)]
            s = f"({go(g.left)} {op} {go(g.right)})"
        memo[g] = s
        return s

    return go(f)


def render_hyper(phi: HyperFormula) -> str:
    return " ".join([str(q) for q in phi.prefix] + [render_body(phi.body)])


def hyper_size(phi: HyperFormula) -> int:
    """Tree size of the body plus one per quantifier."""
    from .formula import size

    return len(phi.prefix) + size(phi.body)


# ---------------------------------------------------------------- marker elimination


def _marker(g: Formula, p: str):
    """(x, pi, positive) if g is F(x@pi & p@pi) or G(!x@pi | !p@pi)."""
    if isinstance(g, Until) and isinstance(g.left, Top) and isinstance(g.right, And):
        a, b, positive, lit = g.right.left, g.right.right, True, IProp
    elif isinstance(g, WeakUntil) and isinstance(g.right, Bottom) and isinstance(g.left, Or):
        a, b, positive, lit = g.left.left, g.left.right, False, INegProp
    else:
        return None
    if not (isinstance(a, lit) and isinstance(b, lit) and a.trace and a.trace == b.trace):
        return None
    if b.name == p and a.name != p:
        return a.name, a.trace, positive
    if a.name == p and b.name != p:
        return b.name, b.trace, positive
    return None


def _skeleton_leaves(f: Formula):
    seen = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        if isinstance(g, (And, Or)):
            stack += [g.left, g.right]
        else:
            yield g


def eliminate_markers(phi: HyperFormula) -> tuple[HyperFormula, set]:
    """Replace a leading non-uniform existential p that only occurs in markers.

    Partner variables become subteam-valued; returns the rewritten formula and
    the set of subteam variable names (empty when no rewrite applies)."""
    if not phi.prefix or phi.prefix[0].kind is not QKind.PEXISTS:
        return phi, set()
    p = phi.prefix[0].var
    later = {q.var: q for q in phi.prefix[1:]}
    partners = set()
    replace = {}
    for leaf in _skeleton_leaves(phi.body):
        m = _marker(leaf, p)
        if m is not None:
            partners.add(m[0])
            replace[leaf] = Member(*m)
    for x in partners:
        q = later.get(x)
        if q is None or q.kind is not QKind.UEXISTS or q.shape != "one":
            return phi, set()
    for leaf in _skeleton_leaves(phi.body):
        if leaf in replace:
            continue
        for g in _atoms(leaf):
            if isinstance(g, (IProp, INegProp)) and (g.name == p or g.name in partners):
                return phi, set()

    memo: dict = {}

    def go(g):
        out = memo.get(g)
        if out is None:
            if g in replace:
                out = replace[g]
            elif isinstance(g, (And, Or)):
                out = type(g)(go(g.left), go(g.right))
            else:
                out = g
            memo[g] = out
        return out

    return HyperFormula(phi.prefix[1:], go(phi.body), phi.depth_hint, phi.level_hint), partners


# ---------------------------------------------------------------- miniscoping tree


@dataclass
class _Var:
    name: str
    exists: bool
    sort: str  # trace | uniform | subteam | nonuniform
    shape: str = "any"
    window: int = 0


class _Leaf:
    __slots__ = ("f", "free", "cache")

    def __init__(self, f, free):
        self.f, self.free, self.cache = f, free, {}


class _Conn:
    __slots__ = ("op", "kids", "free", "cache")

    def __init__(self, op, kids):
        self.op, self.kids = op, kids
        self.free = frozenset().union(*(k.free for k in kids))
        self.cache = {}


class _Quant:
    __slots__ = ("var", "child", "free", "cache")

    def __init__(self, var, child):
        self.var, self.child = var, child
        self.free = child.free - {var.name}
        self.cache = {}


def _flatten(f, cls):
    out, stack = [], [f]
    while stack:
        g = stack.pop()
        if isinstance(g, cls):
            stack += [g.right, g.left]
        else:
            out.append(g)
    return out


class _Scoper:
    def __init__(self, vars_: dict, fixed: set):
        self.vars = vars_
        self.fixed = fixed
        self.free_memo: dict = {}

    def free(self, f) -> frozenset:
        v = self.free_memo.get(f)
        if v is not None:
            return v
        if isinstance(f, Member):
            v = frozenset((f.var, f.trace))
        elif isinstance(f, (IProp, INegProp)):
            var = self.vars.get(f.name)
            if f.name in self.fixed:
                v = frozenset()
            elif var is not None and var.sort in ("uniform", "subteam"):
                v = frozenset((f.name,))
            elif var is not None:
                v = frozenset((f.name, f.trace))
            elif f.trace is None:
                raise UnboundVariable(f"proposition {f.name!r} is neither quantified nor assigned")
            else:
                v = frozenset((f.trace,))
        else:
            v = frozenset().union(*(self.free(c) for c in children(f)))
        self.free_memo[f] = v
        return v

    def leaf(self, f):
        return _Leaf(f, self.free(f))

    def expand(self, leaf: _Leaf):
        f = leaf.f
        if isinstance(f, (And, Or)):
            cls = type(f)
            return _Conn("and" if cls is And else "or", [self.leaf(g) for g in _flatten(f, cls)])
        return None

    def push(self, var: _Var, t):
        v = var.name
        if v not in t.free:
            return t
        if isinstance(t, _Leaf):
            conn = self.expand(t)
            if conn is not None:
                inside = sum(v in k.free for k in conn.kids)
                if _distributes(var, conn.op) or inside < len(conn.kids):
                    return self.push(var, conn)
            return _Quant(var, t)
        if isinstance(t, _Conn):
            if _distributes(var, t.op):
                return _Conn(t.op, [self.push(var, k) for k in t.kids])
            inside = [k for k in t.kids if v in k.free]
            outside = [k for k in t.kids if v not in k.free]
            if len(inside) == 1:
                pushed = self.push(var, inside[0])
            else:
                pushed = _Quant(var, _Conn(t.op, inside))
            return pushed if not outside else _Conn(t.op, outside + [pushed])
        if t.var.exists == var.exists:
            return _Quant(t.var, self.push(var, t.child))
        return _Quant(var, t)

    def expand_all(self, t):
        """Boolean skeleton fully expanded; used below a universal trace block."""
        if isinstance(t, _Leaf):
            conn = self.expand(t)
            return t if conn is None else self.expand_all(conn)
        if isinstance(t, _Conn):
            kids = []
            for k in t.kids:
                k = self.expand_all(k)
                if isinstance(k, _Conn) and k.op == t.op:
                    kids += k.kids
                else:
                    kids.append(k)
            return _Conn(t.op, kids)
        return t


def _distributes(var: _Var, op: str) -> bool:
    return (var.exists and op == "or") or (not var.exists and op == "and")


def _quantifier_free(t) -> bool:
    if isinstance(t, _Leaf):
        return True
    if isinstance(t, _Conn):
        return all(_quantifier_free(k) for k in t.kids)
    return False


# ---------------------------------------------------------------- evaluator


class _Evaluator:
    def __init__(self, team, i, vars_, fixed_bits, bounds, trace_env):
        self.team = team
        self.n = len(team)
        self.full_mask = (1 << self.n) - 1
        self.vars = vars_
        self.fixed_bits = fixed_bits
        self.bounds = bounds
        self.i = i
        self.trace_env = trace_env
        self.lit_cache: dict = {}

    def setup_shape(self, stem: int, period: int):
        self.J, self.P = stem, period
        self.H = stem + period
        self.ri = reduce_index(self.i, stem, period)
        self.lo = min(self.ri, stem)
        self.word_mask = ((1 << self.H) - 1) & ~((1 << self.lo) - 1)

    # -- domains

    def domain(self, var: _Var) -> list:
        if var.sort == "trace":
            return list(range(self.n))
        if var.sort == "subteam":
            return list(range(1 << self.n))
        seqs = self.sequences(var)
        if var.sort == "uniform":
            return seqs
        size = len(seqs) ** self.n
        if size > self.bounds.cap:
            raise BoundOverflow(f"{size} relabelings of {var.name} exceed cap {self.bounds.cap}")
        return list(itertools.product(seqs, repeat=self.n))

    def sequences(self, var: _Var) -> list:
        lo, H, full = self.lo, self.H, self.word_mask
        w = min(max(var.window, lo), self.J)
        if var.shape == "const":
            return [0, full]
        if var.shape in ("one", "opt"):
            out = [1 << k for k in range(lo, w)]
            if var.shape == "opt" or lo > 0 or not out:
                out.append(0)
            return out
        if var.shape == "span":
            out = {0}
            for a in range(lo, w + 1):
                out.add(full & ~((1 << a) - 1))
                for b in range(a + 1, w + 1):
                    out.add(((1 << b) - 1) & ~((1 << a) - 1))
            return sorted(out)
        count = 1 << (H - lo)
        if count > self.bounds.cap:
            raise BoundOverflow(f"{count} sequences for {var.name} exceed cap {self.bounds.cap}")
        return [s << lo for s in range(count)]

    # -- bit vectors

    def trace_bits(self, t: int, p: str) -> int:
        key = (t, p)
        v = self.lit_cache.get(key)
        if v is None:
            word = self.team[t]
            v = sum(1 << j for j in range(self.H) if p in letter_at(word, j))
            self.lit_cache[key] = v
        return v

    def vector(self, per_block: list) -> int:
        H = self.H
        out = 0
        for b, bits in enumerate(per_block):
            out |= bits << (b * H)
        return out

    def atom_vector(self, g, env, tvars, assigns) -> int:
        H, full = self.H, (1 << self.H) - 1
        if isinstance(g, Member):
            if g.trace in tvars:
                j = tvars.index(g.trace)
                per = [full if ((env[g.var] >> a[j]) & 1) == g.positive else 0 for a in assigns]
            else:
                val = full if ((env[g.var] >> env[g.trace]) & 1) == g.positive else 0
                per = [val] * len(assigns)
            return self.vector(per)
        neg = isinstance(g, INegProp)
        var = self.vars.get(g.name)
        if g.name in self.fixed_bits or (var is not None and var.sort == "uniform"):
            bits = self.fixed_bits[g.name] if g.name in self.fixed_bits else env[g.name]
            if neg:
                bits = full & ~bits
            return self.vector([bits] * len(assigns))

        def bits_of_trace(t):
            if var is not None:
                b = env[g.name][t]
            else:
                b = self.trace_bits(t, g.name)
            return full & ~b if neg else b

        if g.trace in tvars:
            j = tvars.index(g.trace)
            return self.vector([bits_of_trace(a[j]) for a in assigns])
        if g.trace not in env:
            raise UnboundVariable(f"trace variable {g.trace!r} is unbound")
        return self.vector([bits_of_trace(env[g.trace])] * len(assigns))

    def table(self, t, env: dict, tvars: tuple) -> int:
        """Truth of quantifier-free t at the evaluation index for every
        assignment of tvars (product order, last variable fastest)."""
        key = (tvars,) + tuple(env[v] for v in sorted(t.free) if v not in tvars)
        v = t.cache.get(key)
        if v is not None:
            return v
        n_assign = self.n ** len(tvars)
        if isinstance(t, _Leaf):
            assigns = list(itertools.product(range(self.n), repeat=len(tvars)))
            vec = self.leaf_vector(t.f, env, tvars, assigns)
            v = 0
            for b in range(n_assign):
                v |= ((vec >> (b * self.H + self.ri)) & 1) << b
        else:
            ones = (1 << n_assign) - 1
            v = ones if t.op == "and" else 0
            for k in t.kids:
                kv = self.table(k, env, tvars)
                if t.op == "and":
                    v &= kv
                    if not v:
                        break
                else:
                    v |= kv
                    if v == ones:
                        break
        t.cache[key] = v
        return v

    def leaf_vector(self, f, env, tvars, assigns) -> int:
        H, J = self.H, self.J
        blocks = len(assigns)
        lsb = self.vector([1] * blocks)
        top = lsb << (H - 1)
        full = (1 << (H * blocks)) - 1
        memo: dict = {}

        def nxt(x):
            return ((x >> 1) & ~top) | (((x >> J) & lsb) << (H - 1))

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
                v = self.atom_vector(g, env, tvars, assigns)
            memo[g] = v
            return v

        return go(f)

    # -- tree evaluation

    def holds(self, t, env: dict) -> bool:
        key = tuple(env[v] for v in sorted(t.free))
        v = t.cache.get(key)
        if v is not None:
            return v
        if isinstance(t, _Leaf):
            v = bool(self.table(t, env, ()))
        elif isinstance(t, _Conn):
            if t.op == "and":
                v = all(self.holds(k, env) for k in t.kids)
            else:
                v = any(self.holds(k, env) for k in t.kids)
        else:
            v = self.quant(t, env)
        t.cache[key] = v
        return v

    def quant(self, t: _Quant, env: dict) -> bool:
        chain, inner = [], t
        while isinstance(inner, _Quant) and inner.var.sort == "trace":
            chain.append(inner.var)
            inner = inner.child
        if chain and _quantifier_free(inner):
            return self.fold(inner, env, chain)
        chain, inner = [], t
        while isinstance(inner, _Quant) and inner.var.exists:
            chain.append(inner.var)
            inner = inner.child
        if (chain and isinstance(inner, _Quant) and not inner.var.exists
                and inner.var.sort == "trace" and _quantifier_free(inner.child)):
            return self.families(chain, inner, env)
        var = t.var
        vals = self.domain(var)
        test = any if var.exists else all
        return test(self.holds(t.child, {**env, var.name: val}) for val in vals)

    def fold(self, inner, env, chain) -> bool:
        tvars = tuple(v.name for v in chain)
        tab = self.table(inner, env, tvars)
        vals = [(tab >> b) & 1 for b in range(self.n ** len(chain))]
        for var in reversed(chain):
            test = any if var.exists else all
            vals = [test(vals[g * self.n:(g + 1) * self.n]) for g in range(len(vals) // self.n)]
        return bool(vals[0])

    def families(self, chain, forall_node, env) -> bool:
        plan = forall_node.cache.get("plan")
        if plan is None:
            matrix = self.scoper.expand_all(forall_node.child)
            names = {v.name: v for v in chain}
            lca: dict = {}
            for name in names:
                node_ = matrix
                while isinstance(node_, _Conn):
                    inside = [k for k in node_.kids if name in k.free]
                    if len(inside) != 1:
                        break
                    node_ = inside[0]
                lca.setdefault(id(node_), []).append(names[name])
            plan = (matrix, lca)
            forall_node.cache["plan"] = plan
        matrix, lca = plan
        pi = (forall_node.var.name,)
        full = self.full_mask
        fam_memo: dict = {}

        def fam(t, env):
            key = (id(t),) + tuple((v, env[v]) for v in sorted(t.free) if v in env)
            got = fam_memo.get(key)
            if got is not None:
                return got
            here = lca.get(id(t), [])
            result: set = set()
            for vals in itertools.product(*(self.domain(v) for v in here)):
                env2 = {**env, **{v.name: x for v, x in zip(here, vals)}}
                if isinstance(t, _Leaf):
                    masks = {self.table(t, env2, pi)}
                else:
                    masks = {full} if t.op == "and" else {0}
                    for k in t.kids:
                        sub = fam(k, env2)
                        if t.op == "and":
                            masks = _maximal({a & b for a in masks for b in sub})
                        else:
                            masks = _maximal({a | b for a in masks for b in sub})
                result |= masks
                if full in result:
                    break
            result = _maximal(result)
            fam_memo[key] = result
            return result

        return full in fam(matrix, env)


def _maximal(masks: set) -> set:
    ordered = sorted(masks, key=lambda m: -bin(m).count("1"))
    keep: list = []
    for m in ordered:
        if not any(m | k == k for k in keep):
            keep.append(m)
    return set(keep)


def _assign_windows(t, base: int, step: int, forall_depth: int = 0) -> None:
    if isinstance(t, _Quant):
        var = t.var
        if var.sort in ("uniform", "nonuniform"):
            var.window = base + step * (2 * forall_depth + (0 if var.exists else 1))
        deeper = forall_depth + (var.shape in LEVEL_SHAPES and not var.exists)
        _assign_windows(t.child, base, step, deeper)
    elif isinstance(t, _Conn):
        for k in t.kids:
            _assign_windows(k, base, step, forall_depth)


def _seq_bits(seq: LassoTrace, name: str, length: int) -> int:
    return sum(1 << j for j in range(length) if name in letter_at(seq, j))


def eval_hyper(traces: Iterable[LassoTrace], assignment: HyperAssignment | None, i: int,
               phi: HyperFormula, bounds: QuantBounds | None = None) -> bool:
    """Truth of phi on the team at index i; see the module docstring.

    Level-shaped propositional variables get windows of admissible positions:
    base + M * (2k + [universal]) where k counts universal level variables
    enclosing it, M = P * (1 + temporal depth) and base = max(i, S) + M.
    A level hint replaces this by max(i, S) + 1 + n * (P + 1).
    """
    bounds = bounds or QuantBounds()
    assignment = assignment or HyperAssignment()
    team = list(normalize_team(traces))
    index = {t: j for j, t in enumerate(team)}

    trace_env = {}
    for var, t in assignment.traces.items():
        t = canonicalize(t)
        if t not in index:
            raise ValueError(f"trace assigned to {var} is not in the team")
        trace_env[var] = index[t]

    missing = phi.free_vars() - set(trace_env) - set(assignment.props)
    if missing:
        raise UnboundVariable(f"unbound variables: {sorted(missing)}")

    if not team:
        for q in phi.prefix:
            if q.kind.sort == "trace":
                return q.kind is QKind.FORALL

    phi2, subteam_vars = eliminate_markers(phi)
    vars_ = {}
    for q in phi2.prefix:
        sort = "subteam" if q.var in subteam_vars else q.kind.sort
        vars_[q.var] = _Var(q.var, q.kind.existential, sort, q.shape)

    ev = _Evaluator(team, i, vars_, {}, bounds, trace_env)
    scoper = _Scoper(vars_, set(assignment.props))
    ev.scoper = scoper
    tree = scoper.leaf(phi2.body)
    for q in reversed(phi2.prefix):
        tree = scoper.push(vars_[q.var], tree)

    stem, period = shape(team)
    for seq in assignment.props.values():
        stem = max(stem, len(seq.stem))
        period = math.lcm(period, len(seq.loop))
    if bounds.loop_lcm:
        period = math.lcm(period, bounds.loop_lcm)
    depth = phi.depth_hint if phi.depth_hint is not None else temporal_depth(phi.body)
    step = period * (1 + depth)
    base = bounds.stem_max if bounds.stem_max is not None else max(i, stem) + step
    _assign_windows(tree, base, step)
    hints = dict(phi.level_hint) if bounds.stem_max is None else {}
    for name, n in hints.items():
        if name in vars_:
            vars_[name].window = max(i, stem) + 1 + n * (period + 1)
    unhinted = [v for v in vars_.values()
                if v.sort in ("uniform", "nonuniform") and v.shape != "const" and v.name not in hints]
    joint_stem = max([stem, i + 1] + [v.window for v in vars_.values()] + ([base] if unhinted else []))
    if any(v.sort == "nonuniform" for v in vars_.values()):
        joint_stem = max(joint_stem, i + (1 << len(team)))
        for v in vars_.values():
            v.window = max(v.window, i + (1 << len(team)))
    ev.setup_shape(joint_stem, period)
    ev.fixed_bits = {name: _seq_bits(seq, name, ev.H) for name, seq in assignment.props.items()}
    return ev.holds(tree, dict(trace_env))
