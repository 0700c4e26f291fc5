"""First-order logic over one binary relation, its S/P split and hub constants.

Formulas are immutable trees.  :func:`evaluate` decides truth on a finite
:class:`~uext.structure.Structure` by exhaustive quantifier expansion; ``R``
is the structure's edge set and ``S``/``P`` come from
:func:`~uext.structure.decompose`.  Constants are written ``d_<hub>``.
Lower-case unary predicates ``p(x)`` exist only to carry modal valuations
through the standard translation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Union

from ._lexer import TokenStream
from .errors import CapExceeded, InputError
from .structure import Structure, decompose

DEFAULT_EVAL_CAP = 10**7
DEFAULT_EF_CAP = 4

_KEYWORDS = {"exists", "forall", "true", "false"}
_CONST_RE = re.compile(r"d_[A-Za-z0-9_]+$")
_VAR_RE = re.compile(r"[a-z][A-Za-z0-9_]*$")


# -- syntax ------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    @property
    def hub(self) -> str:
        return self.name[2:]

    def __str__(self):
        return self.name


Term = Union[Var, Const]


class Formula:
    def __str__(self):
        return format_fo(self)

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True, eq=True)
class Top(Formula):
    pass


@dataclass(frozen=True, eq=True)
class Bot(Formula):
    pass


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    rel: str  # "R", "S" or "P"
    left: Term
    right: Term


@dataclass(frozen=True, eq=True)
class Pred(Formula):
    name: str
    arg: Term


@dataclass(frozen=True, eq=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True, eq=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True, eq=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True, eq=True)
class Forall(Formula):
    var: str
    body: Formula


def conj(parts: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; the empty conjunction is ``true``."""
    result = None
    for p in parts:
        result = p if result is None else And(result, p)
    return Top() if result is None else result


def disj(parts: Iterable[Formula]) -> Formula:
    result = None
    for p in parts:
        result = p if result is None else Or(result, p)
    return Bot() if result is None else result


def exists_many(names: Iterable[str], body: Formula) -> Formula:
    for name in reversed(list(names)):
        body = Exists(name, body)
    return body


def term(name: str) -> Term:
    return Const(name) if name.startswith("d_") else Var(name)


def free_vars(f: Formula) -> frozenset[str]:
    match f:
        case Top() | Bot():
            return frozenset()
        case Atom(_, l, r) | Eq(l, r):
            return frozenset(t.name for t in (l, r) if isinstance(t, Var))
        case Pred(_, a):
            return frozenset([a.name]) if isinstance(a, Var) else frozenset()
        case Not(b):
            return free_vars(b)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return free_vars(l) | free_vars(r)
        case Exists(v, b) | Forall(v, b):
            return free_vars(b) - {v}
    raise TypeError(f"not a formula: {f!r}")


def constants(f: Formula) -> frozenset[str]:
    match f:
        case Top() | Bot():
            return frozenset()
        case Atom(_, l, r) | Eq(l, r):
            return frozenset(t.name for t in (l, r) if isinstance(t, Const))
        case Pred(_, a):
            return frozenset([a.name]) if isinstance(a, Const) else frozenset()
        case Not(b) | Exists(_, b) | Forall(_, b):
            return constants(b)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return constants(l) | constants(r)
    raise TypeError(f"not a formula: {f!r}")


def relations(f: Formula) -> frozenset[str]:
    """Binary relation symbols occurring in f."""
    match f:
        case Atom(rel, _, _):
            return frozenset([rel])
        case Top() | Bot() | Eq() | Pred():
            return frozenset()
        case Not(b) | Exists(_, b) | Forall(_, b):
            return relations(b)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return relations(l) | relations(r)
    raise TypeError(f"not a formula: {f!r}")


def quantifier_rank(f: Formula) -> int:
    match f:
        case Not(b):
            return quantifier_rank(b)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return max(quantifier_rank(l), quantifier_rank(r))
        case Exists(_, b) | Forall(_, b):
            return 1 + quantifier_rank(b)
    return 0


# -- printing ----------------------------------------------------------------

_PREC = {Implies: 1, Or: 2, And: 3}


def _prec(f: Formula) -> int:
    if isinstance(f, (Exists, Forall)):
        return 0
    return _PREC.get(type(f), 4)


def format_fo(f: Formula) -> str:
    match f:
        case Top():
            return "true"
        case Bot():
            return "false"
        case Atom(rel, l, r):
            return f"{rel}({l},{r})"
        case Pred(name, a):
            return f"{name}({a})"
        case Eq(l, r):
            return f"{l} = {r}"
        case Not(b):
            return "~" + _wrap(b, _prec(b) < 4)
        case Exists(v, b):
            return f"exists {v}. {format_fo(b)}"
        case Forall(v, b):
            return f"forall {v}. {format_fo(b)}"
        case Implies(l, r):
            return f"{_wrap(l, _prec(l) <= 1)} -> {_wrap(r, _prec(r) < 1)}"
        case And(l, r) | Or(l, r):
            p = _PREC[type(f)]
            op = "&" if isinstance(f, And) else "|"
            return f"{_wrap(l, _prec(l) < p)} {op} {_wrap(r, _prec(r) <= p)}"
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula, paren: bool) -> str:
    s = format_fo(f)
    return f"({s})" if paren else s


# -- parsing -----------------------------------------------------------------


def parse_fo(text: str, hubs: Optional[Iterable[str]] = None) -> Formula:
    """Parse a first-order formula.

    Grammar: ``exists x.`` / ``forall x.`` (scope extends to the right),
    atoms ``R(t,t)``, ``S(t,t)``, ``P(t,t)``, ``t = t``, ``p(t)``,
    ``true``/``false``, connectives ``~ & | ->`` with ``~`` binding tightest
    and ``->`` right-associative.  Terms starting with ``d_`` are constants;
    if ``hubs`` is given each constant must name one of them.
    """
    ts = TokenStream(text)
    f = _parse_implies(ts)
    ts.expect_end()
    if hubs is not None:
        known = {f"d_{h}" for h in hubs}
        unknown = constants(f) - known
        if unknown:
            raise InputError(f"unknown constant(s): {', '.join(sorted(unknown))}")
    return f


def _parse_implies(ts: TokenStream) -> Formula:
    left = _parse_or(ts)
    if ts.accept("->"):
        return Implies(left, _parse_implies(ts))
    return left


def _parse_or(ts: TokenStream) -> Formula:
    f = _parse_and(ts)
    while ts.accept("|"):
        f = Or(f, _parse_and(ts))
    return f


def _parse_and(ts: TokenStream) -> Formula:
    f = _parse_unary(ts)
    while ts.accept("&"):
        f = And(f, _parse_unary(ts))
    return f


def _parse_unary(ts: TokenStream) -> Formula:
    if ts.accept("~"):
        return Not(_parse_unary(ts))
    tok = ts.peek
    if tok.kind == "ident" and tok.text in ("exists", "forall"):
        ts.next()
        var = ts.next()
        if var.kind != "ident" or not _VAR_RE.match(var.text) or var.text in _KEYWORDS or var.text.startswith("d_"):
            ts.error("expected a variable name", var)
        ts.expect(".")
        body = _parse_implies(ts)
        return Exists(var.text, body) if tok.text == "exists" else Forall(var.text, body)
    return _parse_atom(ts)


def _parse_term(ts: TokenStream) -> Term:
    tok = ts.next()
    if tok.kind != "ident" or tok.text in _KEYWORDS:
        ts.error("expected a term", tok)
    if tok.text.startswith("d_"):
        if not _CONST_RE.match(tok.text):
            ts.error("malformed constant", tok)
        return Const(tok.text)
    if not _VAR_RE.match(tok.text):
        ts.error("variables start with a lower-case letter", tok)
    return Var(tok.text)


def _parse_atom(ts: TokenStream) -> Formula:
    tok = ts.peek
    if ts.accept("("):
        f = _parse_implies(ts)
        ts.expect(")")
        return f
    if tok.kind != "ident":
        ts.error("expected a formula")
    if tok.text == "true":
        ts.next()
        return Top()
    if tok.text == "false":
        ts.next()
        return Bot()
    if tok.text in ("R", "S", "P"):
        ts.next()
        ts.expect("(")
        left = _parse_term(ts)
        ts.expect(",")
        right = _parse_term(ts)
        ts.expect(")")
        return Atom(tok.text, left, right)
    if ts.peek_at(1).text == "(" and _VAR_RE.match(tok.text) and not tok.text.startswith("d_"):
        ts.next()
        ts.expect("(")
        arg = _parse_term(ts)
        ts.expect(")")
        return Pred(tok.text, arg)
    left = _parse_term(ts)
    ts.expect("=")
    right = _parse_term(ts)
    return Eq(left, right)


# -- evaluation --------------------------------------------------------------


def _relations_of(structure: Structure) -> dict[str, frozenset]:
    S, P = decompose(structure)
    return {"R": structure.edges, "S": S, "P": P}


def evaluate(
    structure: Structure,
    f: Formula,
    assignment: Optional[Mapping[str, str]] = None,
    predicates: Optional[Mapping[str, Iterable[str]]] = None,
    cap: int = DEFAULT_EVAL_CAP,
) -> bool:
    """Tarskian truth of f in ``structure`` under ``assignment``.

    ``predicates`` interprets unary predicate symbols as node sets.  Raises
    :class:`CapExceeded` when ``|A| ** quantifier_rank`` exceeds ``cap``.
    """
    assignment = dict(assignment or {})
    missing = free_vars(f) - set(assignment)
    if missing:
        raise InputError(f"no value for free variable(s): {', '.join(sorted(missing))}")
    structure.check_nodes(assignment.values())
    consts = structure.constants
    for c in constants(f):
        if c not in consts:
            raise InputError(f"constant {c} does not name a hub")
    cost = max(len(structure), 1) ** quantifier_rank(f)
    if cost > cap:
        raise CapExceeded(f"quantifier expansion {cost} exceeds cap {cap}")
    preds = {k: frozenset(v) for k, v in (predicates or {}).items()}
    fn = _compile(f, _relations_of(structure), consts, preds, structure.nodes)
    return fn(assignment)


def _compile(f, rels, consts, preds, domain) -> Callable[[dict], bool]:
    def term_fn(t: Term):
        if isinstance(t, Const):
            value = consts[t.name]
            return lambda env: value
        name = t.name
        return lambda env: env[name]

    match f:
        case Top():
            return lambda env: True
        case Bot():
            return lambda env: False
        case Atom(rel, l, r):
            edges = rels[rel]
            lf, rf = term_fn(l), term_fn(r)
            return lambda env: (lf(env), rf(env)) in edges
        case Pred(name, a):
            if name not in preds:
                raise InputError(f"no interpretation for predicate {name}")
            ext, af = preds[name], term_fn(a)
            return lambda env: af(env) in ext
        case Eq(l, r):
            lf, rf = term_fn(l), term_fn(r)
            return lambda env: lf(env) == rf(env)
        case Not(b):
            bf = _compile(b, rels, consts, preds, domain)
            return lambda env: not bf(env)
        case And(l, r):
            lf, rf = (_compile(x, rels, consts, preds, domain) for x in (l, r))
            return lambda env: lf(env) and rf(env)
        case Or(l, r):
            lf, rf = (_compile(x, rels, consts, preds, domain) for x in (l, r))
            return lambda env: lf(env) or rf(env)
        case Implies(l, r):
            lf, rf = (_compile(x, rels, consts, preds, domain) for x in (l, r))
            return lambda env: (not lf(env)) or rf(env)
        case Exists(v, b) | Forall(v, b):
            bf = _compile(b, rels, consts, preds, domain)
            want = isinstance(f, Exists)

            def quant(env, v=v, bf=bf, want=want):
                saved = env.get(v, _UNSET)
                try:
                    for node in domain:
                        env[v] = node
                        if bf(env) == want:
                            return want
                    return not want
                finally:
                    if saved is _UNSET:
                        env.pop(v, None)
                    else:
                        env[v] = saved

            return quant
    raise TypeError(f"not a formula: {f!r}")


_UNSET = object()


# -- translations ------------------------------------------------------------


def sharp_translate(f: Formula) -> Formula:
    """Rewrite every ``R(t1,t2)`` as ``S(t1,t2) | P(t1,t2)``."""
    match f:
        case Atom("R", l, r):
            return Or(Atom("S", l, r), Atom("P", l, r))
        case Atom(rel, _, _):
            raise InputError(f"input already mentions {rel}; expected a formula over R")
        case Top() | Bot() | Eq() | Pred():
            return f
        case Not(b):
            return Not(sharp_translate(b))
        case And(l, r) | Or(l, r) | Implies(l, r):
            return type(f)(sharp_translate(l), sharp_translate(r))
        case Exists(v, b) | Forall(v, b):
            return type(f)(v, sharp_translate(b))
    raise TypeError(f"not a formula: {f!r}")


def standard_translation(phi, x: str = "x") -> Formula:
    """First-order translation of a modal formula with free variable ``x``.

    Propositional variables become unary predicates of the same name, so the
    result is evaluated with ``predicates=valuation``.
    """
    from . import modal

    def st(g, cur: str, depth: int) -> Formula:
        match g:
            case modal.Var(name):
                return Pred(name, Var(cur))
            case modal.Top():
                return Top()
            case modal.Bot():
                return Bot()
            case modal.Not(b):
                return Not(st(b, cur, depth))
            case modal.And(l, r):
                return And(st(l, cur, depth), st(r, cur, depth))
            case modal.Or(l, r):
                return Or(st(l, cur, depth), st(r, cur, depth))
            case modal.Implies(l, r):
                return Implies(st(l, cur, depth), st(r, cur, depth))
            case modal.Diamond(b):
                nxt = f"{x}{depth + 1}"
                return Exists(nxt, And(Atom("R", Var(cur), Var(nxt)), st(b, nxt, depth + 1)))
            case modal.Box(b):
                nxt = f"{x}{depth + 1}"
                return Forall(nxt, Implies(Atom("R", Var(cur), Var(nxt)), st(b, nxt, depth + 1)))
        raise TypeError(f"not a modal formula: {g!r}")

    return st(phi, x, 0)


def phi_star() -> Formula:
    """``exists x. exists y. (x < x & x < y & ~ y < y)`` with < read as R."""
    x, y = Var("x"), Var("y")
    return Exists("x", Exists("y", conj([Atom("R", x, x), Atom("R", x, y), Not(Atom("R", y, y))])))


# -- Ehrenfeucht-Fraisse games -----------------------------------------------


def ef_equivalent(A: Structure, B: Structure, q: int, cap: int = DEFAULT_EF_CAP) -> bool:
    """True iff Duplicator wins the q-round EF game on A and B.

    The hub constants are pre-placed pebbles, so the structures must declare
    hubs under the same names.  Positions are memoized on the set of pebble
    pairs; moves onto an already pebbled element are skipped because they
    cannot help Spoiler.
    """
    if q > cap:
        raise CapExceeded(f"{q} rounds exceeds the EF cap {cap}")
    if q < 0:
        raise InputError("round count must be non-negative")
    ca, cb = A.constants, B.constants
    if set(ca) != set(cb):
        raise InputError("structures interpret different constant symbols")
    pairs: list[tuple[str, str]] = []
    for c in sorted(ca):
        if not _extends(A, B, pairs, ca[c], cb[c]):
            return False
        pairs.append((ca[c], cb[c]))
    memo: dict = {}
    return _duplicator_wins(A, B, frozenset(pairs), q, memo)


def _extends(A: Structure, B: Structure, pairs, a, b) -> bool:
    ea, eb = A.edges, B.edges
    if ((a, a) in ea) != ((b, b) in eb):
        return False
    for a2, b2 in pairs:
        if (a == a2) != (b == b2):
            return False
        if ((a, a2) in ea) != ((b, b2) in eb):
            return False
        if ((a2, a) in ea) != ((b2, b) in eb):
            return False
    return True


def _duplicator_wins(A, B, pairs: frozenset, rounds: int, memo) -> bool:
    if rounds == 0:
        return True
    key = (pairs, rounds)
    hit = memo.get(key)
    if hit is not None:
        return hit
    used_a = {a for a, _ in pairs}
    used_b = {b for _, b in pairs}
    result = True
    for side in (0, 1):
        spoiler_dom = A.nodes if side == 0 else B.nodes
        reply_dom = B.nodes if side == 0 else A.nodes
        used = used_a if side == 0 else used_b
        for x in spoiler_dom:
            if x in used:
                continue
            ok = False
            for y in reply_dom:
                a, b = (x, y) if side == 0 else (y, x)
                if _extends(A, B, pairs, a, b) and _duplicator_wins(A, B, pairs | {(a, b)}, rounds - 1, memo):
                    ok = True
                    break
            if not ok:
                result = False
                break
        if not result:
            break
    memo[key] = result
    return result
