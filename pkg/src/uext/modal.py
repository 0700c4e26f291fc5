"""Basic modal logic: syntax, Kripke semantics, frame validity, bisimulation.

Truth sets are computed bottom-up.  Frame validity and local validity are
decided by enumerating every valuation of the formula's variables; the
enumeration runs over numpy arrays of node bitmasks so thousands of
valuations (and, for correspondence testing, thousands of frames) are
evaluated per array operation.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

import numpy as np

from ._lexer import TokenStream
from .errors import InputError
from .structure import Structure

DEFAULT_MAX_VAL_BITS = 24
MAX_MASK_NODES = 62  # node sets are int64 bitmasks
_CHUNK = 1 << 16

_VAR_RE = re.compile(r"[a-z][a-z0-9_]*$")

Valuation = Mapping[str, frozenset]


# -- syntax ------------------------------------------------------------------


class Formula:
    def __str__(self):
        return format_modal(self)


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Diamond(Formula):
    body: Formula


@dataclass(frozen=True)
class Box(Formula):
    body: Formula


def conj(parts: Iterable[Formula]) -> Formula:
    result = None
    for p in parts:
        result = p if result is None else And(result, p)
    return Top() if result is None else result


def disj(parts: Iterable[Formula]) -> Formula:
    result = None
    for p in parts:
        result = p if result is None else Or(result, p)
    return Bot() if result is None else result


def variables(f: Formula) -> frozenset[str]:
    match f:
        case Var(name):
            return frozenset([name])
        case Top() | Bot():
            return frozenset()
        case Not(b) | Diamond(b) | Box(b):
            return variables(b)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return variables(l) | variables(r)
    raise TypeError(f"not a modal formula: {f!r}")


def modal_depth(f: Formula) -> int:
    match f:
        case Var() | Top() | Bot():
            return 0
        case Not(b):
            return modal_depth(b)
        case Diamond(b) | Box(b):
            return 1 + modal_depth(b)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return max(modal_depth(l), modal_depth(r))
    raise TypeError(f"not a modal formula: {f!r}")


def substitute(f: Formula, mapping: Mapping[str, Formula]) -> Formula:
    """Simultaneous uniform substitution of formulas for variables."""
    match f:
        case Var(name):
            return mapping.get(name, f)
        case Top() | Bot():
            return f
        case Not(b) | Diamond(b) | Box(b):
            return type(f)(substitute(b, mapping))
        case And(l, r) | Or(l, r) | Implies(l, r):
            return type(f)(substitute(l, mapping), substitute(r, mapping))
    raise TypeError(f"not a modal formula: {f!r}")


# -- printing and parsing ----------------------------------------------------

_PREC = {Implies: 1, Or: 2, And: 3}


def _prec(f: Formula) -> int:
    return _PREC.get(type(f), 4)


def format_modal(f: Formula) -> str:
    match f:
        case Var(name):
            return name
        case Top():
            return "true"
        case Bot():
            return "false"
        case Not(b):
            return "~" + _wrap(b, _prec(b) < 4)
        case Diamond(b):
            return "<>" + _wrap(b, _prec(b) < 4)
        case Box(b):
            return "[]" + _wrap(b, _prec(b) < 4)
        case Implies(l, r):
            return f"{_wrap(l, _prec(l) <= 1)} -> {_wrap(r, _prec(r) < 1)}"
        case And(l, r) | Or(l, r):
            p = _PREC[type(f)]
            op = "&" if isinstance(f, And) else "|"
            return f"{_wrap(l, _prec(l) < p)} {op} {_wrap(r, _prec(r) <= p)}"
    raise TypeError(f"not a modal formula: {f!r}")


def _wrap(f: Formula, paren: bool) -> str:
    s = format_modal(f)
    return f"({s})" if paren else s


def parse_modal(text: str) -> Formula:
    """Parse ``true false ~ & | -> <> []`` formulas over ``[a-z][a-z0-9_]*``.

    Unary operators bind tightest, then ``&``, then ``|``; ``->`` is
    right-associative.
    """
    ts = TokenStream(text)
    f = _parse_implies(ts)
    ts.expect_end()
    return f


def _parse_implies(ts):
    left = _parse_or(ts)
    if ts.accept("->"):
        return Implies(left, _parse_implies(ts))
    return left


def _parse_or(ts):
    f = _parse_and(ts)
    while ts.accept("|"):
        f = Or(f, _parse_and(ts))
    return f


def _parse_and(ts):
    f = _parse_unary(ts)
    while ts.accept("&"):
        f = And(f, _parse_unary(ts))
    return f


def _parse_unary(ts):
    if ts.accept("~"):
        return Not(_parse_unary(ts))
    if ts.accept("<>"):
        return Diamond(_parse_unary(ts))
    if ts.accept("[]"):
        return Box(_parse_unary(ts))
    if ts.accept("("):
        f = _parse_implies(ts)
        ts.expect(")")
        return f
    tok = ts.peek
    if tok.kind == "ident":
        ts.next()
        if tok.text == "true":
            return Top()
        if tok.text == "false":
            return Bot()
        if not _VAR_RE.match(tok.text):
            ts.error("variable names match [a-z][a-z0-9_]*", tok)
        return Var(tok.text)
    ts.error("expected a formula")


# -- the concrete formulas ---------------------------------------------------


def alt_n(n: int) -> Formula:
    """``[]p_0 | [](p_0 -> p_1) | ... | [](p_0 & .. & p_{n-1} -> p_n)``."""
    if n < 0:
        raise InputError("n must be non-negative")
    ps = [Var(f"p_{i}") for i in range(n + 1)]
    disjuncts = [Box(ps[0])]
    for i in range(1, n + 1):
        disjuncts.append(Box(Implies(conj(ps[:i]), ps[i])))
    return disj(disjuncts)


def phi_formula() -> Formula:
    """``(p & ~q & [](p & q -> [](p & q)) & <>(p & q)) -> [](p & q)``.

    It is locally valid wherever :func:`star_star_condition` holds; its
    exact local correspondent is :func:`phi_local_condition`.
    """
    p, q = Var("p"), Var("q")
    pq = And(p, q)
    antecedent = conj([p, Not(q), Box(Implies(pq, Box(pq))), Diamond(pq)])
    return Implies(antecedent, Box(pq))


# -- semantics ---------------------------------------------------------------


def _check_valuation(structure: Structure, f: Formula, valuation: Valuation) -> None:
    missing = variables(f) - set(valuation)
    if missing:
        raise InputError(f"unbound variable(s): {', '.join(sorted(missing))}")
    for name in variables(f):
        structure.check_nodes(valuation[name])


def truth_set(structure: Structure, valuation: Valuation, f: Formula) -> frozenset[str]:
    """Every node where f holds, by direct set computation."""
    _check_valuation(structure, f, valuation)
    nodes = frozenset(structure.nodes)
    succ = structure.succ

    def ts(g):
        match g:
            case Var(name):
                return frozenset(valuation[name])
            case Top():
                return nodes
            case Bot():
                return frozenset()
            case Not(b):
                return nodes - ts(b)
            case And(l, r):
                return ts(l) & ts(r)
            case Or(l, r):
                return ts(l) | ts(r)
            case Implies(l, r):
                return (nodes - ts(l)) | ts(r)
            case Diamond(b):
                inner = ts(b)
                return frozenset(w for w in structure.nodes if succ[w] & inner)
            case Box(b):
                inner = ts(b)
                return frozenset(w for w in structure.nodes if succ[w] <= inner)
        raise TypeError(f"not a modal formula: {g!r}")

    return ts(f)


def check(structure: Structure, valuation: Valuation, w: str, f: Formula) -> bool:
    structure.check_nodes([w])
    return w in truth_set(structure, valuation, f)


# -- bitmask engine ----------------------------------------------------------


def _eval_masks(f: Formula, var_masks: Mapping[str, np.ndarray], succ_cols, full: int):
    """Truth sets as int64 node bitmasks, broadcasting over any batch shape.

    ``succ_cols[s]`` is the successor mask of node s (scalar or array).
    """
    match f:
        case Var(name):
            return var_masks[name]
        case Top():
            return np.int64(full)
        case Bot():
            return np.int64(0)
        case Not(b):
            return ~_eval_masks(b, var_masks, succ_cols, full) & full
        case And(l, r):
            return _eval_masks(l, var_masks, succ_cols, full) & _eval_masks(r, var_masks, succ_cols, full)
        case Or(l, r):
            return _eval_masks(l, var_masks, succ_cols, full) | _eval_masks(r, var_masks, succ_cols, full)
        case Implies(l, r):
            a = _eval_masks(l, var_masks, succ_cols, full)
            return (~a & full) | _eval_masks(r, var_masks, succ_cols, full)
        case Diamond(b):
            return _diamond(_eval_masks(b, var_masks, succ_cols, full), succ_cols)
        case Box(b):
            inner = ~_eval_masks(b, var_masks, succ_cols, full) & full
            return ~_diamond(inner, succ_cols) & full
    raise TypeError(f"not a modal formula: {f!r}")


def _diamond(x, succ_cols):
    out = np.int64(0)
    for s, col in enumerate(succ_cols):
        out = out | (((col & x) != 0).astype(np.int64) << np.int64(s))
    return out


def _valuation_masks(names, n_nodes: int, idx: np.ndarray) -> dict[str, np.ndarray]:
    """Decode valuation indices; the first variable occupies the high bits."""
    full = (1 << n_nodes) - 1
    v = len(names)
    return {
        name: (idx >> np.int64(n_nodes * (v - 1 - i))) & np.int64(full)
        for i, name in enumerate(names)
    }


def _mask_to_set(structure: Structure, mask: int) -> frozenset[str]:
    return frozenset(n for i, n in enumerate(structure.nodes) if mask >> i & 1)


# -- frame validity ----------------------------------------------------------


@dataclass(frozen=True)
class Valid:
    ok = True

    def __str__(self):
        return "Valid"


@dataclass(frozen=True)
class Counterexample:
    valuation: dict
    node: str
    ok = False

    def __str__(self):
        parts = ", ".join(f"{k}={{{','.join(sorted(v))}}}" for k, v in sorted(self.valuation.items()))
        return f"Counterexample at {self.node}: {parts}" if parts else f"Counterexample at {self.node}"


@dataclass(frozen=True)
class Overflow:
    needed_bits: int
    cap: int
    ok = None

    def __str__(self):
        return f"Overflow: {self.needed_bits} valuation bits exceed cap {self.cap}"


Verdict = Union[Valid, Counterexample, Overflow]


def _needed_bits(structure: Structure, f: Formula) -> int:
    return len(structure) * len(variables(f))


def frame_valid(
    structure: Structure,
    f: Formula,
    max_val_bits: int = DEFAULT_MAX_VAL_BITS,
    at: Optional[Iterable[str]] = None,
) -> Verdict:
    """Decide validity of f by enumerating every valuation.

    With ``at`` given, only truth at those nodes is required (local
    validity).  The reported counterexample is the least one: valuations
    are ordered lexicographically by the node bitmask of each variable in
    sorted variable order, then by node declaration order.
    """
    n = len(structure)
    names = sorted(variables(f))
    bits = n * len(names)
    if bits > max_val_bits or n > MAX_MASK_NODES:
        return Overflow(max(bits, n), max_val_bits)
    if n == 0:
        return Valid()
    idx_of = structure.index
    want = (1 << n) - 1
    if at is not None:
        want = 0
        for w in structure.check_nodes(at):
            want |= 1 << idx_of[w]
    succ_cols = [np.int64(sum(1 << idx_of[t] for t in structure.succ[s])) for s in structure.nodes]
    total = 1 << bits
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        truth = np.broadcast_to(_eval_masks(f, _valuation_masks(names, n, idx), succ_cols, (1 << n) - 1), idx.shape)
        bad = np.nonzero((truth & want) != want)[0]
        if bad.size:
            k = int(bad[0])
            t = int(truth[k])
            node_bit = next(i for i in range(n) if want >> i & 1 and not t >> i & 1)
            masks = _valuation_masks(names, n, idx[k : k + 1])
            valuation = {name: _mask_to_set(structure, int(m[0])) for name, m in masks.items()}
            return Counterexample(valuation, structure.nodes[node_bit])
    return Valid()


def locally_valid(structure: Structure, f: Formula, w: str, max_val_bits: int = DEFAULT_MAX_VAL_BITS) -> Verdict:
    return frame_valid(structure, f, max_val_bits, at=[w])


# -- frame conditions --------------------------------------------------------


def star_condition(structure: Structure, w: str) -> bool:
    """Every ordered pair of distinct successors of w is joined by a forward
    path whose nodes all lie among the successors of w."""
    structure.check_nodes([w])
    inside = structure.succ[w]
    for u in inside:
        seen = {u}
        stack = [u]
        reached = set()
        while stack:
            cur = stack.pop()
            for nxt in structure.succ[cur] & inside:
                reached.add(nxt)
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if not (inside - {u}) <= reached:
            return False
    return True


def star_star_condition(structure: Structure, w: str) -> bool:
    if not star_condition(structure, w):
        return False
    succ = structure.succ
    if w not in succ[w] or len(succ[w]) <= 1:
        return True
    return any(w in succ[v] for v in succ[w] if v != w)


def phi_local_condition(structure: Structure, w: str) -> bool:
    """Exact local frame correspondent of :func:`phi_formula`.

    For a successor t of w other than w, let C(t) be t together with every
    node reachable from t by a forward path whose nodes before the last all
    lie in R[w].  The formula fails at w under some valuation iff some such t
    has w outside C(t) while C(t) misses part of R[w] (w itself counts when
    w is reflexive): take p true everywhere and q true exactly on C(t).
    """
    structure.check_nodes([w])
    inside = structure.succ[w]
    for t in inside - {w}:
        closure = {t}
        stack = [t]
        while stack:
            cur = stack.pop()
            if cur in inside:
                for nxt in structure.succ[cur] - closure:
                    closure.add(nxt)
                    stack.append(nxt)
        if w not in closure and not inside <= closure:
            return False
    return True


def out_degree_at_most(n: int) -> Callable[[Structure, str], bool]:
    def cond(structure: Structure, w: str) -> bool:
        return len(structure.succ[w]) <= n

    cond.__name__ = f"out_degree_at_most_{n}"
    return cond


def reflexive_at(structure: Structure, w: str) -> bool:
    return (w, w) in structure.edges


# -- frame corpora -----------------------------------------------------------


def frame_nodes(n: int) -> tuple[str, ...]:
    return tuple(f"w{i}" for i in range(n))


def frame_from_code(n: int, code: int) -> Structure:
    """Frame whose edge i->j is bit ``i*n + j`` of code."""
    nodes = frame_nodes(n)
    edges = {(nodes[i], nodes[j]) for i in range(n) for j in range(n) if code >> (i * n + j) & 1}
    return Structure(nodes, frozenset(edges))


def all_frames(n: int) -> Iterator[Structure]:
    for code in range(1 << (n * n)):
        yield frame_from_code(n, code)


def _local_validity_batch(f: Formula, n: int, codes: np.ndarray, max_val_bits: int) -> np.ndarray:
    """Per frame code, the bitmask of nodes where f holds under every valuation."""
    names = sorted(variables(f))
    bits = n * len(names)
    if bits > max_val_bits:
        raise OverflowError(f"{bits} valuation bits exceed cap {max_val_bits}")
    full = (1 << n) - 1
    succ_cols = [((codes >> np.int64(s * n)) & np.int64(full))[:, None] for s in range(n)]
    result = np.full(codes.shape, full, dtype=np.int64)
    total = 1 << bits
    step = max(1, min(total, (1 << 20) // max(1, codes.size)))
    for start in range(0, total, step):
        idx = np.arange(start, min(total, start + step), dtype=np.int64)[None, :]
        truth = np.broadcast_to(_eval_masks(f, _valuation_masks(names, n, idx), succ_cols, full), (codes.size, idx.shape[1]))
        result &= np.bitwise_and.reduce(truth, axis=1)
    return result


@dataclass
class CorrespondenceReport:
    formula: str
    condition: str
    frames_checked: int = 0
    points_checked: int = 0
    violations: list = field(default_factory=list)  # (Structure, node, locally_valid, condition)

    @property
    def ok(self) -> bool:
        return not self.violations


def correspondence_test(
    formula: Formula,
    condition: Callable[[Structure, str], bool],
    exhaustive_up_to: int = 4,
    sampled_sizes: Iterable[int] = (),
    samples_per_size: int = 0,
    seed: int = 0,
    max_val_bits: int = DEFAULT_MAX_VAL_BITS,
    max_violations: int = 50,
) -> CorrespondenceReport:
    """Compare local validity of ``formula`` with a node-local ``condition``.

    Every frame with at most ``exhaustive_up_to`` nodes is checked, then
    ``samples_per_size`` uniformly random frames of each sampled size.
    Violations are reported, never raised.
    """
    report = CorrespondenceReport(str(formula), getattr(condition, "__name__", repr(condition)))
    rng = random.Random(seed)
    batches: list[tuple[int, np.ndarray]] = []
    for n in range(1, exhaustive_up_to + 1):
        batches.append((n, np.arange(1 << (n * n), dtype=np.int64)))
    for n in sampled_sizes:
        if n * n > 62:
            raise InputError("sampled frames are limited to 7 nodes")
        codes = [rng.getrandbits(n * n) for _ in range(samples_per_size)]
        batches.append((n, np.array(codes, dtype=np.int64)))
    for n, codes in batches:
        chunk = 4096
        for start in range(0, codes.size, chunk):
            part = codes[start : start + chunk]
            valid_masks = _local_validity_batch(formula, n, part, max_val_bits)
            for code, vmask in zip(part.tolist(), valid_masks.tolist()):
                frame = frame_from_code(n, code)
                report.frames_checked += 1
                for i, w in enumerate(frame.nodes):
                    report.points_checked += 1
                    lv = bool(vmask >> i & 1)
                    cv = bool(condition(frame, w))
                    if lv != cv and len(report.violations) < max_violations:
                        report.violations.append((frame, w, lv, cv))
    return report


# -- bisimulation ------------------------------------------------------------


@dataclass(frozen=True)
class Model:
    structure: Structure
    valuation: Mapping[str, frozenset]

    def __post_init__(self):
        val = {k: self.structure.check_nodes(v) for k, v in self.valuation.items()}
        object.__setattr__(self, "valuation", val)

    def atoms_at(self, w: str, names: Iterable[str]) -> tuple[bool, ...]:
        return tuple(w in self.valuation.get(p, ()) for p in names)


def largest_bisimulation(m1: Model, m2: Model) -> frozenset[tuple[str, str]]:
    """Greatest bisimulation between two finite models.

    Atomic harmony is required for every variable of either valuation; a
    variable missing from one valuation is false everywhere in it.
    """
    names = sorted(set(m1.valuation) | set(m2.valuation))
    s1, s2 = m1.structure.succ, m2.structure.succ
    Z = {
        (a, b)
        for a in m1.structure.nodes
        for b in m2.structure.nodes
        if m1.atoms_at(a, names) == m2.atoms_at(b, names)
    }
    changed = True
    while changed:
        changed = False
        for a, b in sorted(Z):
            forth = all(any((a2, b2) in Z for b2 in s2[b]) for a2 in s1[a])
            back = all(any((a2, b2) in Z for a2 in s1[a]) for b2 in s2[b])
            if not (forth and back):
                Z.discard((a, b))
                changed = True
    return frozenset(Z)


def is_bisimulation(m1: Model, m2: Model, Z: Iterable[tuple[str, str]]) -> bool:
    Z = frozenset(Z)
    names = sorted(set(m1.valuation) | set(m2.valuation))
    s1, s2 = m1.structure.succ, m2.structure.succ
    for a, b in Z:
        if m1.atoms_at(a, names) != m2.atoms_at(b, names):
            return False
        if not all(any((a2, b2) in Z for b2 in s2[b]) for a2 in s1[a]):
            return False
        if not all(any((a2, b2) in Z for a2 in s1[a]) for b2 in s2[b]):
            return False
    return True


def random_formula(rng: random.Random, names: list[str], depth: int) -> Formula:
    """Random formula of modal depth at most ``depth``."""
    if depth == 0 or rng.random() < 0.4:
        choice = rng.randrange(len(names) + 2)
        if choice < len(names):
            return Var(names[choice])
        return Top() if choice == len(names) else Bot()
    op = rng.choice(["not", "and", "or", "implies", "dia", "box"])
    if op == "not":
        return Not(random_formula(rng, names, depth))
    if op in ("dia", "box"):
        body = random_formula(rng, names, depth - 1)
        return Diamond(body) if op == "dia" else Box(body)
    cls = {"and": And, "or": Or, "implies": Implies}[op]
    return cls(random_formula(rng, names, depth), random_formula(rng, names, depth))


def valuations(structure: Structure, names: Iterable[str]) -> Iterator[dict[str, frozenset]]:
    """Every valuation of ``names`` over the structure (exponential)."""
    names = list(names)
    subsets = [
        frozenset(n for i, n in enumerate(structure.nodes) if mask >> i & 1)
        for mask in range(1 << len(structure))
    ]
    for combo in product(subsets, repeat=len(names)):
        yield dict(zip(names, combo))
