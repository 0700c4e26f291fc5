"""Finite presentations of countable almost-bounded structures.

A presentation lists the hubs (the nodes of infinite degree), the edges
among them, and blocks: a finite pattern repeated ``multiplicity`` times,
with uniform hub flags on every copy.  Finitely many per-copy flag
exceptions record the copies that deviate.

Blocks with origin ``nonprincipal`` appear only in extension presentations;
each of their copies is one bundle of non-principal ultrafilters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import total_ordering
from typing import Iterable, Optional

from .errors import InputError, ParseError
from .structure import Structure

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


# -- cardinals ---------------------------------------------------------------


@total_ordering
@dataclass(frozen=True, repr=False)
class Card:
    """Fin(n) < Aleph0 < Continuum < PowerContinuum; infinite sums and
    products collapse to the maximum."""

    rank: int  # 0 finite, 1 aleph0, 2 continuum, 3 power of the continuum
    n: int = 0

    def __post_init__(self):
        if self.rank not in (0, 1, 2, 3) or self.n < 0 or (self.rank and self.n):
            raise InputError(f"bad cardinal ({self.rank}, {self.n})")

    def __lt__(self, other):
        return (self.rank, self.n) < (other.rank, other.n)

    @property
    def finite(self) -> bool:
        return self.rank == 0

    def __add__(self, other):
        if self.finite and other.finite:
            return Card(0, self.n + other.n)
        return max(self, other)

    def __mul__(self, other):
        if self.finite and other.finite:
            return Card(0, self.n * other.n)
        if self == Fin(0) or other == Fin(0):
            return Fin(0)
        return max(self, other)

    def __str__(self):
        return _CARD_NAMES.get(self.rank) or str(self.n)

    def __repr__(self):
        return f"Fin({self.n})" if self.finite else _CARD_NAMES[self.rank]


def Fin(n: int) -> Card:
    return Card(0, n)


ALEPH0 = Card(1)
CONTINUUM = Card(2)
POWER_CONTINUUM = Card(3)
_CARD_NAMES = {1: "omega", 2: "continuum", 3: "powcont"}


def card_sum(cards: Iterable[Card]) -> Card:
    total = Fin(0)
    for c in cards:
        total = total + c
    return total


def parse_multiplicity(token: str) -> Card:
    if token == "omega":
        return ALEPH0
    if token == "powcont":
        return POWER_CONTINUUM
    if token.isdigit():
        return Fin(int(token))
    raise InputError(f"multiplicity must be a number, 'omega' or 'powcont', not {token!r}")


# -- presentation data -------------------------------------------------------

PRINCIPAL = "principal"
NONPRINCIPAL = "nonprincipal"


@dataclass(frozen=True)
class Block:
    id: str
    positions: tuple[str, ...]
    pattern: frozenset[tuple[str, str]] = frozenset()
    multiplicity: Card = ALEPH0
    out_flags: frozenset[tuple[str, str]] = frozenset()  # (hub, position)
    in_flags: frozenset[tuple[str, str]] = frozenset()  # (position, hub)
    origin: str = PRINCIPAL

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(self.positions))
        for name in ("pattern", "out_flags", "in_flags"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))

    @property
    def infinite(self) -> bool:
        return not self.multiplicity.finite

    def hubs_touched(self) -> set[str]:
        return {h for h, _ in self.out_flags} | {h for _, h in self.in_flags}


@dataclass(frozen=True, order=True)
class CopyException:
    """Add or drop one hub flag on a single copy of a block."""

    block: str
    copy: int
    action: str  # "add" or "drop"
    kind: str  # "out" (hub -> position) or "in" (position -> hub)
    hub: str
    position: str

    def flag(self) -> tuple[str, str]:
        return (self.hub, self.position) if self.kind == "out" else (self.position, self.hub)

    def __str__(self):
        tail = f"out {self.hub} {self.position}" if self.kind == "out" else f"in {self.position} {self.hub}"
        return f"exception {self.block} {self.copy} {self.action} {tail}"


@dataclass(frozen=True)
class Presentation:
    hubs: tuple[str, ...] = ()
    hub_edges: frozenset[tuple[str, str]] = frozenset()
    blocks: tuple[Block, ...] = ()
    exceptions: tuple[CopyException, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "hubs", tuple(self.hubs))
        object.__setattr__(self, "hub_edges", frozenset(self.hub_edges))
        object.__setattr__(self, "blocks", tuple(sorted(self.blocks, key=lambda b: b.id)))
        object.__setattr__(self, "exceptions", tuple(sorted(set(self.exceptions))))

    def block(self, block_id: str) -> Block:
        for b in self.blocks:
            if b.id == block_id:
                return b
        raise InputError(f"no block named {block_id!r}")

    def exceptions_of(self, block_id: str) -> list[CopyException]:
        return [e for e in self.exceptions if e.block == block_id]

    def exceptional_copies(self, block_id: str) -> list[int]:
        return sorted({e.copy for e in self.exceptions if e.block == block_id})

    def copy_flags(self, block: Block, copy: int) -> tuple[frozenset, frozenset]:
        """Effective ``(out_flags, in_flags)`` of one copy."""
        outs, ins = set(block.out_flags), set(block.in_flags)
        for e in self.exceptions_of(block.id):
            if e.copy != copy:
                continue
            target = outs if e.kind == "out" else ins
            if e.action == "add":
                target.add(e.flag())
            else:
                target.discard(e.flag())
        return frozenset(outs), frozenset(ins)

    @property
    def has_nonprincipal(self) -> bool:
        return any(b.origin == NONPRINCIPAL for b in self.blocks)


# -- .abp format -------------------------------------------------------------


def parse_presentation(text: str) -> Presentation:
    """Parse the ``.abp`` format.

    Top-level lines: ``hub <name>``, ``hubedge <h1> <h2>``,
    ``block <id> mult <n|omega|powcont>`` and
    ``exception <block> <copy> (add|drop) (out <hub> <pos> | in <pos> <hub>)``.
    Indented lines after ``block`` belong to it: ``pnode <pos>``,
    ``pedge <p1> <p2>``, ``pflag out <hub> <pos>``, ``pflag in <pos> <hub>``
    and ``origin nonprincipal``.  ``#`` starts a comment.
    """
    hubs: list[str] = []
    hub_lines: dict[str, int] = {}
    hub_edges: list[tuple[str, str, int]] = []
    blocks: list[dict] = []
    exceptions: list[tuple[CopyException, int]] = []
    current: Optional[dict] = None

    def ident(name, lineno, what):
        if not IDENT_RE.match(name):
            raise ParseError(f"bad {what} name {name!r}", lineno)
        return name

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        indented = body[0] in " \t"
        parts = body.split()
        kw, args = parts[0], parts[1:]
        if indented:
            if current is None:
                raise ParseError("indented line outside a block", lineno)
            _parse_block_line(current, kw, args, lineno, ident)
            continue
        current = None
        if kw == "hub":
            if len(args) != 1:
                raise ParseError("'hub' takes one name", lineno)
            name = ident(args[0], lineno, "hub")
            if name in hub_lines:
                raise ParseError(f"duplicate hub {name!r}", lineno)
            hub_lines[name] = lineno
            hubs.append(name)
        elif kw == "hubedge":
            if len(args) != 2:
                raise ParseError("'hubedge' takes two hub names", lineno)
            hub_edges.append((args[0], args[1], lineno))
        elif kw == "block":
            if len(args) != 3 or args[1] != "mult":
                raise ParseError("expected 'block <id> mult <n|omega|powcont>'", lineno)
            block_id = ident(args[0], lineno, "block")
            if any(b["id"] == block_id for b in blocks):
                raise ParseError(f"duplicate block {block_id!r}", lineno)
            try:
                mult = parse_multiplicity(args[2])
            except InputError as exc:
                raise ParseError(str(exc), lineno) from None
            current = {
                "id": block_id,
                "mult": mult,
                "positions": [],
                "pattern": [],
                "out": [],
                "in": [],
                "origin": PRINCIPAL,
                "line": lineno,
            }
            blocks.append(current)
        elif kw == "exception":
            exceptions.append((_parse_exception(args, lineno), lineno))
        else:
            raise ParseError(f"unknown keyword {kw!r}", lineno)

    hub_set = set(hubs)
    for a, b, lineno in hub_edges:
        for h in (a, b):
            if h not in hub_set:
                raise ParseError(f"undeclared hub {h!r}", lineno)
    built = []
    for b in blocks:
        for hub, pos, lineno in b["out"]:
            if hub not in hub_set:
                raise ParseError(f"undeclared hub {hub!r}", lineno)
        for pos, hub, lineno in b["in"]:
            if hub not in hub_set:
                raise ParseError(f"undeclared hub {hub!r}", lineno)
        built.append(
            Block(
                b["id"],
                tuple(b["positions"]),
                frozenset((p, q) for p, q, _ in b["pattern"]),
                b["mult"],
                frozenset((h, p) for h, p, _ in b["out"]),
                frozenset((p, h) for p, h, _ in b["in"]),
                b["origin"],
            )
        )
    by_id = {b.id: b for b in built}
    for e, lineno in exceptions:
        if e.block not in by_id:
            raise ParseError(f"exception names unknown block {e.block!r}", lineno)
        if e.hub not in hub_set:
            raise ParseError(f"undeclared hub {e.hub!r}", lineno)
        if e.position not in by_id[e.block].positions:
            raise ParseError(f"block {e.block!r} has no position {e.position!r}", lineno)
    return Presentation(
        tuple(hubs),
        frozenset((a, b) for a, b, _ in hub_edges),
        tuple(built),
        tuple(e for e, _ in exceptions),
    )


def _parse_block_line(block: dict, kw: str, args: list[str], lineno: int, ident) -> None:
    positions = block["positions"]

    def known(pos):
        if pos not in positions:
            raise ParseError(f"undeclared position {pos!r}", lineno)
        return pos

    if kw == "pnode":
        if len(args) != 1:
            raise ParseError("'pnode' takes one name", lineno)
        pos = ident(args[0], lineno, "position")
        if pos in positions:
            raise ParseError(f"duplicate position {pos!r}", lineno)
        positions.append(pos)
    elif kw == "pedge":
        if len(args) != 2:
            raise ParseError("'pedge' takes two positions", lineno)
        block["pattern"].append((known(args[0]), known(args[1]), lineno))
    elif kw == "pflag":
        if len(args) != 3 or args[0] not in ("out", "in"):
            raise ParseError("expected 'pflag out <hub> <pos>' or 'pflag in <pos> <hub>'", lineno)
        if args[0] == "out":
            block["out"].append((args[1], known(args[2]), lineno))
        else:
            block["in"].append((known(args[1]), args[2], lineno))
    elif kw == "origin":
        if args not in (["nonprincipal"], ["principal"]):
            raise ParseError("expected 'origin nonprincipal'", lineno)
        block["origin"] = args[0]
    else:
        raise ParseError(f"unknown block keyword {kw!r}", lineno)


def _parse_exception(args: list[str], lineno: int) -> CopyException:
    usage = "expected 'exception <block> <copy> (add|drop) (out <hub> <pos> | in <pos> <hub>)'"
    if len(args) != 6 or args[2] not in ("add", "drop") or args[3] not in ("out", "in"):
        raise ParseError(usage, lineno)
    if not args[1].isdigit():
        raise ParseError("copy index must be a non-negative integer", lineno)
    if args[3] == "out":
        hub, pos = args[4], args[5]
    else:
        pos, hub = args[4], args[5]
    return CopyException(args[0], int(args[1]), args[2], args[3], hub, pos)


def format_presentation(p: Presentation) -> str:
    """Canonical text: hubs, hub edges, blocks by id, then exceptions."""
    lines = [f"hub {h}" for h in p.hubs]
    hub_pos = {h: i for i, h in enumerate(p.hubs)}
    lines += [f"hubedge {a} {b}" for a, b in sorted(p.hub_edges, key=lambda e: (hub_pos[e[0]], hub_pos[e[1]]))]
    for b in p.blocks:
        pos = {q: i for i, q in enumerate(b.positions)}
        lines.append(f"block {b.id} mult {b.multiplicity}")
        lines += [f"  pnode {q}" for q in b.positions]
        lines += [f"  pedge {x} {y}" for x, y in sorted(b.pattern, key=lambda e: (pos[e[0]], pos[e[1]]))]
        lines += [f"  pflag out {h} {q}" for h, q in sorted(b.out_flags, key=lambda f: (hub_pos[f[0]], pos[f[1]]))]
        lines += [f"  pflag in {q} {h}" for q, h in sorted(b.in_flags, key=lambda f: (pos[f[0]], hub_pos[f[1]]))]
        if b.origin == NONPRINCIPAL:
            lines.append("  origin nonprincipal")
    lines += [str(e) for e in p.exceptions]
    return "\n".join(lines) + "\n" if lines else ""


# -- validation --------------------------------------------------------------


@dataclass
class Report:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "PASS"
        return "FAIL\n" + "\n".join(f"  - {v}" for v in self.violations)


def validate(p: Presentation) -> Report:
    """Check the invariants of a presentation; never raises."""
    report = Report()
    v = report.violations
    hub_set = set(p.hubs)
    if len(hub_set) != len(p.hubs):
        v.append("duplicate hub names")
    ids = [b.id for b in p.blocks]
    if len(set(ids)) != len(ids):
        v.append("duplicate block ids")
    for a, b in p.hub_edges:
        if a not in hub_set or b not in hub_set:
            v.append(f"hub edge ({a}, {b}) names an undeclared hub")
    for b in p.blocks:
        if len(set(b.positions)) != len(b.positions):
            v.append(f"block {b.id} repeats a position")
        positions = set(b.positions)
        for x, y in b.pattern:
            if x not in positions or y not in positions:
                v.append(f"block {b.id} pattern edge ({x}, {y}) names an undeclared position")
        for h, q in b.out_flags:
            if h not in hub_set or q not in positions:
                v.append(f"block {b.id} flag out {h} {q} is dangling")
        for q, h in b.in_flags:
            if h not in hub_set or q not in positions:
                v.append(f"block {b.id} flag in {q} {h} is dangling")
        if b.multiplicity == CONTINUUM:
            v.append(f"block {b.id} has multiplicity continuum, which no presentation denotes")
        if b.multiplicity == POWER_CONTINUUM and b.origin != NONPRINCIPAL:
            v.append(f"block {b.id} has multiplicity powcont but is principal")
        if b.origin not in (PRINCIPAL, NONPRINCIPAL):
            v.append(f"block {b.id} has unknown origin {b.origin!r}")
    by_id = {b.id: b for b in p.blocks}
    for e in p.exceptions:
        b = by_id.get(e.block)
        if b is None:
            v.append(f"{e}: unknown block")
            continue
        if b.origin == NONPRINCIPAL:
            v.append(f"{e}: exceptions apply to principal blocks only")
        if e.hub not in hub_set or e.position not in b.positions:
            v.append(f"{e}: dangling reference")
        if b.multiplicity.finite and e.copy >= b.multiplicity.n:
            v.append(f"{e}: copy index out of range for multiplicity {b.multiplicity}")
        uniform = b.out_flags if e.kind == "out" else b.in_flags
        if e.action == "add" and e.flag() in uniform:
            v.append(f"{e}: adds a flag every copy already has")
        if e.action == "drop" and e.flag() not in uniform:
            v.append(f"{e}: drops a flag no copy has")
    seen: set = set()
    for e in p.exceptions:
        key = (e.block, e.copy, e.kind, e.hub, e.position)
        if key in seen:
            v.append(f"{e}: conflicts with another exception on the same flag")
        seen.add(key)
    for h in p.hubs:
        if not any(b.infinite and h in b.hubs_touched() for b in p.blocks):
            v.append(f"hub {h} has finite degree")
    return report


# -- truncation --------------------------------------------------------------


def copy_indices(p: Presentation, block: Block, k: int) -> list[int]:
    """Copies materialized by ``expand(p, k)``: exceptional ones, then the
    smallest uniform indices, capped by the multiplicity."""
    exceptional = p.exceptional_copies(block.id)
    if k < len(exceptional):
        raise InputError(f"k={k} cannot host the {len(exceptional)} exceptional copies of block {block.id}")
    count = k + len(exceptional)
    if block.multiplicity.finite:
        count = min(count, block.multiplicity.n)
    chosen = list(exceptional)
    i = 0
    taken = set(chosen)
    while len(chosen) < count:
        if i not in taken:
            chosen.append(i)
        i += 1
    return chosen


def node_name(block_id: str, copy: int, position: str) -> str:
    return f"{block_id}.{copy}.{position}"


def expand(p: Presentation, k: int) -> Structure:
    """Finite truncation with at most ``k`` uniform copies of every block.

    Nonprincipal blocks are materialized the same way, one copy per bundle.
    """
    if k < 0:
        raise InputError("k must be non-negative")
    nodes = list(p.hubs)
    edges = set(p.hub_edges)
    for b in p.blocks:
        for c in copy_indices(p, b, k):
            name = {q: node_name(b.id, c, q) for q in b.positions}
            nodes += [name[q] for q in b.positions]
            edges |= {(name[x], name[y]) for x, y in b.pattern}
            outs, ins = p.copy_flags(b, c)
            edges |= {(h, name[q]) for h, q in outs}
            edges |= {(name[q], h) for q, h in ins}
    return Structure(tuple(nodes), frozenset(edges), frozenset(p.hubs))


# -- extension ---------------------------------------------------------------


def block_type(block: Block) -> tuple:
    """Isomorphism type of a block's pattern with its uniform flags."""
    from .neighborhood import canonical_labeling

    colors = {
        q: tuple(sorted([("out", h) for h, x in block.out_flags if x == q] + [("in", h) for x, h in block.in_flags if x == q]))
        for q in block.positions
    }
    _, cert = canonical_labeling(block.positions, block.pattern, colors)
    return cert


def extend(p: Presentation) -> Presentation:
    """The presentation of the ultrafilter extension.

    Every type of principal ω-block gains one nonprincipal block of
    multiplicity powcont with the same pattern and flags, unless a
    nonprincipal block of that type is already present.
    """
    report = validate(p)
    if not report.ok:
        raise InputError("presentation is invalid: " + "; ".join(report.violations))
    have = {block_type(b) for b in p.blocks if b.origin == NONPRINCIPAL}
    ids = {b.id for b in p.blocks}
    groups: dict[tuple, Block] = {}
    for b in p.blocks:
        if b.origin == PRINCIPAL and b.multiplicity == ALEPH0:
            t = block_type(b)
            if t not in have and t not in groups:
                groups[t] = b
    new_blocks = []
    for rep in groups.values():
        new_id = f"{rep.id}_ue"
        suffix = 2
        while new_id in ids:
            new_id = f"{rep.id}_ue{suffix}"
            suffix += 1
        ids.add(new_id)
        new_blocks.append(replace(rep, id=new_id, multiplicity=POWER_CONTINUUM, origin=NONPRINCIPAL))
    return Presentation(p.hubs, p.hub_edges, p.blocks + tuple(new_blocks), p.exceptions)


# -- symbolic counting -------------------------------------------------------


def count_reflexive(p: Presentation) -> list[tuple[str, Card]]:
    """Reflexive points per origin.

    Flags never create loops (they join a hub to a position), so copy
    exceptions leave these counts unchanged.
    """
    principal = Fin(sum(1 for h in p.hubs if (h, h) in p.hub_edges))
    nonprincipal = Fin(0)
    for b in p.blocks:
        looped = Fin(sum(1 for q in b.positions if (q, q) in b.pattern))
        contribution = looped * b.multiplicity
        if b.origin == PRINCIPAL:
            principal = principal + contribution
        else:
            nonprincipal = nonprincipal + contribution
    return [(PRINCIPAL, principal), (NONPRINCIPAL, nonprincipal)]


def _single_copy(p: Presentation, block: Block, copy: Optional[int]) -> Structure:
    """Hubs plus one copy of a block (uniform flags when ``copy`` is None)."""
    if copy is None:
        outs, ins = block.out_flags, block.in_flags
    else:
        outs, ins = p.copy_flags(block, copy)
    nodes = tuple(p.hubs) + block.positions
    edges = set(p.hub_edges) | set(block.pattern)
    edges |= {(h, q) for h, q in outs}
    edges |= {(q, h) for q, h in ins}
    return Structure(nodes, frozenset(edges), frozenset(p.hubs))


def count_neighborhood_type(p: Presentation, nb) -> Card:
    """How many points of the extension have an ω-neighborhood P-isomorphic
    to nb.  The count runs over ``extend(p)``, which is ``p`` itself when p
    is already an extension."""
    from .neighborhood import extract, p_iso

    ext = extend(p)
    total = Fin(0)
    hub_frame = Structure(tuple(ext.hubs), ext.hub_edges, frozenset(ext.hubs))
    for h in ext.hubs:
        if p_iso(extract(hub_frame, h), nb):
            total = total + Fin(1)
    for b in ext.blocks:
        exceptional = ext.exceptional_copies(b.id)
        uniform_frame = _single_copy(ext, b, None)
        for q in b.positions:
            if p_iso(extract(uniform_frame, q), nb):
                if b.multiplicity.finite:
                    total = total + Fin(b.multiplicity.n - len(exceptional))
                else:
                    total = total + b.multiplicity
            for c in exceptional:
                if p_iso(extract(_single_copy(ext, b, c), q), nb):
                    total = total + Fin(1)
    return total
