"""Finite relational structures with one binary relation.

A :class:`Structure` is the carrier for every exact computation in the
package: a set of named nodes, one edge relation and a declared set of hubs
standing in for the nodes of infinite degree.  The S/P decomposition, images,
preimages and roads all live here, together with the ``.frame`` text format.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Optional, Sequence

from .errors import InputError, ParseError

NAME_RE = re.compile(r"[A-Za-z0-9_.\-\[\]']+$")

Edge = tuple[str, str]


@dataclass(frozen=True)
class Structure:
    """A finite directed graph over named nodes.

    ``hubs`` marks the surrogate of the infinite-degree nodes; every hub ``h``
    gets the constant ``d_h``.  Node order is declaration order and is what
    the printers and the bitmask encodings use.
    """

    nodes: tuple[str, ...]
    edges: frozenset[Edge] = frozenset()
    hubs: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", frozenset((a, b) for a, b in self.edges))
        object.__setattr__(self, "hubs", frozenset(self.hubs))
        if len(set(self.nodes)) != len(self.nodes):
            seen = set()
            dup = next(n for n in self.nodes if n in seen or seen.add(n))
            raise InputError(f"duplicate node name {dup!r}")
        declared = set(self.nodes)
        for a, b in self.edges:
            if a not in declared or b not in declared:
                raise InputError(f"edge ({a}, {b}) uses an undeclared node")
        for h in self.hubs:
            if h not in declared:
                raise InputError(f"hub {h!r} is not a declared node")

    @cached_property
    def index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.nodes)}

    @property
    def constants(self) -> dict[str, str]:
        """Constant name ``d_<hub>`` -> hub node."""
        return {f"d_{h}": h for h in self.hub_order}

    @property
    def hub_order(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if n in self.hubs)

    @cached_property
    def succ(self) -> dict[str, frozenset[str]]:
        out: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            out[a].add(b)
        return {n: frozenset(s) for n, s in out.items()}

    @cached_property
    def pred(self) -> dict[str, frozenset[str]]:
        inc: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            inc[b].add(a)
        return {n: frozenset(s) for n, s in inc.items()}

    def __len__(self):
        return len(self.nodes)

    def check_nodes(self, xs: Iterable[str]) -> frozenset[str]:
        xs = frozenset(xs)
        unknown = xs - set(self.nodes)
        if unknown:
            raise InputError(f"unknown node(s): {', '.join(sorted(unknown))}")
        return xs

    def with_edges(self, edges: Iterable[Edge]) -> "Structure":
        return Structure(self.nodes, frozenset(edges), self.hubs)

    def sorted_edges(self, edges: Optional[Iterable[Edge]] = None) -> list[Edge]:
        idx = self.index
        es = self.edges if edges is None else edges
        return sorted(es, key=lambda e: (idx[e[0]], idx[e[1]]))


@dataclass(frozen=True)
class Road:
    """A sequence ``w_0 .. w_n`` with one direction flag per step.

    ``forward[i]`` is True when step ``i`` uses ``Q(w_i, w_{i+1})`` and False
    when it uses ``Q(w_{i+1}, w_i)``.  Nodes may be node names or any other
    hashable value (ultrafilters, for instance).
    """

    nodes: tuple[Hashable, ...]
    forward: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "forward", tuple(bool(f) for f in self.forward))
        if not self.nodes:
            raise InputError("a road has at least one node")
        if len(self.forward) != len(self.nodes) - 1:
            raise InputError("a road needs exactly one direction flag per step")

    def __len__(self):
        return len(self.forward)

    @property
    def start(self):
        return self.nodes[0]

    @property
    def end(self):
        return self.nodes[-1]

    def steps(self):
        """Yield ``(w_i, w_{i+1}, forward)`` triples."""
        for i, fwd in enumerate(self.forward):
            yield self.nodes[i], self.nodes[i + 1], fwd

    def flagged_edges(self) -> list[tuple]:
        return [(a, b) if fwd else (b, a) for a, b, fwd in self.steps()]

    def replays(self, Q: Iterable[Edge]) -> bool:
        Q = set(Q)
        return all(e in Q for e in self.flagged_edges())

    def reversed(self) -> "Road":
        return Road(self.nodes[::-1], tuple(not f for f in self.forward[::-1]))

    def __str__(self):
        parts = [str(self.nodes[0])]
        for _, b, fwd in self.steps():
            parts.append("->" if fwd else "<-")
            parts.append(str(b))
        return " ".join(parts)


def image(structure: Structure, Q: Iterable[Edge], X: Iterable[str]) -> frozenset[str]:
    """``Q[X]``: every node some member of X points to along Q."""
    X = structure.check_nodes(X)
    return frozenset(t for s, t in Q if s in X)


def preimage(structure: Structure, Q: Iterable[Edge], X: Iterable[str]) -> frozenset[str]:
    """``<Q>(X)``: every node that points along Q into X."""
    X = structure.check_nodes(X)
    return frozenset(s for s, t in Q if t in X)


def converse(Q: Iterable[Edge]) -> frozenset[Edge]:
    return frozenset((b, a) for a, b in Q)


def decompose(structure: Structure) -> tuple[frozenset[Edge], frozenset[Edge]]:
    """Split the edges into ``(S, P)``; P holds the edges touching a hub."""
    hubs = structure.hubs
    P = frozenset(e for e in structure.edges if e[0] in hubs or e[1] in hubs)
    return structure.edges - P, P


def max_degrees(structure: Structure, Q: Optional[Iterable[Edge]] = None) -> tuple[int, int]:
    """Return ``(max out-degree, max in-degree)`` of Q (default: all edges)."""
    Q = structure.edges if Q is None else frozenset(Q)
    outd = {n: 0 for n in structure.nodes}
    ind = {n: 0 for n in structure.nodes}
    for a, b in Q:
        outd[a] += 1
        ind[b] += 1
    return max(outd.values(), default=0), max(ind.values(), default=0)


def find_road(
    structure: Structure,
    Q: Iterable[Edge],
    s: str,
    t: str,
    max_len: Optional[int] = None,
) -> Optional[Road]:
    """Shortest Q-road from s to t, or None.

    Among shortest roads the node sequence is lexicographically least by node
    name; a step that could go either way is recorded as forward.
    """
    structure.check_nodes((s, t))
    Q = frozenset(Q)
    nbrs: dict[str, set[str]] = {n: set() for n in structure.nodes}
    for a, b in Q:
        nbrs[a].add(b)
        nbrs[b].add(a)
    dist = {t: 0}
    queue = deque([t])
    while queue:
        cur = queue.popleft()
        for nxt in nbrs[cur]:
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    if s not in dist or (max_len is not None and dist[s] > max_len):
        return None
    path = [s]
    flags = []
    cur = s
    while cur != t:
        nxt = min(n for n in nbrs[cur] if dist.get(n) == dist[cur] - 1)
        flags.append((cur, nxt) in Q)
        path.append(nxt)
        cur = nxt
    return Road(tuple(path), tuple(flags))


# -- .frame format -----------------------------------------------------------


def parse_frame(text: str) -> Structure:
    """Parse the line-oriented ``.frame`` format.

    ``node <name>``, ``hub <name>`` (a node that is also a hub) and
    ``edge <from> <to>``; ``#`` starts a comment.  A node must be declared
    before an edge uses it.
    """
    nodes: list[str] = []
    hubs: set[str] = set()
    edges: set[Edge] = set()
    declared: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw, args = parts[0], parts[1:]
        if kw in ("node", "hub"):
            if len(args) != 1:
                raise ParseError(f"'{kw}' takes one name", lineno)
            name = args[0]
            if not NAME_RE.match(name):
                raise ParseError(f"bad node name {name!r}", lineno)
            if name in declared:
                raise ParseError(f"duplicate node {name!r}", lineno)
            declared.add(name)
            nodes.append(name)
            if kw == "hub":
                hubs.add(name)
        elif kw == "edge":
            if len(args) != 2:
                raise ParseError("'edge' takes two node names", lineno)
            for a in args:
                if a not in declared:
                    raise ParseError(f"undeclared node {a!r}", lineno)
            edges.add((args[0], args[1]))
        else:
            raise ParseError(f"unknown keyword {kw!r}", lineno)
    return Structure(tuple(nodes), frozenset(edges), frozenset(hubs))


def format_frame(structure: Structure) -> str:
    lines = [("hub " if n in structure.hubs else "node ") + n for n in structure.nodes]
    lines += [f"edge {a} {b}" for a, b in structure.sorted_edges()]
    return "\n".join(lines) + "\n"


def structure_from_edges(nodes: Sequence[str], edges: Iterable[Edge], hubs: Iterable[str] = ()) -> Structure:
    return Structure(tuple(nodes), frozenset(edges), frozenset(hubs))
