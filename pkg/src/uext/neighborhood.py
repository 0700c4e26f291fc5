"""Rooted (Q,n)-neighborhoods, P-isomorphism and the type formulas.

A neighborhood records the S-edges around a root together with, for every
member, its P-adjacency to each hub:

* ``(node, "out", h)``: the edge h -> node exists,
* ``(node, "in", h)``: the edge node -> h exists,
* ``(node, "hub", h)``: the node is hub h itself.

Canonical forms come from colour refinement plus individualisation, so
equal digests mean P-isomorphic neighborhoods and vice versa.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Iterator, Mapping, Optional, Sequence

from . import fo
from .errors import CapExceeded, InputError
from .structure import Structure, decompose

DIGEST_VERSION = "nbhd-v1"
DEFAULT_CHI_MAX_NODES = 12

Annotation = tuple[str, str, str]  # (node, direction, hub)


@dataclass(frozen=True)
class Neighborhood:
    root: str
    nodes: tuple[str, ...]
    s_edges: frozenset[tuple[str, str]]
    annotations: frozenset[Annotation]
    radius: int
    hubs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "s_edges", frozenset(self.s_edges))
        object.__setattr__(self, "annotations", frozenset(self.annotations))
        object.__setattr__(self, "hubs", tuple(sorted(self.hubs)))
        members = set(self.nodes)
        if self.root not in members:
            raise InputError("the root must be a member of the neighborhood")
        for a, b in self.s_edges:
            if a not in members or b not in members:
                raise InputError(f"edge ({a}, {b}) leaves the neighborhood")
        for node, direction, hub in self.annotations:
            if node not in members or direction not in ("in", "out", "hub"):
                raise InputError(f"bad annotation {(node, direction, hub)!r}")

    def __len__(self):
        return len(self.nodes)

    def labels(self, node: str) -> tuple[tuple[str, str], ...]:
        return tuple(sorted((d, h) for n, d, h in self.annotations if n == node))

    def hub_of(self, node: str) -> Optional[str]:
        for n, d, h in self.annotations:
            if n == node and d == "hub":
                return h
        return None


def _annotations_of(structure: Structure, node: str) -> set[Annotation]:
    out = set()
    for h in structure.hubs:
        if (h, node) in structure.edges:
            out.add((node, "out", h))
        if (node, h) in structure.edges:
            out.add((node, "in", h))
        if node == h:
            out.add((node, "hub", h))
    return out


def _undirected(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> dict[str, set[str]]:
    nbrs: dict[str, set[str]] = {n: set() for n in nodes}
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    return nbrs


def _distances(nbrs: Mapping[str, set[str]], root: str, limit: Optional[int] = None) -> dict[str, int]:
    dist = {root: 0}
    queue = deque([root])
    while queue:
        cur = queue.popleft()
        if limit is not None and dist[cur] >= limit:
            continue
        for nxt in nbrs[cur]:
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def extract(
    structure: Structure,
    w: str,
    n: Optional[int] = None,
    Q: Optional[Iterable[tuple[str, str]]] = None,
) -> Neighborhood:
    """The (Q,n)-neighborhood of w; Q defaults to S and ``n=None`` means ω.

    For ω the whole Q-component is taken and its diameter is stored as the
    radius.
    """
    structure.check_nodes([w])
    Q = decompose(structure)[0] if Q is None else frozenset(Q)
    nbrs = _undirected(structure.nodes, Q)
    dist = _distances(nbrs, w, n)
    members = set(dist)
    if n is None:
        radius = max(max(_distances(nbrs, m).values()) for m in members)
    else:
        radius = n
    order = [m for m in structure.nodes if m in members]
    edges = frozenset((a, b) for a, b in Q if a in members and b in members)
    ann = frozenset(a for m in order for a in _annotations_of(structure, m))
    return Neighborhood(w, tuple(order), edges, ann, radius, tuple(structure.hub_order))


# -- isomorphism -------------------------------------------------------------


def _search_iso(
    nodes1: Sequence[Hashable],
    edges1: frozenset,
    colors1: Mapping,
    nodes2: Sequence[Hashable],
    edges2: frozenset,
    colors2: Mapping,
    fixed: Mapping,
) -> Iterator[dict]:
    """Yield every bijection extending ``fixed`` preserving edges and colours."""
    if len(nodes1) != len(nodes2) or len(edges1) != len(edges2):
        return
    nb1 = _undirected(nodes1, edges1)
    nb2 = _undirected(nodes2, edges2)

    def sig(n, edges, nbrs, colors):
        outd = sum(1 for m in nbrs[n] if (n, m) in edges)
        ind = sum(1 for m in nbrs[n] if (m, n) in edges)
        return (colors[n], (n, n) in edges, outd, ind)

    sig1 = {n: sig(n, edges1, nb1, colors1) for n in nodes1}
    sig2 = {n: sig(n, edges2, nb2, colors2) for n in nodes2}
    if sorted(map(repr, sig1.values())) != sorted(map(repr, sig2.values())):
        return
    for a, b in fixed.items():
        if sig1[a] != sig2[b]:
            return
    # breadth-first from the fixed nodes, so most nodes have a mapped neighbour
    order: list = []
    seen: set = set()
    for start in list(fixed) + list(nodes1):
        if start in seen:
            continue
        seen.add(start)
        order.append(start)
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nxt in sorted(nb1[cur], key=repr):
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(nxt)
                    queue.append(nxt)
    free = [n for n in order if n not in fixed]

    def consistent(a, b, mapping):
        if sig1[a] != sig2[b]:
            return False
        for a2, b2 in mapping.items():
            if ((a, a2) in edges1) != ((b, b2) in edges2):
                return False
            if ((a2, a) in edges1) != ((b2, b) in edges2):
                return False
        return True

    mapping = dict(fixed)
    used = set(mapping.values())
    for a, b in fixed.items():
        rest = {k: v for k, v in fixed.items() if k != a}
        if not consistent(a, b, rest):
            return

    def extend(i):
        if i == len(free):
            yield dict(mapping)
            return
        a = free[i]
        mapped_nbrs = [m for m in nb1[a] if m in mapping]
        if mapped_nbrs:
            candidates = nb2[mapping[mapped_nbrs[0]]]
        else:
            candidates = nodes2
        for b in sorted(candidates, key=repr):
            if b in used or not consistent(a, b, mapping):
                continue
            mapping[a] = b
            used.add(b)
            yield from extend(i + 1)
            del mapping[a]
            used.discard(b)

    yield from extend(0)


def iso(nb1: Neighborhood, nb2: Neighborhood) -> Optional[dict[str, str]]:
    """A root-preserving isomorphism of the S-edges, ignoring annotations."""
    plain1 = {n: () for n in nb1.nodes}
    plain2 = {n: () for n in nb2.nodes}
    return next(
        _search_iso(nb1.nodes, nb1.s_edges, plain1, nb2.nodes, nb2.s_edges, plain2, {nb1.root: nb2.root}),
        None,
    )


def p_iso_map(nb1: Neighborhood, nb2: Neighborhood) -> Optional[dict[str, str]]:
    if nb1.hubs != nb2.hubs:
        return None
    c1 = {n: nb1.labels(n) for n in nb1.nodes}
    c2 = {n: nb2.labels(n) for n in nb2.nodes}
    return next(
        _search_iso(nb1.nodes, nb1.s_edges, c1, nb2.nodes, nb2.s_edges, c2, {nb1.root: nb2.root}),
        None,
    )


def p_iso(nb1: Neighborhood, nb2: Neighborhood) -> bool:
    """Root-preserving isomorphism that also preserves every hub annotation."""
    return p_iso_map(nb1, nb2) is not None


# -- canonical forms ---------------------------------------------------------


def _refine(nodes, out_nb, in_nb, colors: dict) -> dict:
    """Colour refinement to the coarsest equitable partition.

    Colours are small integers assigned in sorted order of their signatures,
    so the result depends only on the isomorphism type.
    """
    while True:
        sigs = {
            n: (
                colors[n],
                tuple(sorted(colors[m] for m in out_nb[n])),
                tuple(sorted(colors[m] for m in in_nb[n])),
            )
            for n in nodes
        }
        palette = {s: i for i, s in enumerate(sorted(set(sigs.values())))}
        new = {n: palette[sigs[n]] for n in nodes}
        if len(palette) == len(set(colors.values())):
            return new
        colors = new


def canonical_labeling(
    nodes: Sequence[Hashable],
    edges: Iterable[tuple],
    colors: Mapping[Hashable, object],
) -> tuple[list, tuple]:
    """Canonical node order and certificate of a vertex-coloured digraph.

    Initial colours must be mutually comparable.  Returns ``(order, cert)``
    where ``cert`` is equal for two inputs iff they are isomorphic by a
    colour-preserving map; ``order`` lists the nodes in canonical position.
    """
    nodes = list(nodes)
    edges = frozenset(edges)
    out_nb = {n: [] for n in nodes}
    in_nb = {n: [] for n in nodes}
    for a, b in edges:
        out_nb[a].append(b)
        in_nb[b].append(a)
    palette = {c: i for i, c in enumerate(sorted(set(colors[n] for n in nodes)))}
    color_names = tuple(sorted(set(colors[n] for n in nodes)))
    start = {n: palette[colors[n]] for n in nodes}
    best: list = [None, None]

    def certificate(order):
        pos = {n: i for i, n in enumerate(order)}
        return (
            tuple(palette[colors[n]] for n in order),
            tuple(sorted((pos[a], pos[b]) for a, b in edges)),
        )

    def search(coloring):
        coloring = _refine(nodes, out_nb, in_nb, coloring)
        cells: dict[int, list] = {}
        for n in nodes:
            cells.setdefault(coloring[n], []).append(n)
        target = next((c for c in sorted(cells) if len(cells[c]) > 1), None)
        if target is None:
            order = sorted(nodes, key=lambda n: coloring[n])
            cert = certificate(order)
            if best[1] is None or cert < best[1]:
                best[0], best[1] = order, cert
            return
        tried = []
        for v in cells[target]:
            # twins (same colour, same neighbourhoods) give the same result
            if any(_twins(v, t, out_nb, in_nb, edges) for t in tried):
                continue
            tried.append(v)
            shifted = {n: 2 * c + 1 for n, c in coloring.items()}
            shifted[v] = 2 * coloring[v]
            search(shifted)

    if nodes:
        search(start)
        order, cert = best
    else:
        order, cert = [], ((), ())
    return order, (color_names, cert)


def _twins(a, b, out_nb, in_nb, edges) -> bool:
    if ((a, a) in edges) != ((b, b) in edges) or ((a, b) in edges) != ((b, a) in edges):
        return False
    oa, ob = set(out_nb[a]) - {a, b}, set(out_nb[b]) - {a, b}
    ia, ib = set(in_nb[a]) - {a, b}, set(in_nb[b]) - {a, b}
    return oa == ob and ia == ib


@dataclass(frozen=True)
class CanonicalForm:
    order: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    annotations: tuple[tuple[int, str, str], ...]
    digest: str

    def __str__(self):
        return self.digest


def canonical_form(nb: Neighborhood) -> CanonicalForm:
    """Root-preserving canonical form under P-isomorphism.

    Digest layout, with positions in canonical order and the root at 0::

        nbhd-v1|hubs:<h,..>|size:<k>|edges:<i>><j>,..|ann:<i>:<dir>:<hub>,..
    """
    colors = {n: (0 if n == nb.root else 1, nb.labels(n)) for n in nb.nodes}
    order, _ = canonical_labeling(nb.nodes, nb.s_edges, colors)
    pos = {n: i for i, n in enumerate(order)}
    edges = tuple(sorted((pos[a], pos[b]) for a, b in nb.s_edges))
    ann = tuple(sorted((pos[n], d, h) for n, d, h in nb.annotations))
    digest = "|".join(
        [
            DIGEST_VERSION,
            "hubs:" + ",".join(nb.hubs),
            f"size:{len(order)}",
            "edges:" + ",".join(f"{a}>{b}" for a, b in edges),
            "ann:" + ",".join(f"{i}:{d}:{h}" for i, d, h in ann),
        ]
    )
    return CanonicalForm(tuple(order), edges, ann, digest)


def matching_set(structure: Structure, nb: Neighborhood, n: Optional[int] = None) -> frozenset[str]:
    """Every node whose (S,n)-neighborhood is P-isomorphic to nb.

    ``n`` defaults to the radius of nb.
    """
    n = nb.radius if n is None else n
    return frozenset(w for w in structure.nodes if p_iso(extract(structure, w, n), nb))


# -- type formulas -----------------------------------------------------------


def emit_psi(n: int, src: str = "y0", dst: str = "yn", prefix: str = "y") -> fo.Formula:
    """Existence of an S-road of length n through pairwise distinct nodes.

    The endpoints are the free variables ``src`` and ``dst``; the inner
    nodes are ``<prefix>1 .. <prefix>{n-1}``.
    """
    if n < 0:
        raise InputError("road length must be non-negative")
    if n == 0:
        return fo.Eq(fo.Var(src), fo.Var(dst))
    ys = [src] + [f"{prefix}{i}" for i in range(1, n)] + [dst]
    distinct = [
        fo.Not(fo.Eq(fo.Var(ys[i]), fo.Var(ys[j])))
        for i in range(n + 1)
        for j in range(n + 1)
        if i != j
    ]
    steps = [
        fo.Or(fo.Atom("S", fo.Var(ys[i]), fo.Var(ys[i + 1])), fo.Atom("S", fo.Var(ys[i + 1]), fo.Var(ys[i])))
        for i in range(n)
    ]
    return fo.exists_many(ys[1:-1], fo.conj(distinct + steps))


def emit_chi(nb: Neighborhood, bound: Optional[int] = None, max_nodes: int = DEFAULT_CHI_MAX_NODES) -> fo.Formula:
    """The sentence describing nb up to P-isomorphism, free in ``x``.

    Members are ``x`` (the root) and ``x1 .. x{k-1}``.  The conjunction lists
    S-atoms and their negations for every ordered pair, P-atoms and their
    negations against each hub constant in both directions, identification
    with or distinctness from each hub constant, the closure clause
    ``forall y (psi_0(x,y) | .. | psi_bound(x,y) -> y = x | .. | y = x{k-1})``
    and pairwise distinctness.  ``bound`` defaults to the radius.
    """
    k = len(nb)
    if k > max_nodes:
        raise CapExceeded(f"neighborhood has {k} nodes, the formula cap is {max_nodes}")
    bound = nb.radius if bound is None else bound
    order = [nb.root] + [n for n in canonical_form(nb).order if n != nb.root]
    names = ["x"] + [f"x{i}" for i in range(1, k)]
    var = {n: fo.Var(names[i]) for i, n in enumerate(order)}
    parts: list[fo.Formula] = []
    for a in order:
        for b in order:
            atom = fo.Atom("S", var[a], var[b])
            parts.append(atom if (a, b) in nb.s_edges else fo.Not(atom))
    for h in nb.hubs:
        d = fo.Const(f"d_{h}")
        for n in order:
            labels = nb.labels(n)
            out_atom = fo.Atom("P", d, var[n])
            in_atom = fo.Atom("P", var[n], d)
            parts.append(out_atom if ("out", h) in labels else fo.Not(out_atom))
            parts.append(in_atom if ("in", h) in labels else fo.Not(in_atom))
    for h in nb.hubs:
        d = fo.Const(f"d_{h}")
        parts.append(
            fo.conj(
                fo.Eq(d, var[n]) if nb.hub_of(n) == h else fo.Not(fo.Eq(d, var[n]))
                for n in order
            )
        )
    reach = fo.disj(emit_psi(m, "x", "y", prefix="z") for m in range(bound + 1))
    covered = fo.disj(fo.Eq(fo.Var("y"), var[n]) for n in order)
    parts.append(fo.Forall("y", fo.Implies(reach, covered)))
    parts.append(
        fo.conj(
            fo.Not(fo.Eq(var[a], var[b]))
            for a in order
            for b in order
            if a != b
        )
    )
    return fo.exists_many(names[1:], fo.conj(parts))
