"""Ultrafilters over finite universes and over presentations.

Over a finite universe every ultrafilter is principal, so an
:class:`Ultrafilter` stores its generator.  The set-family definitions are
nevertheless evaluated literally: :func:`ue_related` walks every subset of
the universe (as bitmasks in numpy arrays) under both characterizations of
the extended relation and insists they agree.

For presentations, :class:`Principal` and :class:`NonPrincipal` name the
points of the extension symbolically and :func:`symbolic_ue_related`
decides the extended relation between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .errors import CapExceeded, InputError
from .presentation import NONPRINCIPAL, Presentation
from .structure import Road, Structure, image, preimage

MAX_UNIVERSE = 20


@dataclass(frozen=True)
class Ultrafilter:
    """The principal ultrafilter generated by ``generator`` over ``universe``."""

    universe: tuple[str, ...]
    generator: str

    def __post_init__(self):
        object.__setattr__(self, "universe", tuple(self.universe))
        if self.generator not in self.universe:
            raise InputError(f"{self.generator!r} is not in the universe")

    def __contains__(self, X) -> bool:
        X = frozenset(X)
        if not X <= set(self.universe):
            raise InputError("set is not a subset of the universe")
        return self.generator in X

    def family(self) -> Iterator[frozenset[str]]:
        """Every member set, in bitmask order of the universe."""
        n = len(self.universe)
        if n > MAX_UNIVERSE:
            raise CapExceeded(f"universe of {n} elements exceeds the subset cap {MAX_UNIVERSE}")
        for mask in range(1 << n):
            X = frozenset(x for i, x in enumerate(self.universe) if mask >> i & 1)
            if self.generator in X:
                yield X

    def __str__(self):
        return f"pi_{self.generator}"


def principal(structure: Structure, w: str) -> Ultrafilter:
    structure.check_nodes([w])
    return Ultrafilter(structure.nodes, w)


def _check_universe(structure: Structure, *us: Ultrafilter) -> None:
    for u in us:
        if u.universe != structure.nodes:
            raise InputError("ultrafilter is over a different universe")


@lru_cache(maxsize=256)
def _subset_tables(nodes: tuple[str, ...], relation: frozenset) -> tuple[np.ndarray, np.ndarray]:
    """``(pre, img)`` with ``pre[X]`` the bitmask of <Q>(X) and ``img[X]``
    that of Q[X], for every subset X given as a bitmask."""
    n = len(nodes)
    if n > MAX_UNIVERSE:
        raise CapExceeded(f"universe of {n} elements exceeds the subset cap {MAX_UNIVERSE}")
    idx = {x: i for i, x in enumerate(nodes)}
    pre_single = [0] * n
    img_single = [0] * n
    for a, b in relation:
        pre_single[idx[b]] |= 1 << idx[a]
        img_single[idx[a]] |= 1 << idx[b]
    pre = np.zeros(1 << n, dtype=np.int64)
    img = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        half = 1 << i
        pre[half : 2 * half] = pre[:half] | pre_single[i]
        img[half : 2 * half] = img[:half] | img_single[i]
    return pre, img


def ue_related(
    structure: Structure,
    u: Ultrafilter,
    v: Ultrafilter,
    relation: Optional[Iterable[tuple[str, str]]] = None,
) -> bool:
    """The extended relation between two ultrafilters.

    Evaluates ``{<Q>(X) : X in v} ⊆ u`` and ``{Q[X] : X in u} ⊆ v`` over all
    subsets and raises AssertionError if they ever disagree.  ``relation``
    defaults to the structure's edges.
    """
    _check_universe(structure, u, v)
    rel = structure.edges if relation is None else frozenset(relation)
    pre, img = _subset_tables(structure.nodes, rel)
    idx = structure.index
    ui, vi = idx[u.generator], idx[v.generator]
    masks = np.arange(1 << len(structure), dtype=np.int64)
    in_v = (masks >> vi) & 1 == 1
    in_u = (masks >> ui) & 1 == 1
    by_preimage = bool(np.all((pre[in_v] >> ui) & 1))
    by_image = bool(np.all((img[in_u] >> vi) & 1))
    if by_preimage != by_image:
        raise AssertionError(f"characterizations disagree on ({u}, {v}): {by_preimage} vs {by_image}")
    return by_preimage


def ue_matrix(structure: Structure, relation: Optional[Iterable[tuple[str, str]]] = None) -> np.ndarray:
    """The extended relation between all pairs of ultrafilters at once.

    Entry ``[i, j]`` relates the ultrafilters generated by nodes i and j.
    Both characterizations are evaluated over every subset, as in
    :func:`ue_related`, and must agree entrywise.
    """
    rel = structure.edges if relation is None else frozenset(relation)
    n = len(structure)
    if n == 0:
        return np.zeros((0, 0), dtype=bool)
    pre, img = _subset_tables(structure.nodes, rel)
    masks = np.arange(1 << n, dtype=np.int64)
    full = (1 << n) - 1
    bits = np.arange(n, dtype=np.int64)
    by_pre = np.zeros((n, n), dtype=bool)
    by_img = np.zeros((n, n), dtype=bool)
    for i in range(n):
        members = (masks >> i) & 1 == 1
        # sets in pi_i: their preimages must all contain u, their images all contain v
        common_pre = np.bitwise_and.reduce(pre[members], initial=full)
        common_img = np.bitwise_and.reduce(img[members], initial=full)
        by_pre[:, i] = (common_pre >> bits) & 1 == 1
        by_img[i, :] = (common_img >> bits) & 1 == 1
    if not np.array_equal(by_pre, by_img):
        i, j = map(int, np.argwhere(by_pre != by_img)[0])
        raise AssertionError(
            f"characterizations disagree on (pi_{structure.nodes[i]}, pi_{structure.nodes[j]})"
        )
    return by_pre


def ue_extension_finite(structure: Structure) -> tuple[Structure, dict[str, str]]:
    """The extension of a finite structure and the witness map w -> pi_w.

    The witness is checked to be an isomorphism before it is returned.
    """
    name = {w: f"pi_{w}" for w in structure.nodes}
    m = ue_matrix(structure)
    nodes = structure.nodes
    edges = frozenset((name[nodes[i]], name[nodes[j]]) for i, j in zip(*np.nonzero(m)))
    ext = Structure(tuple(name[w] for w in structure.nodes), edges, frozenset(name[h] for h in structure.hubs))
    mapped = frozenset((name[a], name[b]) for a, b in structure.edges)
    if mapped != ext.edges:
        raise AssertionError("w -> pi_w is not an isomorphism onto the extension")
    return ext, name


def tilde_related(structure: Structure, u: Ultrafilter, v: Ultrafilter) -> bool:
    """``{x : R[{x}] in v} in u``, read off the definition."""
    _check_universe(structure, u, v)
    succ = structure.succ
    good = frozenset(x for x in structure.nodes if succ[x] in v)
    return good in u


def distinguishing_sets(ultrafilters: Sequence[Ultrafilter]) -> list[frozenset[str]]:
    """Pairwise disjoint sets with ``D_j in u_i`` exactly when i = j."""
    if not ultrafilters:
        return []
    universe = ultrafilters[0].universe
    if any(u.universe != universe for u in ultrafilters):
        raise InputError("ultrafilters are over different universes")
    if len(set(ultrafilters)) != len(ultrafilters):
        raise InputError("ultrafilters must be pairwise distinct")
    if len(ultrafilters) == 1:
        return [frozenset(universe)]
    return [frozenset([u.generator]) for u in ultrafilters]


def lift_road(structure: Structure, road: Road) -> Road:
    """Replace every node of a road by its principal ultrafilter."""
    return Road(tuple(principal(structure, w) for w in road.nodes), road.forward)


def ultrafilter_road_delta(
    structure: Structure,
    Q: Iterable[tuple[str, str]],
    X: Iterable[str],
    road: Road,
    dsets: Sequence[Iterable[str]],
) -> frozenset[str]:
    """Transport X along a road of ultrafilters.

    ``Delta_0 = X`` and each step intersects with the next distinguishing
    set after taking the image (forward step) or preimage (backward step).
    """
    Q = frozenset(Q)
    X = structure.check_nodes(X)
    ufs = list(road.nodes)
    _check_universe(structure, *ufs)
    if len(dsets) != len(ufs):
        raise InputError("need one distinguishing set per road node")
    dsets = [structure.check_nodes(D) for D in dsets]
    if X not in ufs[0]:
        raise InputError("X is not a member of the road's first ultrafilter")
    for i, u in enumerate(ufs):
        for j, D in enumerate(dsets):
            if (D in u) != (ufs[i] == ufs[j]):
                raise InputError("sets do not distinguish the road's ultrafilters")
    for a, b, fwd in road.steps():
        pair = (a, b) if fwd else (b, a)
        if not ue_related(structure, *pair, relation=Q):
            raise InputError(f"road step {a} {'->' if fwd else '<-'} {b} is not an extended Q-edge")
    delta = X
    for i, (_, _, fwd) in enumerate(road.steps()):
        moved = image(structure, Q, delta) if fwd else preimage(structure, Q, delta)
        delta = moved & dsets[i + 1]
    return delta


# -- symbolic points over presentations --------------------------------------


@dataclass(frozen=True)
class Principal:
    """pi of a hub (``element`` is its name) or of a copy position
    (``element`` is ``(block, copy, position)``)."""

    element: Union[str, tuple[str, int, str]]

    def __str__(self):
        if isinstance(self.element, str):
            return f"pi_{self.element}"
        b, c, q = self.element
        return f"pi_{b}.{c}.{q}"


@dataclass(frozen=True)
class NonPrincipal:
    block: str
    position: str
    bundle: int

    def __str__(self):
        return f"u_{self.block}.{self.bundle}.{self.position}"


SymbolicUltrafilter = Union[Principal, NonPrincipal]


def _resolve(p: Presentation, su: SymbolicUltrafilter) -> None:
    if isinstance(su, Principal):
        if isinstance(su.element, str):
            if su.element not in p.hubs:
                raise InputError(f"{su}: unknown hub")
            return
        block_id, copy, pos = su.element
        b = p.block(block_id)
        if b.origin == NONPRINCIPAL:
            raise InputError(f"{su}: block {block_id} is nonprincipal")
        if pos not in b.positions:
            raise InputError(f"{su}: block {block_id} has no position {pos}")
        if copy < 0 or (b.multiplicity.finite and copy >= b.multiplicity.n):
            raise InputError(f"{su}: copy index out of range")
        return
    if isinstance(su, NonPrincipal):
        b = p.block(su.block)
        if b.origin != NONPRINCIPAL:
            raise InputError(f"{su}: block {su.block} is principal")
        if su.position not in b.positions:
            raise InputError(f"{su}: block {su.block} has no position {su.position}")
        if su.bundle < 0:
            raise InputError(f"{su}: bundle tags are non-negative")
        return
    raise InputError(f"not a symbolic ultrafilter: {su!r}")


def _principal_edge(p: Presentation, a: Principal, b: Principal) -> bool:
    ea, eb = a.element, b.element
    if isinstance(ea, str) and isinstance(eb, str):
        return (ea, eb) in p.hub_edges
    if isinstance(ea, str):
        block_id, copy, pos = eb
        outs, _ = p.copy_flags(p.block(block_id), copy)
        return (ea, pos) in outs
    if isinstance(eb, str):
        block_id, copy, pos = ea
        _, ins = p.copy_flags(p.block(block_id), copy)
        return (pos, eb) in ins
    if ea[:2] != eb[:2]:
        return False
    return (ea[2], eb[2]) in p.block(ea[0]).pattern


def symbolic_ue_related(p: Presentation, su: SymbolicUltrafilter, sv: SymbolicUltrafilter) -> bool:
    """The extended relation between symbolic points of an extension."""
    _resolve(p, su)
    _resolve(p, sv)
    if isinstance(su, Principal) and isinstance(sv, Principal):
        return _principal_edge(p, su, sv)
    if isinstance(su, Principal):
        if not isinstance(su.element, str):
            return False
        return (su.element, sv.position) in p.block(sv.block).out_flags
    if isinstance(sv, Principal):
        if not isinstance(sv.element, str):
            return False
        return (su.position, sv.element) in p.block(su.block).in_flags
    if su.block != sv.block or su.bundle != sv.bundle:
        return False
    return (su.position, sv.position) in p.block(su.block).pattern


def points_of_expand(p: Presentation, k: int) -> dict[str, SymbolicUltrafilter]:
    """Symbolic point behind each node of ``expand(p, k)``; nonprincipal
    copies become bundles with the copy index as tag."""
    from .presentation import copy_indices, node_name

    points: dict[str, SymbolicUltrafilter] = {h: Principal(h) for h in p.hubs}
    for b in p.blocks:
        for c in copy_indices(p, b, k):
            for q in b.positions:
                if b.origin == NONPRINCIPAL:
                    points[node_name(b.id, c, q)] = NonPrincipal(b.id, q, c)
                else:
                    points[node_name(b.id, c, q)] = Principal((b.id, c, q))
    return points
