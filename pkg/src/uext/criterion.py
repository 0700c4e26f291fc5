"""Pointwise analysis of ``Alt_n | phi`` over presentations.

Alt_n holds locally exactly at nodes of out-degree at most n, and phi holds
locally wherever the successor-connectivity condition
:func:`~uext.modal.star_star_condition` holds.  Since the two formulas share
no variables, a node validates the disjunction when either side does.
These helpers evaluate that criterion on the (possibly infinite) structure
a presentation denotes, using a finite truncation where the answer provably
does not depend on the number of uniform copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from . import modal
from .errors import CapExceeded, InputError
from .presentation import (
    NONPRINCIPAL,
    Card,
    Fin,
    Presentation,
    card_sum,
    copy_indices,
    expand,
    node_name,
    validate,
)
from .structure import Structure

UNIFORM_COPIES = 3  # enough for any path between two copies to reroute via a third


# -- degrees -----------------------------------------------------------------


def hub_out_degree(p: Presentation, hub: str) -> Card:
    """Exact out-degree of a hub in the denoted structure."""
    parts = [Fin(sum(1 for a, _ in p.hub_edges if a == hub))]
    for b in p.blocks:
        exceptional = p.exceptional_copies(b.id)
        uniform = sum(1 for h, _ in b.out_flags if h == hub)
        if b.multiplicity.finite:
            parts.append(Fin(uniform * (b.multiplicity.n - len(exceptional))))
        elif uniform:
            parts.append(b.multiplicity)
        for c in exceptional:
            outs, _ = p.copy_flags(b, c)
            parts.append(Fin(sum(1 for h, _ in outs if h == hub)))
    return card_sum(parts)


def infinite_out_hubs(p: Presentation) -> list[str]:
    return [h for h in p.hubs if not hub_out_degree(p, h).finite]


def witness_frame(p: Presentation) -> Structure:
    """Truncation that decides the criterion: every copy of a finite block,
    every exceptional copy and three uniform copies of each infinite block."""
    finite = [b.multiplicity.n for b in p.blocks if b.multiplicity.finite]
    return expand(p, max([UNIFORM_COPIES] + finite))


# -- membership in the family ------------------------------------------------


@dataclass
class ConditionResult:
    name: str
    ok: bool
    detail: str = ""

    def __str__(self):
        tail = f": {self.detail}" if self.detail else ""
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}{tail}"


@dataclass
class FamilyReport:
    conditions: list[ConditionResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.conditions)

    def __str__(self):
        return "\n".join(str(c) for c in self.conditions)


def shared_infinite_successors(p: Presentation, w: str, v: str) -> list[str]:
    """Block positions that both hubs point to in infinitely many copies."""
    shared = []
    for b in p.blocks:
        if b.multiplicity.finite:
            continue
        for q in b.positions:
            if (w, q) in b.out_flags and (v, q) in b.out_flags:
                shared.append(f"{b.id}.{q}")
    return shared


def family_K_check(p: Presentation) -> FamilyReport:
    """Evaluate the three membership conditions of the family.

    1. almost bounded with the declared hubs (presentation validity);
    2. every node of infinite out-degree satisfies the connectivity
       condition, evaluated on :func:`witness_frame`;
    3. some node w of infinite out-degree has ``R[w] ∩ R[v]`` finite for every
       successor v, w itself included when w is reflexive.  Non-hub
       successors have finite out-degree, so only hub successors matter and
       their overlap is read off the uniform flag tables.
    """
    report = FamilyReport()
    vr = validate(p)
    report.conditions.append(ConditionResult("almost bounded", vr.ok, "; ".join(vr.violations)))
    if not vr.ok:
        return report
    hubs = infinite_out_hubs(p)
    frame = witness_frame(p)
    bad = [h for h in hubs if not modal.star_star_condition(frame, h)]
    report.conditions.append(
        ConditionResult(
            "infinite out-degree nodes satisfy the connectivity condition",
            not bad,
            ("fails at " + ", ".join(bad)) if bad else f"checked {', '.join(hubs) or 'no nodes'}",
        )
    )
    witnesses = []
    reasons = []
    for w in hubs:
        hub_succ = sorted(b for a, b in p.hub_edges if a == w)
        clashes = {v: shared_infinite_successors(p, w, v) for v in hub_succ}
        clashes = {v: s for v, s in clashes.items() if s}
        if clashes:
            reasons.append(
                "; ".join(f"R[{w}] ∩ R[{v}] ⊇ all copies of {', '.join(s)}" for v, s in clashes.items())
            )
        else:
            witnesses.append(w)
    if not hubs:
        detail = "no node has infinite out-degree"
    elif witnesses:
        detail = "witness " + ", ".join(witnesses)
    else:
        detail = "; ".join(reasons)
    report.conditions.append(ConditionResult("some infinite node has finitely overlapping successors", bool(witnesses), detail))
    return report


# -- the pointwise criterion -------------------------------------------------


@dataclass
class CriterionVerdict:
    n: int
    failures: list[tuple[str, Card, str]] = field(default_factory=list)  # (node, out-degree, reason)
    points_checked: int = 0

    @property
    def valid(self) -> bool:
        return not self.failures

    def failing_nodes(self) -> list[str]:
        return [f[0] for f in self.failures]

    def __str__(self):
        if self.valid:
            return f"Valid (Alt_{self.n} | phi, {self.points_checked} point classes checked)"
        lines = [f"Invalid (Alt_{self.n} | phi)"]
        for node, degree, reason in self.failures:
            lines.append(f"  at {node}: out-degree {degree}, {reason}")
        return "\n".join(lines)


def criterion_validity(p: Presentation, n: int) -> CriterionVerdict:
    """Decide ``Alt_n | phi`` pointwise on the structure p denotes.

    A point passes when its out-degree is at most n or it satisfies the
    connectivity condition.  Hub degrees are computed symbolically; the
    condition and all non-hub points are evaluated on
    :func:`witness_frame`, whose nodes cover every isomorphism class of
    point (uniform copies of a block are interchangeable, and nonprincipal
    bundles are materialized like copies).
    """
    if n < 0:
        raise InputError("n must be non-negative")
    vr = validate(p)
    if not vr.ok:
        raise InputError("presentation is invalid: " + "; ".join(vr.violations))
    frame = witness_frame(p)
    verdict = CriterionVerdict(n)
    for w in frame.nodes:
        verdict.points_checked += 1
        degree = hub_out_degree(p, w) if w in frame.hubs else Fin(len(frame.succ[w]))
        if degree <= Fin(n):
            continue
        if modal.star_star_condition(frame, w):
            continue
        reason = "connectivity among successors fails" if not modal.star_condition(frame, w) else "reflexive without a two-way successor"
        verdict.failures.append((w, degree, reason))
    return verdict


# -- concrete countermodels --------------------------------------------------


def countermodel_frame(p: Presentation, hub: str, k: int) -> Structure:
    """Hubs, hub edges, k principal copies of every block touching ``hub``
    and one bundle of every nonprincipal block touching it."""
    if hub not in p.hubs:
        raise InputError(f"unknown hub {hub!r}")
    nodes = list(p.hubs)
    edges = set(p.hub_edges)
    for b in p.blocks:
        if hub not in b.hubs_touched() and not any(e.hub == hub for e in p.exceptions_of(b.id)):
            continue
        copies = [0] if b.origin == NONPRINCIPAL else copy_indices(p, b, k)
        for c in copies:
            name = {q: node_name(b.id, c, q) for q in b.positions}
            nodes += [name[q] for q in b.positions]
            edges |= {(name[x], name[y]) for x, y in b.pattern}
            outs, ins = p.copy_flags(b, c) if b.origin != NONPRINCIPAL else (b.out_flags, b.in_flags)
            edges |= {(h, name[q]) for h, q in outs}
            edges |= {(name[q], h) for q, h in ins}
    return Structure(tuple(nodes), frozenset(edges), frozenset(p.hubs))


def counterexample_frame(
    p: Presentation,
    hub: str,
    n: int,
    k: int,
    max_val_bits: int = modal.DEFAULT_MAX_VAL_BITS,
) -> tuple[Structure, dict, str]:
    """A finite frame, valuation and node refuting ``Alt_n | phi`` at ``hub``.

    Requires :func:`criterion_validity` to fail at the hub.  The two
    disjuncts are refuted separately by exhaustive search (their variables
    are disjoint), then the combined valuation is re-checked with
    :func:`~uext.modal.check`.
    """
    verdict = criterion_validity(p, n)
    if hub not in verdict.failing_nodes():
        raise InputError(f"the criterion does not fail at {hub}; no countermodel exists there")
    frame = countermodel_frame(p, hub, k)
    if len(frame.succ[hub]) <= n:
        raise InputError(f"k={k} leaves {hub} with out-degree {len(frame.succ[hub])} <= {n}")
    valuation: dict = {}
    for part in (modal.alt_n(n), modal.phi_formula()):
        result = modal.frame_valid(frame, part, max_val_bits, at=[hub])
        if isinstance(result, modal.Overflow):
            raise CapExceeded(
                f"{len(frame)} nodes x {len(modal.variables(part))} variables = {result.needed_bits} bits "
                f"exceeds the cap {max_val_bits} (k={k})"
            )
        if isinstance(result, modal.Valid):
            raise InputError(f"{part} holds at {hub} on the k={k} frame under every valuation")
        valuation.update(result.valuation)
    target = modal.Or(modal.alt_n(n), modal.phi_formula())
    if modal.check(frame, valuation, hub, target):
        raise AssertionError("combined valuation does not refute the disjunction")
    return frame, valuation, hub
