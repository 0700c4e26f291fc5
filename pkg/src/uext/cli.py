"""The ``uext`` command line.

Exit codes: 0 pass or true, 1 fail or counterexample, 2 usage, parse or
input error, 3 a cap was exceeded.  Plain-text reports are the default;
``--json`` prints one JSON object with the keys ``command``, ``inputs``
(file name -> sha256 of its bytes), ``verdict``, ``exit`` and ``details``.
Timing is added only with ``--timing`` so reports stay byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import criterion, fo, modal, neighborhood, presentation, ultrafilter
from .errors import CapExceeded, InputError, ParseError
from .structure import Road, Structure, decompose, find_road, format_frame, parse_frame

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
DEFAULT_MAX_FRAME_SIZE = 64


class Report:
    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}
        self.lines: list[str] = []
        self.details: dict = {}
        self.verdict = "ok"

    def read(self, path: str) -> str:
        data = Path(path).read_bytes()
        self.inputs[path] = hashlib.sha256(data).hexdigest()
        return data.decode("utf-8")

    def say(self, text: str = ""):
        self.lines.append(text)

    def emit(self, code: int, started: float) -> int:
        if self.args.json:
            doc = {
                "command": self.args.argv,
                "inputs": self.inputs,
                "verdict": self.verdict,
                "exit": code,
                "details": self.details,
            }
            if self.args.timing:
                doc["seconds"] = round(time.perf_counter() - started, 6)
            print(json.dumps(doc, indent=2, sort_keys=True, default=str))
        else:
            for line in self.lines:
                print(line)
            if self.args.timing:
                print(f"time: {time.perf_counter() - started:.3f}s")
        return code


# -- loading -----------------------------------------------------------------


def _load_frame(rep: Report, path: str) -> Structure:
    s = parse_frame(rep.read(path))
    cap = rep.args.max_frame_size
    if cap is not None and len(s) > cap:
        raise CapExceeded(f"{path} has {len(s)} nodes, --max-frame-size is {cap}")
    return s


def _load_presentation(rep: Report, path: str) -> presentation.Presentation:
    return presentation.parse_presentation(rep.read(path))


def _load_any(rep: Report, path: str, k: int) -> Structure:
    if path.endswith(".abp"):
        s = presentation.expand(_load_presentation(rep, path), k)
        cap = rep.args.max_frame_size
        if cap is not None and len(s) > cap:
            raise CapExceeded(f"expanded frame has {len(s)} nodes, --max-frame-size is {cap}")
        return s
    return _load_frame(rep, path)


def _parse_sets(structure: Structure, items: Sequence[str]) -> dict[str, frozenset]:
    """``name=a,b,c`` items to a mapping of node sets."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise InputError(f"expected name=node,node,... not {item!r}")
        name, _, rest = item.partition("=")
        nodes = [x for x in rest.split(",") if x]
        out[name.strip()] = structure.check_nodes(nodes)
    return out


def _parse_road(text: str) -> Road:
    tokens = text.split()
    if not tokens or len(tokens) % 2 == 0:
        raise InputError("a road looks like 'a -> b <- c'")
    nodes, flags = [tokens[0]], []
    for arrow, node in zip(tokens[1::2], tokens[2::2]):
        if arrow not in ("->", "<-"):
            raise InputError(f"expected -> or <-, found {arrow!r}")
        flags.append(arrow == "->")
        nodes.append(node)
    return Road(tuple(nodes), tuple(flags))


def _relation(structure: Structure, name: str):
    S, P = decompose(structure)
    return {"R": structure.edges, "S": S, "P": P}[name]


def _write(rep: Report, text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
        rep.say(f"wrote {out}")
    else:
        rep.say(text.rstrip("\n"))
    rep.details["text"] = text


def _fmt_set(xs) -> str:
    return "{" + ",".join(sorted(xs)) + "}"


# -- commands ----------------------------------------------------------------


def cmd_fmt(rep, a):
    if a.file.endswith(".abp"):
        text = presentation.format_presentation(_load_presentation(rep, a.file))
    else:
        text = format_frame(_load_frame(rep, a.file))
    _write(rep, text, a.output)
    return EXIT_OK


def cmd_validate(rep, a):
    report = presentation.validate(_load_presentation(rep, a.file))
    rep.say(str(report))
    rep.details["violations"] = report.violations
    rep.verdict = "PASS" if report.ok else "FAIL"
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_expand(rep, a):
    s = _load_any(rep, a.file, a.k)
    _write(rep, format_frame(s), a.output)
    return EXIT_OK


def cmd_extend(rep, a):
    p = presentation.extend(_load_presentation(rep, a.file))
    _write(rep, presentation.format_presentation(p), a.output)
    return EXIT_OK


def cmd_ue_check(rep, a):
    s = _load_frame(rep, a.file)
    ext, witness = ultrafilter.ue_extension_finite(s)
    rep.say(f"A^ue ≅ A ({len(ext)} ultrafilters, {len(ext.edges)} edges)")
    for w in s.nodes:
        rep.say(f"  {w} -> {witness[w]}")
    rep.details["witness"] = witness
    rep.verdict = "isomorphic"
    return EXIT_OK


def cmd_roads(rep, a):
    s = _load_any(rep, a.file, a.k)
    road = find_road(s, _relation(s, a.relation), a.source, a.target, a.max_len)
    if road is None:
        rep.say(f"no {a.relation}-road from {a.source} to {a.target}")
        rep.verdict = "none"
        return EXIT_FAIL
    rep.say(str(road))
    rep.details["road"] = str(road)
    return EXIT_OK


def cmd_delta(rep, a):
    s = _load_any(rep, a.file, a.k)
    Q = _relation(s, a.relation)
    road = ultrafilter.lift_road(s, _parse_road(a.road))
    X = s.check_nodes([x for x in a.set.split(",") if x])
    ufs = list(road.nodes)
    distinct = list(dict.fromkeys(ufs))
    dmap = dict(zip(distinct, ultrafilter.distinguishing_sets(distinct)))
    dsets = [dmap[u] for u in ufs]
    delta = ultrafilter.ultrafilter_road_delta(s, Q, X, road, dsets)
    member = delta in road.end
    rep.say(f"road  {road}")
    rep.say(f"Delta {_fmt_set(delta)}")
    rep.say(f"Delta in {road.end}: {member}")
    rep.details.update({"delta": sorted(delta), "member": member})
    rep.verdict = "member" if member else "not a member"
    return EXIT_OK if member else EXIT_FAIL


def cmd_nbhd(rep, a):
    s = _load_any(rep, a.file, a.k)
    nb = neighborhood.extract(s, a.node, a.n)
    cf = neighborhood.canonical_form(nb)
    rep.say(f"root {nb.root}, radius {nb.radius}, {len(nb)} nodes")
    rep.say("nodes " + " ".join(nb.nodes))
    rep.say("edges " + " ".join(f"{x}>{y}" for x, y in s.sorted_edges(nb.s_edges)))
    rep.say("ann   " + " ".join(f"{n}:{d}:{h}" for n, d, h in sorted(nb.annotations)))
    rep.say("digest " + cf.digest)
    rep.details["digest"] = cf.digest
    if a.match:
        ms = neighborhood.matching_set(s, nb)
        rep.say("matching " + " ".join(n for n in s.nodes if n in ms))
        rep.details["matching"] = sorted(ms)
    return EXIT_OK


def cmd_chi(rep, a):
    s = _load_any(rep, a.file, a.k)
    nb = neighborhood.extract(s, a.node, a.n)
    chi = neighborhood.emit_chi(nb, a.bound)
    rep.say(str(chi))
    rep.details["formula"] = str(chi)
    if a.eval:
        truth = {w: fo.evaluate(s, chi, {"x": w}) for w in s.nodes}
        holds = [w for w in s.nodes if truth[w]]
        rep.say("true at " + " ".join(holds))
        rep.details["true_at"] = holds
        return EXIT_OK if truth[a.node] else EXIT_FAIL
    return EXIT_OK


def cmd_modal(rep, a):
    if a.modal_cmd == "alt":
        f = modal.alt_n(a.n)
        rep.say(str(f))
        rep.details["formula"] = str(f)
        return EXIT_OK
    if a.modal_cmd == "phi":
        f = modal.phi_formula()
        rep.say(str(f))
        rep.details["formula"] = str(f)
        return EXIT_OK
    s = _load_any(rep, a.file, a.k)
    f = modal.parse_modal(a.formula)
    if a.modal_cmd == "check":
        val = _parse_sets(s, a.val)
        ok = modal.check(s, val, a.node, f)
        rep.say(f"{a.node} ⊩ {f}: {ok}")
        rep.verdict = str(ok).lower()
        return EXIT_OK if ok else EXIT_FAIL
    verdict = modal.frame_valid(s, f, a.max_val_bits, at=[a.at] if a.at else None)
    rep.say(str(verdict))
    rep.verdict = type(verdict).__name__
    if isinstance(verdict, modal.Counterexample):
        rep.details["counterexample"] = {
            "node": verdict.node,
            "valuation": {k: sorted(v) for k, v in verdict.valuation.items()},
        }
        return EXIT_FAIL
    if isinstance(verdict, modal.Overflow):
        return EXIT_CAP
    return EXIT_OK


def cmd_criterion(rep, a):
    p = _load_presentation(rep, a.file)
    verdict = criterion.criterion_validity(p, a.alt)
    rep.say(str(verdict))
    if a.family:
        rep.say(str(criterion.family_K_check(p)))
    rep.verdict = "Valid" if verdict.valid else "Invalid"
    rep.details["failures"] = [(n, str(d), r) for n, d, r in verdict.failures]
    return EXIT_OK if verdict.valid else EXIT_FAIL


def cmd_counterexample(rep, a):
    p = _load_presentation(rep, a.file)
    frame, val, node = criterion.counterexample_frame(p, a.hub, a.alt, a.k, a.max_val_bits)
    rep.say(format_frame(frame).rstrip("\n"))
    rep.say(f"refuted at {node}: " + ", ".join(f"{k}={_fmt_set(v)}" for k, v in sorted(val.items())))
    rep.verdict = "counterexample"
    rep.details.update(
        {"frame": format_frame(frame), "node": node, "valuation": {k: sorted(v) for k, v in val.items()}}
    )
    return EXIT_FAIL


def cmd_bisim(rep, a):
    s1, s2 = _load_any(rep, a.file1, a.k), _load_any(rep, a.file2, a.k)
    m1 = modal.Model(s1, _parse_sets(s1, a.val1))
    m2 = modal.Model(s2, _parse_sets(s2, a.val2))
    Z = modal.largest_bisimulation(m1, m2)
    pairs = sorted(Z, key=lambda z: (s1.index[z[0]], s2.index[z[1]]))
    for x, y in pairs:
        rep.say(f"{x} ~ {y}")
    total = {x for x, _ in Z} == set(s1.nodes) and {y for _, y in Z} == set(s2.nodes)
    rep.say(f"{len(Z)} pairs, {'total and surjective' if total else 'partial'}")
    rep.details.update({"pairs": pairs, "total": total})
    rep.verdict = "total" if total else ("partial" if Z else "empty")
    return EXIT_OK if Z else EXIT_FAIL


def cmd_fo(rep, a):
    if a.fo_cmd == "translate":
        f = fo.parse_fo(a.formula)
        t = fo.sharp_translate(f)
        rep.say(str(t))
        rep.details["formula"] = str(t)
        return EXIT_OK
    if a.fo_cmd == "ef":
        s1, s2 = _load_any(rep, a.file1, a.k), _load_any(rep, a.file2, a.k)
        eq = fo.ef_equivalent(s1, s2, a.q)
        rep.say(f"{'Duplicator' if eq else 'Spoiler'} wins the {a.q}-round game")
        rep.verdict = "equivalent" if eq else "distinguished"
        return EXIT_OK if eq else EXIT_FAIL
    s = _load_any(rep, a.file, a.k)
    f = fo.parse_fo(a.formula, hubs=s.hub_order)
    assignment = {}
    for item in a.assign or ():
        name, _, node = item.partition("=")
        assignment[name] = node
    ok = fo.evaluate(s, f, assignment)
    rep.say(str(ok).lower())
    rep.verdict = str(ok).lower()
    return EXIT_OK if ok else EXIT_FAIL


def cmd_counts(rep, a):
    p = _load_presentation(rep, a.file)
    ext = presentation.extend(p)
    for origin, card in presentation.count_reflexive(ext):
        rep.say(f"reflexive {origin}: {card}")
        rep.details[f"reflexive_{origin}"] = str(card)
    if a.type:
        nb = _type_neighborhood(ext, a.type)
        card = presentation.count_neighborhood_type(p, nb)
        rep.say(f"points of type {a.type}: {card}")
        rep.details["type_count"] = str(card)
    return EXIT_OK


def _type_neighborhood(p: presentation.Presentation, spec: str):
    """Neighborhood of a hub name or a ``block.position`` in a uniform copy."""
    if spec in p.hubs:
        frame = Structure(tuple(p.hubs), p.hub_edges, frozenset(p.hubs))
        return neighborhood.extract(frame, spec)
    block_id, _, pos = spec.partition(".")
    b = p.block(block_id)
    frame = presentation._single_copy(p, b, None)
    if pos not in b.positions:
        raise InputError(f"block {block_id} has no position {pos!r}")
    return neighborhood.extract(frame, pos)


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="structured report")
    common.add_argument("--timing", action="store_true", help="append wall-clock time")
    common.add_argument("--max-val-bits", type=int, default=modal.DEFAULT_MAX_VAL_BITS)
    common.add_argument("--max-frame-size", type=int, default=DEFAULT_MAX_FRAME_SIZE)
    common.add_argument("--threads", type=int, default=1, help="accepted; evaluation is sequential")
    common.add_argument("-k", type=int, default=3, help="copies per block when a .abp file is expanded")

    parser = argparse.ArgumentParser(prog="uext", description="Ultrafilter extension workbench.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def add(name, func, **kw):
        p = sub.add_parser(name, parents=[common], **kw)
        p.set_defaults(func=func)
        return p

    p = add("fmt", cmd_fmt, help="canonical form of a .frame or .abp file")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p = add("validate", cmd_validate, help="check a presentation")
    p.add_argument("file")
    p = add("expand", cmd_expand, help="finite truncation of a presentation")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p = add("extend", cmd_extend, help="presentation of the ultrafilter extension")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p = add("ue-check", cmd_ue_check, help="extension of a finite frame and its witness")
    p.add_argument("file")
    p = add("roads", cmd_roads, help="shortest road between two nodes")
    p.add_argument("file")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--relation", choices="RSP", default="R")
    p.add_argument("--max-len", type=int)
    p = add("delta", cmd_delta, help="transport a set along a road of principal ultrafilters")
    p.add_argument("file")
    p.add_argument("--road", required=True, help="e.g. 'a -> b <- c'")
    p.add_argument("--set", required=True, help="comma-separated members of X")
    p.add_argument("--relation", choices="RSP", default="R")
    p = add("nbhd", cmd_nbhd, help="neighborhood and digest of a node")
    p.add_argument("file")
    p.add_argument("node")
    p.add_argument("-n", type=int, help="radius (default: whole component)")
    p.add_argument("--match", action="store_true", help="also list P-isomorphic nodes")
    p = add("chi", cmd_chi, help="type formula of a node's neighborhood")
    p.add_argument("file")
    p.add_argument("node")
    p.add_argument("-n", type=int, default=1)
    p.add_argument("--bound", type=int)
    p.add_argument("--eval", action="store_true", help="evaluate at every node")

    p = add("modal", cmd_modal, help="modal formulas")
    msub = p.add_subparsers(dest="modal_cmd", required=True)
    q = msub.add_parser("check", parents=[common])
    q.add_argument("file")
    q.add_argument("node")
    q.add_argument("formula")
    q.add_argument("--val", action="append", help="p=a,b (repeatable)")
    q = msub.add_parser("valid", parents=[common])
    q.add_argument("file")
    q.add_argument("formula")
    q.add_argument("--at", help="only require truth at this node")
    q = msub.add_parser("alt", parents=[common])
    q.add_argument("n", type=int)
    msub.add_parser("phi", parents=[common])

    p = add("criterion", cmd_criterion, help="decide Alt_n | phi on a presentation")
    p.add_argument("file")
    p.add_argument("--alt", type=int, required=True)
    p.add_argument("--family", action="store_true", help="also report family membership")
    p = add("counterexample", cmd_counterexample, help="finite countermodel at a hub")
    p.add_argument("file")
    p.add_argument("--hub", required=True)
    p.add_argument("--alt", type=int, required=True)
    p = add("bisim", cmd_bisim, help="largest bisimulation between two models")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--val1", action="append")
    p.add_argument("--val2", action="append")

    p = add("fo", cmd_fo, help="first-order formulas")
    fsub = p.add_subparsers(dest="fo_cmd", required=True)
    q = fsub.add_parser("eval", parents=[common])
    q.add_argument("file")
    q.add_argument("formula")
    q.add_argument("--assign", action="append", help="x=node (repeatable)")
    q = fsub.add_parser("translate", parents=[common])
    q.add_argument("formula")
    q = fsub.add_parser("ef", parents=[common])
    q.add_argument("file1")
    q.add_argument("file2")
    q.add_argument("-q", type=int, required=True)

    p = add("counts", cmd_counts, help="symbolic cardinalities in the extension")
    p.add_argument("file")
    p.add_argument("--type", help="hub or block.position whose neighborhood type is counted")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    args.argv = ["uext"] + argv
    rep = Report(args)
    started = time.perf_counter()
    try:
        code = args.func(rep, args)
    except (ParseError, InputError, FileNotFoundError, UnicodeDecodeError) as exc:
        print(f"uext: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapExceeded, OverflowError) as exc:
        print(f"uext: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    return rep.emit(code, started)


if __name__ == "__main__":
    sys.exit(main())
