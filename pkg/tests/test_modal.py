import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_structure
from uext import fo
from uext.errors import InputError, ParseError
from uext.modal import (
    And,
    Box,
    Counterexample,
    Diamond,
    Implies,
    Model,
    Not,
    Or,
    Overflow,
    Valid,
    Var,
    all_frames,
    alt_n,
    check,
    correspondence_test,
    format_modal,
    frame_valid,
    is_bisimulation,
    largest_bisimulation,
    modal_depth,
    out_degree_at_most,
    parse_modal,
    phi_formula,
    phi_local_condition,
    random_formula,
    reflexive_at,
    star_condition,
    star_star_condition,
    substitute,
    truth_set,
    valuations,
)
from uext.structure import Structure

P, Q = Var("p"), Var("q")


def star(k: int) -> Structure:
    leaves = tuple(f"l{i}" for i in range(k))
    return Structure(("c",) + leaves, {("c", x) for x in leaves})


def reference_truth(s: Structure, val: dict, f) -> frozenset:
    """Set semantics written out independently of the checker."""
    nodes = frozenset(s.nodes)
    name = type(f).__name__
    if name == "Var":
        return frozenset(val[f.name])
    if name == "Top":
        return nodes
    if name == "Bot":
        return frozenset()
    if name == "Not":
        return nodes - reference_truth(s, val, f.body)
    if name in ("And", "Or", "Implies"):
        a, b = reference_truth(s, val, f.left), reference_truth(s, val, f.right)
        return {"And": a & b, "Or": a | b, "Implies": (nodes - a) | b}[name]
    inner = reference_truth(s, val, f.body)
    if name == "Diamond":
        return frozenset(w for w in nodes if any(v in inner for v in s.succ[w]))
    return frozenset(w for w in nodes if all(v in inner for v in s.succ[w]))


# -- syntax --------------------------------------------------------------------


def test_parse_examples():
    assert parse_modal("<>p") == Diamond(P)
    f = parse_modal("[] (p & q) -> <>p")
    assert f == Implies(Box(And(P, Q)), Diamond(P))
    assert parse_modal("p -> q -> p") == Implies(P, Implies(Q, P))
    assert parse_modal("~p & q | p") == Or(And(Not(P), Q), P)
    for bad in ("p q", "(p", "p &", "<>", "P"):
        with pytest.raises(ParseError):
            parse_modal(bad)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 4))
def test_print_parse_round_trip(seed, depth):
    f = random_formula(random.Random(seed), ["p", "q", "r1"], depth)
    assert parse_modal(format_modal(f)) == f
    assert modal_depth(f) <= depth


def test_alt_and_phi_text():
    assert str(alt_n(0)) == "[]p_0"
    assert str(alt_n(2)) == "[]p_0 | [](p_0 -> p_1) | [](p_0 & p_1 -> p_2)"
    assert str(phi_formula()) == "p & ~q & [](p & q -> [](p & q)) & <>(p & q) -> [](p & q)"
    assert parse_modal(str(phi_formula())) == phi_formula()


# -- semantics -----------------------------------------------------------------


def test_check_examples():
    s = Structure(("a", "b"), {("a", "b")})
    assert check(s, {}, "a", parse_modal("true"))
    assert check(s, {"p": {"b"}}, "a", Diamond(P))
    assert not check(s, {"p": {"b"}}, "b", Diamond(P))
    dead = parse_modal("[]false")
    assert truth_set(s, {}, dead) == {"b"}
    with pytest.raises(InputError):
        check(s, {}, "a", P)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_truth_set_matches_reference(seed):
    rng = random.Random(seed)
    s = random_structure(rng, rng.randint(1, 5))
    f = random_formula(rng, ["p", "q"], 3)
    val = {x: frozenset(n for n in s.nodes if rng.random() < 0.5) for x in ("p", "q")}
    assert truth_set(s, val, f) == reference_truth(s, val, f)


def test_frame_valid_examples():
    assert isinstance(frame_valid(Structure(("a",)), P), Counterexample)
    loop = Structure(("w",), {("w", "w")})
    assert isinstance(frame_valid(loop, parse_modal("<>p -> p")), Valid)
    t = parse_modal("[]p -> p")
    for s in all_frames(2):
        reflexive = all((w, w) in s.edges for w in s.nodes)
        assert frame_valid(s, t).ok == reflexive


def test_frame_valid_overflow_and_least_counterexample():
    s = star(5)
    v = frame_valid(s, alt_n(3), max_val_bits=12)
    assert isinstance(v, Overflow) and v.needed_bits == 24
    ce = frame_valid(Structure(("a", "b")), P)
    assert ce == Counterexample({"p": frozenset()}, "a")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_frame_valid_matches_enumeration(seed):
    rng = random.Random(seed)
    s = random_structure(rng, rng.randint(1, 3))
    f = random_formula(rng, ["p", "q"], 2)
    expected = all(reference_truth(s, val, f) == set(s.nodes) for val in valuations(s, ["p", "q"]))
    verdict = frame_valid(s, f)
    assert verdict.ok == expected
    if not expected:
        assert not check(s, verdict.valuation | {n: frozenset() for n in ("p", "q") if n not in verdict.valuation}, verdict.node, f)


def test_alt_n_on_stars():
    for k in range(4):
        for n in range(4):
            assert frame_valid(star(k), alt_n(n)).ok == (k <= n)


def test_phi_examples():
    assert isinstance(frame_valid(Structure(("w",)), phi_formula()), Valid)
    case_a = Structure(("w", "v"), {("w", "w"), ("w", "v")})
    verdict = frame_valid(case_a, phi_formula(), at=["w"])
    assert isinstance(verdict, Counterexample)
    assert not star_star_condition(case_a, "w")


# -- frame conditions ----------------------------------------------------------


def test_star_conditions():
    dead = Structure(("w",))
    assert star_condition(dead, "w") and star_star_condition(dead, "w")
    split = Structure(("w", "a", "b"), {("w", "a"), ("w", "b")})
    assert not star_condition(split, "w")
    cyc = Structure(("w", "a", "b", "c"), {("w", "a"), ("w", "b"), ("w", "c"), ("a", "b"), ("b", "c"), ("c", "a")})
    assert star_condition(cyc, "w")
    one_way = Structure(("w", "v"), {("w", "w"), ("w", "v"), ("v", "w")})
    assert star_condition(one_way, "w") and star_star_condition(one_way, "w")
    no_back = Structure(("w", "v"), {("w", "w"), ("w", "v")})
    assert not star_star_condition(no_back, "w")


def test_correspondence_alt():
    for n in range(3):
        report = correspondence_test(alt_n(n), out_degree_at_most(n), exhaustive_up_to=3)
        assert report.ok, report.violations[:3]


def test_correspondence_harness_reports_non_correspondence():
    report = correspondence_test(parse_modal("<>p -> p"), reflexive_at, exhaustive_up_to=2)
    assert not report.ok
    frame, w, lv, cv = report.violations[0]
    assert lv != cv and cv == reflexive_at(frame, w)


def test_phi_exact_local_condition():
    """The successor-closure condition is what phi corresponds to locally."""
    report = correspondence_test(phi_formula(), phi_local_condition, exhaustive_up_to=3, sampled_sizes=(4,), samples_per_size=400)
    assert report.ok, report.violations[:3]


def test_star_star_is_sufficient_for_phi():
    report = correspondence_test(phi_formula(), star_star_condition, exhaustive_up_to=3)
    assert report.violations
    assert all(lv and not cv for _, _, lv, cv in report.violations)


# -- substitution and p-morphisms ----------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_validity_closed_under_substitution(seed):
    rng = random.Random(seed)
    s = random_structure(rng, rng.randint(1, 3), density=0.6)
    f = random_formula(rng, ["p"], 2)
    if frame_valid(s, f).ok:
        g = substitute(f, {"p": random_formula(rng, ["p", "q"], 1)})
        assert frame_valid(s, g).ok


def test_validity_transfers_to_pmorphic_image():
    two_cycle = Structure(("a", "b"), {("a", "b"), ("b", "a")})
    loop = Structure(("w",), {("w", "w")})  # image of the 2-cycle under a, b -> w
    rng = random.Random(7)
    for _ in range(200):
        f = random_formula(rng, ["p", "q"], 2)
        if frame_valid(two_cycle, f).ok:
            assert frame_valid(loop, f).ok


# -- bisimulation --------------------------------------------------------------


def unravel_loop(depth: int) -> Structure:
    nodes = tuple(f"u{i}" for i in range(depth + 1))
    edges = {(nodes[i], nodes[i + 1]) for i in range(depth)} | {(nodes[-1], nodes[0])}
    return Structure(nodes, edges)


def test_bisimulation_examples():
    s = random_structure(random.Random(3), 4)
    m = Model(s, {"p": {"n0"}})
    Z = largest_bisimulation(m, m)
    assert {(w, w) for w in s.nodes} <= Z and is_bisimulation(m, m, Z)
    a = Model(unravel_loop(2), {"p": unravel_loop(2).nodes})
    b = Model(unravel_loop(3), {"p": unravel_loop(3).nodes})
    Z = largest_bisimulation(a, b)
    assert {x for x, _ in Z} == set(a.structure.nodes) and {y for _, y in Z} == set(b.structure.nodes)
    r1 = Model(Structure(("r",)), {"p": {"r"}})
    r2 = Model(Structure(("r",)), {"p": set()})
    assert ("r", "r") not in largest_bisimulation(r1, r2)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_bisimilar_points_agree(seed):
    rng = random.Random(seed)
    s1, s2 = random_structure(rng, rng.randint(1, 4)), random_structure(rng, rng.randint(1, 4))
    v1 = {"p": {n for n in s1.nodes if rng.random() < 0.5}}
    v2 = {"p": {n for n in s2.nodes if rng.random() < 0.5}}
    m1, m2 = Model(s1, v1), Model(s2, v2)
    Z = largest_bisimulation(m1, m2)
    assert is_bisimulation(m1, m2, Z)
    f = random_formula(rng, ["p"], 3)
    t1, t2 = truth_set(s1, m1.valuation, f), truth_set(s2, m2.valuation, f)
    assert all((a in t1) == (b in t2) for a, b in Z)


# -- standard translation ------------------------------------------------------


def test_standard_translation_examples():
    s = Structure(("a", "b"), {("a", "b")})
    st_p = fo.standard_translation(P)
    assert fo.evaluate(s, st_p, {"x": "a"}, predicates={"p": {"a"}})
    st_dp = fo.standard_translation(Diamond(P))
    assert fo.evaluate(s, st_dp, {"x": "a"}, predicates={"p": {"b"}})


def test_standard_translation_agrees_with_check():
    rng = random.Random(11)
    formulas = [random_formula(rng, ["p"], 2) for _ in range(12)]
    for n in range(1, 4):
        for s in all_frames(n):
            for f in formulas:
                tr = fo.standard_translation(f)
                for val in valuations(s, ["p"]):
                    t = truth_set(s, val, f)
                    for w in s.nodes:
                        assert fo.evaluate(s, tr, {"x": w}, predicates=val) == (w in t)
