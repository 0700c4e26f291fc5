import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import CORPUS, load_presentation
from uext.errors import InputError, ParseError
from uext.neighborhood import extract
from uext.presentation import (
    ALEPH0,
    CONTINUUM,
    NONPRINCIPAL,
    POWER_CONTINUUM,
    PRINCIPAL,
    Fin,
    card_sum,
    count_neighborhood_type,
    count_reflexive,
    expand,
    extend,
    format_presentation,
    parse_presentation,
    validate,
)
from uext.structure import Structure

FAN = "hub h\nblock a mult omega\n  pnode x\n  pflag out h x\n"


# -- cardinals ---------------------------------------------------------------

cards = st.one_of(st.integers(0, 5).map(Fin), st.sampled_from([ALEPH0, CONTINUUM, POWER_CONTINUUM]))


def test_card_order():
    assert Fin(0) < Fin(7) < ALEPH0 < CONTINUUM < POWER_CONTINUUM


@given(cards, cards, cards)
def test_card_arithmetic(a, b, c):
    assert a + b == b + a
    assert (a + b) + c == a + (b + c)
    assert a * b == b * a
    assert a + Fin(0) == a
    if not a.finite or not b.finite:
        assert a + b == max(a, b)
        if a != Fin(0) and b != Fin(0):
            assert a * b == max(a, b)


def test_card_sum_and_zero_product():
    assert card_sum([]) == Fin(0)
    assert card_sum([Fin(2), Fin(3)]) == Fin(5)
    assert Fin(0) * ALEPH0 == Fin(0)
    assert Fin(2) * Fin(3) == Fin(6)


# -- parsing -----------------------------------------------------------------


def test_parse_empty():
    p = parse_presentation("")
    assert p.hubs == () and p.blocks == ()


def test_fan_round_trip():
    p = parse_presentation(FAN)
    assert format_presentation(p) == FAN
    assert parse_presentation(format_presentation(p)) == p


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_round_trip(name):
    p = load_presentation(name)
    text = format_presentation(p)
    assert format_presentation(parse_presentation(text)) == text


@pytest.mark.parametrize(
    "text",
    [
        "block a mult omega\n  pnode x\n  pflag out h x\n",  # undeclared hub
        "hub h\nhub h\n",
        "hub h\nblock a mult omega\n  pnode x\n  pnode x\n",
        "hub h\nblock a mult lots\n  pnode x\n",
        "  pnode x\n",
        "hub h\nfrobnicate\n",
        "hub h\nblock a mult omega\n  pnode x\nexception b 0 add out h x\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises((ParseError, InputError)):
        parse_presentation(text)


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as err:
        parse_presentation("hub h\n\nfrobnicate\n")
    assert err.value.line == 3


# -- validation --------------------------------------------------------------


def test_validate_examples():
    assert validate(parse_presentation(FAN)).ok
    bad = validate(parse_presentation("hub h\nblock a mult 4\n  pnode x\n  pflag out h x\n"))
    assert not bad.ok and any("finite degree" in v for v in bad.violations)
    assert validate(parse_presentation("block a mult 2\n  pnode x\n  pedge x x\n")).ok


def test_validate_rejects_powcont_principal_and_bad_exceptions():
    p = parse_presentation("hub h\nblock a mult powcont\n  pnode x\n  pflag out h x\n")
    assert not validate(p).ok
    p = parse_presentation(FAN + "exception a 0 add out h x\n")
    assert not validate(p).ok  # already uniform
    p = parse_presentation("hub h\nblock a mult omega\n  pnode x\n  pflag out h x\nblock b mult 2\n  pnode y\nexception b 5 add out h y\n")
    assert not validate(p).ok  # copy out of range


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_validates_and_extension_validates(name):
    p = load_presentation(name)
    assert validate(p).ok
    assert validate(extend(p)).ok


# -- truncation --------------------------------------------------------------


def test_expand_examples():
    hubs_only = parse_presentation("hub g\nhub h\nhubedge g h\n")
    s = expand(hubs_only, 3)
    assert s.nodes == ("g", "h") and s.edges == {("g", "h")}
    star = expand(parse_presentation(FAN), 3)
    assert len(star) == 4 and star.succ["h"] == {"a.0.x", "a.1.x", "a.2.x"}
    assert star.hubs == {"h"} and star.constants == {"d_h": "h"}
    fin = parse_presentation("block a mult 2\n  pnode x\n")
    assert len(expand(fin, 5)) == 2


def test_expand_exceptions():
    p = load_presentation("exc")
    s = expand(p, 2)
    assert [n for n in s.nodes if n.endswith(".x")] == ["a.0.x", "a.2.x", "a.1.x", "a.3.x"]
    assert ("h", "a.0.x") not in s.edges and ("h", "a.1.x") in s.edges
    assert ("h", "a.2.y") in s.edges and ("h", "a.1.y") not in s.edges
    with pytest.raises(InputError):
        expand(p, 1)


def _induced(s: Structure, nodes) -> frozenset:
    nodes = set(nodes)
    return frozenset(e for e in s.edges if e[0] in nodes and e[1] in nodes)


@pytest.mark.parametrize("name", CORPUS)
def test_expand_is_induced_substructure(name):
    p = load_presentation(name)
    lo = 2 if p.exceptions else 1
    for k in range(lo, 4):
        small, big = expand(p, k), expand(p, k + 1)
        assert set(small.nodes) <= set(big.nodes)
        assert _induced(big, small.nodes) == small.edges


# -- extension ---------------------------------------------------------------


def test_extend_examples():
    fin = parse_presentation("block a mult 3\n  pnode x\n  pedge x x\n")
    assert extend(fin) == fin
    fan = extend(parse_presentation(FAN))
    assert len(fan.blocks) == 2
    new = fan.blocks[1]
    assert new.origin == NONPRINCIPAL and new.multiplicity == POWER_CONTINUUM
    assert new.positions == ("x",) and new.out_flags == {("h", "x")}


def test_extend_merges_isomorphic_blocks():
    p = extend(load_presentation("twins"))
    added = [b for b in p.blocks if b.origin == NONPRINCIPAL]
    assert len(added) == 2  # a and b share a type, c is its own


@pytest.mark.parametrize("name", CORPUS)
def test_extend_idempotent(name):
    once = extend(load_presentation(name))
    assert extend(once) == once


# -- counting ----------------------------------------------------------------


def test_count_reflexive_examples():
    assert count_reflexive(parse_presentation(FAN)) == [(PRINCIPAL, Fin(0)), (NONPRINCIPAL, Fin(0))]
    fin = parse_presentation("block a mult 3\n  pnode x\n  pedge x x\n")
    assert dict(count_reflexive(fin))[PRINCIPAL] == Fin(3)
    ext = extend(load_presentation("loops"))
    assert dict(count_reflexive(ext)) == {PRINCIPAL: ALEPH0, NONPRINCIPAL: POWER_CONTINUUM}
    assert dict(count_reflexive(extend(load_presentation("empty_block"))))[NONPRINCIPAL] == Fin(0)


def test_count_neighborhood_type_examples():
    fan = parse_presentation(FAN)
    leaf = extract(expand(fan, 2), "a.0.x")
    assert count_neighborhood_type(fan, leaf) == POWER_CONTINUUM
    nowhere = extract(Structure(("z",), {("z", "z")}), "z")
    assert count_neighborhood_type(fan, nowhere) == Fin(0)
    fin = load_presentation("finite")
    chain_start = extract(expand(fin, 4), "m.0.u")
    assert count_neighborhood_type(fin, chain_start) == Fin(2)


def test_count_neighborhood_type_sees_exceptions():
    p = load_presentation("exc")
    s = expand(p, 2)
    dropped = extract(s, "a.0.x")
    assert count_neighborhood_type(p, dropped) == Fin(1)
    uniform = extract(s, "a.1.x")
    assert count_neighborhood_type(p, uniform) == POWER_CONTINUUM
