import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uext.errors import InputError, ParseError
from uext.structure import (
    Road,
    Structure,
    converse,
    decompose,
    find_road,
    format_frame,
    image,
    max_degrees,
    parse_frame,
    preimage,
)

ABC = Structure(("a", "b", "c"))


@st.composite
def structures(draw, max_nodes=6):
    n = draw(st.integers(1, max_nodes))
    nodes = tuple(f"n{i}" for i in range(n))
    pairs = [(a, b) for a in nodes for b in nodes]
    edges = draw(st.sets(st.sampled_from(pairs)))
    hubs = draw(st.sets(st.sampled_from(nodes)))
    return Structure(nodes, frozenset(edges), frozenset(hubs))


@st.composite
def structure_and_sets(draw):
    s = draw(structures())
    X = draw(st.sets(st.sampled_from(s.nodes)))
    Y = draw(st.sets(st.sampled_from(s.nodes)))
    return s, frozenset(X), frozenset(Y)


def test_image_examples():
    assert image(ABC, set(), {"a", "b"}) == frozenset()
    ident = {(x, x) for x in "abc"}
    assert image(ABC, ident, {"a", "b"}) == {"a", "b"}
    Q = {("a", "b"), ("a", "c"), ("b", "c")}
    assert image(ABC, Q, {"a"}) == {"b", "c"}


def test_preimage_examples():
    Q = {("a", "b"), ("a", "c"), ("b", "c")}
    assert preimage(ABC, set(), {"c"}) == frozenset()
    assert preimage(ABC, Q, {"c"}) == {"a", "b"}


def test_image_rejects_unknown_node():
    with pytest.raises(InputError):
        image(ABC, set(), {"z"})


@settings(max_examples=150, deadline=None)
@given(structure_and_sets())
def test_image_preimage_monotone_and_additive(data):
    s, X, Y = data
    Q = s.edges
    assert preimage(s, Q, X) == image(s, converse(Q), X)
    assert image(s, Q, X | Y) == image(s, Q, X) | image(s, Q, Y)
    assert preimage(s, Q, X | Y) == preimage(s, Q, X) | preimage(s, Q, Y)
    assert image(s, Q, X & Y) <= image(s, Q, X)


def test_decompose_examples():
    s = Structure(("h", "a", "b"), {("h", "a"), ("a", "b")}, {"h"})
    assert decompose(s) == ({("a", "b")}, {("h", "a")})
    assert decompose(Structure(("a", "b"), {("a", "b")})) == ({("a", "b")}, frozenset())
    assert decompose(Structure(("a", "b"), {("a", "b")}, {"a", "b"}))[0] == frozenset()


@settings(max_examples=150, deadline=None)
@given(structures())
def test_decompose_partitions(s):
    S, P = decompose(s)
    assert S | P == s.edges and not S & P


def test_max_degrees():
    assert max_degrees(ABC, set()) == (0, 0)
    full = {(x, y) for x in "abc" for y in "abc"}
    assert max_degrees(ABC, full) == (3, 3)
    assert max_degrees(ABC, {("a", "b"), ("b", "c")}) == (1, 1)


def test_find_road_examples():
    assert len(find_road(ABC, set(), "a", "a")) == 0
    road = find_road(ABC, {("a", "b")}, "b", "a")
    assert road.nodes == ("b", "a") and road.forward == (False,)
    assert find_road(ABC, {("a", "b")}, "a", "c") is None
    assert find_road(ABC, {("a", "b"), ("b", "c")}, "a", "c", max_len=1) is None
    with pytest.raises(InputError):
        find_road(ABC, set(), "a", "zz")


def test_find_road_tie_break_is_lexicographic():
    s = Structure(("s", "m", "b", "t"), {("s", "m"), ("s", "b"), ("m", "t"), ("b", "t")})
    assert find_road(s, s.edges, "s", "t").nodes == ("s", "b", "t")


@settings(max_examples=150, deadline=None)
@given(structures(), st.data())
def test_roads_replay_and_reverse(s, data):
    a = data.draw(st.sampled_from(s.nodes))
    b = data.draw(st.sampled_from(s.nodes))
    there = find_road(s, s.edges, a, b)
    back = find_road(s, s.edges, b, a)
    assert (there is None) == (back is None)
    if there is not None:
        assert there.replays(s.edges) and back.replays(s.edges)
        assert len(there) == len(back)
        assert there.reversed().replays(s.edges)


def test_road_text():
    assert str(Road(("a", "b", "c"), (True, False))) == "a -> b <- c"


def test_frame_round_trip():
    text = "# comment\nnode a\nhub h\nedge h a\nedge a a\n"
    s = parse_frame(text)
    assert s.hubs == {"h"} and s.constants == {"d_h": "h"}
    assert parse_frame(format_frame(s)) == s
    assert format_frame(parse_frame(format_frame(s))) == format_frame(s)


@pytest.mark.parametrize(
    "text",
    ["edge a b\n", "node a\nnode a\n", "node a\nbogus a\n", "node a\nedge a\n"],
)
def test_frame_errors(text):
    with pytest.raises((ParseError, InputError)):
        parse_frame(text)


def test_structure_invariants():
    with pytest.raises(InputError):
        Structure(("a",), {("a", "b")})
    with pytest.raises(InputError):
        Structure(("a", "a"))
    with pytest.raises(InputError):
        Structure(("a",), hubs={"b"})
