import pytest

from conftest import CORPUS, load_presentation
from uext import modal
from uext.criterion import (
    counterexample_frame,
    criterion_validity,
    family_K_check,
    hub_out_degree,
    infinite_out_hubs,
)
from uext.errors import CapExceeded, InputError
from uext.presentation import ALEPH0, POWER_CONTINUUM, Fin, expand, extend, parse_presentation


def test_hub_degrees():
    fan = load_presentation("fan")
    assert hub_out_degree(fan, "h") == ALEPH0
    assert hub_out_degree(extend(fan), "h") == POWER_CONTINUUM
    twins = load_presentation("twins")
    assert hub_out_degree(twins, "g") == ALEPH0  # g -> h plus every c.s
    exc = load_presentation("exc")
    assert hub_out_degree(exc, "h") == ALEPH0
    assert infinite_out_hubs(load_presentation("loops")) == []
    bounded = parse_presentation("hub h\nblock a mult omega\n  pnode x\n  pflag in x h\n")
    assert hub_out_degree(bounded, "h") == Fin(0)


def test_family_k_zero_hub_fails():
    report = family_K_check(load_presentation("loops"))
    assert not report.ok
    assert "no node has infinite out-degree" in str(report)


def test_family_k_overlap_clause():
    report = family_K_check(load_presentation("k"))
    assert [c.ok for c in report.conditions] == [True, True, False]
    shared = parse_presentation(
        "hub g\nhub h\nhubedge g h\nhubedge h g\n"
        "block a mult omega\n  pnode x\n  pflag out g x\n  pflag out h x\n"
    )
    assert not family_K_check(shared).conditions[-1].ok


def test_family_k_fan_fails_connectivity():
    report = family_K_check(load_presentation("fan"))
    assert [c.ok for c in report.conditions] == [True, False, True]


def test_criterion_examples():
    bounded = parse_presentation("block a mult 3\n  pnode x\n  pnode y\n  pedge x y\n")
    assert criterion_validity(bounded, 1).valid
    fan = criterion_validity(load_presentation("fan"), 1)
    assert fan.failing_nodes() == ["h"]
    assert criterion_validity(load_presentation("k"), 1).valid
    with pytest.raises(InputError):
        criterion_validity(parse_presentation("hub h\n"), 1)


def _hub_degrees_exceed(p, s, n):
    return all(len(s.succ[h]) > n or hub_out_degree(p, h).finite for h in p.hubs)


@pytest.mark.parametrize("name", CORPUS)
def test_criterion_agrees_with_brute_force(name):
    """On truncations that keep every infinite hub above n, the pointwise
    criterion matches frame validity of the disjunction, whenever the
    enumeration fits the valuation cap."""
    checked = 0
    base = load_presentation(name)
    for p in (base, extend(base)):
        for n in (0, 1, 2):
            verdict = criterion_validity(p, n)
            for k in (2, 3):
                s = expand(p, k)
                if not _hub_degrees_exceed(p, s, n):
                    continue
                brute = modal.frame_valid(s, modal.Or(modal.alt_n(n), modal.phi_formula()))
                if isinstance(brute, modal.Overflow):
                    continue
                checked += 1
                assert brute.ok == verdict.valid, (name, n, k)
    if name not in ("twins", "exc"):
        assert checked


def test_counterexample_frame_fan():
    ext = extend(load_presentation("fan"))
    for k in (3, 4, 5):
        frame, val, node = counterexample_frame(ext, "h", 1, k)
        assert node == "h"
        assert not modal.check(frame, val, "h", modal.Or(modal.alt_n(1), modal.phi_formula()))


def test_counterexample_preconditions():
    with pytest.raises(InputError):
        counterexample_frame(load_presentation("k"), "w", 1, 3)
    bounded = parse_presentation("block a mult 3\n  pnode x\n")
    with pytest.raises(InputError):
        counterexample_frame(bounded, "h", 1, 3)
    with pytest.raises(CapExceeded):
        counterexample_frame(extend(load_presentation("fan")), "h", 1, 10, max_val_bits=16)
