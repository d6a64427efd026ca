from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pebc import values as V
from pebc.exact import build_dtmc
from pebc.semantics import (
    BLOCKED,
    Enabled,
    assignment_outcomes,
    event_status,
    guard_valuations,
    status_list,
    successor_distribution,
)

from conftest import checked, gear_model, p2p_model
from oracles import naive_distribution


def gear_state(**kw):
    return gear_model().initial.replace(**kw)


def test_initial_statuses(gear):
    s = gear.initial
    assert event_status(gear, s, "pcmd") == Enabled(9)
    assert event_status(gear, s, "extend") is BLOCKED
    assert [st for _, st in status_list(gear, s)] == [Enabled(9)] + [BLOCKED] * 4


def test_zero_weight_blocks(gear):
    s = gear_state(cmd=9)
    assert event_status(gear, s, "pcmd") is BLOCKED


def test_pcmd_valuations_in_canonical_order(gear):
    assert guard_valuations(gear, gear.initial, "pcmd") == [("down",), ("up",)]


def test_parameterless_event_has_one_empty_valuation(gear):
    s = gear_state(handle="down", door="open")
    assert guard_valuations(gear, s, "extend") == [()]


def test_initial_successors(gear):
    d = successor_distribution(gear, gear.initial)
    assert d == {
        ("pcmd", gear_state(handle="up", cmd=1)): Fraction(1, 2),
        ("pcmd", gear_state(handle="down", cmd=1)): Fraction(1, 2),
    }


def test_extend_alone():
    gear = gear_model()
    s = gear_state(handle="down", door="open", cmd=9)
    assert [n for n, st in status_list(gear, s) if st.enabled] == ["extend"]
    assert successor_distribution(gear, s) == {
        ("extend", gear_state(handle="down", door="open", gear="extended", cmd=0)): Fraction(9, 10),
        ("extend", gear_state(handle="down", door="open", gear="retracted", cmd=0)): Fraction(1, 10),
    }


AGG = (
    "CONTEXT C SETS S:{a,b} END MACHINE M SEES C VARIABLES x y INVARIANTS x : S y : Nat "
    "INITIALISATION x := b y := 0 EVENTS "
    "EVENT e WHERE y = 0 THEN x := {a@0.5, a@0.3, b@0.2} END "
    "EVENT d WEIGHT 0 THEN y := 1 END END"
)


def test_enumerated_outcomes_aggregate():
    cm = checked(AGG)
    out = assignment_outcomes(cm, cm.initial, (), "e")
    assert out == {cm.initial.replace(x="a"): Fraction(4, 5), cm.initial.replace(x="b"): Fraction(1, 5)}


def test_deterministic_event_is_a_point_mass(gear):
    s = gear_state(cmd=3)
    out = assignment_outcomes(gear, s, ("down",), "pcmd")
    assert out == {gear_state(handle="down", cmd=4): Fraction(1)}


def test_deadlock():
    cm = checked(AGG.replace("y = 0", "y = 1"))
    d = successor_distribution(cm, cm.initial)
    assert d.deadlock and d == {}


def test_empty_uniform_set_is_an_error():
    cm = checked(
        "MACHINE M VARIABLES x INVARIANTS x : Nat INITIALISATION x := 0 EVENTS EVENT e THEN x :in {} END END"
    )
    with pytest.raises(V.EmptyChoice):
        successor_distribution(cm, cm.initial)


def p2p_sent_blocks(state, n):
    """Brute-force enumeration of the ``sent`` parameter domain."""
    file = dict(state.get("file").elems)
    emp = [b for b, s in file.items() if s == "emp"]
    busy = {b % n for b, s in file.items() if s == "downloading"}
    return sorted(b for b in emp if b % n not in busy)


def test_p2p_sent_valuations():
    cm = p2p_model(2, 2)
    s0 = cm.initial
    assert [v for (v,) in guard_valuations(cm, s0, "sent")] == [0, 1, 2, 3]
    s1 = s0.replace(file=V.canonical_set([(0, "downloading"), (1, "emp"), (2, "emp"), (3, "ok")]))
    assert [v for (v,) in guard_valuations(cm, s1, "sent")] == p2p_sent_blocks(s1, 2) == [1]


def _states(cm, limit):
    return build_dtmc(cm, max_states=10**6).states[:limit]


@pytest.mark.parametrize("cm", [gear_model(), p2p_model(2, 2), p2p_model(2, 3)], ids=["gear", "p2p-2x2", "p2p-2x3"])
def test_distribution_matches_naive_oracle(cm):
    for s in _states(cm, 120):
        d = successor_distribution(cm, s)
        assert d == naive_distribution(cm, s)
        if not d.deadlock:
            assert d.total() == 1
            assert all(0 < p <= 1 for p in d.values())


@pytest.mark.parametrize("cm", [gear_model(), p2p_model(2, 2)], ids=["gear", "p2p-2x2"])
def test_untouched_variables_are_copied(cm):
    for s in _states(cm, 200):
        for (name, t), p in successor_distribution(cm, s).items():
            targets = {a.target for a in cm.event(name).actions}
            for v in cm.var_names:
                if v not in targets:
                    assert t.get(v) == s.get(v)


def test_distribution_is_pure(gear):
    s = gear_state(handle="down", door="open")
    assert successor_distribution(gear, s) == successor_distribution(gear, s)
    assert s == gear_state(handle="down", door="open")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 9), st.sampled_from(["up", "down"]), st.sampled_from(["open", "closed"]),
       st.sampled_from(["extended", "retracted"]))
def test_any_gear_state_matches_oracle(cmd, handle, door, gear_pos):
    cm = gear_model()
    s = gear_state(cmd=cmd, handle=handle, door=door, gear=gear_pos)
    assert successor_distribution(cm, s) == naive_distribution(cm, s)
