import pytest

from pebc.checker import check_model, with_constants
from pebc.diagnostics import ModelError
from pebc.parser import load_model, parse_model

from conftest import GEAR, P2P, checked

HEAD = (
    "CONTEXT C SETS S:{a,b} CONSTANTS K : Nat := 2 END "
    "MACHINE M SEES C VARIABLES x y INVARIANTS x : S y : Nat "
    "INITIALISATION x := a y := 0 EVENTS "
)


def errors(body):
    with pytest.raises(ModelError) as info:
        checked(HEAD + body)
    return [d.message for d in info.value.errors]


def test_bundled_models_are_well_formed():
    for path in (GEAR, P2P):
        cm = check_model(load_model(path))
        assert not cm.warnings


def test_gear_checked_shape(gear):
    assert gear.consts["FCMD"] == 9
    assert gear.var_names == ("handle", "gear", "door", "cmd")
    assert gear.initial.to_json() == {"handle": "up", "gear": "retracted", "door": "closed", "cmd": 0}
    assert [e.name for e in gear.events] == ["pcmd", "extend", "retract", "open", "close"]


def test_probability_sum_message():
    (msg,) = errors("EVENT e THEN x := {a@0.5, b@0.6} END END")
    assert "probabilities sum to 11/10 ≠ 1" in msg


def test_single_lhs_rule():
    (msg,) = errors("EVENT e THEN x := a x := b END END")
    assert "assigned more than once" in msg and "only once" in msg


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("EVENT e WHERE z = 1 THEN y := 1 END END", "unknown identifier 'z'"),
        ("EVENT e WEIGHT TRUE THEN y := 1 END END", "must be an integer expression"),
        ("EVENT e THEN y := {1} END END", "declared integer"),
        ("EVENT e ANY y :in {1} THEN x := a END END", "clashes"),
        ("EVENT e ANY p :in 3 THEN y := p END END", "must be a set"),
        ("EVENT e THEN x := {a@0, b@1} END END", "not in (0, 1]"),
        ("EVENT e WHERE y + 1 THEN y := 1 END END", "must be a predicate"),
    ],
)
def test_violations(body, fragment):
    msgs = errors(body)
    assert any(fragment in m for m in msgs), msgs


def test_checking_continues_past_first_error():
    text = (
        "MACHINE M VARIABLES x INVARIANTS x : Nat INITIALISATION x := 1 "
        "EVENTS EVENT e WHERE q THEN x := r END EVENT e THEN x := 1 END END"
    )
    with pytest.raises(ModelError) as info:
        checked(text)
    assert len(info.value.errors) == 3
    assert all(d.span.line >= 1 for d in info.value.errors)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("MACHINE M VARIABLES x INVARIANTS INITIALISATION x := 0 EVENTS END", "no typing invariant"),
        ("MACHINE M VARIABLES x INVARIANTS x : Nat INITIALISATION EVENTS END", "not initialised"),
        (
            "MACHINE M VARIABLES x y INVARIANTS x : Nat y : Nat INITIALISATION x := 0 y := x EVENTS END",
            "must be constant",
        ),
    ],
)
def test_machine_level_violations(text, fragment):
    with pytest.raises(ModelError) as info:
        checked(text)
    assert any(fragment in d.message for d in info.value.errors)


def test_shadowing_warns():
    cm = checked(HEAD + "EVENT e THEN y := card({y . 1..3 | y > 1}) END END")
    assert any("shadows" in w.message for w in cm.warnings)


def test_check_is_deterministic():
    m = load_model(GEAR)
    a, b = check_model(m), check_model(m)
    assert a.initial == b.initial and a.consts == b.consts
    assert [str(w) for w in a.warnings] == [str(w) for w in b.warnings]


def test_constant_override():
    cm = check_model(with_constants(load_model(P2P), {"N": 2, "K": "1 + 1"}))
    assert (cm.consts["N"], cm.consts["K"]) == (2, 2)
    assert len(cm.initial.get("file").elems) == 4
    with pytest.raises(ModelError):
        with_constants(load_model(P2P), {"Q": 1})


def test_negative_nat_constant_rejected():
    with pytest.raises(ModelError):
        check_model(with_constants(load_model(GEAR), {"FCMD": -1}))
