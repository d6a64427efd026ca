from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pebc.diagnostics import ParseError
from pebc.parser import load_model, parse_expression, parse_model, tokenize
from pebc.printer import show_expr, show_model
from pebc.syntax import (
    ARITH_OPS,
    BOOL_OPS,
    REL_OPS,
    SET_OPS,
    Binary,
    BoolLit,
    Call,
    Comprehension,
    Enumerated,
    Name,
    Num,
    SetLit,
    Str,
    Unary,
    UniformList,
    UniformSet,
)

from conftest import GEAR, P2P

GEAR_CTX = """
CONTEXT GEAR_CTX
 SETS
   SUD:{ up, down }
   SER:{ extended, retracted }
   SOC:{ open, close }
 CONSTANTS
   FCMD : Nat := 9
END
"""


def test_gear_context_literal():
    ctx = parse_model(GEAR_CTX).context
    assert ctx.name == "GEAR_CTX"
    sets = {s.name: s.element_names() for s in ctx.sets}
    assert sets == {"SUD": ("up", "down"), "SER": ("extended", "retracted"), "SOC": ("open", "close")}
    (fcmd,) = ctx.constants
    assert fcmd.name == "FCMD" and fcmd.type == Name("Nat") and fcmd.value == Num(9)


def test_cardinality_set_generates_elements():
    ctx = parse_model("CONTEXT C SETS ENUM:3 END").context
    assert ctx.sets[0].element_names() == ("ENUM1", "ENUM2", "ENUM3")


def test_empty_input():
    with pytest.raises(ParseError, match="expected CONTEXT or MACHINE"):
        parse_model("")


def test_comment_only_input():
    with pytest.raises(ParseError, match="expected CONTEXT or MACHINE"):
        parse_model("--- nothing here\n")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("CONTEXT C SETS S:{a,} END", "set element"),
        ("CONTEXT C SETS S:{a} SETS T:{b} END", "SETS"),
        ("MACHINE M VARIABLES x INVARIANTS x : Nat INITIALISATION x := 0 EVENTS EVENT e THEN x := x + END END", "expression"),
        ("CONTEXT C BOGUS END", "BOGUS"),
    ],
)
def test_syntax_errors_carry_spans(text, fragment):
    with pytest.raises(ParseError) as info:
        parse_model(text)
    (d,) = info.value.diagnostics
    assert fragment in d.message
    assert d.span.line >= 1 and d.span.column >= 1


def test_error_position_is_one_based():
    with pytest.raises(ParseError) as info:
        parse_model("CONTEXT C\nSETS S:{a,,b} END")
    d = info.value.diagnostics[0]
    assert (d.span.line, d.span.column) == (2, 11)


def test_comments_and_newlines_are_insignificant():
    a = parse_model("CONTEXT C SETS S:{a,b} CONSTANTS K : Nat := 2 END")
    b = parse_model("CONTEXT C --- a context\n SETS\n  S : {\n a ,\n b }\n CONSTANTS K:Nat:=2 --- two\nEND")
    assert a == b


def test_event_order_and_assignment_forms():
    m = load_model(GEAR).machine
    assert [e.name for e in m.events] == ["pcmd", "extend", "retract", "open", "close"]
    gear = m.events[1].actions[1]
    assert gear.target == "gear"
    assert gear.rhs == Enumerated(((Name("extended"), Fraction(9, 10)), (Name("retracted"), Fraction(1, 10))))
    pcmd = m.events[0]
    assert pcmd.params[0].name == "cc"
    assert pcmd.weight == Binary("-", Name("FCMD"), Name("cmd"))


def test_uniform_forms():
    m = parse_model(
        "MACHINE M VARIABLES x INVARIANTS x : Nat INITIALISATION x := 0 "
        "EVENTS EVENT e THEN x :in 1..3 END EVENT f THEN x := {1, 2} END END"
    ).machine
    assert isinstance(m.events[0].actions[0].rhs, UniformSet)
    assert m.events[1].actions[0].rhs == UniformList((Num(1), Num(2)))


def test_probability_literals_are_exact():
    e = parse_expression("{a @ 0.7, b @ 0.3}")
    assert [p for _, p in e.items] == [Fraction(7, 10), Fraction(3, 10)]
    assert sum(p for _, p in e.items) == 1


def test_precedence():
    assert parse_expression("1 + 2 * 3") == Binary("+", Num(1), Binary("*", Num(2), Num(3)))
    assert parse_expression("a = b /\\ c") == Binary("and", Binary("=", Name("a"), Name("b")), Name("c"))
    assert parse_expression("x |-> 1 .. 3") == Binary("|->", Name("x"), Binary("..", Num(1), Num(3)))
    assert parse_expression("not a = b") == Unary("not", Binary("=", Name("a"), Name("b")))


def test_unicode_operators():
    assert parse_expression("a ∪ b") == parse_expression("a union b")
    assert parse_expression("x ↦ y") == parse_expression("x |-> y")


def test_tokens_carry_positions():
    toks = tokenize("a\n  |-> b")
    assert [(t.text, t.line, t.col) for t in toks[:3]] == [("a", 1, 1), ("|->", 2, 3), ("b", 2, 7)]


@pytest.mark.parametrize("path", [GEAR, P2P], ids=["gear", "p2p"])
def test_model_round_trip(path):
    m = load_model(path)
    text = show_model(m)
    assert parse_model(text) == m
    assert show_model(parse_model(text)) == text


# random expression trees for the printer round trip
names = st.sampled_from(["x", "y", "file", "N", "up"]).map(Name)
leaves = st.one_of(
    st.integers(0, 99).map(Num),
    st.booleans().map(BoolLit),
    st.sampled_from(["emp", "ok"]).map(Str),
    names,
)
binops = sorted(BOOL_OPS | REL_OPS | SET_OPS | ARITH_OPS | {"|->", ".."})


def _extend(children):
    return st.one_of(
        st.builds(Binary, st.sampled_from(binops), children, children),
        st.builds(Unary, st.sampled_from(["neg", "not"]), children),
        st.builds(Call, st.sampled_from(["card", "dom", "ran", "POW", "min", "max"]), children),
        st.lists(children, max_size=3).map(lambda xs: SetLit(tuple(xs))),
        st.builds(Comprehension, st.sampled_from(["b", "z"]), children, children),
    )


exprs = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=300)
@given(exprs)
def test_expression_round_trip(e):
    assert parse_expression(show_expr(e)) == e
