"""Quantitative queries over runs: expectations and probabilities at the end
of a run, and bounded reachability."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from pebc import values as V
from pebc.checker import BOOL, INT, CheckedModel, kind_of
from pebc.diagnostics import Diagnostic, ModelError
from pebc.printer import show_expr


@dataclass(frozen=True)
class ExpectedAtEnd:
    expr: object

    kind = "ExpectedAtEnd"


@dataclass(frozen=True)
class ProbAtEnd:
    expr: object

    kind = "ProbAtEnd"


@dataclass(frozen=True)
class ProbReachWithin:
    expr: object
    k: int

    kind = "ProbReachWithin"

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("step bound must be non-negative")


Query = (ExpectedAtEnd, ProbAtEnd, ProbReachWithin)


def describe(q) -> str:
    if isinstance(q, ProbReachWithin):
        return f"ProbReachWithin({show_expr(q.expr)}, {q.k})"
    return f"{q.kind}({show_expr(q.expr)})"


def make_query(cm: CheckedModel, text: str, reach=None):
    """Build a query from a property name or an expression.

    Boolean expressions become :class:`ProbAtEnd` (or :class:`ProbReachWithin`
    when ``reach`` is given), numeric ones :class:`ExpectedAtEnd`.
    """
    from pebc.parser import parse_expression

    if text in cm.properties:
        expr = cm.properties[text]
    else:
        expr = parse_expression(text)
    cm.compile_state_expr(expr, "the query")
    t = cm.expr_type(expr)
    k = kind_of(t)
    if k not in (None, BOOL, INT):
        raise ModelError([Diagnostic("error", f"query must be numeric or boolean, not {k}")])
    if reach is not None:
        if k == INT:
            raise ModelError([Diagnostic("error", "a reachability query needs a predicate")])
        return ProbReachWithin(expr, int(reach))
    if k == BOOL:
        return ProbAtEnd(expr)
    return ExpectedAtEnd(expr)


class QueryEvaluator:
    """Evaluates a query's expression on states as float or exact number."""

    def __init__(self, cm: CheckedModel, q):
        self.q = q
        self.fn = cm.compile_state_expr(q.expr, "the query")

    def number(self, state):
        v = self.fn(state.env(), {})
        t = type(v)
        if t is int:
            return v
        if t is V.BoolV:
            return 1 if v is V.TRUE else 0
        raise V.KindMismatch(f"query evaluates to a {V.kind_name(v)}, expected a number or a boolean", self.fn.span)

    def holds(self, state) -> bool:
        v = self.fn(state.env(), {})
        if type(v) is not V.BoolV:
            raise V.KindMismatch(f"query evaluates to a {V.kind_name(v)}, expected a boolean", self.fn.span)
        return v is V.TRUE

    def exact(self, state) -> Fraction:
        return Fraction(self.number(state))
