"""Abstract syntax of models and expressions.

Nodes are frozen dataclasses.  Source spans are excluded from equality so
that two parses of equivalent text compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


NOSPAN = SourceSpan("<none>", 1, 1, 0)


def _span():
    return field(default=NOSPAN, compare=False, repr=False)


# --- expressions --------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Str:
    """Quoted symbol literal, e.g. ``"emp"``."""

    value: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Name:
    id: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" | "not"
    arg: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Call:
    fn: str  # card | dom | ran | POW | bool | min | max
    arg: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SetLit:
    items: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Comprehension:
    """``{var . source | body}``; mode is "filter" or "map" (None until checked)."""

    var: str
    source: "Expr"
    body: "Expr"
    mode: Optional[str] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Choice:
    """Enumerated distribution ``{E1 @ p1, ...}``; legal only as an assignment RHS."""

    items: tuple  # of (Expr, Fraction)
    span: SourceSpan = _span()


Expr = Union[Num, BoolLit, Str, Name, Unary, Binary, Call, SetLit, Comprehension, Choice]

BOOL_OPS = {"and", "or", "=>", "<=>"}
REL_OPS = {"=", "/=", "<", "<=", ">", ">=", ":", "/:", "<:", "/<:"}
SET_OPS = {"union", "inter", "\\", "|>", "|>>", "<|", "<<|", "<+"}
ARITH_OPS = {"+", "-", "*", "div", "mod"}


def children(e) -> tuple:
    t = type(e)
    if t is Unary or t is Call:
        return (e.arg,)
    if t is Binary:
        return (e.left, e.right)
    if t is SetLit:
        return e.items
    if t is Comprehension:
        return (e.source, e.body)
    if t is Choice:
        return tuple(x for x, _ in e.items)
    return ()


def free_names(e, bound: frozenset = frozenset()) -> set:
    """Identifiers occurring free in ``e``."""
    out: set = set()
    _free(e, bound, out)
    return out


def _free(e, bound, out):
    t = type(e)
    if t is Name:
        if e.id not in bound:
            out.add(e.id)
    elif t is Comprehension:
        _free(e.source, bound, out)
        _free(e.body, bound | {e.var}, out)
    else:
        for c in children(e):
            _free(c, bound, out)


def walk(e):
    yield e
    for c in children(e):
        yield from walk(c)


# --- model structure ----------------------------------------------------------


@dataclass(frozen=True)
class Deterministic:
    expr: Expr


@dataclass(frozen=True)
class UniformSet:
    expr: Expr


@dataclass(frozen=True)
class UniformList:
    exprs: tuple


@dataclass(frozen=True)
class Enumerated:
    items: tuple  # of (Expr, Fraction)


Rhs = Union[Deterministic, UniformSet, UniformList, Enumerated]


@dataclass(frozen=True)
class Assignment:
    target: str
    rhs: Rhs
    span: SourceSpan = _span()

    def exprs(self) -> tuple:
        r = self.rhs
        if isinstance(r, (Deterministic, UniformSet)):
            return (r.expr,)
        if isinstance(r, UniformList):
            return r.exprs
        return tuple(x for x, _ in r.items)


@dataclass(frozen=True)
class Param:
    name: str
    domain: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Event:
    name: str
    weight: Optional[Expr]
    params: tuple
    guard: Optional[Expr]
    actions: tuple
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SetDecl:
    name: str
    elements: Optional[tuple] = None  # enumerated form S:{a,b}
    card: Optional[int] = None  # cardinality form S:n
    span: SourceSpan = _span()

    def element_names(self) -> tuple:
        if self.elements is not None:
            return self.elements
        return tuple(f"{self.name}{i}" for i in range(1, self.card + 1))


@dataclass(frozen=True)
class ConstDecl:
    name: str
    type: Expr
    value: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Context:
    name: str
    sets: tuple = ()
    constants: tuple = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Property:
    name: str
    expr: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Machine:
    name: str
    sees: Optional[str]
    variables: tuple
    invariants: tuple
    init: tuple
    events: tuple
    properties: tuple = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Model:
    context: Optional[Context]
    machine: Optional[Machine]

    def event(self, name: str) -> Event:
        for e in self.machine.events:
            if e.name == name:
                return e
        raise KeyError(name)


Number = Union[int, Fraction]
