"""Pretty-printing of expressions and models back to ``.peb`` text.

Binary operators are always parenthesised, so printed text reparses to a
structurally equal tree.
"""

from __future__ import annotations

from fractions import Fraction

from pebc.syntax import (
    Binary,
    BoolLit,
    Call,
    Choice,
    Comprehension,
    Deterministic,
    Enumerated,
    Name,
    Num,
    SetLit,
    Str,
    Unary,
    UniformList,
    UniformSet,
)

_OP_TEXT = {"and": "/\\", "or": "\\/"}


def show_prob(p: Fraction) -> str:
    if p.denominator == 1:
        return str(p.numerator)
    d, twos, fives = p.denominator, 0, 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{p.numerator}/{p.denominator}"
    digits = max(twos, fives)
    scaled = p * 10**digits
    whole, frac = divmod(scaled.numerator, 10**digits)
    return f"{whole}.{frac:0{digits}d}"


def show_expr(e) -> str:
    t = type(e)
    if t is Num:
        return str(e.value)
    if t is BoolLit:
        return "TRUE" if e.value else "FALSE"
    if t is Str:
        return f'"{e.value}"'
    if t is Name:
        return e.id
    if t is Unary:
        if e.op == "neg":
            return f"(-{show_expr(e.arg)})"
        return f"(not {show_expr(e.arg)})"
    if t is Binary:
        op = _OP_TEXT.get(e.op, e.op)
        return f"({show_expr(e.left)} {op} {show_expr(e.right)})"
    if t is Call:
        return f"{e.fn}({show_expr(e.arg)})"
    if t is SetLit:
        return "{" + ", ".join(map(show_expr, e.items)) + "}"
    if t is Comprehension:
        return f"{{{e.var} . {show_expr(e.source)} | {show_expr(e.body)}}}"
    if t is Choice:
        return "{" + ", ".join(f"{show_expr(x)} @ {show_prob(p)}" for x, p in e.items) + "}"
    raise TypeError(f"not an expression: {e!r}")


def show_assignment(a) -> str:
    r = a.rhs
    if isinstance(r, UniformSet):
        return f"{a.target} :in {show_expr(r.expr)}"
    if isinstance(r, UniformList):
        return f"{a.target} := {{" + ", ".join(map(show_expr, r.exprs)) + "}"
    if isinstance(r, Enumerated):
        return f"{a.target} := " + show_expr(Choice(r.items))
    assert isinstance(r, Deterministic)
    text = show_expr(r.expr)
    if type(r.expr) in (SetLit, Choice):
        # a bare {a, b} on the right would read back as a uniform choice
        text = f"({text})"
    return f"{a.target} := {text}"


def show_model(model) -> str:
    out = []
    c = model.context
    if c is not None:
        out.append(f"CONTEXT {c.name}")
        if c.sets:
            out.append("SETS")
            for s in c.sets:
                if s.elements is not None:
                    out.append(f"  {s.name} : {{" + ", ".join(s.elements) + "}")
                else:
                    out.append(f"  {s.name} : {s.card}")
        if c.constants:
            out.append("CONSTANTS")
            for k in c.constants:
                out.append(f"  {k.name} : {show_expr(k.type)} := {show_expr(k.value)}")
        out.append("END")
        out.append("")
    m = model.machine
    if m is not None:
        out.append(f"MACHINE {m.name}" + (f" SEES {m.sees}" if m.sees else ""))
        if m.variables:
            out.append("VARIABLES " + " ".join(m.variables))
        if m.invariants:
            out.append("INVARIANTS")
            out.extend("  " + show_expr(i) for i in m.invariants)
        if m.init:
            out.append("INITIALISATION")
            out.extend("  " + show_assignment(a) for a in m.init)
        for ev in m.events:
            out.append(f"EVENT {ev.name}")
            if ev.weight is not None:
                out.append(f"  WEIGHT {show_expr(ev.weight)}")
            if ev.params:
                out.append("  ANY")
                out.extend(f"    {p.name} :in {show_expr(p.domain)}" for p in ev.params)
            if ev.guard is not None:
                out.append(f"  WHERE {show_expr(ev.guard)}")
            if ev.actions:
                out.append("  THEN")
                out.extend("    " + show_assignment(a) for a in ev.actions)
            out.append("END")
        if m.properties:
            out.append("PROPERTIES")
            for p in m.properties:
                if p.name.isdigit():
                    out.append(f"  {show_expr(p.expr)}")
                else:
                    out.append(f"  {p.name} := {show_expr(p.expr)}")
        out.append("END")
    return "\n".join(out) + "\n"
