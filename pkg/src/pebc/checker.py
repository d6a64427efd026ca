"""Static well-formedness checks and preparation of models for execution.

:func:`check_model` resolves identifiers, performs shallow kind checking,
enforces the two DTMC side conditions (integer weights, enumerated
probabilities in (0, 1] summing to exactly 1) and the single-assignment rule,
and compiles every expression of the model.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from pebc import values as V
from pebc.diagnostics import Diagnostic, ModelError
from pebc.evaluator import CompiledExpr, Compiler, is_boolean_shaped
from pebc.printer import show_expr
from pebc.state import MachineState
from pebc.syntax import (
    NOSPAN,
    Assignment,
    Binary,
    BoolLit,
    Call,
    Choice,
    Comprehension,
    Deterministic,
    Enumerated,
    Event,
    Model,
    Name,
    Num,
    SetLit,
    Str,
    Unary,
    UniformList,
    UniformSet,
    free_names,
    walk,
)

INT, BOOL, SYM = "int", "bool", "sym"
INT_TYPE_NAMES = {"Nat", "NAT", "NATURAL", "NAT1", "NATURAL1", "Int", "INT", "INTEGER"}
BOOL_TYPE_NAMES = {"BOOL", "Bool"}
TYPE_NAMES = INT_TYPE_NAMES | BOOL_TYPE_NAMES


def kind_of(t) -> Optional[str]:
    if t is None or isinstance(t, str):
        return t
    return t[0]


def set_of(t):
    return ("set", t)


def show_type(t) -> str:
    if t is None:
        return "?"
    if isinstance(t, str):
        return {"int": "integer", "bool": "boolean", "sym": "symbol"}[t]
    if t[0] == "set":
        return f"POW({show_type(t[1])})"
    return f"{show_type(t[1])} * {show_type(t[2])}"


def type_of_value(v):
    t = type(v)
    if t is int:
        return INT
    if t is V.BoolV:
        return BOOL
    if t is str:
        return SYM
    if t is tuple:
        return ("pair", type_of_value(v[0]), type_of_value(v[1]))
    if t is V.SetV:
        return set_of(type_of_value(v.elems[0]) if v.elems else None)
    return None


def compatible(a, b) -> bool:
    """Shallow compatibility: equal kinds, and for sets equal element kinds."""
    if a is None or b is None:
        return True
    ka, kb = kind_of(a), kind_of(b)
    if ka != kb:
        return False
    if ka == "set":
        return compatible(a[1], b[1])
    if ka == "pair":
        return compatible(a[1], b[1]) and compatible(a[2], b[2])
    return True


def conforms(v, t) -> bool:
    if t is None:
        return True
    k = kind_of(t)
    if k == INT:
        return type(v) is int
    if k == BOOL:
        return type(v) is V.BoolV
    if k == SYM:
        return type(v) is str
    if k == "pair":
        return type(v) is tuple and conforms(v[0], t[1]) and conforms(v[1], t[2])
    if k == "set":
        return type(v) is V.SetV and all(conforms(x, t[1]) for x in v.elems)
    return True


# --- type inference and comprehension annotation -----------------------------


def annotate(e, tenv: dict):
    """Return ``(expr, type)`` with every comprehension's mode resolved."""
    t = type(e)
    if t is Num:
        return e, INT
    if t is BoolLit:
        return e, BOOL
    if t is Str:
        return e, SYM
    if t is Name:
        return e, tenv.get(e.id)
    if t is Unary:
        a, _ = annotate(e.arg, tenv)
        e2 = e if a is e.arg else dataclasses.replace(e, arg=a)
        return e2, (INT if e.op == "neg" else BOOL)
    if t is Binary:
        left, lt = annotate(e.left, tenv)
        right, rt = annotate(e.right, tenv)
        e2 = e if (left is e.left and right is e.right) else dataclasses.replace(e, left=left, right=right)
        return e2, _binary_type(e.op, lt, rt)
    if t is Call:
        a, at = annotate(e.arg, tenv)
        e2 = e if a is e.arg else dataclasses.replace(e, arg=a)
        if e.fn in ("card", "min", "max"):
            return e2, INT
        if e.fn == "bool":
            return e2, BOOL
        if e.fn == "POW":
            return e2, set_of(at)
        el = at[1] if kind_of(at) == "set" else None
        if kind_of(el) == "pair":
            return e2, set_of(el[1] if e.fn == "dom" else el[2])
        return e2, set_of(None)
    if t is SetLit:
        items, types = [], []
        for x in e.items:
            x2, xt = annotate(x, tenv)
            items.append(x2)
            types.append(xt)
        el = next((x for x in types if x is not None), None)
        e2 = e if all(a is b for a, b in zip(items, e.items)) else dataclasses.replace(e, items=tuple(items))
        return e2, set_of(el)
    if t is Comprehension:
        src, st = annotate(e.source, tenv)
        el = st[1] if kind_of(st) == "set" else None
        inner = dict(tenv)
        inner[e.var] = el
        body, bt = annotate(e.body, inner)
        if bt == BOOL:
            mode = "filter"
        elif bt is not None:
            mode = "map"
        else:
            bools = {k for k, v in inner.items() if v == BOOL}
            mode = "filter" if is_boolean_shaped(body, bools) else "map"
        e2 = dataclasses.replace(e, source=src, body=body, mode=mode)
        return e2, (st if mode == "filter" else set_of(bt))
    if t is Choice:
        items, ty = [], None
        for x, p in e.items:
            x2, xt = annotate(x, tenv)
            items.append((x2, p))
            ty = ty or xt
        return dataclasses.replace(e, items=tuple(items)), ty
    return e, None


def _binary_type(op, lt, rt):
    if op in ("and", "or", "=>", "<=>", "=", "/=", "<", "<=", ">", ">=", ":", "/:", "<:", "/<:"):
        return BOOL
    if op in ("+", "div", "mod"):
        return INT
    if op == "-":
        return lt if kind_of(lt) == "set" or kind_of(rt) == "set" else INT
    if op == "*":
        if kind_of(lt) == "set" or kind_of(rt) == "set":
            a = lt[1] if kind_of(lt) == "set" else None
            b = rt[1] if kind_of(rt) == "set" else None
            return set_of(("pair", a, b))
        return INT
    if op == "..":
        return set_of(INT)
    if op == "|->":
        return ("pair", lt, rt)
    if op in ("union", "inter", "\\"):
        return lt if kind_of(lt) == "set" and lt[1] is not None else rt
    if op in ("|>", "|>>", "<+"):
        return lt
    if op in ("<|", "<<|"):
        return rt
    return None


# --- checked model ------------------------------------------------------------


@dataclass
class CheckedAction:
    target: str
    index: int  # position of the target in the state vector
    kind: str  # "det" | "set" | "list" | "enum"
    exprs: tuple  # CompiledExpr per alternative (one for det/set)
    probs: tuple = ()  # Fractions for "enum"
    cumulative: tuple = ()  # running sums for "enum"
    assignment: Optional[Assignment] = None


@dataclass
class CheckedEvent:
    name: str
    index: int
    weight: CompiledExpr
    params: tuple  # of (name, CompiledExpr)
    guard: CompiledExpr
    actions: tuple  # of CheckedAction
    event: Event
    nonempty: tuple = ()  # per parameter: short-circuit test that its domain is not empty

    @property
    def guard_always_true(self) -> bool:
        return self.guard.const and self.guard.value is V.TRUE

    @property
    def targets(self) -> frozenset:
        return frozenset(a.target for a in self.actions)


@dataclass
class CheckedModel:
    model: Model
    consts: dict
    var_names: tuple
    var_types: dict
    initial: Optional[MachineState]
    events: tuple
    properties: dict  # name -> annotated Expr
    monitors: tuple  # CompiledExpr invariants beyond typing
    compiler: Compiler
    warnings: list = field(default_factory=list)
    type_env: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        m = self.model.machine
        return m.name if m is not None else self.model.context.name

    def event(self, name: str) -> CheckedEvent:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)

    def compile_state_expr(self, expr, what="expression") -> CompiledExpr:
        """Check and compile an expression over constants and variables."""
        diags: list = []
        allowed = set(self.consts) | set(self.var_names)
        _resolve(expr, allowed, what, diags, expr_span(expr))
        errors = [d for d in diags if d.severity == "error"]
        if errors:
            raise ModelError(errors)
        ann, _ = annotate(expr, self.type_env)
        return self.compiler.compile(ann)

    def expr_type(self, expr):
        return annotate(expr, self.type_env)[1]

    def env_of(self, state: MachineState) -> dict:
        return state.env()


def expr_span(e):
    return getattr(e, "span", NOSPAN)


def _resolve(expr, allowed: set, what: str, diags: list, span, bound=frozenset()):
    """Report unknown identifiers, type names used as values, misplaced choices
    and shadowing comprehension binders."""
    t = type(expr)
    if t is Name:
        if expr.id not in allowed and expr.id not in bound:
            if expr.id in TYPE_NAMES:
                diags.append(Diagnostic("error", f"type {expr.id} cannot be used as a value in {what}", expr.span))
            else:
                diags.append(Diagnostic("error", f"unknown identifier {expr.id!r} in {what}", expr.span))
        return
    if t is Comprehension:
        _resolve(expr.source, allowed, what, diags, span, bound)
        if expr.var in allowed or expr.var in bound:
            diags.append(
                Diagnostic("warning", f"comprehension variable {expr.var!r} shadows an outer identifier", expr.span)
            )
        _resolve(expr.body, allowed, what, diags, span, bound | {expr.var})
        return
    if t is Choice:
        diags.append(Diagnostic("error", f"probabilistic choice is not allowed in {what}", expr.span))
    from pebc.syntax import children

    for c in children(expr):
        _resolve(c, allowed, what, diags, span, bound)


def _type_from_expr(texpr, tenv, set_names, const_types):
    """Element type denoted by a type expression (``Nat``, ``POW(A*B)``...)."""
    t = type(texpr)
    if t is Name:
        if texpr.id in INT_TYPE_NAMES:
            return INT
        if texpr.id in BOOL_TYPE_NAMES:
            return BOOL
        if texpr.id in set_names:
            return SYM
        ct = const_types.get(texpr.id)
        if kind_of(ct) == "set":
            return ct[1]
        return None
    if t is Call and texpr.fn == "POW":
        return set_of(_type_from_expr(texpr.arg, tenv, set_names, const_types))
    if t is Binary and texpr.op == "*":
        return (
            "pair",
            _type_from_expr(texpr.left, tenv, set_names, const_types),
            _type_from_expr(texpr.right, tenv, set_names, const_types),
        )
    if t is Binary and texpr.op == "..":
        return INT
    _, st = annotate(texpr, tenv)
    if kind_of(st) == "set":
        return st[1]
    return None


def _type_names_ok(texpr, allowed, diags, what):
    for n in walk(texpr):
        if type(n) is Name and n.id not in allowed and n.id not in TYPE_NAMES:
            diags.append(Diagnostic("error", f"unknown identifier {n.id!r} in {what}", n.span))


def check_model(model: Model) -> CheckedModel:
    """Run all static checks; raise :class:`ModelError` listing every error."""
    diags: list = []
    ctx = model.context
    m = model.machine
    consts: dict = {}
    tenv: dict = {}
    set_names: set = set()
    const_types: dict = {}

    if ctx is None and m is None:
        raise ModelError([Diagnostic("error", "expected CONTEXT or MACHINE")])

    # -- context ---------------------------------------------------------------
    if ctx is not None:
        for s in ctx.sets:
            if s.name in consts:
                diags.append(Diagnostic("error", f"duplicate declaration of {s.name!r}", s.span))
                continue
            if s.card is not None and s.card < 1:
                diags.append(Diagnostic("error", f"set {s.name} must have at least one element", s.span))
            names = s.element_names()
            if len(set(names)) != len(names):
                diags.append(Diagnostic("error", f"set {s.name} lists an element twice", s.span))
            for el in names:
                if el in consts:
                    diags.append(Diagnostic("error", f"element {el!r} declared more than once", s.span))
                consts[el] = el
                tenv[el] = SYM
            consts[s.name] = V.canonical_set(list(names))
            tenv[s.name] = set_of(SYM)
            set_names.add(s.name)
        for c in ctx.constants:
            if c.name in consts or c.name in TYPE_NAMES:
                diags.append(Diagnostic("error", f"duplicate declaration of {c.name!r}", c.span))
                continue
            n_before = len(diags)
            _type_names_ok(c.type, set(consts), diags, f"the type of constant {c.name}")
            _resolve(c.value, set(consts), f"the value of constant {c.name}", diags, c.span)
            declared = _type_from_expr(c.type, tenv, set_names, const_types)
            if any(d.severity == "error" for d in diags[n_before:]):
                continue
            ann, _ = annotate(c.value, tenv)
            try:
                val = Compiler(consts).compile(ann)({}, {})
            except V.EvalError as exc:
                diags.append(Diagnostic("error", f"cannot evaluate constant {c.name}: {exc.message}", c.span))
                continue
            if not conforms(val, declared):
                diags.append(
                    Diagnostic(
                        "error",
                        f"constant {c.name} has a {V.kind_name(val)} value but is declared {show_type(declared)}",
                        c.span,
                    )
                )
            if declared == INT and type(val) is int and val < 0 and _is_nat(c.type):
                diags.append(Diagnostic("error", f"constant {c.name} must be a natural number", c.span))
            consts[c.name] = val
            vt = type_of_value(val)
            tenv[c.name] = declared if declared is not None else vt
            const_types[c.name] = vt if kind_of(vt) == "set" else tenv[c.name]

    if m is None:
        errors = [d for d in diags if d.severity == "error"]
        if errors:
            raise ModelError(diags)
        comp = Compiler(consts)
        return CheckedModel(model, consts, (), {}, None, (), {}, (), comp, diags, tenv)

    # -- machine header ------------------------------------------------------
    if m.sees is not None:
        if ctx is None:
            diags.append(Diagnostic("error", f"context {m.sees} is not available", m.span))
        elif ctx.name != m.sees:
            diags.append(Diagnostic("error", f"machine sees {m.sees} but the context is {ctx.name}", m.span))

    var_names = []
    for v in m.variables:
        if v in var_names:
            diags.append(Diagnostic("error", f"variable {v!r} declared twice", m.span))
        elif v in consts or v in TYPE_NAMES:
            diags.append(Diagnostic("error", f"variable {v!r} clashes with a context name", m.span))
        else:
            var_names.append(v)
    var_set = set(var_names)
    state_names = set(consts) | var_set

    # -- invariants ----------------------------------------------------------
    var_types: dict = {}
    monitor_exprs = []
    for inv in m.invariants:
        if type(inv) is Binary and inv.op == ":" and type(inv.left) is Name and inv.left.id in var_set:
            v = inv.left.id
            _type_names_ok(inv.right, set(consts), diags, f"the type of {v}")
            if v in var_types:
                diags.append(Diagnostic("error", f"variable {v} has more than one typing invariant", inv.span))
                continue
            var_types[v] = (_type_from_expr(inv.right, tenv, set_names, const_types), inv.right)
        else:
            _resolve(inv, state_names, "an invariant", diags, expr_span(inv))
            monitor_exprs.append(inv)
    for v in var_names:
        if v not in var_types:
            diags.append(Diagnostic("error", f"variable {v} has no typing invariant '{v} : TYPE'", m.span))
            var_types[v] = (None, None)
        tenv[v] = var_types[v][0]

    # -- initialisation --------------------------------------------------------
    init_values: dict = {}
    consts_only = set(consts)
    init_targets = set()
    for a in m.init:
        a = _normalise_rhs(a, tenv, diags)
        if a.target not in var_set:
            diags.append(Diagnostic("error", f"initialisation assigns unknown variable {a.target!r}", a.span))
            continue
        if a.target in init_targets:
            diags.append(Diagnostic("error", f"variable {a.target} is initialised more than once", a.span))
            continue
        init_targets.add(a.target)
        if not isinstance(a.rhs, Deterministic):
            diags.append(Diagnostic("error", f"initialisation of {a.target} must be deterministic", a.span))
            continue
        n_before = len(diags)
        bad = sorted(free_names(a.rhs.expr) & (var_set | _param_like(a.rhs.expr, state_names)))
        if bad:
            diags.append(
                Diagnostic(
                    "error",
                    f"initialisation of {a.target} must be constant; it refers to {', '.join(bad)}",
                    a.span,
                )
            )
        else:
            _resolve(a.rhs.expr, consts_only, f"the initialisation of {a.target}", diags, a.span)
        if any(d.severity == "error" for d in diags[n_before:]):
            continue
        ann, rt = annotate(a.rhs.expr, tenv)
        declared = tenv.get(a.target)
        if not compatible(declared, rt):
            diags.append(
                Diagnostic("error", f"{a.target} is declared {show_type(declared)} but initialised with {show_type(rt)}", a.span)
            )
            continue
        try:
            val = Compiler(consts).compile(ann)({}, {})
        except V.EvalError as exc:
            diags.append(Diagnostic("error", f"cannot evaluate initialisation of {a.target}: {exc.message}", a.span))
            continue
        if not conforms(val, declared):
            diags.append(
                Diagnostic("error", f"{a.target} is declared {show_type(declared)} but initialised to {V.show_value(val)}", a.span)
            )
            continue
        init_values[a.target] = val
    for v in var_names:
        if v not in init_targets:
            diags.append(Diagnostic("error", f"variable {v} is not initialised", m.span))

    # -- events ------------------------------------------------------------------
    seen_events = set()
    checked_events_src = []
    for ev in m.events:
        if ev.name in seen_events:
            diags.append(Diagnostic("error", f"duplicate event {ev.name!r}", ev.span))
            continue
        seen_events.add(ev.name)
        checked_events_src.append(_check_event(ev, consts, var_set, tenv, state_names, diags))

    # -- properties ----------------------------------------------------------------
    props = {}
    for p in m.properties:
        if p.name in props:
            diags.append(Diagnostic("error", f"duplicate property {p.name!r}", p.span))
            continue
        _resolve(p.expr, state_names, f"property {p.name}", diags, p.span)
        props[p.name] = annotate(p.expr, tenv)[0]

    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ModelError(diags)

    # -- compile ---------------------------------------------------------------
    bool_names = {k for k, t in tenv.items() if t == BOOL}
    comp = Compiler(consts, stable=var_set, bool_names=bool_names)
    names = tuple(var_names)
    index = {v: i for i, v in enumerate(names)}
    events = []
    for i, (ev, w, params, guard, actions) in enumerate(checked_events_src):
        cw = comp.compile(w) if w is not None else comp.compile(Num(1))
        cg = comp.compile(guard) if guard is not None else comp.compile(BoolLit(True))
        cps = tuple((p.name, comp.compile(d)) for p, d in params)
        cas = []
        for a in actions:
            r = a.rhs
            if isinstance(r, Deterministic):
                cas.append(CheckedAction(a.target, index[a.target], "det", (comp.compile(r.expr),), assignment=a))
            elif isinstance(r, UniformSet):
                cas.append(CheckedAction(a.target, index[a.target], "set", (comp.compile(r.expr),), assignment=a))
            elif isinstance(r, UniformList):
                cas.append(
                    CheckedAction(a.target, index[a.target], "list", tuple(comp.compile(x) for x in r.exprs), assignment=a)
                )
            else:
                probs = tuple(p for _, p in r.items)
                cum, acc = [], Fraction(0)
                for p in probs:
                    acc += p
                    cum.append(acc)
                cas.append(
                    CheckedAction(
                        a.target, index[a.target], "enum", tuple(comp.compile(x) for x, _ in r.items),
                        probs, tuple(cum), assignment=a,
                    )
                )
        nonempty = tuple(comp.compile_nonempty(d) for _, d in params)
        events.append(CheckedEvent(ev.name, i, cw, cps, cg, tuple(cas), ev, nonempty))
    monitors = tuple(comp.compile(annotate(x, tenv)[0]) for x in monitor_exprs)
    initial = MachineState(names, tuple(init_values[v] for v in names))
    return CheckedModel(
        model, consts, names, {v: tenv[v] for v in names}, initial, tuple(events),
        props, monitors, comp, [d for d in diags if d.severity == "warning"], tenv,
    )


def _is_nat(texpr) -> bool:
    return type(texpr) is Name and texpr.id in {"Nat", "NAT", "NATURAL", "NAT1", "NATURAL1"}


def _param_like(expr, state_names) -> set:
    # names in an initialiser that are neither context names nor variables
    return set()


def _normalise_rhs(a: Assignment, tenv, diags) -> Assignment:
    """``x := {a, b}`` for a set-typed ``x`` holding scalars/pairs is a set
    literal, not a uniform choice."""
    r = a.rhs
    if isinstance(r, UniformList) and kind_of(tenv.get(a.target)) == "set":
        kinds = [kind_of(annotate(x, tenv)[1]) for x in r.exprs]
        if all(k != "set" for k in kinds):
            diags.append(
                Diagnostic(
                    "warning",
                    f"{{...}} assigned to set variable {a.target} is read as a set literal; "
                    f"write {a.target} := ({{...}}) to make that explicit",
                    a.span,
                )
            )
            return dataclasses.replace(a, rhs=Deterministic(SetLit(r.exprs)))
    return a


def _check_event(ev: Event, consts, var_set, tenv, state_names, diags):
    where = f"event {ev.name}"
    # parameters
    params = []
    pnames = set()
    ptenv = dict(tenv)
    for p in ev.params:
        if p.name in pnames:
            diags.append(Diagnostic("error", f"parameter {p.name!r} declared twice in {where}", p.span))
            continue
        if p.name in state_names or p.name in TYPE_NAMES:
            diags.append(
                Diagnostic("error", f"parameter {p.name!r} of {where} clashes with a variable or constant", p.span)
            )
            continue
        n_before = len(diags)
        _resolve(p.domain, state_names, f"the domain of parameter {p.name} in {where}", diags, p.span)
        ann, dt = annotate(p.domain, tenv)
        if kind_of(dt) not in (None, "set"):
            diags.append(
                Diagnostic("error", f"the domain of parameter {p.name} in {where} must be a set, not {show_type(dt)}", p.span)
            )
        pnames.add(p.name)
        ptenv[p.name] = dt[1] if kind_of(dt) == "set" else None
        if not any(d.severity == "error" for d in diags[n_before:]):
            params.append((p, ann))
    # weight
    weight = None
    if ev.weight is not None:
        n_before = len(diags)
        used_params = free_names(ev.weight) & pnames
        if used_params:
            diags.append(
                Diagnostic("error", f"the weight of {where} may not depend on parameters ({', '.join(sorted(used_params))})", expr_span(ev.weight))
            )
        _resolve(ev.weight, state_names | pnames, f"the weight of {where}", diags, ev.span)
        weight, wt = annotate(ev.weight, tenv)
        if kind_of(wt) not in (None, INT):
            diags.append(
                Diagnostic("error", f"the weight of {where} must be an integer expression, not {show_type(wt)}", expr_span(ev.weight))
            )
    # guard
    guard = None
    scope = state_names | pnames
    if ev.guard is not None:
        _resolve(ev.guard, scope, f"the guard of {where}", diags, ev.span)
        guard, gt = annotate(ev.guard, ptenv)
        if kind_of(gt) not in (None, BOOL):
            diags.append(Diagnostic("error", f"the guard of {where} must be a predicate", expr_span(ev.guard)))
    # actions
    actions = []
    targets = set()
    for a in ev.actions:
        a = _normalise_rhs(a, ptenv, diags)
        if a.target not in var_set:
            diags.append(Diagnostic("error", f"{where} assigns {a.target!r}, which is not a variable", a.span))
            continue
        if a.target in targets:
            diags.append(
                Diagnostic(
                    "error",
                    f"variable {a.target} is assigned more than once in {where}; "
                    "a variable can appear only once as the target of an assignment",
                    a.span,
                )
            )
            continue
        targets.add(a.target)
        for x in a.exprs():
            _resolve(x, scope, f"the assignment to {a.target} in {where}", diags, a.span)
        r = a.rhs
        declared = tenv.get(a.target)
        if isinstance(r, Enumerated):
            total = sum((p for _, p in r.items), Fraction(0))
            for x, p in r.items:
                if not (0 < p <= 1):
                    diags.append(
                        Diagnostic("error", f"probability {p} in the assignment to {a.target} is not in (0, 1]", a.span)
                    )
            if total != 1:
                diags.append(
                    Diagnostic("error", f"probabilities sum to {total} ≠ 1 in the assignment to {a.target} ({where})", a.span)
                )
            items = []
            for x, p in r.items:
                x2, xt = annotate(x, ptenv)
                _kind_check(a, declared, xt, where, diags)
                items.append((x2, p))
            a = dataclasses.replace(a, rhs=Enumerated(tuple(items)))
        elif isinstance(r, UniformList):
            xs = []
            for x in r.exprs:
                x2, xt = annotate(x, ptenv)
                _kind_check(a, declared, xt, where, diags)
                xs.append(x2)
            a = dataclasses.replace(a, rhs=UniformList(tuple(xs)))
        elif isinstance(r, UniformSet):
            x2, xt = annotate(r.expr, ptenv)
            if kind_of(xt) not in (None, "set"):
                diags.append(Diagnostic("error", f"':in' in the assignment to {a.target} needs a set", a.span))
            else:
                _kind_check(a, declared, xt[1] if xt else None, where, diags)
            a = dataclasses.replace(a, rhs=UniformSet(x2))
        else:
            x2, xt = annotate(r.expr, ptenv)
            _kind_check(a, declared, xt, where, diags)
            a = dataclasses.replace(a, rhs=Deterministic(x2))
        actions.append(a)
    return ev, weight, params, guard, actions


def _kind_check(a, declared, actual, where, diags):
    if not compatible(declared, actual):
        diags.append(
            Diagnostic(
                "error",
                f"{a.target} is declared {show_type(declared)} but {where} assigns a {show_type(actual)}",
                a.span,
            )
        )


def load_checked(path) -> CheckedModel:
    from pebc.parser import load_model

    return check_model(load_model(path))


def with_constants(model: Model, overrides: dict) -> Model:
    """Return a copy of ``model`` whose named constants get new initialisers."""
    from pebc.parser import parse_expression

    ctx = model.context
    if ctx is None:
        raise ModelError([Diagnostic("error", "model has no context to override constants in")])
    known = {c.name for c in ctx.constants}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ModelError([Diagnostic("error", f"unknown constant(s) {', '.join(unknown)}")])
    consts = []
    for c in ctx.constants:
        if c.name in overrides:
            v = overrides[c.name]
            expr = parse_expression(v) if isinstance(v, str) else _literal(v)
            c = dataclasses.replace(c, value=expr)
        consts.append(c)
    return Model(dataclasses.replace(ctx, constants=tuple(consts)), model.machine)


def _literal(v):
    if type(v) is int:
        return Num(v) if v >= 0 else Unary("neg", Num(-v))
    if isinstance(v, bool):
        return BoolLit(v)
    raise TypeError(f"cannot override a constant with {v!r}")


__all__ = [
    "CheckedModel",
    "CheckedEvent",
    "CheckedAction",
    "check_model",
    "annotate",
    "with_constants",
    "load_checked",
    "show_expr",
]
