"""Expression evaluation.

Expressions are translated once into Python source and compiled with
:func:`compile`; the generated function takes the environment dictionary and
a per-state memo dictionary.  Subexpressions that depend only on constants
are folded at compile time.  Set-valued subexpressions that depend only on
*stable* names (machine variables) are memoised in the memo dictionary, so a
comprehension nested inside another is evaluated once per state instead of
once per element, and identical subexpressions shared between events are
computed once per state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from pebc import values as V
from pebc.syntax import (
    BOOL_OPS,
    Binary,
    BoolLit,
    Call,
    Choice,
    Comprehension,
    Name,
    Num,
    SetLit,
    Str,
    Unary,
    free_names,
)
from pebc.values import FALSE, TRUE, BoolV, EvalError, KindMismatch, SetV

_BOOL_BINOPS = BOOL_OPS | {"=", "/=", "<", "<=", ">", ">=", ":", "/:", "<:", "/<:"}
_MEMO_BINOPS = {"union", "inter", "\\", "|>", "|>>", "<|", "<<|", "<+", "..", "*", "-"}
_MEMO_CALLS = {"card", "dom", "ran", "POW", "min", "max"}


@dataclass(frozen=True)
class Env:
    """Evaluation environment: identifier bindings plus deferred sets."""

    bindings: Mapping = field(default_factory=dict)
    deferred_sets: Mapping = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = dict(self.deferred_sets)
        d.update(self.bindings)
        return d


# --- runtime helpers referenced by generated code -----------------------------


def _truth(v) -> bool:
    if v is TRUE:
        return True
    if v is FALSE:
        return False
    raise KindMismatch(f"expected a boolean, got {V.kind_name(v)}")


def _int(v, what):
    if type(v) is not int:
        raise KindMismatch(f"{what} expects integers, got {V.kind_name(v)}")
    return v


def _add(a, b):
    if type(a) is int and type(b) is int:
        r = a + b
        if V.INT_MIN <= r <= V.INT_MAX:
            return r
        return V.check_int(r)
    raise KindMismatch(f"'+' expects integers, got {V.kind_name(a)} and {V.kind_name(b)}")


def _sub(a, b):
    if type(a) is int and type(b) is int:
        r = a - b
        if V.INT_MIN <= r <= V.INT_MAX:
            return r
        return V.check_int(r)
    if type(a) is SetV and type(b) is SetV:
        return V.difference(a, b)
    raise KindMismatch(f"'-' expects integers or sets, got {V.kind_name(a)} and {V.kind_name(b)}")


def _mul(a, b):
    if type(a) is int and type(b) is int:
        return V.check_int(a * b)
    if type(a) is SetV and type(b) is SetV:
        return V.product(a, b)
    raise KindMismatch(f"'*' expects integers or sets, got {V.kind_name(a)} and {V.kind_name(b)}")


def _div(a, b):
    _int(a, "div")
    _int(b, "div")
    if b == 0:
        raise V.DivisionByZero("division by zero")
    if b < 0:
        raise KindMismatch("div by a negative number is not supported")
    return V.check_int(a // b)


def _mod(a, b):
    _int(a, "mod")
    _int(b, "mod")
    if b == 0:
        raise V.DivisionByZero("modulo by zero")
    if b < 0:
        raise KindMismatch("mod by a negative number is not supported")
    return a % b


def _neg(a):
    return V.check_int(-_int(a, "unary minus"))


def _cmp_ints(a, b, op):
    if type(a) is not int or type(b) is not int:
        raise KindMismatch(f"'{op}' expects integers, got {V.kind_name(a)} and {V.kind_name(b)}")


def _lt(a, b):
    _cmp_ints(a, b, "<")
    return a < b


def _le(a, b):
    _cmp_ints(a, b, "<=")
    return a <= b


def _gt(a, b):
    _cmp_ints(a, b, ">")
    return a > b


def _ge(a, b):
    _cmp_ints(a, b, ">=")
    return a >= b


def _mem(x, s):
    if type(s) is not SetV:
        raise KindMismatch(f"membership needs a set on the right, got {V.kind_name(s)}")
    return x in s


def _members(s):
    if type(s) is not SetV:
        raise KindMismatch(f"membership needs a set on the right, got {V.kind_name(s)}")
    return s.members


def _elems(s):
    if type(s) is not SetV:
        raise KindMismatch(f"comprehension source must be a set, got {V.kind_name(s)}")
    return s.elems


def _trusted(lst):
    return SetV(tuple(lst)) if lst else V.EMPTY


def _min(s):
    V.need_set(s, "min argument")
    if not s.elems:
        raise V.EmptyChoice("min of the empty set")
    return min(_int(x, "min") for x in s.elems)


def _max(s):
    V.need_set(s, "max argument")
    if not s.elems:
        raise V.EmptyChoice("max of the empty set")
    return max(_int(x, "max") for x in s.elems)


_RUNTIME = {
    "TRUE": TRUE,
    "FALSE": FALSE,
    "EMPTY": V.EMPTY,
    "_truth": _truth,
    "_add": _add,
    "_sub": _sub,
    "_mul": _mul,
    "_div": _div,
    "_mod": _mod,
    "_neg": _neg,
    "_lt": _lt,
    "_le": _le,
    "_gt": _gt,
    "_ge": _ge,
    "_mem": _mem,
    "_members": _members,
    "_elems": _elems,
    "_trusted": _trusted,
    "_pair": V.make_pair,
    "_setlit": V.canonical_set,
    "_canon": V.canonical_set,
    "_interval": V.interval,
    "_card": V.card,
    "_dom": V.dom,
    "_ran": V.ran,
    "_pow": V.powerset,
    "_min": _min,
    "_max": _max,
    "_subset": V.subset,
    "_union": V.union,
    "_inter": V.intersection,
    "_diff": V.difference,
    "_ranres": V.range_restrict,
    "_ransub": V.range_subtract,
    "_domres": V.domain_restrict,
    "_domsub": V.domain_subtract,
    "_ovl": V.override,
}

_SET_BINOP_FN = {
    "union": "_union",
    "inter": "_inter",
    "\\": "_diff",
    "|>": "_ranres",
    "|>>": "_ransub",
    "<|": "_domres",
    "<<|": "_domsub",
    "<+": "_ovl",
}
_CALL_FN = {"card": "_card", "dom": "_dom", "ran": "_ran", "POW": "_pow", "min": "_min", "max": "_max"}
_CMP_FN = {"<": "_lt", "<=": "_le", ">": "_gt", ">=": "_ge"}

CONST, STABLE, VOLATILE = 0, 1, 2


class CompiledExpr:
    """A compiled expression; call with ``(env_dict, memo=None)``."""

    __slots__ = ("expr", "fn", "src", "const", "value", "span")

    def __init__(self, expr, fn, src, const, value):
        self.expr = expr
        self.fn = fn
        self.src = src
        self.const = const
        self.value = value
        self.span = getattr(expr, "span", None)

    def __call__(self, env, memo=None):
        if self.const:
            return self.value
        try:
            return self.fn(env, {} if memo is None else memo)
        except EvalError as exc:
            if exc.span is None:
                exc.span = self.span
            raise
        except KeyError as exc:
            raise EvalError(f"unbound identifier {exc.args[0]!r}", self.span) from None
        except RecursionError:
            raise EvalError("expression nesting too deep", self.span) from None

    def truth(self, env, memo=None) -> bool:
        return _truth(self(env, memo))

    def __repr__(self):
        return f"CompiledExpr({self.src})"


class Compiler:
    """Translates expressions of one model into Python functions.

    ``consts``: names with compile-time values (constants, deferred sets and
    their elements).  ``stable``: names read from the environment whose value
    is fixed for the lifetime of a memo dictionary (machine variables).  Any
    other free name (event parameters) is read from the environment and never
    memoised.
    """

    def __init__(self, consts: Optional[Mapping] = None, stable=(), bool_names=()):
        self.consts = dict(consts or {})
        self.stable = frozenset(stable)
        self.bool_names = set(bool_names) | {k for k, v in self.consts.items() if type(v) is BoolV}
        self._globals = dict(_RUNTIME)
        self._slots: dict = {}
        self._fresh = 0
        self._hoists = None  # loop-invariant membership sets of the innermost comprehension

    def _slot(self, value) -> str:
        key = (type(value), value)
        try:
            name = self._slots.get(key)
        except TypeError:
            name = None
        if name is None:
            name = f"_k{len(self._globals)}"
            self._globals[name] = value
            try:
                self._slots[key] = name
            except TypeError:
                pass
        return name

    def compile(self, expr) -> CompiledExpr:
        src, kind = self._val(expr, {})
        return self._finish(expr, src, kind)

    def _finish(self, expr, src, kind) -> CompiledExpr:
        code = f"def _f(env, M):\n    return {src}\n"
        ns: dict = {}
        exec(compile(code, f"<pebc:{_label(expr)}>", "exec"), self._globals, ns)
        fn = ns["_f"]
        if kind == CONST:
            try:
                return CompiledExpr(expr, fn, src, True, fn({}, {}))
            except EvalError:
                pass
        return CompiledExpr(expr, fn, src, False, None)

    # --- code generation -----------------------------------------------------

    def _fold(self, src: str, kind: int):
        """Evaluate a constant subexpression now and replace it by a slot."""
        if kind != CONST:
            return src, kind
        try:
            val = eval(src, self._globals, {"env": {}, "M": {}})
        except EvalError:
            return src, kind
        if val is TRUE:
            return "TRUE", CONST
        if val is FALSE:
            return "FALSE", CONST
        if type(val) is int and val >= 0:
            return repr(val), CONST
        return self._slot(val), CONST

    def _memo(self, expr, src: str, kind: int):
        if kind != STABLE:
            return src
        key = self._slot(_show(expr))
        return f"(M[{key}] if {key} in M else M.setdefault({key}, {src}))"

    def _val(self, e, binders: dict):
        """Python source producing a Value, and its dependency kind."""
        t = type(e)
        if t is Num:
            return self._fold(repr(e.value), CONST)
        if t is BoolLit:
            return ("TRUE" if e.value else "FALSE"), CONST
        if t is Str:
            return self._slot(e.value), CONST
        if t is Name:
            if e.id in binders:
                return binders[e.id], VOLATILE
            if e.id in self.consts:
                return self._fold(self._slot(self.consts[e.id]), CONST)
            return f"env[{e.id!r}]", (STABLE if e.id in self.stable else VOLATILE)
        if t is Unary:
            if e.op == "not":
                b, k = self._bool(e, binders)
                return self._fold(f"(TRUE if {b} else FALSE)", k)
            a, k = self._val(e.arg, binders)
            return self._fold(f"_neg({a})", k)
        if t is Binary:
            if e.op in _BOOL_BINOPS:
                b, k = self._bool(e, binders)
                return self._fold(f"(TRUE if {b} else FALSE)", k)
            a, ka = self._val(e.left, binders)
            b, kb = self._val(e.right, binders)
            k = max(ka, kb)
            op = e.op
            if op == "+":
                src = f"_add({a}, {b})"
            elif op == "-":
                src = f"_sub({a}, {b})"
            elif op == "*":
                src = f"_mul({a}, {b})"
            elif op == "div":
                src = f"_div({a}, {b})"
            elif op == "mod":
                if b.isdigit() and int(b) > 0 and a.isidentifier():
                    src = f"({a} % {b} if type({a}) is int else _mod({a}, {b}))"
                else:
                    src = f"_mod({a}, {b})"
            elif op == "..":
                src = f"_interval({a}, {b})"
            elif op == "|->":
                src = f"_pair({a}, {b})"
            elif op in _SET_BINOP_FN:
                src = f"{_SET_BINOP_FN[op]}({a}, {b})"
            else:
                raise EvalError(f"unknown operator {op!r}", e.span)
            if op in _MEMO_BINOPS:
                src = self._memo(e, src, k)
            return self._fold(src, k)
        if t is Call:
            if e.fn == "bool":
                b, k = self._bool(e.arg, binders)
                return self._fold(f"(TRUE if {b} else FALSE)", k)
            a, k = self._val(e.arg, binders)
            src = f"{_CALL_FN[e.fn]}({a})"
            if e.fn in _MEMO_CALLS:
                src = self._memo(e, src, k)
            return self._fold(src, k)
        if t is SetLit:
            if not e.items:
                return "EMPTY", CONST
            parts = [self._val(x, binders) for x in e.items]
            k = max(p[1] for p in parts)
            return self._fold("_setlit((" + ", ".join(p[0] for p in parts) + ",))", k)
        if t is Comprehension:
            py, loop, body, mode = self._comprehension(e, binders)
            if mode == "filter":
                src = f"_trusted([{py} {loop} if {body}])"
            else:
                src = f"_canon([{body} {loop}])"
            k = self._deps(e, binders)
            src = self._memo(e, src, k)
            return self._fold(src, k)
        if t is Choice:
            raise EvalError("probabilistic choice outside an assignment", e.span)
        raise EvalError(f"cannot evaluate {e!r}")

    def _comprehension(self, e, binders):
        """Binder name, ``for`` clauses, body source and mode of a comprehension."""
        s, _ = self._val(e.source, binders)
        self._fresh += 1
        py = f"_b{self._fresh}"
        inner = dict(binders)
        inner[e.var] = py
        mode = e.mode or self._guess_mode(e.body, inner)
        saved, self._hoists = self._hoists, []
        try:
            if mode == "filter":
                body, _ = self._bool(e.body, inner)
            else:
                body, _ = self._val(e.body, inner)
            hoists = self._hoists
        finally:
            self._hoists = saved
        # invariant sets are computed once, and only for a non-empty source
        loop = f"for {py} in _elems({s})"
        if hoists:
            xs = f"_x{self._fresh}"
            loop = f"for {xs} in (_elems({s}),) if {xs} " + " ".join(
                f"for {h} in ({hs},)" for h, hs in hoists
            ) + f" for {py} in {xs}"
        return py, loop, body, mode

    def compile_nonempty(self, expr) -> CompiledExpr:
        """Compile a test ``expr /= {}`` that stops at the first element found.

        Only filter comprehensions benefit; anything else evaluates the set.
        """
        if type(expr) is Comprehension and self._deps(expr, {}) != CONST:
            py, loop, body, mode = self._comprehension(expr, {})
            if mode == "filter":
                # a memoised full result is reused when present
                key = self._slot(_show(expr))
                src = f"((M[{key}].elems != ()) if {key} in M else any(True {loop} if {body}))"
                return self._finish(expr, f"(TRUE if {src} else FALSE)", VOLATILE)
        src, kind = self._val(expr, {})
        return self._finish(expr, f"(TRUE if _elems({src}) else FALSE)", kind)

    def _bool(self, e, binders: dict):
        """Python source producing a Python bool, and its dependency kind."""
        t = type(e)
        if t is BoolLit:
            return ("True" if e.value else "False"), CONST
        if t is Unary and e.op == "not":
            b, k = self._bool(e.arg, binders)
            return self._fold_bool(f"(not {b})", k)
        if t is Binary and e.op in _BOOL_BINOPS:
            op = e.op
            if op in BOOL_OPS:
                a, ka = self._bool(e.left, binders)
                b, kb = self._bool(e.right, binders)
                src = {
                    "and": f"({a} and {b})",
                    "or": f"({a} or {b})",
                    "=>": f"((not {a}) or {b})",
                    "<=>": f"({a} == {b})",
                }[op]
                return self._fold_bool(src, max(ka, kb))
            a, ka = self._val(e.left, binders)
            b, kb = self._val(e.right, binders)
            k = max(ka, kb)
            if op == "=":
                src = f"({a} == {b})"
            elif op == "/=":
                src = f"({a} != {b})"
            elif op in _CMP_FN:
                src = f"{_CMP_FN[op]}({a}, {b})"
            elif op in (":", "/:") and kb == STABLE and self._hoists is not None:
                self._fresh += 1
                h = f"_h{self._fresh}"
                self._hoists.append((h, f"_members({b})"))
                src = f"({a} in {h})" if op == ":" else f"({a} not in {h})"
            elif op == ":":
                src = f"_mem({a}, {b})"
            elif op == "/:":
                src = f"(not _mem({a}, {b}))"
            elif op == "<:":
                src = f"_subset({a}, {b})"
            else:  # "/<:"
                src = f"(not _subset({a}, {b}))"
            return self._fold_bool(src, k)
        v, k = self._val(e, binders)
        if v == "TRUE":
            return "True", CONST
        if v == "FALSE":
            return "False", CONST
        return f"_truth({v})", k

    def _fold_bool(self, src, kind):
        if kind != CONST:
            return src, kind
        try:
            val = eval(src, self._globals, {"env": {}, "M": {}})
        except EvalError:
            return src, kind
        return ("True" if val else "False"), CONST

    def _guess_mode(self, body, binders) -> str:
        return "filter" if is_boolean_shaped(body, self.bool_names - set(binders)) else "map"

    def _deps(self, e, binders) -> int:
        k = CONST
        for n in free_names(e):
            if n in binders:
                return VOLATILE
            if n not in self.consts:
                k = max(k, STABLE if n in self.stable else VOLATILE)
        return k


def _show(expr) -> str:
    from pebc.printer import show_expr

    return show_expr(expr)


def is_boolean_shaped(e, bool_names=()) -> bool:
    """Syntactic predicate test used to tell filter from map comprehensions."""
    t = type(e)
    if t is BoolLit:
        return True
    if t is Unary:
        return e.op == "not"
    if t is Binary:
        return e.op in _BOOL_BINOPS
    if t is Call:
        return e.fn == "bool"
    if t is Name:
        return e.id in bool_names
    return False


def _label(expr) -> str:
    sp = getattr(expr, "span", None)
    return str(sp) if sp is not None else "expr"


def evaluate(expr, env) -> V.Value:
    """Evaluate ``expr`` in ``env`` (an :class:`Env` or a plain mapping).

    Pure: the environment is never modified.
    """
    d = env.as_dict() if isinstance(env, Env) else dict(env)
    bools = {k for k, v in d.items() if type(v) is BoolV}
    ce = Compiler(stable=d.keys(), bool_names=bools).compile(expr)
    return ce(d, {})


def compile_expr(expr, consts=None, stable=(), bool_names=()) -> CompiledExpr:
    return Compiler(consts, stable, bool_names).compile(expr)


EvalFn = Callable[[dict, Optional[dict]], V.Value]
