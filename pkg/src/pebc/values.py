"""Canonical runtime values.

Representation (chosen so that homogeneous collections sort natively):

* Int  -> ``int``
* Bool -> the singletons :data:`TRUE` / :data:`FALSE` (not Python ``bool``,
  so that ``1`` and ``TRUE`` never compare or hash equal)
* Sym  -> ``str``
* Pair -> 2-tuple of scalars
* Set  -> :class:`SetV`, an immutable, sorted, duplicate-free tuple

Cross-kind order: Sym < Bool < Int < Pair < Set.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from itertools import compress
from operator import itemgetter
from typing import Iterable, Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class EvalError(Exception):
    """Runtime evaluation failure (division by zero, overflow, kind mismatch...)."""

    kind = "EvalError"

    def __init__(self, message: str, span=None):
        super().__init__(message)
        self.message = message
        self.span = span


class KindMismatch(EvalError):
    kind = "KindMismatch"


class DivisionByZero(EvalError):
    kind = "DivisionByZero"


class IntegerOverflow(EvalError):
    kind = "IntegerOverflow"


class EmptyChoice(EvalError):
    kind = "EmptyChoice"


class BoolV:
    __slots__ = ("_b",)

    def __init__(self, b: bool):
        self._b = b

    def __bool__(self):
        return self._b

    def __lt__(self, other):
        if type(other) is not BoolV:
            return NotImplemented
        return (not self._b) and other._b

    def __gt__(self, other):
        if type(other) is not BoolV:
            return NotImplemented
        return self._b and not other._b

    def __le__(self, other):
        if type(other) is not BoolV:
            return NotImplemented
        return self is other or self < other

    def __ge__(self, other):
        if type(other) is not BoolV:
            return NotImplemented
        return self is other or self > other

    def __hash__(self):
        return 0x5EED + self._b

    def __repr__(self):
        return "TRUE" if self._b else "FALSE"

    def __reduce__(self):
        return (_bool_singleton, (self._b,))

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self


TRUE = BoolV(True)
FALSE = BoolV(False)


def _bool_singleton(b: bool) -> BoolV:
    return TRUE if b else FALSE


def as_bool(b: bool) -> BoolV:
    return TRUE if b else FALSE


class SetV:
    """Finite set stored as a canonically sorted tuple."""

    __slots__ = ("elems", "_members", "_hash", "_rindex")

    def __init__(self, elems: tuple = ()):
        # Callers must pass an already canonical tuple; use canonical_set otherwise.
        self.elems = elems
        self._members = None
        self._hash = None
        self._rindex = None  # relations only: second component -> sorted pairs

    @property
    def members(self) -> frozenset:
        m = self._members
        if m is None:
            m = self._members = frozenset(self.elems)
        return m

    def __contains__(self, v) -> bool:
        if len(self.elems) <= 8:
            return v in self.elems
        return v in self.members

    def __len__(self):
        return len(self.elems)

    def __iter__(self):
        return iter(self.elems)

    def __bool__(self):
        # Sets are values, never truth values.
        raise KindMismatch("a set has no truth value")

    def __eq__(self, other):
        if type(other) is not SetV:
            return NotImplemented
        return self is other or self.elems == other.elems

    def __ne__(self, other):
        if type(other) is not SetV:
            return NotImplemented
        return not (self is other or self.elems == other.elems)

    def __lt__(self, other):
        if type(other) is not SetV:
            return NotImplemented
        return self.elems < other.elems

    def __le__(self, other):
        if type(other) is not SetV:
            return NotImplemented
        return self.elems <= other.elems

    def __gt__(self, other):
        if type(other) is not SetV:
            return NotImplemented
        return self.elems > other.elems

    def __ge__(self, other):
        if type(other) is not SetV:
            return NotImplemented
        return self.elems >= other.elems

    def __hash__(self):
        h = self._hash
        if h is None:
            h = self._hash = hash(("SetV", self.elems))
        return h

    def __repr__(self):
        return "SetV[" + ", ".join(map(show_value, self.elems)) + "]"

    def __reduce__(self):
        return (SetV, (self.elems,))

    @property
    def is_relation(self) -> bool:
        return bool(self.elems) and type(self.elems[0]) is tuple


Value = Union[int, BoolV, str, tuple, SetV]

EMPTY = SetV(())

_RANK = {str: 0, BoolV: 1, int: 2, tuple: 3, SetV: 4}
_CATEGORY = {str: "scalar", BoolV: "scalar", int: "scalar", tuple: "pair", SetV: "set"}
_FIRST = itemgetter(0)
_SECOND = itemgetter(1)


def kind_name(v) -> str:
    t = type(v)
    if t is int:
        return "integer"
    if t is BoolV:
        return "boolean"
    if t is str:
        return "symbol"
    if t is tuple:
        return "pair"
    if t is SetV:
        return "set"
    return t.__name__


def value_key(v):
    """Sort key realising the canonical total order."""
    t = type(v)
    if t is str:
        return (0, v.encode("utf-8"))
    if t is BoolV:
        return (1, v._b)
    if t is int:
        return (2, v)
    if t is tuple:
        return (3, value_key(v[0]), value_key(v[1]))
    if t is SetV:
        return (4, tuple(map(value_key, v.elems)))
    raise KindMismatch(f"not a value: {v!r}")


def compare_values(a, b) -> int:
    """Return -1, 0 or 1."""
    ka, kb = value_key(a), value_key(b)
    return (ka > kb) - (ka < kb)


def canonical_set(elems: Iterable) -> SetV:
    items = elems if isinstance(elems, (list, tuple)) else list(elems)
    if not items:
        return EMPTY
    try:
        # Homogeneous kinds sort natively in canonical order; mixtures raise.
        return SetV(tuple(sorted(set(items))))
    except TypeError:
        pass
    cats = {_CATEGORY.get(type(v)) for v in items}
    if None in cats:
        bad = next(v for v in items if type(v) not in _CATEGORY)
        raise KindMismatch(f"not a value: {bad!r}")
    if len(cats) > 1:
        raise KindMismatch("set mixes " + " and ".join(sorted(cats)) + " elements")
    if "pair" in cats:
        for p in items:
            if len(p) != 2:
                raise KindMismatch(f"malformed pair {p!r}")
    keyed = {}
    for v in items:
        keyed.setdefault(value_key(v), v)
    return SetV(tuple(keyed[k] for k in sorted(keyed)))


def make_pair(a, b) -> tuple:
    if type(a) not in (int, str, BoolV) or type(b) not in (int, str, BoolV):
        raise KindMismatch(
            f"pair components must be scalars, got {kind_name(a)} |-> {kind_name(b)}"
        )
    return (a, b)


def is_value(v) -> bool:
    t = type(v)
    if t in (int, str, BoolV):
        return True
    if t is tuple:
        return len(v) == 2 and all(type(x) in (int, str, BoolV) for x in v)
    if t is SetV:
        return all(map(is_value, v.elems))
    return False


def check_int(n: int) -> int:
    if n < INT_MIN or n > INT_MAX:
        raise IntegerOverflow(f"integer overflow: {n} outside signed 64-bit range")
    return n


def show_value(v) -> str:
    """Render a value in model syntax."""
    t = type(v)
    if t is int:
        return str(v)
    if t is str:
        return v
    if t is BoolV:
        return repr(v)
    if t is tuple:
        return f"{show_value(v[0])} |-> {show_value(v[1])}"
    if t is SetV:
        return "{" + ", ".join(map(show_value, v.elems)) + "}"
    raise KindMismatch(f"not a value: {v!r}")


def value_to_json(v):
    t = type(v)
    if t is int or t is str:
        return v
    if t is BoolV:
        return bool(v)
    if t is tuple:
        return [value_to_json(v[0]), value_to_json(v[1])]
    if t is SetV:
        return {"set": [value_to_json(x) for x in v.elems]}
    raise KindMismatch(f"not a value: {v!r}")


def value_from_json(j):
    if isinstance(j, bool):
        return as_bool(j)
    if isinstance(j, (int, str)):
        return j
    if isinstance(j, list) and len(j) == 2:
        return (value_from_json(j[0]), value_from_json(j[1]))
    if isinstance(j, dict) and set(j) == {"set"}:
        return canonical_set([value_from_json(x) for x in j["set"]])
    raise ValueError(f"not an encoded value: {j!r}")


# --- set/relation primitives used by the evaluator ---------------------------


def need_set(v, what="operand") -> SetV:
    if type(v) is not SetV:
        raise KindMismatch(f"{what} must be a set, got {kind_name(v)}")
    return v


def need_rel(v, what="operand") -> SetV:
    if type(v) is not SetV:
        raise KindMismatch(f"{what} must be a relation, got {kind_name(v)}")
    if v.elems and type(v.elems[0]) is not tuple:
        raise KindMismatch(f"{what} must be a relation, got a set of {kind_name(v.elems[0])}s")
    return v


def interval(lo, hi) -> SetV:
    if type(lo) is not int or type(hi) is not int:
        raise KindMismatch("interval bounds must be integers")
    if hi - lo > 10_000_000:
        raise EvalError(f"interval {lo}..{hi} too large")
    return SetV(tuple(range(lo, hi + 1))) if lo <= hi else EMPTY


def card(s) -> int:
    return len(need_set(s, "card argument").elems)


def dom(r) -> SetV:
    need_rel(r, "dom argument")
    # Pairs are sorted, so first components come out nondecreasing.
    return SetV(tuple(dict.fromkeys(map(_FIRST, r.elems))))


def ran(r) -> SetV:
    need_rel(r, "ran argument")
    return canonical_set(list(map(_SECOND, r.elems)))


def _range_index(r: SetV) -> dict:
    idx = r._rindex
    if idx is None:
        groups: dict = {}
        for p in r.elems:
            g = groups.get(p[1])
            if g is None:
                groups[p[1]] = [p]
            else:
                g.append(p)
        idx = r._rindex = {k: tuple(v) for k, v in groups.items()}
    return idx


def range_restrict(r, s) -> SetV:
    need_rel(r, "left of |>")
    need_set(s, "right of |>")
    if len(s.elems) <= 4 and len(r.elems) > 16:
        idx = _range_index(r)
        parts = [idx[k] for k in s.elems if k in idx]
        if not parts:
            return EMPTY
        if len(parts) == 1:
            return SetV(parts[0])
        return SetV(tuple(sorted(p for g in parts for p in g)))
    m = s.members
    return SetV(tuple(compress(r.elems, map(m.__contains__, map(_SECOND, r.elems)))))


def _moved_index(idx: dict, removed, added) -> dict:
    """Range index after replacing the pairs ``removed`` by ``added``."""
    out = dict(idx)
    for p in removed:
        g = out[p[1]]
        i = g.index(p)
        g = g[:i] + g[i + 1:]
        if g:
            out[p[1]] = g
        else:
            del out[p[1]]
    for p in added:
        g = out.get(p[1], ())
        i = bisect_left(g, p)
        out[p[1]] = g[:i] + (p,) + g[i:]
    return out


def range_subtract(r, s) -> SetV:
    need_rel(r, "left of |>>")
    m = need_set(s, "right of |>>").members
    return SetV(tuple(p for p in r.elems if p[1] not in m))


def domain_restrict(s, r) -> SetV:
    m = need_set(s, "left of <|").members
    need_rel(r, "right of <|")
    return SetV(tuple(compress(r.elems, map(m.__contains__, map(_FIRST, r.elems)))))


def domain_subtract(s, r) -> SetV:
    m = need_set(s, "left of <<|").members
    need_rel(r, "right of <<|")
    return SetV(tuple(p for p in r.elems if p[0] not in m))


def override(r, s) -> SetV:
    need_rel(r, "left of <+")
    need_rel(s, "right of <+")
    if not s.elems:
        return r
    if not r.elems:
        return s
    keys = list(dict.fromkeys(map(_FIRST, s.elems)))
    if len(keys) <= 4:
        try:
            elems = r.elems
            removed, added = [], []
            for k in keys:
                lo = bisect_left(elems, k, key=_FIRST)
                hi = bisect_right(elems, k, key=_FIRST)
                new = tuple(p for p in s.elems if p[0] == k)
                removed.extend(elems[lo:hi])
                added.extend(new)
                elems = elems[:lo] + new + elems[hi:]
            out = SetV(elems)
            if r._rindex is not None:
                out._rindex = _moved_index(r._rindex, removed, added)
            return out
        except TypeError:
            pass
    ks = set(keys)
    return canonical_set([p for p in r.elems if p[0] not in ks] + list(s.elems))


def union(a, b) -> SetV:
    need_set(a, "left of union")
    need_set(b, "right of union")
    if not a.elems:
        return b
    if not b.elems:
        return a
    return canonical_set(a.elems + b.elems)


def intersection(a, b) -> SetV:
    need_set(a, "left of inter")
    m = need_set(b, "right of inter").members
    return SetV(tuple(compress(a.elems, map(m.__contains__, a.elems))))


def difference(a, b) -> SetV:
    need_set(a, "left of set difference")
    m = need_set(b, "right of set difference").members
    return SetV(tuple(x for x in a.elems if x not in m))


def product(a, b) -> SetV:
    need_set(a, "left of *")
    need_set(b, "right of *")
    for s in (a, b):
        if s.elems and type(s.elems[0]) not in (int, str, BoolV):
            raise KindMismatch("Cartesian product needs sets of scalars")
    # Lexicographic pair order follows directly from sorted operands.
    return SetV(tuple((x, y) for x in a.elems for y in b.elems))


def powerset(a) -> SetV:
    need_set(a, "POW argument")
    n = len(a.elems)
    if n > 16:
        raise EvalError(f"POW of a {n}-element set is too large to enumerate")
    out = []
    for mask in range(1 << n):
        out.append(SetV(tuple(x for i, x in enumerate(a.elems) if mask >> i & 1)))
    return canonical_set(out)


def subset(a, b) -> bool:
    need_set(a, "left of <:")
    m = need_set(b, "right of <:").members
    return all(map(m.__contains__, a.elems))
