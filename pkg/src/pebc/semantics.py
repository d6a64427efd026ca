"""Transition probabilities of the probabilistic labelled transition system.

Everything here is exact: weights are integers, probabilities are
:class:`fractions.Fraction`.  A state's successor distribution is

    T(s, e, s') = w_e / W * sum over guard-satisfying parameter valuations v of
                  1/|T(s, e)| * prod over assigned variables x of P(x -> s'(x))

with equal outcomes of one variable aggregated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from pebc import values as V
from pebc.checker import CheckedAction, CheckedEvent, CheckedModel
from pebc.state import MachineState

ONE = Fraction(1)


class Blocked:
    __slots__ = ()

    enabled = False

    def __repr__(self):
        return "Blocked"


BLOCKED = Blocked()


@dataclass(frozen=True)
class Enabled:
    weight: int

    enabled = True


# --- parameter valuations -------------------------------------------------------


class _Singles:
    """Valuations of a single parameter with a trivially true guard."""

    __slots__ = ("elems",)

    def __init__(self, elems):
        self.elems = elems

    def __len__(self):
        return len(self.elems)

    def __getitem__(self, i):
        return (self.elems[i],)

    def __iter__(self):
        return ((x,) for x in self.elems)


class _Product:
    """Cartesian product indexed lexicographically (first parameter major)."""

    __slots__ = ("domains", "_n")

    def __init__(self, domains):
        self.domains = domains
        n = 1
        for d in domains:
            n *= len(d)
        self._n = n

    def __len__(self):
        return self._n

    def __getitem__(self, i):
        if not 0 <= i < self._n:
            raise IndexError(i)
        out = []
        for d in reversed(self.domains):
            i, k = divmod(i, len(d))
            out.append(d[k])
        return tuple(reversed(out))

    def __iter__(self):
        return product(*self.domains)


_NO_PARAMS = ((),)


def _domains(ev: CheckedEvent, env: dict, memo: dict):
    out = []
    for name, dom in ev.params:
        s = dom(env, memo)
        if type(s) is not V.SetV:
            raise V.KindMismatch(f"domain of parameter {name} in event {ev.name} is a {V.kind_name(s)}, not a set",
                                 dom.span)
        out.append(s.elems)
    return out


def _valuations(ev: CheckedEvent, env: dict, memo: dict):
    """Guard-satisfying parameter valuations in canonical order."""
    if not ev.params:
        if ev.guard_always_true or ev.guard(env, memo) is V.TRUE:
            return _NO_PARAMS
        return ()
    doms = _domains(ev, env, memo)
    if ev.guard_always_true:
        return _Singles(doms[0]) if len(doms) == 1 else _Product(doms)
    names = [n for n, _ in ev.params]
    local = dict(env)
    guard = ev.guard
    out = []
    for combo in product(*doms):
        for n, x in zip(names, combo):
            local[n] = x
        g = guard(local, memo)
        if g is V.TRUE:
            out.append(combo)
        elif g is not V.FALSE:
            raise V.KindMismatch(f"guard of event {ev.name} is not a predicate", guard.span)
    return out


def _weight(ev: CheckedEvent, env: dict, memo: dict) -> int:
    w = ev.weight(env, memo)
    if type(w) is not int:
        raise V.KindMismatch(f"weight of event {ev.name} evaluates to a {V.kind_name(w)}", ev.weight.span)
    return w


def guard_valuations(cm: CheckedModel, state: MachineState, ev, memo=None) -> list:
    """Parameter valuations (tuples in declaration order) under which the guard holds."""
    ev = _event(cm, ev)
    return list(_valuations(ev, state.env(), {} if memo is None else memo))


def event_status(cm: CheckedModel, state: MachineState, ev, memo=None):
    ev = _event(cm, ev)
    env = state.env()
    memo = {} if memo is None else memo
    w = _weight(ev, env, memo)
    if w <= 0:
        return BLOCKED
    if len(_valuations(ev, env, memo)) == 0:
        return BLOCKED
    return Enabled(w)


def enabled_events(cm: CheckedModel, env: dict, memo: dict) -> list:
    """``[(event, weight, valuations)]`` for enabled events in declaration order."""
    out = []
    for ev in cm.events:
        w = _weight(ev, env, memo)
        if w <= 0:
            continue
        vals = _valuations(ev, env, memo)
        if len(vals):
            out.append((ev, w, vals))
    return out


def _event(cm, ev) -> CheckedEvent:
    return cm.event(ev) if isinstance(ev, str) else ev


# --- assignment outcomes ----------------------------------------------------------


def action_outcomes(action: CheckedAction, env: dict, memo: dict) -> list:
    """``[(value, mass)]`` for one assignment, equal values aggregated."""
    k = action.kind
    if k == "det":
        return [(action.exprs[0](env, memo), ONE)]
    acc: dict = {}
    if k == "set":
        s = action.exprs[0](env, memo)
        if type(s) is not V.SetV:
            raise V.KindMismatch(f"':in' needs a set, got a {V.kind_name(s)}", action.exprs[0].span)
        if not s.elems:
            raise V.EmptyChoice(f"no value to choose for {action.target}: the set is empty", action.exprs[0].span)
        p = Fraction(1, len(s.elems))
        return [(x, p) for x in s.elems]
    if k == "list":
        p = Fraction(1, len(action.exprs))
        for e in action.exprs:
            v = e(env, memo)
            acc[v] = acc.get(v, 0) + p
    else:
        for e, p in zip(action.exprs, action.probs):
            v = e(env, memo)
            acc[v] = acc.get(v, 0) + p
    return list(acc.items())


def assignment_outcomes(cm: CheckedModel, state: MachineState, paramval, ev, memo=None) -> dict:
    """Distribution over post-states for event ``ev`` with parameter values ``paramval``.

    ``paramval`` is a tuple in parameter declaration order or a name mapping.
    """
    ev = _event(cm, ev)
    env = state.env()
    if isinstance(paramval, dict):
        env.update(paramval)
    else:
        env.update(zip((n for n, _ in ev.params), paramval))
    return _post_states(ev, state, env, {} if memo is None else memo)


def _post_states(ev: CheckedEvent, state: MachineState, env: dict, memo: dict) -> dict:
    names = state.names
    per = [(a.index, action_outcomes(a, env, memo)) for a in ev.actions]
    out: dict = {}
    for combo in product(*(o for _, o in per)):
        vals = list(state.values)
        p = ONE
        for (i, _), (v, q) in zip(per, combo):
            vals[i] = v
            p *= q
        s = MachineState(names, tuple(vals))
        out[s] = out.get(s, 0) + p
    return out


# --- full transition function ---------------------------------------------------------


class TransitionDistribution(dict):
    """Mapping ``(event name, post-state) -> Fraction``; empty means deadlock."""

    @property
    def deadlock(self) -> bool:
        return not self

    def total(self) -> Fraction:
        return sum(self.values(), Fraction(0))

    def by_target(self) -> dict:
        out: dict = {}
        for (_, s), p in self.items():
            out[s] = out.get(s, 0) + p
        return out


def successor_distribution(cm: CheckedModel, state: MachineState) -> TransitionDistribution:
    env = state.env()
    memo: dict = {}
    plan = enabled_events(cm, env, memo)
    out = TransitionDistribution()
    if not plan:
        return out
    total = sum(w for _, w, _ in plan)
    for ev, w, vals in plan:
        pe = Fraction(w, total)
        pv = pe / len(vals)
        if not ev.params:
            for s, q in _post_states(ev, state, env, memo).items():
                key = (ev.name, s)
                out[key] = out.get(key, 0) + pv * q
            continue
        names = [n for n, _ in ev.params]
        for combo in vals:
            local = dict(env)
            local.update(zip(names, combo))
            for s, q in _post_states(ev, state, local, memo).items():
                key = (ev.name, s)
                out[key] = out.get(key, 0) + pv * q
    return out


def status_list(cm: CheckedModel, state: MachineState) -> list:
    """``[(event name, Enabled|Blocked)]`` for every event in declaration order."""
    env = state.env()
    memo: dict = {}
    out = []
    for ev in cm.events:
        w = _weight(ev, env, memo)
        if w > 0 and len(_valuations(ev, env, memo)):
            out.append((ev.name, Enabled(w)))
        else:
            out.append((ev.name, BLOCKED))
    return out
