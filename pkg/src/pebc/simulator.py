"""Seeded Monte-Carlo execution of checked models.

Every step works in three phases: compute the status of every event, pick
the next event by accumulated weight, then execute it.  Random draws per step,
in this order:

1. ``below(W)`` for the event, ``W`` the sum of enabled weights;
2. ``below(|T(s, e)|)`` for the parameter valuation, only if ``e`` has parameters;
3. one draw per probabilistic assignment in action order: ``below(|S|)`` for
   ``x :in S``, ``below(n)`` for a uniform list of ``n`` expressions and
   ``bits53()`` for an enumerated distribution.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Optional

from pebc import values as V
from pebc.checker import CheckedModel
from pebc.rng import ALGORITHM, TWO53, Rng
from pebc.semantics import _valuations
from pebc.state import MachineState

DEADLOCK = "deadlock"
STEP_BOUND = "step-bound"
STOPPED = "stop-predicate"


@dataclass
class RunConfig:
    seed: int = 0
    max_steps: int = 100_000
    stop_predicate: Optional[object] = None  # expression text or AST
    record: bool = True

    def __post_init__(self):
        if type(self.max_steps) is not int or self.max_steps < 1:
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps!r}")
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class Trace:
    initial: MachineState
    steps: list = field(default_factory=list)  # of (index, event name, post-state)
    reason: str = DEADLOCK
    seed: int = 0
    algorithm: str = ALGORITHM
    length: int = 0

    @property
    def final(self) -> MachineState:
        return self.steps[-1][2] if self.steps else self.initial

    def states(self):
        yield self.initial
        for _, _, s in self.steps:
            yield s

    def events(self) -> list:
        return [e for _, e, _ in self.steps]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"step": 0, "event": None, "state": self.initial.to_json()}, sort_keys=True)]
        for i, e, s in self.steps:
            lines.append(json.dumps({"step": i, "event": e, "state": s.to_json()}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "steps": self.length,
            "termination": self.reason,
            "seed": self.seed,
            "rng": self.algorithm,
            "final_state": self.final.to_json(),
        }


class SimulationError(V.EvalError):
    """An evaluation error raised while executing a given step."""

    def __init__(self, cause: V.EvalError, step: int):
        super().__init__(f"step {step}: {cause.message}", cause.span)
        self.kind = cause.kind
        self.step = step
        self.cause = cause


def pick_event(statuses, r: int):
    """First enabled event whose accumulated weight is strictly greater than ``r``.

    ``statuses`` is a sequence of ``(event, status)`` where ``status`` has an
    ``enabled`` flag and, when enabled, a ``weight``.
    """
    acc = 0
    for ev, st in statuses:
        if st.enabled:
            acc += st.weight
            if acc > r:
                return ev
    raise ValueError(f"r={r} is not below the total enabled weight {acc}")


def _thresholds(cum) -> tuple:
    # R = m / 2**53 < c  <=>  m < ceil(c * 2**53) for integer m
    return tuple(-((-c.numerator * TWO53) // c.denominator) for c in cum)


class _Entry:
    """Per-state plan: enabled events, cumulative weights, evaluation context
    and memoised successors keyed by (event slot, parameter index, draws)."""

    __slots__ = ("plan", "total", "cum", "env", "memo", "succ")

    def __init__(self, plan, cum, env, memo):
        self.plan = plan
        self.cum = cum
        self.total = cum[-1] if cum else 0
        self.env = env
        self.memo = memo
        self.succ = {}


class Simulator:
    """Executes one checked model; keeps a bounded cache of per-state plans."""

    def __init__(self, cm: CheckedModel, cache_size: int = 4096):
        if cm.initial is None:
            raise ValueError("model has no machine to simulate")
        self.cm = cm
        self.names = cm.var_names
        self.cache_size = cache_size
        self._cache: dict = {}
        self._pnames = {}
        # per event, one entry per action: None (deterministic), thresholds
        # (enumerated), n (uniform list) or "set"
        self._shapes = {}
        self._memoisable = set()
        for ev in cm.events:
            self._pnames[ev.name] = tuple(n for n, _ in ev.params)
            shape = []
            for a in ev.actions:
                if a.kind == "det":
                    shape.append(None)
                elif a.kind == "enum":
                    shape.append(_thresholds(a.cumulative))
                elif a.kind == "list":
                    shape.append(len(a.exprs))
                else:
                    shape.append("set")
            self._shapes[ev.name] = tuple(shape)
            if "set" not in shape:
                self._memoisable.add(ev.name)

    def plan(self, state: MachineState) -> _Entry:
        entry = self._cache.get(state)
        if entry is None:
            env = state.env()
            memo: dict = {}
            plan = self._enabled(env, memo)
            entry = _Entry(plan, list(accumulate(w for _, w, _ in plan)), env, memo)
            if self.cache_size:
                if len(self._cache) >= self.cache_size:
                    self._cache.clear()
                self._cache[state] = entry
        return entry

    def _enabled(self, env, memo) -> list:
        # Events with parameters and a trivially true guard are enabled iff
        # every domain is non-empty; their valuations are built only if picked.
        out = []
        for ev in self.cm.events:
            w = ev.weight(env, memo)
            if type(w) is not int:
                raise V.KindMismatch(f"weight of event {ev.name} evaluates to a {V.kind_name(w)}", ev.weight.span)
            if w <= 0:
                continue
            if ev.params and ev.guard_always_true:
                if all(t(env, memo) is V.TRUE for t in ev.nonempty):
                    out.append((ev, w, None))
                continue
            vals = _valuations(ev, env, memo)
            if len(vals):
                out.append((ev, w, vals))
        return out

    def step(self, state: MachineState, rng):
        """Return ``(event name, post-state)``, or ``None`` on deadlock."""
        e = self.plan(state)
        plan = e.plan
        if not plan:
            return None
        j = bisect_right(e.cum, rng.below(e.total)) if len(plan) > 1 else _draw_one(rng, e.total)
        ev, w, vals = plan[j]
        pi = -1
        if ev.params:
            if vals is None:
                vals = _valuations(ev, e.env, e.memo)
                plan[j] = (ev, w, vals)
            pi = rng.below(len(vals))
        name = ev.name
        shape = self._shapes[name]
        if name not in self._memoisable:
            return self._execute(ev, state, e, vals, pi, shape, rng, None)
        draws = [j, pi]
        for t in shape:
            if t is None:
                continue
            if type(t) is int:
                draws.append(rng.below(t))
            else:
                m = rng.bits53()
                i = 0
                while m >= t[i]:
                    i += 1
                draws.append(i)
        key = tuple(draws)
        hit = e.succ.get(key) if self.cache_size else None
        if hit is None:
            # same record shape as _advance, which shares this memo
            hit = [*self._execute(ev, state, e, vals, pi, shape, rng, draws), None]
            if self.cache_size:
                e.succ[key] = hit
        return hit[0], hit[1]

    def _execute(self, ev, state, e, vals, pi, shape, rng, draws):
        """Evaluate the actions; ``draws`` holds pre-drawn choices or is None
        (then draws happen here, in action order)."""
        env, memo = e.env, e.memo
        if pi >= 0:
            env = dict(env)
            env.update(zip(self._pnames[ev.name], vals[pi]))
        new = list(state.values)
        d = 2
        for a, t in zip(ev.actions, shape):
            if t is None:
                v = a.exprs[0](env, memo)
            elif t == "set":
                s = a.exprs[0](env, memo)
                if type(s) is not V.SetV:
                    raise V.KindMismatch(f"':in' needs a set, got a {V.kind_name(s)}", a.exprs[0].span)
                if not s.elems:
                    raise V.EmptyChoice(f"no value to choose for {a.target}: the set is empty", a.exprs[0].span)
                v = s.elems[rng.below(len(s.elems))]
            else:
                if draws is not None:
                    i = draws[d]
                    d += 1
                elif type(t) is int:
                    i = rng.below(t)
                else:
                    m = rng.bits53()
                    i = 0
                    while m >= t[i]:
                        i += 1
                v = a.exprs[i](env, memo)
            new[a.index] = v
        return ev.name, MachineState(self.names, tuple(new))

    def _advance(self, e: _Entry, state, bits):
        """:meth:`step` specialised to a plain :class:`Rng` (``bits`` is its
        ``getrandbits``); returns the memoised ``[event, post-state, entry]``
        record whose entry slot is filled on first use."""
        plan = e.plan
        total = e.total
        kb = total.bit_length()
        r = bits(kb)
        while r >= total:
            r = bits(kb)
        j = bisect_right(e.cum, r) if len(plan) > 1 else 0
        ev, w, vals = plan[j]
        pi = -1
        if ev.params:
            if vals is None:
                vals = _valuations(ev, e.env, e.memo)
                plan[j] = (ev, w, vals)
            n = len(vals)
            kb = n.bit_length()
            pi = bits(kb)
            while pi >= n:
                pi = bits(kb)
        name = ev.name
        shape = self._shapes[name]
        if name not in self._memoisable:
            return list(self._execute(ev, state, e, vals, pi, shape, _BitsRng(bits), None)) + [None]
        draws = [j, pi]
        for t in shape:
            if t is None:
                continue
            if type(t) is int:
                kb = t.bit_length()
                i = bits(kb)
                while i >= t:
                    i = bits(kb)
            else:
                m = bits(53)
                i = 0
                while m >= t[i]:
                    i += 1
            draws.append(i)
        key = tuple(draws)
        hit = e.succ.get(key)
        if hit is None:
            hit = list(self._execute(ev, state, e, vals, pi, shape, None, draws)) + [None]
            e.succ[key] = hit
        return hit

    def _run_fast(self, config, rng, trace):
        bits = rng._bits
        state = self.cm.initial
        e = self.plan(state)
        record = config.record
        steps = trace.steps
        max_steps = config.max_steps
        advance = self._advance
        i = 0
        while True:
            if i >= max_steps:
                trace.reason = STEP_BOUND
                break
            if not e.plan:
                trace.reason = DEADLOCK
                break
            try:
                out = advance(e, state, bits)
            except V.EvalError as exc:
                raise SimulationError(exc, i + 1) from None
            i += 1
            state = out[1]
            nxt = out[2]
            if nxt is None:
                nxt = out[2] = self.plan(state)
            e = nxt
            if record:
                steps.append((i, out[0], state))
        trace.length = i
        return state

    def run(self, config: RunConfig, rng=None, observer=None) -> Trace:
        """Simulate from the initial state.

        ``observer(index, state)`` is called on every visited state including
        the initial one (index 0); returning True stops the run early with
        reason ``stop-predicate``.
        """
        rng = Rng(config.seed) if rng is None else rng
        stop = _compile_stop(self.cm, config.stop_predicate)
        state = self.cm.initial
        trace = Trace(state, seed=config.seed)
        if type(rng) is Rng and stop is None and observer is None and self.cache_size:
            state = self._run_fast(config, rng, trace)
            if not config.record:
                trace.steps = [(trace.length, None, state)] if trace.length else []
            return trace
        record = config.record
        steps = trace.steps
        max_steps = config.max_steps
        step = self.step
        i = 0
        while True:
            if observer is not None and observer(i, state):
                trace.reason = STOPPED
                break
            if stop is not None and stop(state.env(), {}) is V.TRUE:
                trace.reason = STOPPED
                break
            if i >= max_steps:
                trace.reason = STEP_BOUND
                break
            try:
                out = step(state, rng)
            except V.EvalError as exc:
                raise SimulationError(exc, i + 1) from None
            if out is None:
                trace.reason = DEADLOCK
                break
            i += 1
            state = out[1]
            if record:
                steps.append((i, out[0], state))
        trace.length = i
        if not record:
            trace.steps = [(i, None, state)] if i else []
        return trace


class _BitsRng:
    """``below`` on top of a bare ``getrandbits``, matching :class:`Rng`."""

    __slots__ = ("_bits",)

    def __init__(self, bits):
        self._bits = bits

    below = Rng.below
    bits53 = Rng.bits53


def _draw_one(rng, total) -> int:
    rng.below(total)  # the event draw is made even when the choice is forced
    return 0


def _compile_stop(cm, pred):
    if pred is None:
        return None
    if isinstance(pred, str):
        from pebc.parser import parse_expression

        pred = parse_expression(pred)
    return cm.compile_state_expr(pred, "the stop predicate")


def step(cm: CheckedModel, state: MachineState, rng):
    return Simulator(cm, cache_size=0).step(state, rng)


def run(cm: CheckedModel, config: RunConfig, rng=None) -> Trace:
    return Simulator(cm).run(config, rng)
