"""Explicit-state DTMC construction and exact analysis.

States are discovered breadth first from the initial state; index 0 is the
initial state.  Expectations and probabilities "at the end" of a run are
absorption quantities, solved exactly over the rationals one strongly
connected component at a time (sinks first).

Counter variables
-----------------
An integer variable that is only ever updated as ``v := v + e`` or
``v := v - e`` (``e`` not mentioning any counter) and read nowhere else cannot
influence the behaviour of the model.  Such a variable is dropped from the
state (kept at 0) and its increments are recorded on transitions as rewards.
Queries that are linear in counters are then answered from expected rewards.
This keeps models like the P2P protocol, whose transmission counter is
unbounded, finite.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import networkx as nx

from pebc import values as V
from pebc.checker import INT, CheckedModel, kind_of
from pebc.diagnostics import NoAbsorption, StateBound
from pebc.queries import ExpectedAtEnd, ProbAtEnd, ProbReachWithin, QueryEvaluator
from pebc.semantics import successor_distribution
from pebc.syntax import Binary, Name, Num, Unary, free_names

DEFAULT_MAX_STATES = 1_000_000


@dataclass
class Dtmc:
    states: list
    transitions: list  # per state: list of (event, target index, Fraction, counter deltas)
    deadlock: list
    counters: tuple = ()
    counter_init: dict = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return sum(len(t) for t in self.transitions)

    def out_mass(self, i: int) -> Fraction:
        return sum((p for _, _, p, _ in self.transitions[i]), Fraction(0))

    def marginal(self, i: int) -> dict:
        out: dict = {}
        for _, j, p, _ in self.transitions[i]:
            out[j] = out.get(j, 0) + p
        return out

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(len(self.states)))
        for i, ts in enumerate(self.transitions):
            g.add_edges_from((i, j) for _, j, _, _ in ts)
        return g


# --- counter detection ------------------------------------------------------------------


def _increment(expr, v):
    """The ``e`` of ``v + e``, ``e + v`` or ``v - e``, else None."""
    if type(expr) is Binary:
        if expr.op == "+":
            if expr.left == Name(v):
                return expr.right
            if expr.right == Name(v):
                return expr.left
        if expr.op == "-" and expr.left == Name(v):
            return expr.right
    return None


def find_counters(cm: CheckedModel) -> tuple:
    """Integer variables that are pure accumulators (see module docstring)."""
    cand = {v for v in cm.var_names if kind_of(cm.var_types.get(v)) == INT}
    used: set = set()
    for ev in cm.events:
        used |= free_names(ev.weight.expr) | free_names(ev.guard.expr)
        for _, d in ev.params:
            used |= free_names(d.expr)
        for a in ev.actions:
            if a.kind == "det" and a.target in cand:
                e = _increment(a.exprs[0].expr, a.target)
                if e is not None:
                    used |= free_names(e)
                    continue
                cand.discard(a.target)
            for x in a.exprs:
                used |= free_names(x.expr)
            if a.kind != "det":
                cand.discard(a.target)
    for m in cm.monitors:
        used |= free_names(m.expr)
    return tuple(v for v in cm.var_names if v in cand and v not in used)


def linear_coefficients(expr, counters) -> Optional[dict]:
    """``{counter: coefficient}`` if ``expr`` is a counter-free term plus a
    linear combination of counters; None otherwise."""
    cs = set(counters)
    out: dict = {}

    def go(e, sign):
        t = type(e)
        if t is Name and e.id in cs:
            out[e.id] = out.get(e.id, 0) + sign
            return True
        if t is Binary and e.op in ("+", "-"):
            return go(e.left, sign) and go(e.right, sign if e.op == "+" else -sign)
        if t is Unary and e.op == "neg":
            return go(e.arg, -sign)
        if t is Binary and e.op == "*":
            if type(e.left) is Num and type(e.right) is Name and e.right.id in cs:
                out[e.right.id] = out.get(e.right.id, 0) + sign * e.left.value
                return True
            if type(e.right) is Num and type(e.left) is Name and e.left.id in cs:
                out[e.left.id] = out.get(e.left.id, 0) + sign * e.right.value
                return True
        return not (free_names(e) & cs)

    return out if go(expr, 1) else None


def counters_for(cm: CheckedModel, q=None) -> tuple:
    """Counters that can be abstracted while still answering ``q``."""
    cs = find_counters(cm)
    if q is None or not cs:
        return cs
    if isinstance(q, ExpectedAtEnd):
        coefs = linear_coefficients(q.expr, cs)
        if coefs is not None:
            return cs
    bad = free_names(q.expr)
    return tuple(c for c in cs if c not in bad)


# --- construction ---------------------------------------------------------------------


def build_dtmc(cm: CheckedModel, max_states: int = DEFAULT_MAX_STATES, counters=None) -> Dtmc:
    """Breadth-first enumeration of the reachable chain.

    ``counters`` lists variables to abstract; None means detect automatically.
    """
    if cm.initial is None:
        raise ValueError("model has no machine")
    cs = find_counters(cm) if counters is None else tuple(counters)
    cidx = [cm.var_names.index(c) for c in cs]
    init = cm.initial
    cinit = {c: init.values[i] for c, i in zip(cs, cidx)}
    if cs:
        vals = list(init.values)
        for i in cidx:
            vals[i] = 0
        init = type(init)(init.names, tuple(vals))
    states = [init]
    index = {init: 0}
    transitions: list = []
    deadlock: list = []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        s = states[i]
        try:
            dist = successor_distribution(cm, s)
        except V.EvalError as exc:
            exc.message = f"{exc.message} (in state {i}: {s.show()})"
            exc.args = (exc.message,)
            raise
        out = []
        for (ev, t), p in dist.items():
            delta = ()
            if cs:
                delta = tuple(t.values[k] for k in cidx)
                if any(delta):
                    vals = list(t.values)
                    for k in cidx:
                        vals[k] = 0
                    t = type(t)(t.names, tuple(vals))
            j = index.get(t)
            if j is None:
                j = len(states)
                if j >= max_states:
                    raise StateBound(
                        f"more than {max_states} reachable states; use statistical estimation (smc) instead"
                    )
                index[t] = j
                states.append(t)
                queue.append(j)
            out.append((ev, j, p, delta))
        transitions.append(out)
        deadlock.append(not out)
    # queue order equals index order, so transitions[i] belongs to states[i]
    return Dtmc(states, transitions, deadlock, cs, cinit)


# --- linear algebra ----------------------------------------------------------------------


def _solve(rows: list, rhs: list) -> list:
    """Solve a square sparse system exactly.  ``rows[i]`` maps column -> coeff."""
    n = len(rows)
    rows = [dict(r) for r in rows]
    rhs = list(rhs)
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r].get(col, 0) != 0), None)
        if piv is None:
            raise NoAbsorption("singular absorption system")
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
        prow = rows[col]
        inv = 1 / prow[col]
        for r in range(col + 1, n):
            f = rows[r].get(col)
            if not f:
                continue
            f = f * inv
            row = rows[r]
            for c, v in prow.items():
                nv = row.get(c, 0) - f * v
                if nv:
                    row[c] = nv
                else:
                    row.pop(c, None)
            rhs[r] -= f * rhs[col]
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = rhs[r]
        for c, v in rows[r].items():
            if c > r:
                acc -= v * x[c]
        x[r] = acc / rows[r][r]
    return x


def absorption_values(dtmc: Dtmc, terminal, reward=None) -> list:
    """``x[s] = sum_t P(s,t) (reward(s,t) + x[t])`` with ``x = terminal(s)`` on
    deadlocks.  ``reward(deltas)`` maps a transition's counter increments to a
    rational.  Raises :class:`NoAbsorption` if some state cannot reach a deadlock."""
    g = dtmc.graph()
    cond = nx.condensation(g)
    members = cond.graph["mapping"]
    comps: dict = {}
    for s, c in members.items():
        comps.setdefault(c, []).append(s)
    x: list = [None] * dtmc.n_states
    for c in reversed(list(nx.topological_sort(cond))):
        comp = sorted(comps[c])
        if len(comp) == 1 and dtmc.deadlock[comp[0]]:
            x[comp[0]] = Fraction(terminal(comp[0]))
            continue
        if cond.out_degree(c) == 0:
            s = comp[0]
            raise NoAbsorption(
                f"state {s} ({dtmc.states[s].show()}) lies in a closed class without deadlocks; "
                "runs may never end, give a horizon"
            )
        local = {s: k for k, s in enumerate(comp)}
        rows, rhs = [], []
        for s in comp:
            row = {local[s]: Fraction(1)}
            b = Fraction(0)
            for _, t, p, d in dtmc.transitions[s]:
                if reward is not None:
                    b += p * reward(d)
                k = local.get(t)
                if k is None:
                    b += p * x[t]
                else:
                    row[k] = row.get(k, 0) - p
                    if not row[k]:
                        del row[k]
            rows.append(row)
            rhs.append(b)
        for s, v in zip(comp, _solve(rows, rhs)):
            x[s] = v
    return x


def propagate(dtmc: Dtmc, steps: int, absorbing=None, reward=None):
    """Distribution after ``steps`` steps (deadlocks and ``absorbing`` states
    keep their mass) and the expected accumulated reward."""
    dist = {0: Fraction(1)}
    acc = Fraction(0)
    stay = set(absorbing or ())
    for _ in range(steps):
        nxt: dict = {}
        for s, m in dist.items():
            if dtmc.deadlock[s] or s in stay:
                nxt[s] = nxt.get(s, 0) + m
                continue
            for _, t, p, d in dtmc.transitions[s]:
                q = m * p
                nxt[t] = nxt.get(t, 0) + q
                if reward is not None:
                    acc += q * reward(d)
        dist = nxt
    return dist, acc


# --- queries ----------------------------------------------------------------------------


def exact_query(cm: CheckedModel, dtmc: Dtmc, q, horizon: Optional[int] = None) -> Fraction:
    """Exact value of ``q`` on ``dtmc`` (built from ``cm``)."""
    qe = QueryEvaluator(cm, q)
    if isinstance(q, ProbReachWithin):
        hits = {i for i, s in enumerate(dtmc.states) if qe.holds(s)}
        k = q.k if horizon is None else min(q.k, horizon)
        dist, _ = propagate(dtmc, k, absorbing=hits)
        return sum((m for s, m in dist.items() if s in hits), Fraction(0))

    coefs: dict = {}
    if dtmc.counters:
        if isinstance(q, ExpectedAtEnd):
            coefs = linear_coefficients(q.expr, dtmc.counters)
            if coefs is None:
                raise ValueError("query is not linear in the abstracted counters")
        elif free_names(q.expr) & set(dtmc.counters):
            raise ValueError("query mentions abstracted counters")
    pos = {c: i for i, c in enumerate(dtmc.counters)}
    items = [(pos[c], a) for c, a in coefs.items() if a]
    reward = (lambda d: sum(a * d[i] for i, a in items)) if items else None
    offset = sum(Fraction(a * dtmc.counter_init[c]) for c, a in coefs.items())

    if isinstance(q, ProbAtEnd):
        term = lambda s: 1 if qe.holds(dtmc.states[s]) else 0  # noqa: E731
    else:
        term = lambda s: qe.number(dtmc.states[s])  # noqa: E731
    if horizon is None:
        return absorption_values(dtmc, term, reward)[0] + offset
    dist, acc = propagate(dtmc, horizon, reward=reward)
    return sum((m * term(s) for s, m in dist.items()), Fraction(0)) + acc + offset


def analyse(cm: CheckedModel, q, horizon=None, max_states=DEFAULT_MAX_STATES):
    """Build the chain suited to ``q`` and return ``(value, dtmc)``."""
    dtmc = build_dtmc(cm, max_states, counters_for(cm, q))
    return exact_query(cm, dtmc, q, horizon), dtmc


def show_decimal(x: Fraction, places: int = 6) -> str:
    neg = x < 0
    n = round(abs(x) * 10**places)
    s = f"{n // 10**places}.{n % 10**places:0{places}d}"
    return "-" + s if neg and n else s


# --- export ------------------------------------------------------------------------------


def _prob_text(p: Fraction) -> str:
    return repr(float(p)) if p.denominator != 1 else str(p.numerator)


def export_tra(dtmc: Dtmc) -> str:
    lines = [f"{dtmc.n_states} {dtmc.n_transitions}"]
    for i, ts in enumerate(dtmc.transitions):
        for ev, j, p, _ in ts:
            lines.append(f"{i} {j} {_prob_text(p)} {ev}")
    return "\n".join(lines) + "\n"


def export_sta(dtmc: Dtmc) -> str:
    names = dtmc.states[0].names if dtmc.states else ()
    lines = ["(" + ",".join(names) + ")"]
    for i, s in enumerate(dtmc.states):
        lines.append(f"{i} " + " ".join(f"{k}={V.show_value(v).replace(' ', '')}" for k, v in s.items()))
    return "\n".join(lines) + "\n"


def export_dot(dtmc: Dtmc) -> str:
    out = ["digraph dtmc {", "  node [shape=box];"]
    for i, s in enumerate(dtmc.states):
        label = s.show().replace('"', '\\"')
        extra = ", style=bold" if dtmc.deadlock[i] else ""
        out.append(f'  {i} [label="{i}: {label}"{extra}];')
    for i, ts in enumerate(dtmc.transitions):
        for ev, j, p, _ in ts:
            out.append(f'  {i} -> {j} [label="{ev} {p}"];')
    out.append("}")
    return "\n".join(out) + "\n"
