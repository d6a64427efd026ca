from __future__ import annotations

from pebc.values import show_value, value_to_json


class MachineState:
    """Immutable valuation of the machine variables (in declaration order)."""

    __slots__ = ("names", "values", "_hash")

    def __init__(self, names: tuple, values: tuple):
        self.names = names
        self.values = values
        self._hash = None

    def __getitem__(self, name):
        try:
            return self.values[self.names.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def get(self, name, default=None):
        try:
            return self[name]
        except KeyError:
            return default

    def items(self):
        return zip(self.names, self.values)

    def env(self) -> dict:
        return dict(zip(self.names, self.values))

    def replace(self, **updates) -> "MachineState":
        vals = list(self.values)
        for k, v in updates.items():
            vals[self.names.index(k)] = v
        return MachineState(self.names, tuple(vals))

    def __eq__(self, other):
        if type(other) is not MachineState:
            return NotImplemented
        return self.values == other.values and self.names == other.names

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        h = self._hash
        if h is None:
            h = self._hash = hash(self.values)
        return h

    def __repr__(self):
        inner = ", ".join(f"{k}={show_value(v)}" for k, v in self.items())
        return f"MachineState({inner})"

    def __reduce__(self):
        return (MachineState, (self.names, self.values))

    def to_json(self) -> dict:
        return {k: value_to_json(v) for k, v in self.items()}

    def show(self) -> str:
        return " ".join(f"{k}={show_value(v)}" for k, v in self.items())
