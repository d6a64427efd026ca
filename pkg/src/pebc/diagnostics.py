from __future__ import annotations

from dataclasses import dataclass

from pebc.syntax import NOSPAN, SourceSpan


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: SourceSpan = NOSPAN

    def __str__(self):
        return f"{self.span}: {self.severity}: {self.message}"

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "message": self.message,
            "span": {
                "file": self.span.file,
                "line": self.span.line,
                "column": self.span.column,
                "length": self.span.length,
            },
        }


class ModelError(Exception):
    """Parse or well-formedness failure carrying one or more diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(map(str, self.diagnostics)))

    @property
    def errors(self):
        return [d for d in self.diagnostics if d.severity == "error"]


class ParseError(ModelError):
    pass


class ResourceBound(Exception):
    """A configured resource limit (states, steps) was exceeded."""

    kind = "ResourceBound"


class StateBound(ResourceBound):
    kind = "StateBound"


class NoAbsorption(Exception):
    kind = "NoAbsorption"
