"""Exception types and diagnostics shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """A region of source text; lines and columns are 1-based, end is exclusive."""

    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"

    @staticmethod
    def merge(a: "Span | None", b: "Span | None") -> "Span | None":
        if a is None:
            return b
        if b is None:
            return a
        return Span(a.line, a.col, b.end_line, b.end_col)


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: Span | None = None
    code: str = "error"

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span is not None else ""
        return f"{where}[{self.code}] {self.message}"


class ArkError(Exception):
    """Base class; carries an optional source span and a short rule code."""

    code = "error"

    def __init__(self, message: str, span: Span | None = None, code: str | None = None):
        super().__init__(message)
        self.message = message
        self.span = span
        if code is not None:
            self.code = code

    def diagnostic(self) -> Diagnostic:
        return Diagnostic(self.message, self.span, self.code)

    def __str__(self) -> str:
        return str(self.diagnostic())


class ArkSyntaxError(ArkError):
    code = "syntax"

    def __init__(self, message: str, span: Span | None = None, expected: frozenset[str] = frozenset()):
        super().__init__(message, span)
        self.expected = expected


class ArkSemanticError(ArkError):
    """Name resolution, typing, inheritance and function-body errors."""

    code = "semantic"


class CheckFailed(ArkSemanticError):
    """Raised when a batch of diagnostics must abort a stage."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else Diagnostic("check failed")
        super().__init__("\n".join(str(d) for d in self.diagnostics), first.span, first.code)

    def __str__(self) -> str:
        return self.message


class GraphError(ArkSemanticError):
    code = "graph"


class CompileError(ArkError):
    code = "compile"


class NumericError(ArkError):
    code = "numeric"
