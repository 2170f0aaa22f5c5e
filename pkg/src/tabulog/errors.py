"""Exception hierarchy.

Logical failure is never an exception. Everything here unwinds to the query
boundary, where the CLI turns it into exit code 2.
"""

from __future__ import annotations

from typing import Any


class TabulogError(Exception):
    """Base class for every error raised by the package."""


class ParseError(TabulogError):
    def __init__(self, message: str, file: str = "<string>", line: int = 0, col: int = 0) -> None:
        self.message = message
        self.file = file
        self.line = line
        self.col = col
        super().__init__(str(self))

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.message}"


class EngineError(TabulogError):
    """A runtime error raised by the language; ``kind`` is its language-level name."""

    kind = "error"

    def __init__(self, message: str, term: Any = None) -> None:
        self.message = message
        self.term = term
        super().__init__(message)

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


class UnknownPredicate(EngineError):
    kind = "unknown_predicate"


class UnresolvedFunctionCall(EngineError):
    kind = "unresolved_function_call"


class InstantiationError(EngineError):
    kind = "instantiation_error"


class TermTypeError(EngineError):
    kind = "type_error"


class TermIndexError(EngineError):
    kind = "index_error"


class ContextError(EngineError):
    kind = "context_error"


class EvaluationError(EngineError):
    kind = "evaluation_error"


class UserError(EngineError):
    """Raised by ``throw/1``."""

    kind = "user_error"


class ContractError(TabulogError):
    """A caller broke an API precondition (e.g. hashing a non-ground term)."""


class UnsupportedConstraint(TabulogError):
    def __init__(self, backend: str, constraint: str) -> None:
        self.backend = backend
        self.constraint = constraint
        super().__init__(f"unsupported_constraint: backend {backend} cannot handle {constraint}")


class CheckerRefused(TabulogError):
    """The exhaustive checker would have to enumerate too many points."""


class ConfigError(TabulogError):
    """Invalid combination of command-line options."""
