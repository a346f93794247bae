"""Exception types shared across the package."""


class DeformoptError(Exception):
    """Base class for all package errors."""


class InputError(DeformoptError, ValueError):
    """Bad caller input: dimension mismatch, invalid parameters, bad flags."""


class ParseError(DeformoptError):
    """Lexing or parsing failure in expression/problem source text."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, col {column}: {message}"
        super().__init__(message)


class EvaluationError(DeformoptError, ArithmeticError):
    """An expression produced a non-finite value.

    ``index`` identifies the offending constraint when known; ``kind`` is one
    of ``"objective"``, ``"eq"``, ``"le"`` or ``None``.
    """

    def __init__(self, message, kind=None, index=None):
        self.kind = kind
        self.index = index
        super().__init__(message)


class SolverError(DeformoptError, RuntimeError):
    """A solver could not start or make progress at all."""
