"""Exception hierarchy shared by all zsup modules."""


class ZsupError(Exception):
    """Base class for all errors raised by zsup."""


class DimensionError(ZsupError):
    """Degree tuples (or tables) of incompatible lengths were combined."""


class ValidationError(ZsupError):
    """Structurally invalid input data (tables, domains, presentations, specs)."""


class DomainMismatchError(ZsupError):
    """Two series (or a morphism and a section) live over incompatible domains."""


class UnknownSymbolError(ZsupError):
    """A name does not refer to a variable, generator, or binding in scope."""


class NotInvertibleError(ZsupError):
    """Inversion was requested for an element that has no inverse in its ring."""


class TruncationError(ZsupError):
    """A truncation order outside the representable range was requested."""


class ParseError(ZsupError):
    """Syntax error in the expression DSL, with source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class MissingTransitionError(ZsupError):
    """A cocycle check referenced a transition the atlas does not contain."""
