"""Exception hierarchy shared by every algc module."""


class AlgcError(Exception):
    """Base class for all algc errors."""


class ParseError(AlgcError, ValueError):
    """Malformed expression text.

    ``offset`` is the byte offset into the UTF-8 encoded source where the
    problem was detected.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class DomainError(AlgcError, ArithmeticError):
    """Evaluation outside the domain of a partial function or of a fixture."""


class NonFiniteError(DomainError):
    pass


class SingularMatrixError(DomainError):
    def __init__(self, message, point=None):
        if point is not None:
            message = f"{message} at point {list(map(float, point))}"
        super().__init__(message)
        self.point = point


class DimensionError(AlgcError, ValueError):
    pass


class StructureError(AlgcError, ValueError):
    """Input data violates a structural invariant (skewness, J^2 = -1, ...)."""


class SchemaError(AlgcError, ValueError):
    """A JSON algebroid description does not match the expected schema."""
