"""Exception types shared across the package."""


class DtgError(Exception):
    """Base class for all errors raised by this package."""


class IoFailure(DtgError):
    pass


class EncodingFailure(DtgError):
    pass


class DuplicateId(DtgError):
    pass


class DuplicateEdgeId(DtgError):
    pass


class DanglingEndpoint(DtgError):
    pass


class UnknownNode(DtgError):
    pass


class InconsistentInput(DtgError):
    pass


class SummarizerFailure(DtgError):
    pass


class FormatError(DtgError):
    """Malformed persisted data. Carries the 1-based line of the offense."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyIndex(DtgError):
    pass


class UnknownAttribute(DtgError):
    pass


class IllegalMove(DtgError):
    pass


class NoSuchEdge(DtgError):
    pass


class RunnerFailure(DtgError):
    pass


class EmptyGraph(DtgError):
    pass


class NoInjectableSite(DtgError):
    pass
