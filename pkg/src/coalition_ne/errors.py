"""Exception hierarchy shared by every module in the package."""


class CoalitionNEError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CoalitionNEError, ValueError):
    pass


class DuplicatePlayer(CoalitionNEError, ValueError):
    pass


class EmptyCoalition(CoalitionNEError, ValueError):
    pass


class NotSquare(CoalitionNEError, ValueError):
    pass


class InvalidGraph(CoalitionNEError, ValueError):
    pass


class InvalidWeight(CoalitionNEError, ValueError):
    pass


class InvalidInput(CoalitionNEError, ValueError):
    pass


class OracleFailure(CoalitionNEError, RuntimeError):
    """A cost oracle raised or returned a non-finite value."""


class X0OutOfBounds(CoalitionNEError, ValueError):
    pass


class NumericalOverflow(CoalitionNEError, FloatingPointError):
    """Non-finite value encountered in the seeker state.

    The offending state snapshot is kept in ``dump`` for post-mortem.
    """

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump


class ConservationViolation(CoalitionNEError, AssertionError):
    """Tracker average drifted away from the oracle average."""


class NoAnalyticGradient(CoalitionNEError, ValueError):
    pass


class NonConvergence(CoalitionNEError, RuntimeError):
    pass


class ValidationError(CoalitionNEError, ValueError):
    """Configuration failed validation; ``problems`` lists every violation."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ParseError(CoalitionNEError, ValueError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")
        self.line = line
        self.field = field
