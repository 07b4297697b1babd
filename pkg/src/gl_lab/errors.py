"""Exception hierarchy shared by every gl_lab module."""


class GLLabError(Exception):
    """Base class for all errors raised by gl_lab."""


class NotPositiveDefinite(GLLabError, ValueError):
    pass


class ShapeMismatch(GLLabError, ValueError):
    pass


class UnsupportedOrder(GLLabError, ValueError):
    pass


class ConvergenceFailure(GLLabError, RuntimeError):
    """Power iteration did not settle; ``best_estimate`` holds the last value."""

    def __init__(self, message, best_estimate):
        super().__init__(message)
        self.best_estimate = best_estimate


class ZeroRow(GLLabError, ValueError):
    def __init__(self, row):
        super().__init__(f"row {row} has (numerically) zero l2 norm")
        self.row = row


class DegenerateLogArgument(GLLabError, ValueError):
    pass


class EmptyColumnSupport(GLLabError, ValueError):
    def __init__(self, column):
        super().__init__(f"column {column} has empty support")
        self.column = column


class BadFamilyShape(GLLabError, ValueError):
    pass


class IllConditioned(GLLabError, ValueError):
    pass


class NotConverged(GLLabError, RuntimeError):
    """Raised by the solvers; ``solution`` carries the best iterate reached."""

    def __init__(self, message, solution):
        super().__init__(message)
        self.solution = solution


class NoCrossing(GLLabError, ValueError):
    pass


class ParseError(GLLabError, ValueError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


class ValidationError(GLLabError, ValueError):
    pass


class IoError(GLLabError, OSError):
    pass
