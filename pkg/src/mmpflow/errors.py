"""Exception hierarchy shared by all mmpflow modules."""


class MMPError(Exception):
    """Base class for every error raised by mmpflow."""


class HermitianViolation(MMPError, ValueError):
    """Spectral coefficients do not describe a real-valued field."""


class GridMismatch(MMPError, ValueError):
    """Fields that must share one grid do not."""


class BlockOutOfRange(MMPError, IndexError):
    """A dyadic block index outside the lattice-resolvable range."""


class UnsupportedExponent(MMPError, ValueError):
    """Lebesgue/summation exponent outside the supported set."""


class InsufficientRange(MMPError, ValueError):
    """Too few resolvable dyadic blocks for the requested check."""


class ConsistencyViolation(MMPError, ValueError):
    """Curl inputs are not the curls of the state fields."""


class NoConvergence(MMPError, RuntimeError):
    """Successive approximations stopped contracting."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class Instability(MMPError, FloatingPointError):
    """Norm growth past the overflow guard during time stepping."""

    def __init__(self, message, time=None, last_state=None):
        if time is not None:
            message = f"{message} (t={time:.6g})"
        super().__init__(message)
        self.time = time
        self.last_state = last_state


class InsufficientData(MMPError, ValueError):
    """A diagnostics series is too short for the requested analysis."""


class WindowUnderflow(MMPError, ValueError):
    """A time window reaches outside the span covered by a series."""


class ExponentOutOfRange(MMPError, ValueError):
    """Integrability exponent outside the admissible interval."""


class ConfigParseError(MMPError, ValueError):
    """Malformed run configuration text."""

    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.key = key


class ConfigValidationError(MMPError, ValueError):
    """A configuration value violates a documented invariant."""


class SnapshotFormatError(MMPError, ValueError):
    """A snapshot file is truncated or carries the wrong magic."""
