"""Exception hierarchy. The CLI maps DataError to exit 1, ConfigError to exit 2."""


class RmtSyncError(Exception):
    pass


class DataError(RmtSyncError, ValueError):
    """Input data violates a precondition (bad CSV, missing values, degenerate series)."""


class ConfigError(RmtSyncError, ValueError):
    """Configuration document or flags are inconsistent."""


class ConvergenceError(RmtSyncError, ArithmeticError):
    """The Jacobi solver hit its sweep cap."""
