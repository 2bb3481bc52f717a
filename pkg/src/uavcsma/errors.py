"""Exception types shared across the package."""


class OutOfCoverageError(ValueError):
    """Lateral offset lies on or outside the coverage rim."""


class InfeasibleScenarioError(ValueError):
    """No device can complete a single backoff traversal (zero clusters)."""


class FreezeDivergenceError(ValueError):
    """Mean freeze time diverges because the busy probability is 1."""


class UndefinedMixtureError(ValueError):
    """Freeze mixture weights are undefined: freezing occurs but the
    transmission probability that would resolve the busy type is zero."""


class ConvergenceError(RuntimeError):
    """Fixed-point solver exhausted an iteration cap.

    Carries the residuals of the last iterate so callers can report them
    instead of silently using a bad solution.
    """

    def __init__(self, message, residuals=None, iterations=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})
        self.iterations = iterations


class ConfigError(ValueError):
    """Configuration text rejected; carries a line number when one is known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
