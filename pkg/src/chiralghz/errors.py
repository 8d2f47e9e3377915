"""Exception types shared across the package."""


class AccuracyError(RuntimeError):
    """Numerical-accuracy budget exceeded (norm/trace drift, step-halving check).

    Carries the measured drift so callers can report it.
    """

    def __init__(self, message, drift=None):
        super().__init__(message)
        self.drift = drift


class ScheduleError(ValueError):
    """A schedule violates a structural invariant (overlap, range, ordering)."""


class ParseError(ValueError):
    """Schedule-file syntax or validation error with a 1-based line number."""

    def __init__(self, message, line, token=None):
        loc = f"line {line}"
        if token:
            loc += f", near {token!r}"
        super().__init__(f"{loc}: {message}")
        self.line = line
        self.token = token
