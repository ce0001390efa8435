"""Exception types shared across the solver modules."""


class ConfigurationError(ValueError):
    """Invalid grid, stability condition, or scenario configuration."""


class RootFindingError(RuntimeError):
    """Equilibrium root search failed (no interior root, or several).

    ``brackets`` holds every sign-change interval found during the scan so
    the caller can see what the search was looking at.
    """

    def __init__(self, message, brackets=()):
        super().__init__(message)
        self.brackets = list(brackets)


class SaturationError(RuntimeError):
    """The system load admits no finite equilibrium power (load * beta >= 1)."""


class ConvergenceError(RuntimeError):
    """Fixed-point iteration hit its iteration cap.

    Carries the residual history and the last iterate so callers can write
    diagnostics or retry with stronger damping.
    """

    def __init__(self, message, residual_history=(), partial=None):
        super().__init__(message)
        self.residual_history = list(residual_history)
        self.partial = partial


class MassConservationError(RuntimeError):
    """Transported probability mass drifted beyond the allowed defect."""
