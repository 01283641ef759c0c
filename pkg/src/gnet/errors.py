"""Exception hierarchy shared by every gnet module."""


class GNetError(Exception):
    """Base class for all gnet failures."""


class InputError(GNetError, ValueError):
    """Invalid arguments: wrong dimensions, non-positive radii, empty sets."""


class ConstructionError(GNetError):
    """The partition construction could not satisfy its thresholds."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ReductionError(GNetError):
    """Moment-preserving reduction hit a numerically singular step."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class FitError(GNetError, ValueError):
    """Least-squares fit requested on degenerate data."""
