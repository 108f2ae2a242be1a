"""Exception hierarchy shared across the package."""


class PnmcsurfError(Exception):
    """Base class for all domain errors raised by this package."""


class IntegrationError(PnmcsurfError):
    """The ODE integrator could not complete a requested run.

    Carries ``u_last``, the last parameter value that was reached with a
    valid state, when known.
    """

    def __init__(self, message, u_last=None):
        super().__init__(message)
        self.u_last = u_last


class BracketError(PnmcsurfError):
    """A scalar root finder was handed a bracket without a sign change."""


class InadmissibleInitialData(PnmcsurfError):
    """Initial curvature data violates the strict admissibility inequalities."""


class WindowError(PnmcsurfError):
    """A mean-curvature seed lies outside any positivity window."""


class FrameError(PnmcsurfError):
    """Frenet frame construction or propagation failed a consistency check."""

    def __init__(self, message, u_last=None):
        super().__init__(message)
        self.u_last = u_last


class PatchError(PnmcsurfError):
    """A surface patch could not be built or fails its construction invariants."""


class VerificationInputError(PnmcsurfError):
    """A verification request is malformed (grid too small, bad indices, ...)."""
