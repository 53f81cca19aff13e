"""Exception types shared across the package."""


class MengerError(Exception):
    """Base class for all errors raised by this package."""


class BadParams(MengerError):
    """Energy or quadrature parameters outside their admissible range."""


class BadPreset(MengerError):
    """Unknown preset name or invalid preset arguments."""


class BadRegime(MengerError):
    """Operation requested outside the parameter regime it is defined for."""


class DegenerateTriple(MengerError):
    """Two of the three points of a triple coincide (0/0 in the kernel)."""


class SelfIntersection(MengerError):
    """Distinct vertices coincide, or an operation found a crossing."""


class NotArclength(MengerError):
    """Operation requires an arc-length (equal edge) parametrization."""


class DegenerateConstraint(MengerError):
    """Length-constraint gradient vanished; projection undefined."""


class StepFailure(MengerError):
    """Line search underflowed without finding an acceptable step."""

    def __init__(self, message, history=None, state=None):
        super().__init__(message)
        self.history = history
        self.state = state


class QuadratureNotConverged(MengerError):
    """Mesh-doubling check of a singular quadrature exceeded tolerance."""


class ZeroSeminorm(MengerError):
    """Seminorm vanished; a ratio against it is undefined."""


class ResampleFailure(MengerError):
    """Equal-chord resampling did not converge for this input."""
