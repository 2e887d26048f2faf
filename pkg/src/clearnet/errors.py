"""Exception types raised by the clearing, dynamics and analysis routines."""


class ClearnetError(Exception):
    """Base class for all library errors."""


class InvalidNetwork(ClearnetError):
    pass


class InvalidProfile(ClearnetError):
    pass


class NonConvergence(ClearnetError):
    """An iteration or step cap was reached before convergence."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class EnumerationTooLarge(ClearnetError):
    pass


class FlowNotClearing(ClearnetError):
    pass


class RuleNotReductionConsistent(ClearnetError):
    pass


class InfeasibleTarget(ClearnetError):
    pass


class UnsupportedObjective(ClearnetError):
    pass


class GadgetParameterError(ClearnetError):
    """Raised for out-of-range generator parameters (B too small, delta too small, ...)."""


class BTooSmall(GadgetParameterError):
    pass


class DeltaTooSmall(GadgetParameterError):
    pass
