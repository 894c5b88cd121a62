"""Exception hierarchy shared by every solver module."""


class GradFluxError(Exception):
    """Base class for all solver errors."""

    code = "error"


class DegenerateJump(GradFluxError, ValueError):
    code = "degenerate_jump"


class RootOutOfDomain(GradFluxError):
    code = "root_out_of_domain"


class NoConvergence(GradFluxError):
    code = "no_convergence"


class DomainExceeded(GradFluxError):
    code = "domain_exceeded"


class OrientationMismatch(GradFluxError, ValueError):
    code = "orientation_mismatch"


class Incompatible(GradFluxError, ValueError):
    code = "incompatible"


class DegenerateDenominator(GradFluxError):
    code = "degenerate_denominator"

    def __init__(self, message, t=None, x=None, epoch=None, interface=None):
        super().__init__(message)
        self.t = t
        self.x = x
        self.epoch = epoch
        self.interface = interface


class TubeExit(GradFluxError):
    code = "tube_exit"


class NotEligible(GradFluxError, ValueError):
    code = "not_eligible"


class ParseError(GradFluxError, ValueError):
    code = "parse_error"


class ValidationError(GradFluxError, ValueError):
    code = "validation_error"
