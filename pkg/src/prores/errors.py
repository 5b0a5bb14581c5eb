"""Exception types shared across the package."""


class ProresError(Exception):
    """Base class for all package errors."""


class ValidationError(ProresError):
    """A market instance or spending state violates an invariant."""


class NegativeBudget(ValidationError):
    pass


class EmptySupport(ValidationError):
    pass


class CobbDouglasWeightsNotNormalized(ValidationError):
    pass


class UndesiredGood(ValidationError):
    pass


class RhoOutOfRange(ValidationError):
    pass


class MarketFormatError(ValidationError):
    """Malformed or unrecognized fields in a market JSON document."""


class ZeroPrice(ProresError):
    """A good carries zero price where a positive price is required."""


class SupportMismatch(ProresError):
    """KL divergence is infinite: x puts mass where y has none."""


class NoConvergence(ProresError):
    """An iterative solver hit its iteration cap before its tolerance."""


class NotConverged(ProresError):
    """Equilibrium search hit the iteration cap with residuals above tolerance.

    The partial certificate (prices are still meaningful) is attached as
    the ``certificate`` attribute.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class CobbDouglasRequiresExtended(ProresError):
    """The base potential is infinite for Cobb-Douglas buyers; use extended=True."""


class ComplementsBoundarySpending(ProresError):
    """A complements (rho < 0) buyer has zero spending on a desired good."""


class IncompatibleRule(ProresError):
    """The requested update rule does not apply to this market's utility classes."""


class WrongDomain(ProresError):
    """A rate certificate was requested outside its theorem's utility domain."""


class ZeroUtility(ProresError):
    """A buyer's utility is zero where a logarithm of it is needed."""
