"""Exception types shared across the package."""


class RisPlsError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(RisPlsError, ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class GammaPoleError(ParameterDomainError):
    """The gamma function was evaluated at a non-positive integer."""


class ContourSeparationError(RisPlsError):
    """No vertical line separates the left and right pole families."""


class FoldLimitExceeded(RisPlsError):
    """A Mellin-Barnes integral has more folds than the evaluator allows."""


class ConvergenceError(RisPlsError):
    """An iterative or quadrature routine failed to reach its tolerance."""


class MomentMatchError(RisPlsError):
    """No single F distribution reproduces the requested moments."""


class MethodUnavailable(RisPlsError):
    """The requested evaluation method cannot handle this configuration."""


class ConfigError(RisPlsError):
    """Configuration file could not be parsed or validated."""


class InsufficientTrials(ParameterDomainError):
    """Too few Monte-Carlo trials for a reportable estimate."""
