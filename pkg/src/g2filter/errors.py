"""Exception hierarchy.

Errors split into three families so callers (and the CLI exit codes) can
tell a bad input from a numerical failure from an observable that simply
has no value at the given parameters.
"""


class G2FilterError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(G2FilterError, ValueError):
    """Invalid user input: parameters, grid specs, options."""


class NegativeRate(ConfigError):
    pass


class ZeroDissipation(ConfigError):
    pass


class BadTruncation(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class MissingKey(ConfigError):
    pass


class GridSpecError(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class DegenerateFilter(ConfigError):
    """Zero cavity linewidth: the filter formulas have vanishing denominators."""


class NegativeTime(ConfigError):
    pass


class EmptyInput(ConfigError):
    pass


class SolverError(G2FilterError, ArithmeticError):
    """A numerical procedure failed to deliver a trustworthy answer."""


class DegenerateSteadyState(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class StepFailure(SolverError):
    pass


class StepTooLarge(SolverError):
    pass


class SingularSystem(SolverError):
    pass


class UndefinedObservable(G2FilterError):
    """The requested ratio has no meaningful value at these parameters."""

    reason = "undefined"


class InsufficientPhotons(UndefinedObservable):
    reason = "insufficient photons"


class UndefinedEfficiency(UndefinedObservable):
    reason = "insufficient excitation"
