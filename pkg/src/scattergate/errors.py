"""Exception taxonomy.

ConfigError (and subclasses) map to CLI exit code 2, NumericalFailure (and
subclasses) to exit code 3.  Everything raised on purpose in this package
derives from ScattergateError.
"""


class ScattergateError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ScattergateError):
    """Invalid user input: parameters, file contents, impossible requests."""


class GraphFormatError(ConfigError):
    """Malformed or inconsistent graph file."""


class ScheduleFormatError(ConfigError):
    """Malformed or inconsistent exchange-schedule file."""


class NumericalFailure(ScattergateError):
    """A computation could not reach its accuracy contract."""


class UnreliablePhase(NumericalFailure):
    """Phase extraction overlap too small for the answer to mean anything."""


class SynthesisUnreachable(NumericalFailure):
    """Target phase cannot be reached: the gate is periodic.

    Attributes
    ----------
    period : int
        Number of distinct powers G^k (the gate revisits itself after this).
    best_error : float
        Smallest circle distance achievable over one period.
    """

    def __init__(self, message, period, best_error):
        super().__init__(message)
        self.period = period
        self.best_error = best_error


class SynthesisBudgetExceeded(NumericalFailure):
    """No k within the search cap met the tolerance.

    Attributes
    ----------
    cap : int
        Largest exponent scanned.
    best_error : float
        Smallest circle distance seen during the scan.
    """

    def __init__(self, message, cap, best_error):
        super().__init__(message)
        self.cap = cap
        self.best_error = best_error
