"""Exception and warning types shared by every estimator.

Each error class carries the process exit code the command-line front end
uses when the error escapes a subcommand.
"""


class CausalEstError(Exception):
    exit_code = 1


class ConfigError(CausalEstError, ValueError):
    """Invalid column roles, option combination or argument."""

    exit_code = 2


class DataError(CausalEstError, ValueError):
    """The data violate a coding convention (non 0/1 values, empty arm, NaN)."""

    exit_code = 3


class SingularityError(DataError):
    """Design matrix (or sandwich bread) is rank deficient."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class PositivityError(CausalEstError, ValueError):
    """An arm is empty within a confounder stratum, or a propensity is 0 or 1."""

    exit_code = 4

    def __init__(self, message, strata=None):
        super().__init__(message)
        self.strata = list(strata) if strata is not None else []


class ConvergenceError(CausalEstError, RuntimeError):
    """Iterative fit did not converge; ``trace`` holds (iteration, deviance, score norm)."""

    exit_code = 5

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class InferenceError(CausalEstError, RuntimeError):
    """Too many bootstrap replicates failed to produce an estimate."""

    exit_code = 5


class SeparationWarning(UserWarning):
    pass


class PositivityWarning(UserWarning):
    pass
