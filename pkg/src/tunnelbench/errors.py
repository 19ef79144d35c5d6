"""Exception types shared by the workbench modules.

The CLI maps InputError to exit code 1 and NumericalError to exit code 2.
"""


class InputError(ValueError):
    """Malformed user input: bad parameters, unreadable files, bad indices."""


class UnsupportedProblemError(InputError):
    """Operation received a problem outside its supported class (e.g. K>2)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed: non-convergence, step-size failure."""


class CertificationError(NumericalError):
    """A generated reference optimum failed local-minimality certification.

    Carries the offending variable index and the energy gain of the
    improving flip so the failure can be inspected rather than ignored.
    """

    def __init__(self, message, variable=None, gain=None):
        super().__init__(message)
        self.variable = variable
        self.gain = gain


class TuningError(NumericalError):
    """A tuning grid produced no usable operating point.

    ``best_point`` holds the grid point with the highest estimated success
    probability and ``best_p`` that probability.
    """

    def __init__(self, message, best_point=None, best_p=0.0):
        super().__init__(message)
        self.best_point = best_point
        self.best_p = best_p
