"""Exception and warning types shared across the package.

The three error classes map onto the CLI exit-code contract: bad arguments
or rank configurations (exit 2), malformed input data (exit 3), and
numerical degeneracies discovered while solving (exit 4).
"""


class DmmdError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(DmmdError, ValueError):
    """An argument, flag, or rank configuration is invalid."""


class InputError(DmmdError, ValueError):
    """Input data is malformed: non-numeric, non-finite, or mis-shaped."""


class DegeneracyError(DmmdError, RuntimeError):
    """A numerical degeneracy: rank deficiency, dependent vectors, or
    failure to converge within the allowed number of sweeps."""


class RankTieWarning(UserWarning):
    """Singular values tie at a truncation boundary; the minimizer at that
    step may be non-unique."""
