"""Shared exception types.

The command line maps these onto exit codes, so library code should
prefer them over bare ValueError / RuntimeError for anything a caller
can act on:

    VerificationError  -> exit 1   (a computed quantity missed its certified value)
    InputError         -> exit 2   (parameters outside the supported ranges)
    ConvergenceError   -> exit 3   (an iteration failed to reach its tolerance)
"""


class InputError(ValueError):
    """Parameters outside the supported ranges or malformed arguments."""


class ConvergenceError(RuntimeError):
    """An iterative method exhausted its budget before reaching tolerance."""


class VerificationError(RuntimeError):
    """A cross-checked quantity disagreed with its certified value.

    ``payload`` optionally carries the partial result that failed the check
    so reporting layers can still emit it.
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class CollisionError(InputError):
    """Two tracked zeros merged: the parameter left the safe polydisk."""


class FactorizationError(VerificationError):
    """A pushed-forward field could not be matched to the family shape."""
