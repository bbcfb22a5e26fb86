"""Exception types shared across the package."""


class BranchflowError(Exception):
    """Base class for package errors."""


class InputError(BranchflowError):
    """Malformed or inconsistent user input (bad file, bad masses, bad alpha)."""


class DegenerateInputError(InputError):
    """A two-target instance whose targets coincide; no bifurcation is defined."""


class InvariantViolation(BranchflowError):
    """An internal structural invariant broke; indicates a bug upstream.

    Raisers that hold the offending network attach it as `network` so the
    CLI can dump a diagnostic serialization before exiting.
    """

    def __init__(self, message: str, network=None):
        super().__init__(message)
        self.network = network
