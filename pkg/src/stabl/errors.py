"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the command line
front end can map failures onto exit codes without string matching.
"""


class StablError(Exception):
    """Base class for all package errors."""

    code = "error"


class UsageError(StablError):
    """Bad user input: unknown names, malformed config, mismatched files."""

    code = "usage"


class ConfigNotFoundError(UsageError):
    code = "config-not-found"


class CheckpointMismatchError(UsageError):
    code = "checkpoint-mismatch"


class EigNoConvergenceError(StablError):
    code = "eig-no-convergence"


class SingularSystemError(StablError):
    """Singular or numerically singular linear system.

    ``condition`` holds the estimated condition number of the offending
    matrix (may be ``inf``).
    """

    code = "singular-system"

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class RankDeficientError(StablError):
    """Input columns are not linearly independent to working tolerance."""

    code = "rank-deficient"

    def __init__(self, message, rank):
        super().__init__(message)
        self.rank = rank


class SubspaceExhaustedError(StablError):
    code = "subspace-exhausted"


class StateBlowupError(StablError):
    """Non-finite state produced by an environment step.

    ``index`` is the first offending entry of the state vector.
    """

    code = "state-blowup"

    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class NewtonNoConvergenceError(StablError):
    code = "newton-no-convergence"


class DivergedUpdateError(StablError):
    code = "diverged-update"


class NotDetectedError(StablError):
    code = "not-detected"
