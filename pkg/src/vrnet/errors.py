"""Exception taxonomy shared by the whole pipeline.

Exit-code mapping for the CLI lives in :mod:`vrnet.cli`; library code
raises these and never calls ``sys.exit``.
"""


class VRNetError(Exception):
    """Base class for all package-specific failures."""


class InvalidInput(VRNetError, ValueError):
    """Caller handed data that violates a documented precondition."""


class BoundViolation(VRNetError):
    """A tensor failed the Voigt/Reuss admissibility audit.

    Carries the offending eigenvalue margin when known.
    """

    def __init__(self, msg, margin=None):
        super().__init__(msg)
        self.margin = margin


class GenerationIncomplete(VRNetError):
    """Microstructure generator exhausted its attempt budget.

    ``achieved`` is the volume fraction reached, ``target`` the drawn goal.
    """

    def __init__(self, msg, achieved=None, target=None):
        super().__init__(msg)
        self.achieved = achieved
        self.target = target


class SolverDiverged(VRNetError):
    """Cell-problem iteration failed to reach tolerance.

    ``history`` holds the relative residual per iteration for post-mortems.
    """

    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = list(history) if history is not None else []


class TrainingDiverged(VRNetError):
    """Non-finite loss or parameters during optimization."""


class EmptySplit(VRNetError):
    """A training or validation split contains no samples."""


class UnsupportedSchema(VRNetError):
    """File declares a schema/version this build does not read."""


class CorruptFile(VRNetError):
    """File is truncated or fails structural validation."""
