"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: DomainError -> 2, ResourceError -> 3,
AccuracyError -> 4.
"""


class HyperlapError(Exception):
    pass


class DomainError(HyperlapError, ValueError):
    """Input outside the validated range of an operation."""


class ResourceError(HyperlapError, RuntimeError):
    """Work estimate exceeds the configured budget (tree depth, panel count, grid size)."""


class AccuracyError(HyperlapError, RuntimeError):
    """Requested tolerance was not reached; carries the achieved bound."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
