"""Exception hierarchy for the toolkit.

Core modules raise these; the CLI front end translates them into exit codes
and, on request, machine-readable error JSON.
"""

from typing import Optional


class HeunToolkitError(Exception):
    """Base class for every error raised by heun_core"""


class DomainError(HeunToolkitError, ValueError):
    """An argument lies outside the domain of the requested operation"""


class HypothesisViolationError(DomainError):
    """A bound's hypothesis (such as j > p + m/2) does not hold for the requested parameters"""


class UnsupportedParametersError(DomainError):
    """The parameters make a construction degenerate (e.g. p = 0 for gamma_k)"""


class PrecisionError(HeunToolkitError):
    """Invalid working-precision configuration"""


class BudgetExhaustedError(HeunToolkitError, RuntimeError):
    """A constructive search (approximant schedule, periodic density search) hit its depth limit"""

    def __init__(self, message: str, achieved_error: float, depth: int,
                 target_index: Optional[int] = None):
        super().__init__(message)
        self.achieved_error = achieved_error
        self.depth = depth
        self.target_index = target_index
