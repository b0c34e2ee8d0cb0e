"""Exception types shared across the package."""


class NehariLoopError(Exception):
    """Base class for all package errors."""


class ConfigError(NehariLoopError):
    """Invalid run configuration (bad exponents, grid, or coefficient spec)."""


class DomainError(NehariLoopError):
    """A sign or integral precondition of a formula is violated."""


class NoRootError(NehariLoopError):
    """The fibering map admits no critical point for the given data."""


class SingularLinearizationError(NehariLoopError):
    """The q-term weight |u|^(q-2) blows up at a node carrying b != 0."""


class DivergedError(NehariLoopError):
    """Newton iteration exhausted max_iter without meeting the tolerance."""


class NotConvergedError(NehariLoopError):
    """No admissible start produced a converged minimizer."""


class NoAdmissibleDirectionError(NehariLoopError):
    """No multistart direction lies in the cone required by the target class."""


class DepartureFailedError(NehariLoopError):
    """The branch corrector failed for every amplitude in the decade sweep."""


class StepCollapseError(NehariLoopError):
    """Arclength step fell below ds_min with a failing corrector."""


class InsufficientDataError(NehariLoopError):
    """Not enough sweep points to fit a scaling law."""
