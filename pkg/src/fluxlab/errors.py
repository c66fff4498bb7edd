"""Exception types shared across the library."""


class FluxlabError(Exception):
    """Base class for all library-specific failures."""


class SingularityError(FluxlabError):
    """Evaluation requested at (or across) a singular source point."""


class InvalidBoostError(FluxlabError, ValueError):
    """Boost velocity at or above the speed of light."""


class ConvergenceError(FluxlabError):
    """A numerical procedure failed to reach its accuracy target.

    Carries the best available error estimate so callers can report
    diagnostics instead of a bare failure.
    """

    def __init__(self, message: str, estimate: float | None = None):
        if estimate is not None:
            message = f"{message} (error estimate: {estimate:.3e})"
        super().__init__(message)
        self.estimate = estimate


class WindingAmbiguityError(FluxlabError):
    """Winding number undefined: the query point lies on the loop."""


class ValidationError(FluxlabError):
    """Scenario configuration rejected; `errors` lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
