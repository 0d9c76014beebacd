"""Exception types shared across the toolkit."""


class NumericalFailure(RuntimeError):
    """A numerical routine failed to converge or produced an unusable result."""


class NotStabilizableError(RuntimeError):
    """Gain synthesis found an unstabilizable pair.

    Carries the frozen point (if any) at which synthesis was attempted.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ControllerError(RuntimeError):
    """A sampled controller could not produce a plan.

    ``partial_run`` holds the closed-loop run completed before the failure,
    when the error aborts a multi-interval run.
    """

    def __init__(self, message, partial_run=None):
        super().__init__(message)
        self.partial_run = partial_run


class UncoveredPointError(ValueError):
    """A point lies outside the closure of every region of a patchwork family."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class OffsetSelectionError(RuntimeError):
    """No offset schedule in the search grid separated the piece values on a shared boundary."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NoCertifiedStepError(RuntimeError):
    """Step-size bisection exhausted without a certified decrease.

    ``trace`` is a list of (step, min_margin) pairs for the attempted steps.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class ConfigError(ValueError):
    """An experiment configuration failed to parse or validate."""
