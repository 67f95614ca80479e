"""Shared exception types."""


class BudgetError(RuntimeError):
    """An iteration or search budget ran out before the question was settled.

    Budget exhaustion is an inconclusive outcome, not a refutation: callers
    that treat it as such (e.g. the CLI) map it to a distinct exit status.
    Attributes attached by raisers (``near_miss`` etc.) carry diagnostics.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        for key, value in diagnostics.items():
            setattr(self, key, value)
