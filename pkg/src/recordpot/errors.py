"""Exception hierarchy for recordpot."""


class RecordPotError(Exception):
    """Base class for all recordpot errors."""


class UnknownDisciplineError(RecordPotError):
    def __init__(self, discipline):
        super().__init__(f"unknown discipline: {discipline!r}")
        self.discipline = discipline


class InvalidParameterError(RecordPotError):
    """Model parameters outside the feasible region (e.g. non-positive scale)."""


class NoFiniteEndpointError(RecordPotError):
    """Requested a finite support endpoint for a model with shape >= 0."""


class SupportError(RecordPotError):
    """A value lies outside the domain required by an operation."""


class SchemaError(RecordPotError):
    """Input file does not match the documented schema."""


class InsufficientDataError(RecordPotError):
    pass


class TieError(RecordPotError):
    """Exact ties at a threshold boundary make an exact-count threshold impossible."""

    def __init__(self, value, msg=None):
        super().__init__(msg or f"tie at threshold boundary: time value {value}")
        self.value = value


class FitFailureError(RecordPotError):
    def __init__(self, msg, traces=None):
        super().__init__(msg)
        self.traces = traces or []


class BootstrapFailureError(RecordPotError):
    def __init__(self, n_failed, n_total):
        super().__init__(
            f"bootstrap failed: {n_failed}/{n_total} replicate fits did not converge"
        )
        self.n_failed = n_failed
        self.n_total = n_total


class HorizonExceededError(RecordPotError):
    def __init__(self, msg, value_at_cap=None):
        super().__init__(msg)
        self.value_at_cap = value_at_cap
