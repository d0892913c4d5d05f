"""Exception hierarchy shared by the toolkit."""


class EcmError(ValueError):
    """Base class for all toolkit errors."""


class DomainError(EcmError):
    """An argument lies outside the domain of an operation."""


class RankDeficiencyError(EcmError):
    """A least-squares system cannot determine its unknowns."""


class DataError(EcmError):
    """Input data is malformed or unusable."""


class ParseError(DataError):
    def __init__(self, message, rows=()):
        self.rows = tuple(rows)
        if self.rows:
            shown = ", ".join(str(r) for r in self.rows[:10])
            more = "" if len(self.rows) <= 10 else f" (+{len(self.rows) - 10} more)"
            message = f"{message}; rows: {shown}{more}"
        super().__init__(message)


class NoDischargeError(DataError):
    """No sample reaches the discharge onset threshold."""


class SegmentTooShortError(DataError):
    """An extracted window has fewer samples than required."""
