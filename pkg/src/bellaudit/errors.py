"""Exception types shared across the toolkit."""


class BellauditError(Exception):
    """Base class for all toolkit errors."""


class MalformedRecordError(BellauditError, ValueError):
    """A single input line could not be parsed as a trial record."""


class DegenerateDataError(BellauditError, ValueError):
    """Data too degenerate for the requested statistic (zero marginal, zero maximum)."""


class InsufficientDataError(BellauditError, ValueError):
    """Not enough usable events to compute the requested quantity."""
