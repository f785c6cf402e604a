"""Exception types raised across the toolkit.

All of them derive from :class:`VarPotError`, itself a ``ValueError``, so
callers that only care about "bad input" can catch one thing.
"""


class VarPotError(ValueError):
    pass


class InvalidSequence(VarPotError):
    pass


class InvalidConfig(VarPotError):
    pass


# engine
class EmptyScenario(VarPotError):
    pass


class HorizonMismatch(VarPotError):
    pass


# sequences
class InvalidLawParams(VarPotError):
    pass


# stats
class TooFewSamples(VarPotError):
    pass


class MalformedInterval(VarPotError):
    pass


# experiment
class ZeroAvailability(VarPotError):
    pass


# io
class ZeroMu(VarPotError):
    pass


class LogFormatError(VarPotError):
    """Base class for event-log ingestion failures."""


class EmptyLog(LogFormatError):
    pass


class GapInLog(LogFormatError):
    pass


class OverlapInLog(LogFormatError):
    pass


class NonAlternating(LogFormatError):
    pass


class BadTimestamp(LogFormatError):
    pass


class ReportFormatError(VarPotError):
    pass
