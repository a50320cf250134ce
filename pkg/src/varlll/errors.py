"""Exception hierarchy shared by the library and the command line."""


class LLLError(Exception):
    """Base class for every error raised by varlll."""


class InstanceError(LLLError, ValueError):
    """An instance (variables, events, formula, hypergraph) is malformed."""


class EnumerationCapExceeded(LLLError):
    pass


class CapExceeded(LLLError):
    pass


class DomainTooLarge(LLLError):
    pass


class EventNeverOccurs(LLLError):
    pass


class SnapshotsMissing(LLLError):
    pass


class DimensionMismatch(LLLError, ValueError):
    pass


class InvariantViolation(LLLError, AssertionError):
    """A property that the algorithm guarantees was observed to fail."""
