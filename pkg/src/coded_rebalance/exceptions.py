"""Errors raised by the rebalancing library."""


class RebalanceError(Exception):
    """Base class for all library errors."""


class InvalidParameters(RebalanceError, ValueError):
    """A system parameter (node count, replication, file size, seed,
    probability) is out of range."""


class ReplicationOutOfRange(InvalidParameters):
    """The replication factor cannot support the requested protocol."""


class MismatchedParameters(InvalidParameters):
    """Inputs were produced under different parameters than claimed."""


class UnknownNode(RebalanceError, KeyError):
    """A node id outside the database's node universe."""


class InvalidLabel(RebalanceError, ValueError):
    """A box label violates its structural invariants."""


class DirectoryMismatch(RebalanceError):
    """A bin directory does not belong to the database it is used with."""


class NotARecipient(RebalanceError):
    """The decoding node does not demand any packet of the codeword."""


class DecodeVerificationError(RebalanceError):
    """A recovered packet differs from the original file content."""


class SupportViolation(RebalanceError):
    """An observed node set lies outside the expected support."""


class ConfigError(RebalanceError, ValueError):
    """Experiment configuration failed validation."""
