"""Exception hierarchy shared across the toolkit."""


class SeqtagError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(SeqtagError):
    """Array shapes do not line up for an operation."""


class DomainError(SeqtagError):
    """Input is outside the mathematical domain of an operation."""


class ContractError(SeqtagError):
    """Caller violated an API contract (e.g. non-scalar loss)."""


class ParseError(SeqtagError):
    """Malformed input file; message carries the line number."""


class VocabularyError(SeqtagError):
    """Unknown tag encountered against a frozen tag inventory."""


class TrainingError(SeqtagError):
    """Training aborted (non-finite gradient or loss)."""


class ConfigError(SeqtagError):
    """Invalid run or pipeline configuration."""
