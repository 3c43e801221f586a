"""Exception hierarchy for the codec.

Every failure mode that crosses a module boundary gets its own class so
callers (and the CLI's exit-code mapping) can tell them apart.
"""


class CodecError(Exception):
    """Base class for all codec errors."""


class ParameterError(CodecError):
    """Invalid numeric parameter (non-finite, out of range, s <= 0, ...)."""


class ConfigError(CodecError):
    """Impossible configuration, e.g. alphabet too large for the precision."""


class UnsupportedConfigurationError(CodecError):
    """Requested operation is not defined for this configuration."""


class FitError(CodecError):
    """Parameter fitting failed (singular normal equations, empty corpus)."""


class CoderContractError(CodecError):
    """Coder precondition violated (inadmissible mass, bad state range)."""


class TableError(CodecError):
    """Lookup-table construction failed or verification found a violation."""


class CorruptStreamError(CodecError):
    """Bit stream underflow, checksum mismatch or end-state violation."""


class FormatError(CodecError):
    """Malformed file: bad magic, unknown version, truncated structure."""


class ModelError(CodecError):
    """Model weights missing, inconsistent shapes or hash mismatch."""
