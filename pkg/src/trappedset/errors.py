"""Exception types shared across modules; the CLI maps them to exit codes."""


class ConfigurationError(ValueError):
    """Invalid model or run configuration (CLI exit status 2)."""


class ResourceCapError(RuntimeError):
    """A configured resource cap would be exceeded (CLI exit status 3)."""


class IncompleteSpectrumError(ValueError):
    """The spectrum does not certify completeness where it is needed."""


class OutOfHorizonError(ValueError):
    """A query reaches beyond the enumeration horizon of a spectrum."""


class InsufficientDataError(ValueError):
    """Too few nonempty windows or points for a regression."""


class TruncationError(ValueError):
    """A resonance box is too small for the requested tail tolerance."""
