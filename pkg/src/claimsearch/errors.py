"""Exception types shared across modules.

Module-specific errors live next to the code that raises them; only the
base class and errors used by more than one module are defined here.
"""


class ClaimSearchError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ClaimSearchError):
    """Invalid or inconsistent configuration."""


class DimMismatch(ClaimSearchError):
    """Vector dimensions disagree."""
