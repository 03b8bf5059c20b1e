"""Exception types shared across the package."""


class HebbsalError(Exception):
    """Base class for errors raised by this package."""


class UnsupportedFormatError(HebbsalError):
    """Input file is readable but not in an accepted format."""


class ValidationError(HebbsalError):
    """Inputs are structurally inconsistent (dimensions, pairing, config)."""


class DegenerateInputError(HebbsalError):
    """Sample set carries no principal direction (fewer than 2 distinct points)."""
