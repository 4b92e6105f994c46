"""Exception types shared across the package."""


class HyperhashError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(HyperhashError):
    """A file on disk does not conform to its declared format."""


class NumericalError(HyperhashError):
    """Training produced a non-finite quantity and was aborted."""
