"""Exception hierarchy shared by all siroc modules."""


class SirocError(Exception):
    """Base class for errors raised by siroc."""


class RasterFormatError(SirocError, ValueError):
    """A raster file is unreadable, malformed, or contains rejected values."""


class ShapeMismatchError(SirocError, ValueError):
    """Two arrays or rasters that must agree in shape do not."""


class ParameterError(SirocError, ValueError):
    """A hyperparameter record violates its invariants."""


class PlacementError(SirocError, RuntimeError):
    """Synthetic change objects could not be placed without overlap."""
