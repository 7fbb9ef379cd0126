"""Exception types shared across the package."""


class ConvlensError(Exception):
    """Base class for every error this package raises deliberately."""


class ShapeError(ConvlensError):
    """A dimension is invalid or a shape constraint is violated."""


class BoundsError(ConvlensError):
    """An index, window, or coordinate falls outside its valid range."""


class QueryError(ConvlensError):
    """A lookup names a layer, scope, or view that does not exist or has the wrong kind."""


class ValidationError(ConvlensError):
    """Data content violates an invariant (non-finite values, out-of-range pixels)."""


class ModelError(ConvlensError):
    """A model bundle is missing, malformed, or fails validation."""


class ImageError(ConvlensError):
    """Input image bytes cannot be decoded."""
