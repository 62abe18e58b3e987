"""Exception hierarchy shared by all fusionedit modules."""


class FusionEditError(Exception):
    """Base class for all library errors."""


class ShapeError(FusionEditError):
    """Tensor rank or dimensions violate an operation's contract."""


class FormatError(FusionEditError):
    """A file does not conform to the expected on-disk format."""


class DataError(FusionEditError):
    """Payload values violate an invariant (non-finite, negative, out of range)."""


class ConfigurationError(FusionEditError):
    """Invalid or inconsistent configuration / provider setup."""


class OptimizationError(FusionEditError):
    """Numerical optimization failed (divergence, non-finite loss)."""
