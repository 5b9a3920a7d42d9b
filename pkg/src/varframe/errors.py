"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Operand shapes do not conform."""


class EmptyInputError(ValueError):
    """An operation received an empty batch, video, or dataset."""


class PreconditionError(ValueError):
    """Input violates an ordering or structural precondition."""


class CorruptionError(ValueError):
    """Packed metadata is inconsistent with the data it describes."""


class UndefinedMetricError(ArithmeticError):
    """A metric's denominator is zero, so the metric has no value."""


class NpyFormatError(ValueError):
    """Base class for NPY parse failures."""


class BadMagicError(NpyFormatError):
    pass


class UnsupportedVersionError(NpyFormatError):
    pass


class FortranOrderError(NpyFormatError):
    pass


class UnsupportedDtypeError(NpyFormatError):
    pass


class TruncatedPayloadError(NpyFormatError):
    pass


class CheckpointError(ValueError):
    """Checkpoint file failed validation."""
