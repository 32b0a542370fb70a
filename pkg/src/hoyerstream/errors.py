"""Shared exception and warning types."""


class DimensionError(ValueError):
    """A matrix or frame has the wrong shape for the requested operation."""


class FrameFormatError(ValueError):
    """An on-disk matrix or frame file is malformed."""


class MixedSignWarning(UserWarning):
    """The residual carries comparable positive and negative mass.

    The index assumes a same-sign shift; when positive and negative mass
    nearly cancel, the raw index sits near 1 regardless of how dense the
    shift actually is. The value is reported unchanged.
    """
