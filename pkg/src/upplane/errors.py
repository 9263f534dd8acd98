"""Exception hierarchy shared by every module of the toolkit."""


class UpPlaneError(Exception):
    """Base class for all toolkit errors."""


class TooFewSamples(UpPlaneError, ValueError):
    pass


class NonFinite(UpPlaneError, ValueError):
    pass


class DimensionMismatch(UpPlaneError, ValueError):
    pass


class DomainError(UpPlaneError, ValueError):
    pass


class NotSymmetric(UpPlaneError, ValueError):
    pass


class NotPositiveSemidefinite(UpPlaneError, ValueError):
    pass


class EntropyOverflow(UpPlaneError, OverflowError):
    pass


class DegenerateSamples(UpPlaneError, ValueError):
    pass


class BandwidthError(UpPlaneError, ValueError):
    pass


class OrderError(UpPlaneError, ValueError):
    """Rényi orders given in the wrong order (r > t)."""


class EmptyInput(UpPlaneError, ValueError):
    pass


class ZeroWeight(UpPlaneError, ValueError):
    pass


class OrderViolation(UpPlaneError, ValueError):
    """Inherent uncertainty exceeds its Gaussian envelope."""


class SingularInnovation(UpPlaneError, ValueError):
    pass


class UnsupportedFormat(UpPlaneError, ValueError):
    pass


class CorruptHeader(UpPlaneError, ValueError):
    pass


class TruncatedData(UpPlaneError, ValueError):
    pass


class ImageTooSmall(UpPlaneError, ValueError):
    pass


class ChannelMismatch(UpPlaneError, ValueError):
    pass


class ShapeMismatch(UpPlaneError, ValueError):
    pass


class ManifestError(UpPlaneError, ValueError):
    pass


class DeskScale(UpPlaneError, ValueError):
    """Requested problem size is beyond what the lab solves interactively."""


class TooManySkipped(UpPlaneError, RuntimeError):
    """More images failed to decode than the evaluation tolerates."""
