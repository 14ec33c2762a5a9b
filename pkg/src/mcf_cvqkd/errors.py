"""Exception hierarchy shared by every stage of the pipeline."""


class CvqkdError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CvqkdError, ValueError):
    """A parameter lies outside the physically meaningful domain."""


class ShapeError(CvqkdError, ValueError):
    """Array lengths or matrix shapes are inconsistent."""


class CalibrationError(CvqkdError):
    """Shot-noise / electronic-noise calibration is degenerate or invalid."""


class InfiniteClearanceError(CalibrationError):
    """Electronic noise variance is zero, so clearance is unbounded."""


class DegenerateReferenceError(CvqkdError):
    """A reference pulse has zero amplitude and carries no phase."""


class SyncError(CvqkdError):
    """Cross-correlation shows no significant peak."""


class NoThresholdError(CvqkdError):
    """The key rate does not change sign inside the search bracket."""


class ConfigError(CvqkdError):
    """Scenario configuration failed validation."""


class ModeError(CvqkdError):
    """Operation requested on a report produced by an incompatible mode."""
