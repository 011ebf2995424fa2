"""Exception types raised by the shotvalue pipeline."""


class ShotValueError(Exception):
    """Base class for all library errors."""


class ParseError(ShotValueError):
    """Malformed or inconsistent input file; message carries the location."""


class GeometryError(ShotValueError):
    """Invalid court geometry configuration."""


class EncodingError(ShotValueError):
    """A shot could not be functionally encoded (fit or root failure)."""


class BounceNotFoundError(EncodingError):
    """No bounce detected in a ball sample stream."""


class OrientationError(ShotValueError):
    """Shot orientation is ambiguous (shooter straddling the net line)."""


class FitError(ShotValueError):
    """Model fitting failed (singular covariance, divergence, bad inputs)."""


class ConstraintError(ShotValueError):
    """Observation constraints are inconsistent with the model or singular."""


class FeatureError(ShotValueError):
    """Outcome features are undefined for an encoding (e.g. never crosses net)."""


class ConfigError(ShotValueError):
    """Pipeline configuration is missing, unreadable, or inconsistent."""
