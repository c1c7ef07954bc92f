"""Exception types shared across the toolkit."""


class MicrospotError(Exception):
    """Base class for all microspot errors."""


class ValidationError(MicrospotError, ValueError):
    """Input violates a documented precondition or invariant."""


class DatasetError(MicrospotError):
    """A dataset file is missing, unreadable, or malformed."""


class DegenerateGeometryError(ValidationError):
    """Face geometry collapsed (coincident eye centers, zero inter-ocular distance)."""


class DegenerateRoiError(ValidationError):
    """A region of interest is empty after clamping to the frame."""


class TooShortVideoError(ValidationError):
    """Video has fewer frames than one analysis window."""


class ContractViolationError(MicrospotError):
    """Caller broke an API contract (stale cache, overlapping detections, ...)."""


class ConsistencyError(MicrospotError):
    """Stored artifacts disagree with each other (features vs. windows, ...)."""
