"""Exception types shared across the toolkit."""


class DivrError(Exception):
    """Base class for all toolkit errors."""


class EmptyTextError(DivrError):
    """Raised when a text contains no tokens (empty or whitespace-only)."""


class InvalidWeightsError(DivrError):
    """Raised when diversity weights are negative or do not sum to 1."""


class InvalidParameterError(DivrError):
    """Raised for out-of-range configuration values."""


class DegenerateRatingsError(DivrError):
    """Raised when calibration ratings have zero variance."""


class InsufficientDataError(DivrError):
    """Raised when too few samples are supplied for calibration."""


class InvalidScoreError(DivrError):
    """Raised when a reward component lies outside [0, 1]."""


class MissingRoleAnswerError(DivrError):
    """Raised when a role required by the ground truth has no answer."""


class EmptyGroupError(DivrError):
    """Raised when an operation over a rollout group receives no members."""


class TransportError(DivrError):
    """Raised when an endpoint request fails after exhausting retries."""


class ProtocolError(DivrError):
    """Raised when an endpoint response body cannot be interpreted."""


class BudgetExceededError(DivrError):
    """Raised when a decode segment never reaches the end-of-thinking delimiter."""


class RoleParseError(DivrError):
    """Raised when no usable role list can be parsed from model output."""


class NoValidPathsError(DivrError):
    """Raised when answer extraction fails for every sampled reasoning path."""


class InsufficientRolesError(DivrError):
    """Raised when fewer roles are available than an operation requires."""


class MissingOutputError(DivrError):
    """Raised when an evaluation dataset record has no model output."""


class DegenerateVarianceError(DivrError):
    """Raised when a correlation input has zero variance."""
