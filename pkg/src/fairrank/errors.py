"""Exception types shared across the toolkit."""


class FairrankError(Exception):
    """Base class for all toolkit errors."""


class InputError(FairrankError):
    """Invalid or malformed user input (maps to CLI exit code 2 / HTTP 422)."""


class ProjectRejectedError(InputError):
    """Project failed the dataset acceptance filter."""


class GenderInferenceError(FairrankError):
    """Base class for gender-inference client failures."""


class TransportError(GenderInferenceError):
    """Network-level failure talking to the inference API; retriable."""


class QuotaExceededError(GenderInferenceError):
    """The inference API reported an exhausted quota; terminal."""
