"""Exception types raised across the package."""


class HonestSetsError(Exception):
    """Base class for package errors."""


class InvalidInputError(HonestSetsError, ValueError):
    """Non-finite or malformed input arrays."""


class DomainError(HonestSetsError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class DegenerateInputError(HonestSetsError, ValueError):
    """Inputs for which the construction has no meaningful answer."""


class CalibrationError(HonestSetsError, RuntimeError):
    """A Monte-Carlo calibration cannot be carried out reliably."""
