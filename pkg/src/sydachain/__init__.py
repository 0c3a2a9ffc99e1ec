"""Dual-autoencoder motion retargeting with transferability-ranked mapping chains."""

__version__ = "0.1.0"


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""
