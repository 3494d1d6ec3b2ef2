"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument violates a documented precondition or invariant."""


class DataFormatError(ValueError):
    """An input file or document does not match its declared schema."""
