"""Exception types shared across the package.

DomainError covers data that violates a documented precondition; the CLI
maps it to exit code 1, while IO/usage problems map to exit code 2.
"""


class DomainError(Exception):
    pass


class BoundsError(DomainError):
    """A bounding box reaches outside its image."""


class PatchTooSmallError(DomainError):
    """An image is smaller than the requested patch size in some dimension."""


class InsufficientClassError(DomainError):
    """A class has fewer annotations than the split requires."""


class RankError(DomainError):
    """Input data is too degenerate to fit the requested model."""


class SingleClassError(DomainError):
    """A two-class fit received points from only one class."""
