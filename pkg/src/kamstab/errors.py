"""Exception hierarchy shared by every kamstab module."""

from __future__ import annotations


class KamstabError(Exception):
    """Base class; the CLI maps these to exit status 1."""


class NotHermitian(KamstabError, ValueError):
    pass


class NoConvergence(KamstabError, ArithmeticError):
    pass


class IllConditioned(KamstabError, ArithmeticError):
    pass


class Overflow(KamstabError, OverflowError):
    pass


class DomainError(KamstabError, ValueError):
    pass


class NotPositiveDefinite(KamstabError, ValueError):
    pass


class AmbiguousClustering(KamstabError, ValueError):
    """An eigenvalue spacing falls just above the merge tolerance."""


class NotRobust(KamstabError, ValueError):
    """The observable is not a polynomial in the reference operator."""


class DimensionMismatch(KamstabError, ValueError):
    pass


class LevelCrossing(KamstabError, ArithmeticError):
    """Perturbed eigenvectors cannot be matched to unperturbed clusters."""


class SingularOverlap(KamstabError, ArithmeticError):
    pass


class InvalidBound(KamstabError, ValueError):
    pass


class UnnormalizedState(KamstabError, ValueError):
    pass


class NotPositive(KamstabError, ValueError):
    pass


class NotState(KamstabError, ValueError):
    pass


class PositivityLost(KamstabError, ArithmeticError):
    def __init__(self, t: float, min_eig: float):
        super().__init__(f"state lost strict positivity at t={t!r} (min eigenvalue {min_eig:.3e})")
        self.t = t
        self.min_eig = min_eig


class SiteOutOfRange(KamstabError, ValueError):
    pass


class DuplicateSite(KamstabError, ValueError):
    pass


class ConfigError(KamstabError, ValueError):
    """Invalid experiment configuration; ``field`` is the dotted path at fault."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ParseError(KamstabError, ValueError):
    pass


class DegenerateTrivial(UserWarning):
    """Raised as a warning: with a single eigenvalue every operator commutes."""
