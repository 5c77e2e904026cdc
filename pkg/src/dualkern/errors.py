"""Exception hierarchy shared by all dualkern modules."""


class DualkernError(Exception):
    """Base class for all errors raised by this package."""


class DuplicatePoints(DualkernError):
    """Two data sites coincide; separation radius would be zero."""


class UnsupportedSmoothness(DualkernError):
    """Requested a Matern smoothness the kernel evaluator cannot handle."""


class InvalidSubset(DualkernError):
    """Index subset contains duplicates or out-of-range entries."""


class NotPositiveDefinite(DualkernError):
    """A factorization found a nonpositive pivot or eigenvalue."""


class NoConvergence(DualkernError):
    """An iterative eigenvalue computation did not converge."""


class MaxIterationsExceeded(DualkernError):
    """Iterative solver hit its iteration cap before reaching tolerance."""


class SingularDiagonal(DualkernError):
    """Sparse triangular factor has a zero diagonal entry."""


class DegenerateRadius(DualkernError):
    """Footprint radius formula breaks down (fill distance >= 1)."""


class RankDeficientMoments(DualkernError):
    """Cluster moment matrix lost rank during the samplet QR pass."""


class WrongVariant(DualkernError):
    """Operation requires a different preconditioner variant."""
