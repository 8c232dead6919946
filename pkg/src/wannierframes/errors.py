"""Exception taxonomy shared by all modules.

Every failure mode that callers are expected to branch on gets its own
class; generic misuse (wrong types, impossible arguments) stays with the
builtin ValueError/TypeError.
"""

from __future__ import annotations


class WannierFramesError(Exception):
    """Base class for all package-specific failures."""


class InvalidSpec(WannierFramesError):
    """A model specification is malformed or inconsistent."""


class SizeMismatch(WannierFramesError):
    """Two objects that must share grid/fiber dimensions do not."""


class EigensolveFailure(WannierFramesError):
    """The dense eigensolver did not converge at some grid point."""


class GapViolation(WannierFramesError):
    """The requested band window touches or overlaps its complement.

    Attributes
    ----------
    position : which edge failed, "below" or "above"
    overlap : float, the (non-positive or sub-tolerance) gap value found
    """

    def __init__(self, position: str, overlap: float):
        self.position = position
        self.overlap = float(overlap)
        super().__init__(
            f"band selection not gap-isolated {position}: gap = {overlap:.6e}"
        )


class ContourTouchesSpectrum(WannierFramesError):
    """A resolvent contour passes too close to (or mis-separates) the spectrum."""

    def __init__(self, message: str, clearance: float | None = None):
        self.clearance = clearance
        super().__init__(message)


class SingularResolvent(WannierFramesError):
    """A quadrature node landed on an eigenvalue; the resolvent is singular."""


class NotTwoDimensional(WannierFramesError):
    """A topology operation that needs a 2-torus base received another dimension."""


class UnresolvedField(WannierFramesError):
    """The lattice field strength is not resolved on this grid.

    Raised when a plaquette phase leaves the admissible branch window or a
    link variable collapses; the caller should refine the grid.
    """

    def __init__(self, message: str, k_index: tuple | None = None):
        self.k_index = k_index
        super().__init__(message)


class ObstructionDetected(WannierFramesError):
    """A smooth periodic gauge cannot exist; holonomy winding is nonzero.

    Attributes
    ----------
    winding : int, the integer winding found while closing the gauge
    """

    def __init__(self, winding: int, message: str | None = None):
        self.winding = int(winding)
        super().__init__(
            message
            or f"no smooth periodic gauge: holonomy winding = {winding}"
        )


class DegenerateFamily(WannierFramesError):
    """A family of sections became (numerically) linearly dependent."""

    def __init__(self, k_index: tuple, sigma_min: float):
        self.k_index = k_index
        self.sigma_min = float(sigma_min)
        super().__init__(
            f"sections degenerate at grid index {k_index}: "
            f"smallest singular value {sigma_min:.3e}"
        )


class SpanningFailure(WannierFramesError):
    """Projected seed vectors fail to span the fiber at some grid point.

    Attributes
    ----------
    min_margin : float, worst m-th singular value of the projected seeds
    argmin_k : grid index where the minimum is attained
    """

    def __init__(self, min_margin: float, argmin_k: tuple):
        self.min_margin = float(min_margin)
        self.argmin_k = tuple(argmin_k)
        super().__init__(
            f"seed sections do not span the band fiber: "
            f"min margin {min_margin:.3e} at grid index {argmin_k}"
        )


class IllConditioned(WannierFramesError):
    """The frame operator is too ill-conditioned to invert on its range."""

    def __init__(self, k_index: tuple, condition: float):
        self.k_index = k_index
        self.condition = float(condition)
        super().__init__(
            f"frame operator condition {condition:.3e} exceeds limit "
            f"at grid index {k_index}"
        )


class SupercellTooSmall(WannierFramesError):
    """The supercell has too few distance shells for a decay fit."""


class ConfigError(WannierFramesError):
    """A run configuration failed to parse or validate."""
