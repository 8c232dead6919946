"""Band structures, gap-certified band windows, and spectral projectors.

The projector onto a contiguous, gap-isolated window of bands is computed
two independent ways:

* from the sorted eigensystem, P(k) = sum_{j in window} v_j v_j^dagger;
* as the resolvent contour integral P(k) = (1 / 2 pi i) oint (z - L(k))^{-1} dz
  over a circle enclosing exactly the window, discretized by the
  trapezoidal rule, which converges exponentially in the node count.

Both routes are gauge independent and must agree; the eigenvector phases
themselves carry no meaning.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .bloch import KGrid
from .errors import (
    ContourTouchesSpectrum,
    EigensolveFailure,
    GapViolation,
    SingularResolvent,
    SizeMismatch,
)
from .models import BlochOperatorFamily

CLEARANCE_RTOL = 1e-8
NODE_HIT_TOL = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class BandStructure:
    """Sorted eigensystem of L(k) over a momentum grid.

    eigenvalues: shape sizes + (N,), ascending along the last axis.
    eigenvectors: shape sizes + (N, N); column j belongs to eigenvalue j.
    """

    grid: KGrid
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def fiber_dim(self) -> int:
        return self.eigenvalues.shape[-1]


@dataclasses.dataclass(frozen=True)
class BandSelection:
    """A contiguous 1-based band window [first, last] with certified gaps."""

    first: int
    last: int
    gap_below: float
    gap_above: float
    interval: tuple[float, float]

    @property
    def rank(self) -> int:
        return self.last - self.first + 1


@dataclasses.dataclass(frozen=True, eq=False)
class ProjectorField:
    """The window projector P(k) at every grid point: shape sizes + (N, N)."""

    grid: KGrid
    matrices: np.ndarray
    rank: int

    @property
    def fiber_dim(self) -> int:
        return self.matrices.shape[-1]


@dataclasses.dataclass(frozen=True)
class Contour:
    """A circle in the complex energy plane, center on the real axis."""

    center: float
    radius: float

    def nodes(self, quad_order: int) -> np.ndarray:
        angles = 2.0 * np.pi * np.arange(quad_order) / quad_order
        return self.center + self.radius * np.exp(1.0j * angles)


def band_structure(family: BlochOperatorFamily, grid: KGrid) -> BandStructure:
    """Diagonalize L(k) at every grid point (ascending eigenvalues)."""
    if grid.lattice.dim != family.lattice.dim:
        raise SizeMismatch("grid and family live on lattices of different dimension")
    n = family.fiber_dim
    theta = grid.reduced().reshape(-1, grid.dim)
    mats = np.empty((theta.shape[0], n, n), dtype=complex)
    for row, th in enumerate(theta):
        mats[row] = family.evaluate_reduced(th)
    try:
        evals, evecs = np.linalg.eigh(mats)
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(f"eigh failed on the momentum grid: {exc}") from exc
    shape = grid.sizes
    return BandStructure(
        grid=grid,
        eigenvalues=evals.reshape(shape + (n,)),
        eigenvectors=evecs.reshape(shape + (n, n)),
    )


def select_bands(
    bands: BandStructure, first: int, last: int, min_gap: float = 0.0
) -> BandSelection:
    """Certify that bands [first, last] are isolated from the rest.

    The gap below is min_k lambda_first(k) - max_k lambda_{first-1}(k) and
    analogously above; a window touching its complement (gap <= min_gap)
    raises GapViolation.  Band indices are 1-based.
    """
    n = bands.fiber_dim
    if not (1 <= first <= last <= n):
        raise SizeMismatch(
            f"band window [{first}, {last}] out of range for {n} bands"
        )
    evals = bands.eigenvalues.reshape(-1, n)
    lo = first - 1
    hi = last - 1
    gap_below = math.inf
    if lo > 0:
        gap_below = float(evals[:, lo].min() - evals[:, lo - 1].max())
    gap_above = math.inf
    if hi < n - 1:
        gap_above = float(evals[:, hi + 1].min() - evals[:, hi].max())
    if gap_below <= min_gap:
        raise GapViolation("below", gap_below)
    if gap_above <= min_gap:
        raise GapViolation("above", gap_above)
    interval = (float(evals[:, lo].min()), float(evals[:, hi].max()))
    return BandSelection(
        first=first,
        last=last,
        gap_below=gap_below,
        gap_above=gap_above,
        interval=interval,
    )


def projector_field(bands: BandStructure, selection: BandSelection) -> ProjectorField:
    """P(k) from the selected eigenvector columns; gauge independent."""
    cols = slice(selection.first - 1, selection.last)
    vsel = bands.eigenvectors[..., :, cols]
    mats = vsel @ np.conj(np.swapaxes(vsel, -1, -2))
    return ProjectorField(grid=bands.grid, matrices=mats, rank=selection.rank)


def apply_frame_map(family: BlochOperatorFamily, field: ProjectorField) -> ProjectorField:
    """Conjugate P(k) into the family's wrap-continuous fiber coordinates.

    Families without a frame map are returned unchanged.  The conjugation
    is by a unitary at each k, so spectra, ranks, gaps, residual checks and
    topological invariants are untouched; only the smoothness of sections
    across the zone wrap (and hence Wannier decay) depends on the frame.
    """
    if family.frame_map is None:
        return field
    grid = field.grid
    n = field.fiber_dim
    theta = grid.reduced().reshape(-1, grid.dim)
    flat = field.matrices.reshape(-1, n, n)
    out = np.empty_like(flat)
    for row, th in enumerate(theta):
        w = family.frame_map(th)
        out[row] = w @ flat[row] @ w.conj().T
    return ProjectorField(
        grid=grid, matrices=out.reshape(grid.sizes + (n, n)), rank=field.rank
    )


def default_contour(selection: BandSelection) -> Contour:
    """Circle centred on the window, radius padded by half the tighter gap.

    With both gaps infinite (the whole spectrum selected) the padding falls
    back to max(1, width / 2).
    """
    lo, hi = selection.interval
    width = hi - lo
    pad = min(selection.gap_below, selection.gap_above)
    if not math.isfinite(pad):
        pad = max(1.0, width / 2.0) * 2.0
    return Contour(center=(lo + hi) / 2.0, radius=(width + pad) / 2.0)


def riesz_projector(
    family: BlochOperatorFamily,
    grid: KGrid,
    selection: BandSelection | None = None,
    contour: Contour | None = None,
    quad_order: int = 64,
) -> ProjectorField:
    """Window projector via trapezoidal quadrature of the resolvent integral.

    Preconditions checked at every grid point: the contour keeps a positive
    clearance from the spectrum (else ContourTouchesSpectrum), it encloses
    exactly the selected window when a selection is given (same error), and
    no quadrature node coincides with an eigenvalue (SingularResolvent).
    """
    if contour is None:
        if selection is None:
            raise ValueError("need a selection or an explicit contour")
        contour = default_contour(selection)
    if quad_order < 4:
        raise ValueError(f"quad_order must be >= 4, got {quad_order}")

    n = family.fiber_dim
    theta = grid.reduced().reshape(-1, grid.dim)
    npts = theta.shape[0]
    mats = np.empty((npts, n, n), dtype=complex)
    for row, th in enumerate(theta):
        mats[row] = family.evaluate_reduced(th)

    try:
        evals = np.linalg.eigvalsh(mats)
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(f"eigvalsh failed on the momentum grid: {exc}") from exc

    dist = np.abs(np.abs(evals - contour.center) - contour.radius)
    clearance = float(dist.min())
    if clearance < CLEARANCE_RTOL * max(1.0, contour.radius):
        flat = int(np.argmin(dist.min(axis=1)))
        raise ContourTouchesSpectrum(
            f"contour clearance {clearance:.3e} at grid index "
            f"{np.unravel_index(flat, grid.sizes)}",
            clearance=clearance,
        )
    inside = np.abs(evals - contour.center) < contour.radius
    counts = inside.sum(axis=1)
    if selection is not None:
        want = np.zeros(n, dtype=bool)
        want[selection.first - 1 : selection.last] = True
        if not np.all(inside == want):
            raise ContourTouchesSpectrum(
                "contour does not separate exactly the selected bands"
            )
        rank = selection.rank
    else:
        if counts.min() != counts.max():
            raise ContourTouchesSpectrum(
                "contour encloses a k-dependent number of eigenvalues"
            )
        rank = int(counts[0])

    nodes = contour.nodes(quad_order)
    node_dist = np.abs(nodes[None, :, None] - evals[:, None, :])
    if node_dist.min() < NODE_HIT_TOL:
        raise SingularResolvent(
            f"quadrature node within {node_dist.min():.3e} of an eigenvalue"
        )

    eye = np.eye(n, dtype=complex)
    shifted = nodes[None, :, None, None] * eye[None, None] - mats[:, None]
    resolvents = np.linalg.inv(shifted.reshape(-1, n, n)).reshape(npts, quad_order, n, n)
    phases = (nodes - contour.center) / quad_order
    proj = np.einsum("q,kqab->kab", phases.astype(complex), resolvents)
    return ProjectorField(
        grid=grid, matrices=proj.reshape(grid.sizes + (n, n)), rank=rank
    )
