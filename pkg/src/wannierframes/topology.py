"""Topological classification of a projector field on the 2-torus.

The first Chern number is computed from plaquette link variables: at each
bond, U = det(W(k)^dagger W(k')) with W any orthonormal in-band frame, and
the plaquette field strength is the argument of the oriented product of the
four bond links.  Each plaquette argument must stay inside the principal
branch with margin 0.2, otherwise the grid does not resolve the field and
the computation refuses to answer.  Gauge changes multiply each link by a
unit factor that cancels around every plaquette, so the result is exactly
gauge independent, and the total lattice field strength is 2 pi times an
integer up to float rounding.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import NotTwoDimensional, UnresolvedField
from .spectral import ProjectorField

PHASE_GUARD = np.pi - 0.2
LINK_FLOOR = 1e-8
INTEGRALITY_TOL = 1e-6
MIN_GRID = 12

_VERDICTS = ("trivial", "obstructed", "undetermined")


@dataclasses.dataclass(frozen=True)
class TopologyReport:
    """Verdict on whether the band subbundle admits a smooth periodic basis.

    frame_bounds = (m, 2^n * m) brackets the number of generators any
    spanning construction needs; type_bound = 2^n bounds the redundancy
    ratio.  minimal_l_estimate is m when trivial, m + 1 as the first
    candidate when obstructed, None when undetermined.
    """

    dim: int
    rank: int
    chern: int | None
    verdict: str
    type_bound: int
    frame_bounds: tuple[int, int]
    minimal_l_estimate: int | None


def _inband_frames(proj: ProjectorField) -> np.ndarray:
    """Orthonormal bases of range P(k), shape (..., N, m), via eigh.

    Any smooth-in-k choice is unnecessary here: links are computed from
    determinants, which are gauge covariant, so eigh's arbitrary per-point
    gauge is harmless.
    """
    n = proj.fiber_dim
    m = proj.rank
    evals, evecs = np.linalg.eigh(proj.matrices)
    top = evals[..., n - m :]
    if top.min() < 0.5:
        raise UnresolvedField(
            f"projector field rank deficient: in-band eigenvalue {top.min():.3e}"
        )
    if n > m and evals[..., : n - m].max() > 0.5:
        raise UnresolvedField(
            "projector field has spurious in-band weight outside the window"
        )
    return evecs[..., :, n - m :]


def chern_number(proj: ProjectorField, phase_guard: float = PHASE_GUARD) -> int:
    """First Chern number of the projector field over the momentum torus."""
    if proj.grid.dim != 2:
        raise NotTwoDimensional(
            f"chern_number needs a 2D grid, got dimension {proj.grid.dim}"
        )
    m1, m2 = proj.grid.sizes
    if m1 < MIN_GRID or m2 < MIN_GRID:
        raise UnresolvedField(
            f"grid {m1}x{m2} below the minimum {MIN_GRID}x{MIN_GRID}"
        )

    frames = _inband_frames(proj)
    link1 = np.linalg.det(
        np.einsum("ijab,ijac->ijbc", np.conj(frames), np.roll(frames, -1, axis=0))
    )
    link2 = np.linalg.det(
        np.einsum("ijab,ijac->ijbc", np.conj(frames), np.roll(frames, -1, axis=1))
    )
    smallest = min(np.abs(link1).min(), np.abs(link2).min())
    if smallest < LINK_FLOOR:
        raise UnresolvedField(
            f"link variable collapsed to {smallest:.3e}; grid too coarse"
        )

    # plaquette traversed axis-1 bond first; with this orientation the
    # lowest flux-p/q band carries the multiplicative inverse of p mod q
    loop = (
        link2
        * np.roll(link1, -1, axis=1)
        * np.conj(np.roll(link2, -1, axis=0))
        * np.conj(link1)
    )
    field = np.angle(loop)
    worst = float(np.abs(field).max())
    if worst >= phase_guard:
        flat = int(np.argmax(np.abs(field)))
        raise UnresolvedField(
            f"plaquette phase {worst:.3f} exceeds the branch guard "
            f"{phase_guard:.3f}",
            k_index=tuple(np.unravel_index(flat, field.shape)),
        )

    total = float(field.sum()) / (2.0 * np.pi)
    rounded = round(total)
    if abs(total - rounded) > INTEGRALITY_TOL:
        raise UnresolvedField(
            f"lattice field strength sums to {total:.8f}, not an integer"
        )
    return int(rounded)


def triviality_verdict(proj: ProjectorField) -> TopologyReport:
    """Classify the band subbundle as trivial / obstructed / undetermined."""
    n = proj.grid.dim
    m = proj.rank
    type_bound = 2 ** n
    frame_bounds = (m, type_bound * m)
    if n == 1:
        return TopologyReport(
            dim=n,
            rank=m,
            chern=None,
            verdict="trivial",
            type_bound=type_bound,
            frame_bounds=frame_bounds,
            minimal_l_estimate=m,
        )
    try:
        chern = chern_number(proj)
    except UnresolvedField:
        return TopologyReport(
            dim=n,
            rank=m,
            chern=None,
            verdict="undetermined",
            type_bound=type_bound,
            frame_bounds=frame_bounds,
            minimal_l_estimate=None,
        )
    if chern == 0:
        verdict = "trivial"
        estimate = m
    else:
        verdict = "obstructed"
        estimate = min(m + 1, type_bound * m)
    return TopologyReport(
        dim=n,
        rank=m,
        chern=chern,
        verdict=verdict,
        type_bound=type_bound,
        frame_bounds=frame_bounds,
        minimal_l_estimate=estimate,
    )
