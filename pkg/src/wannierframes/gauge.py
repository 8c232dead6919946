"""Gauge constructions: smooth orthonormal bases and canonical tight frames.

All constructions produce a SectionFamily: l vectors per grid momentum,
stored as the columns of an N x l matrix.  Three of them target the range
of a projector field P(k):

* ``parallel_transport_gauge`` builds an orthonormal basis (l = m) by
  discrete parallel transport, then removes the loop holonomies so the
  result is periodic and as smooth as the grid allows.  When the bundle is
  obstructed the k1-holonomy phase winds a nonzero number of times and no
  periodic correction exists; this raises ObstructionDetected.
* ``canonical_tight_frame`` projects l >= m constant orthonormal ambient
  seeds s_j and normalizes by the inverse square root of the frame operator
  F(k) = sum_j P s_j s_j^dagger P on its range, phi_j = F^{-1/2} P s_j.
  Equivalently (and this is how it is computed) the section matrix is the
  polar factor of P(k) S: if P S = U Sigma V^dagger then Phi = U_m V_m^dagger,
  so sum_j phi_j phi_j^dagger = P holds by construction wherever the seeds
  span the fiber.
* ``discontinuous_control_gauge`` is the deliberately naive m = 1 gauge
  (largest component rotated to the positive real axis), kept as a negative
  control: it is measurable, bounded, and generically discontinuous.

``seed_sections`` manufactures the constant seeds and reports the spanning
margin min_k sigma_m(P(k) S) and the frame-operator conditioning, and
``orthonormalize_family`` is the per-k Gram-Schmidt used on raw families.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg

from .bloch import KGrid
from .errors import (
    DegenerateFamily,
    IllConditioned,
    InvalidSpec,
    ObstructionDetected,
    SizeMismatch,
    SpanningFailure,
)
from .spectral import ProjectorField

SPANNING_THRESHOLD = 1e-6
CONDITION_LIMIT = 1e8
DEGENERACY_FLOOR = 1e-8

KIND_ORTHONORMAL = "orthonormal_basis"
KIND_TIGHT_FRAME = "tight_frame"
KIND_RAW_SEED = "raw_seed"
KIND_CONTROL = "discontinuous_control"


@dataclasses.dataclass(eq=False)
class SectionFamily:
    """l sections of the fiber bundle over the momentum grid.

    vectors: shape sizes + (N, l); column j is phi_j(k).
    """

    grid: KGrid
    vectors: np.ndarray
    kind: str

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=complex)
        if self.vectors.shape[: self.grid.dim] != self.grid.sizes:
            raise SizeMismatch(
                f"section array shape {self.vectors.shape} does not start with "
                f"grid sizes {self.grid.sizes}"
            )
        if self.vectors.ndim != self.grid.dim + 2:
            raise SizeMismatch("section array must have shape sizes + (N, l)")

    @property
    def count(self) -> int:
        return self.vectors.shape[-1]

    @property
    def fiber_dim(self) -> int:
        return self.vectors.shape[-2]

    def section(self, j: int) -> np.ndarray:
        """Values of section j, shape sizes + (N,)."""
        return self.vectors[..., :, j]


@dataclasses.dataclass(frozen=True, eq=False)
class FrameOperatorDiagnostics:
    """Spanning margin and conditioning of the projected-seed frame operator.

    margins[k] = sigma_m(P(k) S); conditions[k] = (sigma_1 / sigma_m)^2,
    the condition number of F(k) restricted to range P(k).
    """

    margins: np.ndarray
    conditions: np.ndarray
    min_margin: float
    argmin_k: tuple
    threshold: float

    @property
    def spanning(self) -> bool:
        return self.min_margin >= self.threshold


def _polar(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Closest matrix with orthonormal columns, plus the smallest singular value."""
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return u @ vh, float(s[-1])


def _inband_frame(matrix: np.ndarray, rank: int) -> np.ndarray:
    """Any orthonormal basis of range P at a single point (eigh gauge)."""
    _, evecs = np.linalg.eigh(matrix)
    return evecs[:, matrix.shape[0] - rank :]


def _transport_step(proj_mat: np.ndarray, frame: np.ndarray, k_index: tuple) -> np.ndarray:
    moved, sigma = _polar(proj_mat @ frame)
    if sigma < DEGENERACY_FLOOR:
        raise DegenerateFamily(k_index, sigma)
    return moved


def _unitary_log(h: np.ndarray) -> np.ndarray:
    """Hermitian Theta with h = exp(i Theta), principal branch."""
    theta = -1.0j * scipy.linalg.logm(h)
    return 0.5 * (theta + theta.conj().T)


def _close_line(frames: np.ndarray, proj_line: np.ndarray, axis_len: int) -> np.ndarray:
    """Distribute the loop holonomy of a transported line so it closes.

    frames: (M, N, m) transported along a periodic line; returns the
    corrected frames with frames[M] == frames[0] after one more step.
    """
    m = frames.shape[-1]
    wrapped = _transport_step(proj_line[0], frames[-1], (0,))
    holonomy = frames[0].conj().T @ wrapped
    steps = np.arange(axis_len) / axis_len
    if m == 1:
        phase = np.angle(holonomy[0, 0])
        corrections = np.exp(-1.0j * phase * steps)[:, None, None]
        return frames * corrections
    theta = _unitary_log(holonomy)
    out = np.empty_like(frames)
    for i in range(axis_len):
        out[i] = frames[i] @ scipy.linalg.expm(-1.0j * theta * steps[i])
    return out


def parallel_transport_gauge(proj: ProjectorField) -> SectionFamily:
    """Smooth periodic orthonormal basis of range P(k) (trivial bundles only).

    1D: transport along the line, then spread the loop holonomy uniformly.
    2D: transport and close the j2 = 0 line along k1, transport each column
    along k2, then remove the column holonomies.  The column holonomy
    phases form a closed loop over k1; their total winding is the
    obstruction and must vanish, otherwise ObstructionDetected is raised
    with that winding.
    """
    m = proj.rank
    sizes = proj.grid.sizes
    mats = proj.matrices

    if proj.grid.dim == 1:
        m0 = sizes[0]
        frames = np.empty((m0,) + mats.shape[1:][:1] + (m,), dtype=complex)
        frames[0] = _inband_frame(mats[0], m)
        for i in range(1, m0):
            frames[i] = _transport_step(mats[i], frames[i - 1], (i,))
        frames = _close_line(frames, mats, m0)
        return SectionFamily(grid=proj.grid, vectors=frames, kind=KIND_ORTHONORMAL)

    if proj.grid.dim != 2:
        raise InvalidSpec(f"unsupported base dimension {proj.grid.dim}")

    m1, m2 = sizes
    n = proj.fiber_dim
    frames = np.empty((m1, m2, n, m), dtype=complex)

    frames[0, 0] = _inband_frame(mats[0, 0], m)
    for i in range(1, m1):
        frames[i, 0] = _transport_step(mats[i, 0], frames[i - 1, 0], (i, 0))
    frames[:, 0] = _close_line(frames[:, 0], mats[:, 0], m1)

    for j in range(1, m2):
        for i in range(m1):
            frames[i, j] = _transport_step(mats[i, j], frames[i, j - 1], (i, j))

    # column holonomies h_i; for m = 1 lift their phases continuously in i
    # and read off the total winding, the discrete Chern obstruction
    holonomies = np.empty((m1, m, m), dtype=complex)
    for i in range(m1):
        wrapped = _transport_step(mats[i, 0], frames[i, m2 - 1], (i, 0))
        holonomies[i] = frames[i, 0].conj().T @ wrapped

    if m == 1:
        h = holonomies[:, 0, 0]
        lifted = np.empty(m1)
        lifted[0] = np.angle(h[0])
        for i in range(1, m1):
            lifted[i] = lifted[i - 1] + np.angle(h[i] * np.conj(h[i - 1]))
        drift = lifted[m1 - 1] + np.angle(h[0] * np.conj(h[m1 - 1])) - lifted[0]
        winding = int(round(drift / (2.0 * np.pi)))
        if winding != 0:
            raise ObstructionDetected(winding)
        steps = np.arange(m2) / m2
        frames = frames * np.exp(-1.0j * lifted[:, None] * steps[None, :])[..., None, None]
    else:
        dets = np.linalg.det(holonomies)
        lifted = np.cumsum(
            np.concatenate(
                [[np.angle(dets[0])], np.angle(dets[1:] * np.conj(dets[:-1]))]
            )
        )
        drift = lifted[-1] + np.angle(dets[0] * np.conj(dets[-1])) - lifted[0]
        winding = int(round(drift / (2.0 * np.pi)))
        if winding != 0:
            raise ObstructionDetected(winding)
        # principal-branch correction per column; adequate while the column
        # holonomies stay away from -1, which the smoothness certificate
        # of the caller monitors
        steps = np.arange(m2) / m2
        for i in range(m1):
            theta = _unitary_log(holonomies[i])
            for j in range(m2):
                frames[i, j] = frames[i, j] @ scipy.linalg.expm(-1.0j * theta * steps[j])

    return SectionFamily(grid=proj.grid, vectors=frames, kind=KIND_ORTHONORMAL)


def orthonormalize_family(family: SectionFamily) -> SectionFamily:
    """Per-k modified Gram-Schmidt with positive normalization.

    Preserves the span and, where the input is smooth and uniformly
    non-degenerate, the smoothness; already-orthonormal input passes
    through unchanged (up to roundoff).  Raises DegenerateFamily when the
    stacked sections lose rank anywhere on the grid.
    """
    vecs = family.vectors
    if family.count > family.fiber_dim:
        raise InvalidSpec(
            f"cannot orthonormalize {family.count} sections in a fiber of "
            f"dimension {family.fiber_dim}"
        )
    sigmas = np.linalg.svd(vecs, compute_uv=False)
    sigma_min = float(sigmas[..., -1].min())
    if sigma_min < DEGENERACY_FLOOR:
        flat = int(np.argmin(sigmas[..., -1]))
        raise DegenerateFamily(
            tuple(np.unravel_index(flat, family.grid.sizes)), sigma_min
        )
    out = vecs.copy()
    l = family.count
    for j in range(l):
        for prev in range(j):
            overlap = np.sum(np.conj(out[..., :, prev]) * out[..., :, j], axis=-1)
            out[..., :, j] -= overlap[..., None] * out[..., :, prev]
        norm = np.linalg.norm(out[..., :, j], axis=-1)
        out[..., :, j] /= norm[..., None]
    return SectionFamily(grid=family.grid, vectors=out, kind=family.kind)


def seed_sections(
    proj: ProjectorField,
    count: int,
    strategy: str = "canonicalBasis",
    rng_seed: int = 0,
    threshold: float = SPANNING_THRESHOLD,
) -> tuple[SectionFamily, FrameOperatorDiagnostics]:
    """l constant orthonormal ambient seeds plus spanning diagnostics.

    The seeds are k-independent vectors of the ambient fiber (their
    sections of the trivial bundle); the diagnostics measure how well
    their projections span range P(k).  A margin below ``threshold``
    anywhere raises SpanningFailure, and the caller escalates l.
    """
    n = proj.fiber_dim
    m = proj.rank
    if not (m <= count <= n):
        raise InvalidSpec(
            f"seed count must satisfy rank {m} <= l <= fiber dim {n}, got {count}"
        )
    if strategy == "canonicalBasis":
        seeds = np.eye(n, dtype=complex)[:, :count]
    elif strategy == "randomDeterministic":
        rng = np.random.default_rng(rng_seed)
        raw = rng.standard_normal((n, count)) + 1.0j * rng.standard_normal((n, count))
        seeds, _ = np.linalg.qr(raw)
        # canonical column phases: largest component real positive
        for j in range(count):
            pivot = seeds[np.argmax(np.abs(seeds[:, j])), j]
            seeds[:, j] *= np.conj(pivot) / abs(pivot)
    else:
        raise InvalidSpec(f"unknown seed strategy '{strategy}'")

    vectors = np.broadcast_to(seeds, proj.grid.sizes + (n, count)).copy()
    family = SectionFamily(grid=proj.grid, vectors=vectors, kind=KIND_RAW_SEED)

    projected = proj.matrices @ seeds
    sigmas = np.linalg.svd(projected, compute_uv=False)
    margins = sigmas[..., m - 1]
    with np.errstate(divide="ignore"):
        conditions = (sigmas[..., 0] / margins) ** 2
    min_margin = float(margins.min())
    argmin_k = tuple(np.unravel_index(int(np.argmin(margins)), proj.grid.sizes))
    diagnostics = FrameOperatorDiagnostics(
        margins=margins,
        conditions=conditions,
        min_margin=min_margin,
        argmin_k=argmin_k,
        threshold=threshold,
    )
    if min_margin < threshold:
        raise SpanningFailure(min_margin, argmin_k)
    return family, diagnostics


def canonical_tight_frame(
    proj: ProjectorField,
    seeds: SectionFamily,
    threshold: float = SPANNING_THRESHOLD,
    condition_limit: float = CONDITION_LIMIT,
) -> SectionFamily:
    """Normalized projected seeds phi_j = F^{-1/2} P s_j (see module docstring).

    Frame-operator eigenvalues below threshold^2 are never inverted: they
    signal a spanning failure.  A frame operator with range condition
    number above ``condition_limit`` raises IllConditioned.
    """
    if seeds.grid.sizes != proj.grid.sizes:
        raise SizeMismatch("seed family and projector field live on different grids")
    m = proj.rank
    projected = proj.matrices @ seeds.vectors
    u, s, vh = np.linalg.svd(projected, full_matrices=False)
    margins = s[..., m - 1]
    if margins.min() < threshold:
        flat = int(np.argmin(margins))
        raise SpanningFailure(
            float(margins.min()), tuple(np.unravel_index(flat, proj.grid.sizes))
        )
    conditions = (s[..., 0] / margins) ** 2
    if conditions.max() > condition_limit:
        flat = int(np.argmax(conditions))
        raise IllConditioned(
            tuple(np.unravel_index(flat, proj.grid.sizes)), float(conditions.max())
        )
    phi = u[..., :, :m] @ vh[..., :m, :]
    return SectionFamily(grid=proj.grid, vectors=phi, kind=KIND_TIGHT_FRAME)


def discontinuous_control_gauge(proj: ProjectorField) -> SectionFamily:
    """Per-point normalized eigenvector with the naive phase rule (m = 1 only).

    The phase of the largest-magnitude component is rotated away at every
    grid point independently.  No attempt at continuity is made; on an
    obstructed bundle (and generically on any bundle) the result jumps
    between neighbouring momenta.
    """
    if proj.rank != 1:
        raise InvalidSpec(
            f"control gauge is defined for rank 1 projectors, got rank {proj.rank}"
        )
    n = proj.fiber_dim
    _, evecs = np.linalg.eigh(proj.matrices)
    v = evecs[..., :, n - 1]
    pivots = np.argmax(np.abs(v), axis=-1)
    pivot_vals = np.take_along_axis(v, pivots[..., None], axis=-1)[..., 0]
    v = v * (np.conj(pivot_vals) / np.abs(pivot_vals))[..., None]
    return SectionFamily(grid=proj.grid, vectors=v[..., :, None], kind=KIND_CONTROL)


# ---------------------------------------------------------------------------
# residual measures used by checks and reports
# ---------------------------------------------------------------------------

def membership_residual(family: SectionFamily, proj: ProjectorField) -> float:
    """max over k and j of ||phi_j - P phi_j||."""
    diff = family.vectors - proj.matrices @ family.vectors
    return float(np.linalg.norm(diff, axis=-2).max())


def frame_identity_residual(family: SectionFamily, proj: ProjectorField) -> float:
    """max over k of ||sum_j phi_j phi_j^dagger - P||_F."""
    outer = family.vectors @ np.conj(np.swapaxes(family.vectors, -1, -2))
    diff = outer - proj.matrices
    return float(np.sqrt(np.sum(np.abs(diff) ** 2, axis=(-2, -1))).max())


def gram_identity_residual(family: SectionFamily) -> float:
    """max over k of ||Phi^dagger Phi - I||_F (pointwise orthonormality)."""
    gram = np.conj(np.swapaxes(family.vectors, -1, -2)) @ family.vectors
    eye = np.eye(family.count)
    return float(np.sqrt(np.sum(np.abs(gram - eye) ** 2, axis=(-2, -1))).max())


def max_bond_jump(family: SectionFamily) -> float:
    """Largest nearest-neighbour jump max ||Phi(k + delta) - Phi(k)||_F.

    The smoothness certificate: under grid refinement this must shrink
    proportionally to the spacing for a family sampling a smooth gauge.
    """
    worst = 0.0
    for axis in range(family.grid.dim):
        diff = np.roll(family.vectors, -1, axis=axis) - family.vectors
        jumps = np.sqrt(np.sum(np.abs(diff) ** 2, axis=(-2, -1)))
        worst = max(worst, float(jumps.max()))
    return worst
