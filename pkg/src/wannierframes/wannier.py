"""Wannier synthesis on the supercell and the frame / decay diagnostics.

The composite functions are the inverse Bloch transforms of the gauge
sections; the system {w_{j, gamma}} collects their cyclic lattice shifts
over the whole quotient group.  Diagnostics quantify the two properties
the constructions promise:

* completeness: either orthonormality of the full shifted system (Gram is
  the identity) or the Parseval identity ||f||^2 = sum |<f, w>|^2 on the
  band subspace (the system is a 1-tight frame there);
* localization: shell sup-norm profiles with a log-linear decay fit, an
  exponential-versus-power-law discrimination flag, and the slow-decay sum
  sum_gamma ||w(gamma)|| whose growth under supercell refinement witnesses
  an obstruction.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .bloch import (
    CellField,
    KField,
    _dft_axes,
    forward_transform,
    inverse_transform,
    random_cell_field,
)
from .errors import SizeMismatch, SupercellTooSmall
from .gauge import SectionFamily
from .spectral import BandSelection, ProjectorField

# shells beyond 3/4 of the max wrap-aware distance are excluded from decay
# fits: images from neighbouring supercells contaminate them first
FIT_WINDOW_FRACTION = 0.75
MIN_SHELLS = 4
# shells this far below the peak shell are transform roundoff, not signal;
# fitting through them would misclassify compactly supported functions
ZERO_FLOOR_RELATIVE = 1e-14


@dataclasses.dataclass(eq=False)
class WannierSet:
    """l composite functions on the supercell, one CellField each."""

    sizes: tuple[int, ...]
    functions: list[CellField]
    source_kind: str
    selection: BandSelection | None = None

    @property
    def count(self) -> int:
        return len(self.functions)


@dataclasses.dataclass(frozen=True, eq=False)
class DecayProfile:
    """Shell profile and decay fit for one composite function.

    shell_norms[r] = sqrt(sum of squared fiber norms over cells at
    wrap-aware sup-distance r).  fitted_rate is the alpha of the least
    squares fit log s_r ~ const - alpha r over the fit window;
    exponential_flag is True when that fit beats the power-law alternative
    log s_r ~ const - beta log r in residual, and compact_support marks
    profiles whose window contains shells at roundoff level relative to
    the peak (faster than any exponential; the fit is then degenerate and
    skipped).
    """

    shell_norms: np.ndarray
    fit_window: tuple[int, int]
    fitted_rate: float
    fit_r2: float
    power_r2: float
    exponential_flag: bool
    compact_support: bool
    slow_decay_sum: float


def synthesize_wannier(sections: SectionFamily, selection: BandSelection | None = None,
                       method: str = "direct") -> WannierSet:
    """Inverse transform of each section column."""
    grid = sections.grid
    functions = []
    for j in range(sections.count):
        field = KField(grid=grid, values=sections.section(j))
        functions.append(inverse_transform(field, method=method))
    return WannierSet(
        sizes=grid.sizes,
        functions=functions,
        source_kind=sections.kind,
        selection=selection,
    )


def shift_field(field: CellField, gamma) -> CellField:
    """The translate w(. - gamma) as a cyclic shift of the supercell."""
    gamma = tuple(int(g) for g in np.atleast_1d(gamma))
    if len(gamma) != len(field.sizes):
        raise SizeMismatch(
            f"shift {gamma} has wrong length for sizes {field.sizes}"
        )
    values = np.roll(field.values, gamma, axis=tuple(range(len(gamma))))
    return CellField(sizes=field.sizes, values=values)


def shifted_copies(wset: WannierSet, gamma) -> list[CellField]:
    """All l functions shifted by the same cell vector."""
    return [shift_field(f, gamma) for f in wset.functions]


def _stacked(wset: WannierSet) -> np.ndarray:
    """(l,) + sizes + (N,) array of all functions."""
    return np.stack([f.values for f in wset.functions], axis=0)


def gram_matrix(wset: WannierSet) -> np.ndarray:
    """Gram matrix of the full shifted system, indexed by (j, gamma) pairs.

    The system is shift-structured, so <w_{j,gamma}, w_{j',gamma'}> depends
    only on (j, j', gamma - gamma'); the correlations are computed once per
    offset and the dense matrix is assembled from them.  Row/column order
    is j major, flattened cell index minor.
    """
    sizes = wset.sizes
    ncells = math.prod(sizes)
    l = wset.count
    stack = _stacked(wset)

    corr = np.empty((l, l, ncells), dtype=complex)
    axes_cells = tuple(range(1, 1 + len(sizes)))
    sum_axes = tuple(range(1, 2 + len(sizes)))
    for flat, offset in enumerate(np.ndindex(*sizes)):
        rolled = np.roll(stack, offset, axis=axes_cells)
        # corr[j, j', delta] = <w_j, w_j' shifted by delta>
        corr[:, :, flat] = np.tensordot(
            np.conj(stack), rolled, axes=(sum_axes, sum_axes)
        )

    cell_indices = np.array(list(np.ndindex(*sizes)))
    diff = cell_indices[None, :, :] - cell_indices[:, None, :]
    diff %= np.array(sizes)[None, None, :]
    flat_diff = np.ravel_multi_index(
        tuple(diff[..., axis] for axis in range(len(sizes))), sizes
    )

    gram = np.empty((l * ncells, l * ncells), dtype=complex)
    for j in range(l):
        for jp in range(l):
            gram[
                j * ncells : (j + 1) * ncells, jp * ncells : (jp + 1) * ncells
            ] = corr[j, jp][flat_diff]
    return gram


def overlap_coefficients(wset: WannierSet, field: CellField, method: str = "direct") -> np.ndarray:
    """<w_{j, gamma}, f> for all j and gamma, shape (l,) + sizes.

    Uses the exact finite-group correlation identity: with
    c_j(k) = phi_j(k)^dagger f_hat(k), the overlap at shift gamma is the
    inverse transform of c_j evaluated at gamma.
    """
    if field.sizes != wset.sizes:
        raise SizeMismatch("field and Wannier set live on different supercells")
    stack = _stacked(wset)
    out = np.empty((wset.count,) + wset.sizes, dtype=complex)
    fhat = _dft_axes(field.values, wset.sizes, -1, method)
    for j in range(wset.count):
        phi_j = _dft_axes(stack[j], wset.sizes, -1, method)
        c_j = np.sum(np.conj(phi_j) * fhat, axis=-1)
        out[j] = _dft_axes(c_j, wset.sizes, +1, method)
    return out


def parseval_check(
    wset: WannierSet,
    proj: ProjectorField,
    trials: int = 50,
    rng_seed: int = 7,
    method: str = "direct",
) -> float:
    """Worst relative Parseval defect over random members of the band subspace.

    Each trial draws a complex Gaussian cell field, projects it into the
    band subspace (forward transform, apply P(k), inverse transform) and
    compares ||f||^2 with sum_{j, gamma} |<f, w_{j, gamma}>|^2.
    """
    grid = proj.grid
    if grid.sizes != wset.sizes:
        raise SizeMismatch("projector grid and Wannier set sizes differ")
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    for _ in range(trials):
        raw = random_cell_field(grid.sizes, proj.fiber_dim, rng)
        fhat = forward_transform(raw, grid, method=method)
        projected = KField(
            grid=grid, values=(proj.matrices @ fhat.values[..., None])[..., 0]
        )
        f = inverse_transform(projected, method=method)
        lhs = f.norm_sq()
        if lhs < 1e-12:
            continue
        overlaps = overlap_coefficients(wset, f, method=method)
        rhs = float(np.sum(np.abs(overlaps) ** 2))
        worst = max(worst, abs(lhs - rhs) / lhs)
    return worst


def _wrap_distance_shells(sizes: tuple[int, ...]) -> tuple[np.ndarray, int]:
    """Wrap-aware sup-norm distance of every cell from the origin."""
    axes = []
    for m in sizes:
        idx = np.arange(m)
        axes.append(np.minimum(idx, m - idx))
    mesh = np.meshgrid(*axes, indexing="ij")
    dist = np.maximum.reduce(mesh)
    return dist, int(dist.max())


def _fit_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least squares slope/intercept plus R^2 of y ~ a + b x."""
    coeffs = np.polyfit(x, y, 1)
    pred = np.polyval(coeffs, x)
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(coeffs[0]), ss_res, r2


def decay_profile(wset: WannierSet) -> list[DecayProfile]:
    """Shell norms, decay fits, and the slow-decay sum for every function."""
    sizes = wset.sizes
    dist, rmax = _wrap_distance_shells(sizes)
    if rmax < MIN_SHELLS:
        raise SupercellTooSmall(
            f"only {rmax} distance shells on supercell {sizes}; need {MIN_SHELLS}"
        )
    window_hi = int(math.floor(FIT_WINDOW_FRACTION * rmax))
    flat_dist = dist.ravel()

    profiles = []
    for f in wset.functions:
        cell_norm_sq = np.sum(np.abs(f.values) ** 2, axis=-1).ravel()
        shell_norms = np.sqrt(
            np.bincount(flat_dist, weights=cell_norm_sq, minlength=rmax + 1)
        )
        slow_sum = float(np.sqrt(cell_norm_sq).sum())

        window = shell_norms[1 : window_hi + 1]
        r = np.arange(1, window_hi + 1, dtype=float)
        if np.any(window <= ZERO_FLOOR_RELATIVE * shell_norms.max()):
            profiles.append(
                DecayProfile(
                    shell_norms=shell_norms,
                    fit_window=(1, window_hi),
                    fitted_rate=math.inf,
                    fit_r2=float("nan"),
                    power_r2=float("nan"),
                    exponential_flag=True,
                    compact_support=True,
                    slow_decay_sum=slow_sum,
                )
            )
            continue

        logs = np.log(window)
        slope_exp, res_exp, r2_exp = _fit_line(r, logs)
        _, res_pow, r2_pow = _fit_line(np.log(r), logs)
        profiles.append(
            DecayProfile(
                shell_norms=shell_norms,
                fit_window=(1, window_hi),
                fitted_rate=-slope_exp,
                fit_r2=r2_exp,
                power_r2=r2_pow,
                exponential_flag=res_exp <= res_pow,
                compact_support=False,
                slow_decay_sum=slow_sum,
            )
        )
    return profiles


def plancherel_residual(wset: WannierSet, sections: SectionFamily, method: str = "direct") -> float:
    """Worst relative defect of ||w_j||^2 against the weighted section norms."""
    grid = sections.grid
    worst = 0.0
    for j, f in enumerate(wset.functions):
        lhs = f.norm_sq()
        rhs = KField(grid=grid, values=sections.section(j)).norm_sq()
        worst = max(worst, abs(lhs - rhs) / max(lhs, 1e-300))
    return worst
