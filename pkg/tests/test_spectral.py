"""Band structure, gap certification, and the two projector routes.

The eigendecomposition route and the resolvent-quadrature route are
independent implementations of the same projector; they must agree to
quadrature accuracy.  The frame-map conjugation must change nothing that
is unitarily invariant and must remove the artificial discontinuity of
plane-wave projectors across the zone wrap.
"""

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from conftest import COSINE, HALDANE_TOPO, HALDANE_TRIVIAL, band_projector

from wannierframes.bloch import KGrid
from wannierframes.errors import ContourTouchesSpectrum, GapViolation
from wannierframes.models import ModelSpec, build_model
from wannierframes.spectral import (
    Contour,
    apply_frame_map,
    band_structure,
    default_contour,
    projector_field,
    riesz_projector,
    select_bands,
)


def test_band_structure_matches_pointwise_scipy():
    family = build_model(HALDANE_TOPO)
    grid = KGrid(family.lattice, (6, 6))
    bands = band_structure(family, grid)
    for idx in np.ndindex(6, 6):
        theta = grid.reduced()[idx]
        evals = scipy.linalg.eigvalsh(family.evaluate_reduced(theta))
        assert np.max(np.abs(bands.eigenvalues[idx] - evals)) < 1e-12
        # columns diagonalize: V^dag H V is the eigenvalue diagonal
        v = bands.eigenvectors[idx]
        h = family.evaluate_reduced(theta)
        diag = np.conj(v.T) @ h @ v
        assert np.max(np.abs(diag - np.diag(bands.eigenvalues[idx]))) < 1e-11


def test_select_bands_reports_indirect_gaps():
    family = build_model(HALDANE_TRIVIAL)
    grid = KGrid(family.lattice, (12, 12))
    bands = band_structure(family, grid)
    sel = select_bands(bands, 1, 1)
    evals = bands.eigenvalues
    want_gap = float(evals[..., 1].min() - evals[..., 0].max())
    assert sel.gap_above == pytest.approx(want_gap)
    assert np.isinf(sel.gap_below)
    assert sel.rank == 1
    assert sel.interval[0] == pytest.approx(float(evals[..., 0].min()))
    assert sel.interval[1] == pytest.approx(float(evals[..., 0].max()))


def test_select_bands_rejects_touching_bands():
    # the free 1D operator: bands 1 and 2 are degenerate at the zone edge
    family = build_model(ModelSpec("schrodinger1d", {"g_max": 4}))
    grid = KGrid(family.lattice, (8,))
    bands = band_structure(family, grid)
    with pytest.raises(GapViolation):
        select_bands(bands, 1, 1)


def test_select_bands_enforces_min_gap():
    family = build_model(COSINE)
    grid = KGrid(family.lattice, (16,))
    bands = band_structure(family, grid)
    select_bands(bands, 1, 1)  # fine without a floor
    with pytest.raises(GapViolation):
        select_bands(bands, 1, 1, min_gap=1e6)


def test_projector_algebra():
    family, grid, bands, sel, pfield = band_projector(HALDANE_TOPO, (8, 8))
    p = pfield.matrices
    assert np.max(np.abs(p @ p - p)) < 1e-12
    assert np.max(np.abs(p - np.conj(np.swapaxes(p, -1, -2)))) < 1e-12
    traces = np.trace(p, axis1=-2, axis2=-1)
    assert np.max(np.abs(traces - sel.rank)) < 1e-12
    for idx in np.ndindex(4, 4):
        h = family.evaluate_reduced(grid.reduced()[idx])
        assert np.max(np.abs(p[idx] @ h - h @ p[idx])) < 1e-11


def test_riesz_matches_eigendecomposition():
    family = build_model(HALDANE_TOPO)
    grid = KGrid(family.lattice, (12, 12))
    bands = band_structure(family, grid)
    sel = select_bands(bands, 1, 1)
    eig = projector_field(bands, sel)
    riesz = riesz_projector(family, grid, sel, quad_order=64)
    assert np.max(np.abs(eig.matrices - riesz.matrices)) < 1e-7
    p = riesz.matrices
    assert np.max(np.abs(p @ p - p)) < 1e-9
    assert riesz.rank == 1


def test_riesz_quadrature_order_convergence():
    family = build_model(HALDANE_TOPO)
    grid = KGrid(family.lattice, (8, 8))
    bands = band_structure(family, grid)
    sel = select_bands(bands, 1, 1)
    eig = projector_field(bands, sel).matrices
    errs = []
    for order in (8, 16, 32):
        got = riesz_projector(family, grid, sel, quad_order=order).matrices
        errs.append(np.max(np.abs(got - eig)))
    assert errs[0] > errs[1] > errs[2]


def test_riesz_with_explicit_contour_infers_rank():
    family = build_model(COSINE)
    grid = KGrid(family.lattice, (16,))
    bands = band_structure(family, grid)
    sel = select_bands(bands, 1, 1)
    lo, hi = sel.interval
    contour = Contour(center=(lo + hi) / 2.0, radius=(hi - lo) / 2.0 + 0.5 * sel.gap_above)
    got = riesz_projector(family, grid, contour=contour, quad_order=64)
    assert got.rank == 1
    want = projector_field(bands, sel)
    assert np.max(np.abs(got.matrices - want.matrices)) < 1e-7


def test_contour_touching_spectrum_rejected():
    family = build_model(COSINE)
    grid = KGrid(family.lattice, (16,))
    bands = band_structure(family, grid)
    sel = select_bands(bands, 1, 1)
    lo, hi = sel.interval
    # radius reaches into band 2: encloses a k-dependent eigenvalue count
    contour = Contour(center=(lo + hi) / 2.0, radius=(hi - lo) / 2.0 + sel.gap_above + 5.0)
    with pytest.raises(ContourTouchesSpectrum):
        riesz_projector(family, grid, sel, contour=contour, quad_order=32)


def test_default_contour_geometry():
    family = build_model(COSINE)
    grid = KGrid(family.lattice, (16,))
    bands = band_structure(family, grid)
    sel = select_bands(bands, 1, 1)
    contour = default_contour(sel)
    lo, hi = sel.interval
    assert contour.center == pytest.approx((lo + hi) / 2.0)
    assert contour.center - contour.radius < lo
    assert contour.center + contour.radius > hi
    assert contour.center + contour.radius < hi + sel.gap_above


def test_frame_map_conjugation_preserves_unitary_invariants():
    family = build_model(COSINE)
    grid = KGrid(family.lattice, (16,))
    bands = band_structure(family, grid)
    sel = select_bands(bands, 1, 1)
    raw = projector_field(bands, sel)
    dressed = apply_frame_map(family, raw)
    p = dressed.matrices
    assert np.max(np.abs(p @ p - p)) < 1e-12
    assert np.max(np.abs(p - np.conj(np.swapaxes(p, -1, -2)))) < 1e-12
    traces = np.trace(p, axis1=-2, axis2=-1)
    assert np.max(np.abs(traces - 1.0)) < 1e-12
    raw_spec = np.sort(np.linalg.eigvalsh(raw.matrices), axis=-1)
    new_spec = np.sort(np.linalg.eigvalsh(p), axis=-1)
    assert np.max(np.abs(raw_spec - new_spec)) < 1e-12


def test_frame_map_heals_the_zone_wrap():
    # raw plane-wave projectors jump O(1) across the wrap because the slot
    # labels advance by one; the dressed field must be as smooth there as
    # in the interior
    family = build_model(COSINE)
    grid = KGrid(family.lattice, (64,))
    bands = band_structure(family, grid)
    sel = select_bands(bands, 1, 1)
    raw = projector_field(bands, sel)
    dressed = apply_frame_map(family, raw)

    def bond(mats, i, j):
        return float(np.linalg.norm(mats[i] - mats[j]))

    raw_wrap = bond(raw.matrices, -1, 0)
    dressed_wrap = bond(dressed.matrices, -1, 0)
    interior = bond(dressed.matrices, 0, 1)
    assert raw_wrap > 0.5
    assert dressed_wrap < 2.0 * interior
    assert dressed_wrap < 0.1


def test_frame_map_noop_for_tight_binding():
    family, grid, bands, sel, pfield = band_projector(HALDANE_TOPO, (6, 6))
    raw = projector_field(bands, sel)
    assert apply_frame_map(family, raw) is raw
