"""Synthesis, overlaps, Parseval, and decay fits against literal oracles.

overlap_coefficients is checked against inner products with explicitly
shifted copies; gram_matrix against a double loop over system pairs; the
decay fit against fields constructed with a known envelope.
"""

from __future__ import annotations

import numpy as np
import pytest

from conftest import COSINE, HALDANE_TOPO, HALDANE_TRIVIAL, HOFSTADTER3, band_projector

from wannierframes.bloch import CellField, KGrid, random_cell_field
from wannierframes.errors import SupercellTooSmall
from wannierframes.gauge import (
    KIND_RAW_SEED,
    SectionFamily,
    canonical_tight_frame,
    discontinuous_control_gauge,
    parallel_transport_gauge,
    seed_sections,
)
from wannierframes.models import Lattice
from wannierframes.wannier import (
    WannierSet,
    decay_profile,
    gram_matrix,
    overlap_coefficients,
    parseval_check,
    plancherel_residual,
    shift_field,
    shifted_copies,
    synthesize_wannier,
)


def _transported_wannier(spec, sizes):
    _, _, _, sel, pfield = band_projector(spec, sizes)
    family = parallel_transport_gauge(pfield)
    return family, pfield, synthesize_wannier(family, sel)


def test_synthesis_norm_consistency():
    family, _, wset = _transported_wannier(COSINE, (32,))
    assert plancherel_residual(wset, family) < 1e-12
    # and the fft route gives the same functions
    fast = synthesize_wannier(family, method="fft")
    for a, b in zip(wset.functions, fast.functions):
        assert np.max(np.abs(a.values - b.values)) < 1e-12


def test_constant_section_synthesizes_to_point_support():
    lattice = Lattice.from_basis(np.eye(1))
    grid = KGrid(lattice, (16,))
    vec = np.zeros((16, 3, 1), dtype=complex)
    vec[:, 0, 0] = 1.0
    family = SectionFamily(grid=grid, vectors=vec, kind=KIND_RAW_SEED)
    wset = synthesize_wannier(family)
    w = wset.functions[0].values
    assert abs(w[0, 0] - 1.0) < 1e-14
    assert np.max(np.abs(w[1:])) < 1e-14
    prof = decay_profile(wset)[0]
    assert prof.compact_support
    assert prof.exponential_flag
    assert prof.slow_decay_sum == pytest.approx(1.0)


@pytest.mark.parametrize("spec,sizes", [(COSINE, (12,)), (HALDANE_TRIVIAL, (6, 6))])
def test_overlap_coefficients_match_shifted_inner_products(spec, sizes):
    family, _, wset = _transported_wannier(spec, sizes)
    rng = np.random.default_rng(21)
    f = random_cell_field(sizes, wset.functions[0].fiber_dim, rng)
    got = overlap_coefficients(wset, f)
    for j in range(wset.count):
        for gamma in np.ndindex(*sizes):
            shifted = shift_field(wset.functions[j], gamma)
            want = np.sum(np.conj(shifted.values) * f.values)
            assert abs(got[(j,) + gamma] - want) < 1e-11


def test_shifted_copies_are_rolls():
    _, _, wset = _transported_wannier(HALDANE_TRIVIAL, (6, 6))
    copies = shifted_copies(wset, (2, 3))
    want = np.roll(wset.functions[0].values, (2, 3), axis=(0, 1))
    assert np.array_equal(copies[0].values, want)


def test_gram_matrix_against_pair_loop():
    _, _, wset = _transported_wannier(HALDANE_TRIVIAL, (4, 4))
    gram = gram_matrix(wset)
    cells = list(np.ndindex(4, 4))
    assert gram.shape == (16, 16)
    for a, ga in enumerate(cells):
        for b, gb in enumerate(cells):
            wa = shift_field(wset.functions[0], ga).values
            wb = shift_field(wset.functions[0], gb).values
            want = np.sum(np.conj(wa) * wb)
            assert abs(gram[a, b] - want) < 1e-12


def test_gram_identity_for_orthonormal_construction():
    _, _, wset = _transported_wannier(COSINE, (16,))
    gram = gram_matrix(wset)
    assert np.max(np.abs(gram - np.eye(16))) < 1e-10


def test_parseval_exact_for_tight_frame():
    _, _, _, sel, pfield = band_projector(HALDANE_TOPO, (12, 12))
    seeds, _ = seed_sections(pfield, 2, "canonicalBasis")
    frame = canonical_tight_frame(pfield, seeds)
    wset = synthesize_wannier(frame, sel)
    assert parseval_check(wset, pfield, trials=20, rng_seed=3) < 1e-10


def test_parseval_detects_dropped_section():
    _, _, _, sel, pfield = band_projector(HALDANE_TOPO, (12, 12))
    seeds, _ = seed_sections(pfield, 2, "canonicalBasis")
    frame = canonical_tight_frame(pfield, seeds)
    wset = synthesize_wannier(frame, sel)
    crippled = WannierSet(
        sizes=wset.sizes,
        functions=wset.functions[:1],
        source_kind=wset.source_kind,
        selection=wset.selection,
    )
    assert parseval_check(crippled, pfield, trials=10, rng_seed=3) > 0.1


def test_decay_profile_exact_exponential():
    lattice = Lattice.from_basis(np.eye(1))
    grid = KGrid(lattice, (64,))
    idx = np.arange(64)
    r = np.minimum(idx, 64 - idx).astype(float)
    values = np.exp(-0.8 * r)[:, None].astype(complex)
    wset = WannierSet(sizes=(64,), functions=[CellField((64,), values)], source_kind="test")
    prof = decay_profile(wset)[0]
    assert not prof.compact_support
    assert prof.exponential_flag
    assert prof.fitted_rate == pytest.approx(0.8, abs=1e-9)
    assert prof.fit_r2 > 1.0 - 1e-12
    # r_max = 32 on a 64-cell ring, outer quarter excluded
    assert prof.fit_window == (1, 24)


def test_decay_profile_flags_power_law():
    lattice = Lattice.from_basis(np.eye(1))
    grid = KGrid(lattice, (64,))
    idx = np.arange(64)
    r = np.minimum(idx, 64 - idx).astype(float)
    values = ((1.0 + r) ** -2.0)[:, None].astype(complex)
    wset = WannierSet(sizes=(64,), functions=[CellField((64,), values)], source_kind="test")
    prof = decay_profile(wset)[0]
    assert not prof.exponential_flag
    assert prof.power_r2 > prof.fit_r2


def test_decay_profile_2d_rate_window():
    lattice = Lattice.from_basis(np.eye(2))
    grid = KGrid(lattice, (24, 24))
    i = np.arange(24)
    ri = np.minimum(i, 24 - i)
    r = np.maximum(ri[:, None], ri[None, :]).astype(float)
    values = np.exp(-0.5 * r)[..., None].astype(complex)
    wset = WannierSet(sizes=(24, 24), functions=[CellField((24, 24), values)], source_kind="test")
    prof = decay_profile(wset)[0]
    # shells grow like 8r cells, so the fitted slope picks up a small
    # logarithmic correction on top of the 0.5 envelope
    assert prof.exponential_flag
    assert 0.35 < prof.fitted_rate < 0.55
    assert prof.fit_window == (1, 9)


def test_supercell_too_small():
    lattice = Lattice.from_basis(np.eye(1))
    grid = KGrid(lattice, (6,))
    vec = np.zeros((6, 2, 1), dtype=complex)
    vec[:, 0, 0] = 1.0
    family = SectionFamily(grid=grid, vectors=vec, kind=KIND_RAW_SEED)
    wset = synthesize_wannier(family)
    with pytest.raises(SupercellTooSmall):
        decay_profile(wset)


def test_control_gauge_slow_decay_grows_with_supercell():
    sums = []
    for sizes in ((12, 12), (24, 24)):
        _, _, _, sel, pfield = band_projector(HALDANE_TOPO, sizes)
        wset = synthesize_wannier(discontinuous_control_gauge(pfield), sel)
        sums.append(decay_profile(wset)[0].slow_decay_sum)
    assert sums[1] > sums[0]


def test_seed_margins_non_increasing_on_nested_grids():
    # 12 | 24 | 48: each grid contains the previous one's points, so the
    # minimum over the finer grid cannot exceed the coarser minimum
    margins = []
    for sizes in ((12, 12), (24, 24), (48, 48)):
        _, _, _, _, pfield = band_projector(HOFSTADTER3, sizes)
        _, diagnostics = seed_sections(pfield, 2, "canonicalBasis")
        margins.append(diagnostics.min_margin)
    assert margins[0] >= margins[1] >= margins[2]


def test_plancherel_residual_detects_mutation():
    family, _, wset = _transported_wannier(COSINE, (16,))
    assert plancherel_residual(wset, family) < 1e-12
    mutated = WannierSet(
        sizes=wset.sizes,
        functions=[CellField(wset.sizes, 1.5 * wset.functions[0].values)],
        source_kind=wset.source_kind,
    )
    assert plancherel_residual(mutated, family) > 0.1
