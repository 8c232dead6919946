"""Shared model specs and a one-call band-projector builder.

Every test is deterministic: fixed model parameters, fixed grids, seeded
generators.  Unit tests use small grids; the acceptance module owns the
production-size runs.
"""

from __future__ import annotations

import numpy as np

from wannierframes.bloch import KGrid
from wannierframes.models import ModelSpec, build_model
from wannierframes.spectral import (
    apply_frame_map,
    band_structure,
    projector_field,
    select_bands,
)

COSINE = ModelSpec("schrodinger1d", {"g_max": 8, "potential": {1: 3.5, -1: 3.5}})
HALDANE_TOPO = ModelSpec("haldane", {"t2": 0.3, "m_onsite": 0.2})
HALDANE_TRIVIAL = ModelSpec("haldane", {"t2": 1.0 / 3.0, "m_onsite": 5.0})
HOFSTADTER3 = ModelSpec("hofstadter", {"p": 1, "q": 3})


def band_projector(spec: ModelSpec, sizes: tuple[int, ...], first: int = 1, last: int = 1):
    """(family, grid, bands, selection, dressed projector field)."""
    family = build_model(spec)
    grid = KGrid(family.lattice, sizes)
    bands = band_structure(family, grid)
    selection = select_bands(bands, first, last)
    pfield = apply_frame_map(family, projector_field(bands, selection))
    return family, grid, bands, selection, pfield


def random_unit(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1.0j * rng.standard_normal(n)
    return v / np.linalg.norm(v)
