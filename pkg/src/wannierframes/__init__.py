"""Localized Wannier systems for gap-isolated bands of periodic operators.

Build a Bloch operator family, diagonalize it on a momentum grid, certify
a gap-isolated band window, classify the band bundle, and construct either
an orthonormal Wannier basis (trivial case) or a redundant tight frame of
exponentially decaying composite Wannier functions (obstructed case), with
every claim verified numerically.
"""

from .bloch import CellField, KField, KGrid, forward_transform, inverse_transform
from .errors import (
    ConfigError,
    ContourTouchesSpectrum,
    DegenerateFamily,
    EigensolveFailure,
    GapViolation,
    IllConditioned,
    InvalidSpec,
    NotTwoDimensional,
    ObstructionDetected,
    SingularResolvent,
    SizeMismatch,
    SpanningFailure,
    SupercellTooSmall,
    UnresolvedField,
    WannierFramesError,
)
from .gauge import (
    SectionFamily,
    canonical_tight_frame,
    discontinuous_control_gauge,
    frame_identity_residual,
    gram_identity_residual,
    membership_residual,
    orthonormalize_family,
    parallel_transport_gauge,
    seed_sections,
)
from .models import BlochOperatorFamily, Lattice, ModelSpec, build_model
from .pipeline import (
    PipelineConfig,
    PipelineReport,
    list_scenarios,
    run_pipeline,
    scenario_config,
)
from .spectral import (
    BandSelection,
    BandStructure,
    ProjectorField,
    apply_frame_map,
    band_structure,
    default_contour,
    projector_field,
    riesz_projector,
    select_bands,
)
from .topology import TopologyReport, chern_number, triviality_verdict
from .wannier import (
    DecayProfile,
    WannierSet,
    decay_profile,
    gram_matrix,
    parseval_check,
    synthesize_wannier,
)

__all__ = [
    "BandSelection",
    "BandStructure",
    "BlochOperatorFamily",
    "CellField",
    "ConfigError",
    "ContourTouchesSpectrum",
    "DecayProfile",
    "DegenerateFamily",
    "EigensolveFailure",
    "GapViolation",
    "IllConditioned",
    "InvalidSpec",
    "KField",
    "KGrid",
    "Lattice",
    "ModelSpec",
    "NotTwoDimensional",
    "ObstructionDetected",
    "PipelineConfig",
    "PipelineReport",
    "ProjectorField",
    "SectionFamily",
    "SingularResolvent",
    "SizeMismatch",
    "SpanningFailure",
    "SupercellTooSmall",
    "TopologyReport",
    "UnresolvedField",
    "WannierFramesError",
    "WannierSet",
    "apply_frame_map",
    "band_structure",
    "build_model",
    "canonical_tight_frame",
    "chern_number",
    "decay_profile",
    "default_contour",
    "discontinuous_control_gauge",
    "forward_transform",
    "frame_identity_residual",
    "gram_identity_residual",
    "gram_matrix",
    "inverse_transform",
    "list_scenarios",
    "membership_residual",
    "orthonormalize_family",
    "parallel_transport_gauge",
    "parseval_check",
    "projector_field",
    "riesz_projector",
    "run_pipeline",
    "scenario_config",
    "seed_sections",
    "select_bands",
    "synthesize_wannier",
    "triviality_verdict",
]
