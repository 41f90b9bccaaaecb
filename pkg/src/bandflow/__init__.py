"""Finite-dimensional spectral flow toolkit.

Sampled hermitian families on parameter grids, adapted band atlases, the
index chain and its three spectral-flow routes, suspension families with
their counting index, weak-to-spectral section deformation, and finite
polarized replacements. Everything works on explicit matrices; no operator
is ever infinite-dimensional here.
"""

__version__ = "0.1.0"

from .atlas import (
    AdaptedChart,
    Atlas,
    CoverCategoryData,
    build_atlas,
    check_atlas,
    cover_category,
    eps_for_subset,
    is_adapted,
    strictly_adapted_check,
)
from .errors import (
    AtlasBuildError,
    BandflowError,
    BoundaryZeroError,
    BranchResolutionError,
    InjectivityError,
    ModelViolationError,
    PathDegeneracyError,
    RankThresholdError,
    SpecError,
    SpectralBoundaryError,
    StabilizationError,
    ValidationError,
)
from .families import (
    GENERATORS,
    OperatorFamily,
    ParameterGrid,
    continuity_check,
    generate,
    window_subspace,
)
from .flow import (
    EnhancedOperator,
    FredholmPairData,
    IndexChain,
    PolarizedBand,
    StabilizationData,
    atiyah_stabilize,
    enhanced_check,
    fredholm_pair,
    index_chain,
    polarized_triple,
    spectral_flow_chartwise,
    spectral_flow_endpoints,
    spectral_flow_oracle,
    spectral_flow_routes,
)
from .linalg import (
    PartialIsometry,
    SpectralDecomposition,
    Subspace,
    absolute_value,
    combination_path,
    convex_combination_image,
    hermitian_eig,
    orthogonal_complement,
    polar_partial_isometry,
    spectral_projection,
    subspace_distance,
)
from .polarize import (
    PolarizedReplacement,
    band_identity_check,
    chi,
    finite_polarized_replace,
    flow_preservation_check,
    radius_function,
)
from .sections import (
    DeformationResult,
    ExistenceData,
    PartitionOfUnity,
    WeakSpectralSection,
    deform_to_spectral_section,
    default_level_grid,
    discrete_spectrum_check,
    is_spectral_section,
    make_weak_section,
    partition_of_unity,
    section_existence,
    tilt_section,
    weak_section_check,
)
from .suspension import (
    SuspensionFamily,
    SuspensionIndexData,
    band_correspondence_check,
    spectrum_surface,
    suspend,
    suspension_index,
    suspension_spectrum_check,
    zero_band_check,
)

__all__ = [
    "AdaptedChart",
    "Atlas",
    "AtlasBuildError",
    "BandflowError",
    "BoundaryZeroError",
    "BranchResolutionError",
    "CoverCategoryData",
    "DeformationResult",
    "EnhancedOperator",
    "ExistenceData",
    "FredholmPairData",
    "GENERATORS",
    "IndexChain",
    "InjectivityError",
    "ModelViolationError",
    "OperatorFamily",
    "ParameterGrid",
    "PartialIsometry",
    "PartitionOfUnity",
    "PathDegeneracyError",
    "PolarizedBand",
    "PolarizedReplacement",
    "RankThresholdError",
    "SpecError",
    "SpectralBoundaryError",
    "SpectralDecomposition",
    "StabilizationData",
    "StabilizationError",
    "Subspace",
    "SuspensionFamily",
    "SuspensionIndexData",
    "ValidationError",
    "WeakSpectralSection",
    "absolute_value",
    "atiyah_stabilize",
    "band_correspondence_check",
    "band_identity_check",
    "build_atlas",
    "check_atlas",
    "chi",
    "combination_path",
    "continuity_check",
    "convex_combination_image",
    "cover_category",
    "default_level_grid",
    "deform_to_spectral_section",
    "discrete_spectrum_check",
    "enhanced_check",
    "eps_for_subset",
    "finite_polarized_replace",
    "flow_preservation_check",
    "fredholm_pair",
    "generate",
    "hermitian_eig",
    "index_chain",
    "is_adapted",
    "is_spectral_section",
    "make_weak_section",
    "orthogonal_complement",
    "partition_of_unity",
    "polar_partial_isometry",
    "polarized_triple",
    "radius_function",
    "section_existence",
    "spectral_flow_chartwise",
    "spectral_flow_endpoints",
    "spectral_flow_oracle",
    "spectral_flow_routes",
    "spectral_projection",
    "spectrum_surface",
    "strictly_adapted_check",
    "subspace_distance",
    "suspend",
    "suspension_index",
    "suspension_spectrum_check",
    "tilt_section",
    "weak_section_check",
    "window_subspace",
    "zero_band_check",
]
