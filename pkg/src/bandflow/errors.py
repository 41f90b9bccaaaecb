"""Exception types shared across the package."""


class BandflowError(Exception):
    """Base class for all library errors."""


class ValidationError(BandflowError, ValueError):
    """Malformed input data (shape, finiteness, symmetry, weights)."""


class SpectralBoundaryError(BandflowError, ValueError):
    """An eigenvalue or singular value sits at a window boundary within tolerance."""


class RankThresholdError(BandflowError, ValueError):
    """Singular values fall inside the ambiguous band around the rank cutoff."""


class InjectivityError(BandflowError, ValueError):
    """A projection that must be injective on a subspace is not."""


class PathDegeneracyError(BandflowError, ValueError):
    """A subspace path loses dimension at some interior parameter."""


class AtlasBuildError(BandflowError, RuntimeError):
    """No admissible gap radius exists at some sample."""


class BoundaryZeroError(BandflowError, ValueError):
    """A chart transition sample has an eigenvalue at 0 within tolerance.

    Remedy: shift the chart edge by one sample (or refine the grid).
    """


class BranchResolutionError(BandflowError, RuntimeError):
    """Eigenvalue branches too close to separate at a crossing; refine the grid."""


class StabilizationError(BandflowError, RuntimeError):
    """Surjective stabilization not achievable within the ambient dimension."""


class ModelViolationError(BandflowError, RuntimeError):
    """A structural identity that should hold exactly failed beyond tolerance."""


class SpecError(BandflowError, ValueError):
    """A family spec file failed to parse; message carries the field path."""
