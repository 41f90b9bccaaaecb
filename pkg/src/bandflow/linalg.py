"""Dense Hermitian linear algebra primitives.

Everything downstream (atlas construction, flow counting, band bookkeeping,
section deformation) reduces to a handful of operations on complex matrices:
eigendecomposition with deterministic output, spectral window projections,
polar data of a general square matrix, distances and inclusions between
subspaces, and convex combinations of projections onto a nested chain.

All functions are pure. Matrices are numpy arrays of complex128; subspaces
are carried as orthonormal column frames. Zero-dimensional subspaces are
first-class values (frames with zero columns) so kernels of invertible
operators need no special casing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InjectivityError,
    ModelViolationError,
    PathDegeneracyError,
    RankThresholdError,
    SpectralBoundaryError,
    ValidationError,
)

# Relative tolerance for the Hermitian symmetry check, scaled by max|A|.
HERMITIAN_TOL_FACTOR = 1e-12
# Orthonormality defect allowed in a frame (frame* frame vs identity).
FRAME_ORTHO_TOL = 1e-10
# Window endpoints must clear every eigenvalue by this factor times the
# spectral radius; anything closer is treated as an input error.
BOUNDARY_TOL_FACTOR = 1e-9
# Rank cutoff for singular values, relative to the largest one.
RANK_TOL_FACTOR = 1e-10
# Smallest singular value of a restricted projection still counted injective.
INJ_TOL = 1e-8
# Residual allowed in A @ frame = frame @ diag(eigenvalues).
RECON_TOL = 1e-9
# Operator-identity slack for the telescoped convex-combination check.
COMBINATION_IDENTITY_TOL = 1e-10

_PHASE_TOL = 1e-9


def as_square_matrix(entries) -> np.ndarray:
    """Validate and return a finite square complex matrix."""
    B = np.asarray(entries, dtype=np.complex128)
    if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] < 1:
        raise ValidationError(f"expected a square matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B.real)) or not np.all(np.isfinite(B.imag)):
        raise ValidationError("matrix has non-finite entries")
    return B


def as_hermitian(entries) -> np.ndarray:
    """Validate Hermitian symmetry and return the symmetrized matrix.

    The defect max|A - A*| is measured against HERMITIAN_TOL_FACTOR times
    max|A|; inputs within tolerance are symmetrized so later eigensolves see
    an exactly Hermitian matrix.
    """
    A = as_square_matrix(entries)
    scale = float(np.abs(A).max())
    defect = float(np.abs(A - A.conj().T).max())
    if defect > HERMITIAN_TOL_FACTOR * max(scale, 1.0):
        raise ValidationError(
            f"matrix is not Hermitian: max|A - A*| = {defect:.3e} "
            f"exceeds {HERMITIAN_TOL_FACTOR:.0e} * max|A|"
        )
    return 0.5 * (A + A.conj().T)


def fix_phases(frame: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant component is real positive.

    Makes eigenvector and singular-vector frames deterministic up to the
    underlying LAPACK call. Columns that are numerically zero are left alone.
    """
    F = np.array(frame, dtype=np.complex128, copy=True)
    for k in range(F.shape[1]):
        col = F[:, k]
        idx = np.flatnonzero(np.abs(col) > _PHASE_TOL)
        if idx.size == 0:
            continue
        c = col[idx[0]]
        F[:, k] = col * (np.conj(c) / np.abs(c))
    return F


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues sorted ascending with a matching orthonormal frame."""

    eigenvalues: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        F = np.asarray(self.frame, dtype=np.complex128)
        if lam.ndim != 1 or F.ndim != 2 or F.shape[1] != lam.size:
            raise ValidationError("eigenvalue/frame shape mismatch")
        if np.any(np.diff(lam) < 0):
            raise ValidationError("eigenvalues must be sorted ascending")
        gram = F.conj().T @ F
        if np.abs(gram - np.eye(lam.size)).max() > FRAME_ORTHO_TOL:
            raise ValidationError("eigenvector frame is not orthonormal")

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    def spectral_radius(self) -> float:
        return float(np.abs(self.eigenvalues).max()) if self.dim else 0.0


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace carried as an orthonormal column frame.

    dim 0 is allowed; the frame then has shape (ambient_dim, 0).
    """

    ambient_dim: int
    frame: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.frame, dtype=np.complex128)
        if F.ndim != 2 or F.shape[0] != self.ambient_dim:
            raise ValidationError(
                f"frame shape {F.shape} does not match ambient dim {self.ambient_dim}"
            )
        if F.shape[1] > 0:
            gram = F.conj().T @ F
            if np.abs(gram - np.eye(F.shape[1])).max() > FRAME_ORTHO_TOL:
                raise ValidationError("subspace frame is not orthonormal")
        object.__setattr__(self, "frame", F)

    @property
    def dim(self) -> int:
        return int(self.frame.shape[1])

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T

    @staticmethod
    def zero(ambient_dim: int) -> "Subspace":
        return Subspace(ambient_dim, np.zeros((ambient_dim, 0), dtype=np.complex128))

    @staticmethod
    def full(ambient_dim: int) -> "Subspace":
        return Subspace(ambient_dim, np.eye(ambient_dim, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class PartialIsometry:
    """Matrix acting isometrically from initial_space onto final_space."""

    matrix: np.ndarray
    initial_space: Subspace
    final_space: Subspace

    def __post_init__(self):
        U = np.asarray(self.matrix, dtype=np.complex128)
        p_init = self.initial_space.projector()
        p_fin = self.final_space.projector()
        if np.abs(U.conj().T @ U - p_init).max() > 1e-9:
            raise ValidationError("U*U does not match the initial-space projector")
        if np.abs(U @ U.conj().T - p_fin).max() > 1e-9:
            raise ValidationError("UU* does not match the final-space projector")
        object.__setattr__(self, "matrix", U)


def hermitian_eig(A) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, deterministic for fixed input.

    Eigenvalues come back sorted ascending; each eigenvector's phase is fixed
    so that its first significant component is real positive. The
    reconstruction A @ F = F @ diag(lam) is asserted within RECON_TOL scaled
    by 1 + max|lam|.
    """
    A = as_hermitian(A)
    lam, F = np.linalg.eigh(A)
    F = fix_phases(F)
    scale = 1.0 + float(np.abs(lam).max())
    resid = float(np.abs(A @ F - F @ np.diag(lam)).max())
    if resid > RECON_TOL * scale:
        raise ModelViolationError(
            f"eigendecomposition residual {resid:.3e} exceeds tolerance"
        )
    return SpectralDecomposition(eigenvalues=lam, frame=F)


def _boundary_tol(lam: np.ndarray) -> float:
    radius = float(np.abs(lam).max()) if lam.size else 0.0
    return BOUNDARY_TOL_FACTOR * radius


def spectral_projection(A, lo: float, hi: float, decomp: SpectralDecomposition | None = None) -> Subspace:
    """Span of eigenvectors with eigenvalues strictly inside (lo, hi).

    Either endpoint may be infinite. Finite endpoints must clear every
    eigenvalue by BOUNDARY_TOL_FACTOR times the spectral radius, otherwise
    the window is ambiguous and a SpectralBoundaryError names the offender.

    Pass a precomputed `decomp` to skip the eigensolve.
    """
    if not lo < hi:
        raise ValidationError(f"empty window ({lo}, {hi})")
    dec = decomp if decomp is not None else hermitian_eig(A)
    lam = dec.eigenvalues
    tol = _boundary_tol(lam)
    for edge in (lo, hi):
        if np.isfinite(edge) and lam.size:
            d = np.abs(lam - edge)
            j = int(np.argmin(d))
            if d[j] <= tol:
                raise SpectralBoundaryError(
                    f"eigenvalue {lam[j]:.12g} sits at window endpoint {edge:.12g} "
                    f"(distance {d[j]:.3e} <= tol {tol:.3e})"
                )
    mask = (lam > lo) & (lam < hi)
    return Subspace(dec.frame.shape[0], dec.frame[:, mask])


def absolute_value(B, square: bool = False) -> np.ndarray:
    """|B| = sqrt(B* B) as a Hermitian matrix, or B* B itself when square=True."""
    B = as_square_matrix(B)
    H = B.conj().T @ B
    H = 0.5 * (H + H.conj().T)
    if square:
        return H
    lam, F = np.linalg.eigh(H)
    lam = np.clip(lam, 0.0, None)
    out = (F * np.sqrt(lam)) @ F.conj().T
    return 0.5 * (out + out.conj().T)


def svd_matched(B) -> tuple:
    """SVD with phases matched between the two frames.

    Returns (W, sigma, V) with B = W diag(sigma) V*. Each column of V gets
    its first significant component made real positive and the same phase is
    applied to the matching column of W, so the product is untouched while
    both frames become deterministic.
    """
    B = as_square_matrix(B)
    W, sigma, Vh = np.linalg.svd(B)
    V = Vh.conj().T
    for k in range(sigma.size):
        col = V[:, k]
        idx = np.flatnonzero(np.abs(col) > _PHASE_TOL)
        if idx.size == 0:
            continue
        ph = np.conj(col[idx[0]]) / np.abs(col[idx[0]])
        V[:, k] = col * ph
        W[:, k] = W[:, k] * ph
    return W, sigma, V


def polar_partial_isometry(B) -> PartialIsometry:
    """Polar factor U with B = U |B|, Ker U = Ker B, Im U = Im B.

    Rank is decided by the singular-value cutoff RANK_TOL_FACTOR * sigma_max.
    Singular values falling strictly inside (cutoff/10, cutoff*10) make the
    rank ill conditioned and raise RankThresholdError.
    """
    B = as_square_matrix(B)
    n = B.shape[0]
    W, sigma, V = svd_matched(B)
    smax = float(sigma[0]) if sigma.size else 0.0
    cutoff = RANK_TOL_FACTOR * smax
    if smax > 0.0:
        bad = (sigma > cutoff / 10.0) & (sigma < cutoff * 10.0)
        if np.any(bad):
            raise RankThresholdError(
                f"singular value {sigma[bad][0]:.3e} lies in the ambiguous band "
                f"around rank cutoff {cutoff:.3e}"
            )
    rank = int(np.sum(sigma > cutoff))
    V = V[:, :rank]
    Wl = W[:, :rank]
    U = Wl @ V.conj().T
    absB = (V * sigma[:rank]) @ V.conj().T if rank else np.zeros_like(B)
    # Complete |B| on the kernel with zeros; U |B| must reproduce B.
    if np.abs(U @ absB - B).max() > 1e-9 * max(smax, 1.0):
        raise ModelViolationError("polar identity U|B| = B failed beyond tolerance")
    return PartialIsometry(
        matrix=U,
        initial_space=Subspace(n, V),
        final_space=Subspace(n, Wl),
    )


def orthogonal_complement(V: Subspace) -> Subspace:
    """Orthogonal complement within the ambient space, deterministically framed."""
    n = V.ambient_dim
    if V.dim == 0:
        return Subspace.full(n)
    if V.dim == n:
        return Subspace.zero(n)
    W, _, _ = np.linalg.svd(V.frame, full_matrices=True)
    return Subspace(n, fix_phases(W[:, V.dim:]))


def subspace_distance(V: Subspace, W: Subspace) -> float:
    """Operator norm of the projector difference P_V - P_W."""
    if V.ambient_dim != W.ambient_dim:
        raise ValidationError(
            f"ambient dims differ: {V.ambient_dim} vs {W.ambient_dim}"
        )
    D = V.projector() - W.projector()
    if D.shape[0] == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvalsh(D)).max())


def inclusion_residual(inner: Subspace, outer: Subspace) -> float:
    """Spectral norm of (I - P_outer) applied to inner's frame.

    Zero iff inner is contained in outer; equals the sine of the largest
    principal angle from inner to outer.
    """
    if inner.ambient_dim != outer.ambient_dim:
        raise ValidationError("ambient dims differ")
    if inner.dim == 0:
        return 0.0
    R = inner.frame - outer.projector() @ inner.frame
    return float(np.linalg.norm(R, 2))


def orthonormal_image(columns: np.ndarray, expect_dim: int | None = None) -> np.ndarray:
    """Orthonormal frame for the column span, via SVD with a relative cutoff.

    When expect_dim is given, a span of lower dimension raises
    ModelViolationError (the caller promised an injective map).
    """
    cols = np.asarray(columns, dtype=np.complex128)
    if cols.shape[1] == 0:
        return cols
    W, sigma, _ = np.linalg.svd(cols, full_matrices=False)
    cut = max(float(sigma[0]), 0.0) * 1e-10
    rank = int(np.sum(sigma > cut))
    if expect_dim is not None and rank != expect_dim:
        raise ModelViolationError(
            f"column span has rank {rank}, expected {expect_dim}"
        )
    return fix_phases(W[:, :rank])


def _check_chain(chain: list[Subspace]) -> None:
    if not chain:
        raise ValidationError("chain must be nonempty")
    amb = chain[0].ambient_dim
    for i, H in enumerate(chain):
        if H.ambient_dim != amb:
            raise ValidationError("chain members live in different ambient spaces")
        if i + 1 < len(chain):
            resid = inclusion_residual(chain[i + 1], H)
            if resid > 1e-8:
                raise ValidationError(
                    f"chain is not nested at position {i}: residual {resid:.3e}"
                )


def _check_weights(weights, n: int) -> np.ndarray:
    t = np.asarray(weights, dtype=float)
    if t.ndim != 1 or t.size != n:
        raise ValidationError(f"expected {n} weights, got shape {t.shape}")
    if np.any(t < -1e-15):
        raise ValidationError("weights must be nonnegative")
    if abs(t.sum() - 1.0) > 1e-12:
        raise ValidationError(f"weights sum to {t.sum():.15f}, expected 1")
    return np.clip(t, 0.0, None)


def _combination_operator(chain: list[Subspace], t: np.ndarray) -> np.ndarray:
    """Sum t_i P_i over the chain, with the telescoped form asserted.

    Writing s_i for the partial sums of t and q_i for the projector onto the
    orthogonal complement of chain[i+1] inside chain[i], the same operator
    equals sum_i s_i q_i plus the projector onto the last chain member. Both
    sides are formed explicitly and compared within COMBINATION_IDENTITY_TOL.
    """
    projs = [H.projector() for H in chain]
    M = sum(ti * pi for ti, pi in zip(t, projs))
    s = np.cumsum(t)
    alt = projs[-1].astype(np.complex128).copy()
    for i in range(len(chain) - 1):
        alt += s[i] * (projs[i] - projs[i + 1])
    if np.abs(M - alt).max() > COMBINATION_IDENTITY_TOL:
        raise ModelViolationError(
            "telescoped form of the weighted projector sum failed beyond tolerance"
        )
    return M


def _check_tail_injectivity(K: Subspace, tail: Subspace) -> None:
    if K.dim == 0:
        return
    mapped = tail.projector() @ K.frame
    sigma = np.linalg.svd(mapped, compute_uv=False)
    smin = float(sigma[-1]) if sigma.size else 0.0
    if smin < INJ_TOL:
        full = np.linalg.svd(mapped, full_matrices=False)
        direction = K.frame @ full[2].conj().T[:, -1]
        err = InjectivityError(
            f"projection onto the chain tail is not injective on the input "
            f"subspace (smallest singular value {smin:.3e} < {INJ_TOL:.0e})"
        )
        err.direction = direction
        raise err


def convex_combination_image(K: Subspace, chain: list[Subspace], weights) -> Subspace:
    """Image of K under the weighted sum of chain projectors, orthonormalized.

    chain must be nested descending (chain[0] contains chain[1] and so on)
    and the projection onto the last member must be injective on K; then the
    image has the same dimension as K and lies inside chain[0].
    """
    _check_chain(chain)
    t = _check_weights(weights, len(chain))
    _check_tail_injectivity(K, chain[-1])
    M = _combination_operator(chain, t)
    frame = orthonormal_image(M @ K.frame, expect_dim=K.dim)
    out = Subspace(K.ambient_dim, frame)
    resid = inclusion_residual(out, chain[0])
    if resid > 1e-8:
        raise ModelViolationError(
            f"combination image escapes the top chain member: residual {resid:.3e}"
        )
    return out


def combination_path(K: Subspace, chain: list[Subspace], weights, s: float) -> Subspace:
    """Linear homotopy from K (s=0) to convex_combination_image (s=1).

    Returns the image of (1-s) I + s M applied to K, where M is the weighted
    projector sum. Dimension must stay constant along the path; a rank drop
    raises PathDegeneracyError naming the offending s.
    """
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"path parameter s={s} outside [0, 1]")
    _check_chain(chain)
    t = _check_weights(weights, len(chain))
    _check_tail_injectivity(K, chain[-1])
    if K.dim == 0:
        return K
    M = _combination_operator(chain, t)
    mapped = (1.0 - s) * K.frame + s * (M @ K.frame)
    sigma = np.linalg.svd(mapped, compute_uv=False)
    if sigma.size and float(sigma[-1]) <= 1e-10 * float(sigma[0]):
        raise PathDegeneracyError(f"path loses dimension at s = {s}")
    frame = orthonormal_image(mapped, expect_dim=K.dim)
    return Subspace(K.ambient_dim, frame)
