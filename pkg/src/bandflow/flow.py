"""Spectral flow and index data for sampled families.

The integer invariant of a Hermitian path or loop is computed three ways
that must agree:

  * chartwise: per adapted chart, the count of eigenvalues in [-eps, 0) at
    the chart's left transition sample minus the count at its right one,
    summed over charts;
  * branch tracking: signed zero crossings of the sorted eigenvalue
    branches, optionally on a refined grid obtained by interpolating the
    operators between samples;
  * endpoint signatures: the gain in the number of positive eigenvalues
    from the first sample to the last, valid whenever the endpoint
    operators are invertible.

For general (non-Hermitian) square matrices the module provides the
singular-value band pair (E1, E2) with its tail isometry, and the
kernel-bundle stabilization that augments a family with a constant
cokernel map until it is pointwise surjective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atlas import DEFAULT_GAP_TOL, Atlas, check_atlas
from .errors import (
    BoundaryZeroError,
    BranchResolutionError,
    ModelViolationError,
    SpectralBoundaryError,
    StabilizationError,
    ValidationError,
)
from .families import OperatorFamily, window_subspace
from .linalg import (
    BOUNDARY_TOL_FACTOR,
    RANK_TOL_FACTOR,
    PartialIsometry,
    Subspace,
    as_hermitian,
    hermitian_eig,
    svd_matched,
)

# An eigenvalue this close to 0 at a transition sample makes the below-zero
# count ambiguous; the chart edge must be shifted.
ZERO_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EnhancedOperator:
    """Hermitian operator with a validated band radius and its band."""

    A: np.ndarray
    eps: float
    band: Subspace
    interior_rank: int


def enhanced_check(A, eps: float, declared_bands: tuple | None = None,
                   gap_tol: float = DEFAULT_GAP_TOL) -> EnhancedOperator:
    """Validate that +-eps clear the spectrum and build the band subspace.

    With declared frozen bands at -1 and +1, the radius must stay below
    1 - gap_tol so the band cannot swallow the frozen eigenvalues.
    """
    A = as_hermitian(A)
    if not eps > 0:
        raise ValidationError(f"band radius must be positive, got {eps}")
    if declared_bands is not None and eps >= 1.0 - gap_tol:
        raise ValidationError(
            f"band radius {eps} collides with the frozen eigenvalues at +-1"
        )
    dec = hermitian_eig(A)
    lam = dec.eigenvalues
    dist = np.abs(np.abs(lam) - eps)
    j = int(np.argmin(dist))
    if dist[j] < gap_tol:
        raise SpectralBoundaryError(
            f"eigenvalue {lam[j]:.12g} lies within {gap_tol:.1e} of +-{eps:.12g}"
        )
    mask = np.abs(lam) < eps
    band = Subspace(A.shape[0], dec.frame[:, mask])
    if declared_bands is not None:
        frozen_in_band = int(np.sum(mask & (np.abs(np.abs(lam) - 1.0) <= 1e-9)))
        if frozen_in_band:
            raise ModelViolationError("band contains a frozen +-1 eigenvector")
    return EnhancedOperator(A=A, eps=float(eps), band=band,
                            interior_rank=band.dim)


@dataclass(frozen=True, eq=False)
class PolarizedBand:
    """Orthogonal splitting: band V plus the strictly-below and above parts."""

    V: Subspace
    H_minus: Subspace
    H_plus: Subspace

    def __post_init__(self):
        amb = self.V.ambient_dim
        if self.H_minus.ambient_dim != amb or self.H_plus.ambient_dim != amb:
            raise ValidationError("polarized band parts live in different spaces")
        parts = [self.H_minus, self.V, self.H_plus]
        for i in range(3):
            for j in range(i + 1, 3):
                if parts[i].dim and parts[j].dim:
                    cross = parts[i].frame.conj().T @ parts[j].frame
                    if np.abs(cross).max() > 1e-9:
                        raise ValidationError("polarized band parts are not orthogonal")
        if sum(p.dim for p in parts) != amb:
            raise ValidationError("polarized band parts do not fill the space")


def polarized_triple(A, eps: float, gap_tol: float = DEFAULT_GAP_TOL) -> PolarizedBand:
    """Split the space into below-band, band, and above-band spectral parts."""
    enh = enhanced_check(A, eps, gap_tol=gap_tol)
    dec = hermitian_eig(enh.A)
    lam = dec.eigenvalues
    lo = Subspace(enh.A.shape[0], dec.frame[:, lam < -eps])
    hi = Subspace(enh.A.shape[0], dec.frame[:, lam > eps])
    return PolarizedBand(V=enh.band, H_minus=lo, H_plus=hi)


@dataclass(frozen=True, eq=False)
class ChartBandData:
    """Band data of one chart: radius, per-sample bands, boundary counts."""

    start: int
    end: int
    eps: float
    left_sample: int
    right_sample: int
    n_below_left: int
    n_below_right: int
    bands: tuple


@dataclass(frozen=True, eq=False)
class OverlapData:
    """Decomposition of the larger band over the smaller at an overlap sample."""

    sample: int
    eps_small: float
    eps_big: float
    u_minus: Subspace
    u_plus: Subspace
    small_band: Subspace
    big_band: Subspace


@dataclass(frozen=True, eq=False)
class IndexChain:
    charts: tuple
    overlaps: tuple


def _n_below(f: OperatorFamily, sample: int, eps: float) -> int:
    lam = f.eigen(sample).eigenvalues
    return int(np.sum((lam > -eps) & (lam < 0.0)))


def _min_abs_eigenvalue(f: OperatorFamily, sample: int) -> float:
    return float(np.abs(f.eigen(sample).eigenvalues).min())


def _pick_transition_sample(f: OperatorFamily, lo: int, hi: int,
                            zero_tol: float) -> int:
    for y in range(lo, hi + 1):
        if _min_abs_eigenvalue(f, y) > zero_tol:
            return y
    raise BoundaryZeroError(
        f"every overlap sample in [{lo}, {hi}] has an eigenvalue within "
        f"{zero_tol:.1e} of 0; shift the chart edge by one sample or refine"
    )


def _net_up_crossings(f: OperatorFamily, lo: int, hi: int) -> int:
    """Signed zero crossings of the sorted branches between samples lo and hi."""
    total = 0
    prev = f.eigen(lo).eigenvalues
    for k in range(lo + 1, hi + 1):
        cur = f.eigen(k).eigenvalues
        ups = int(np.sum((prev <= 0.0) & (cur > 0.0)))
        downs = int(np.sum((prev > 0.0) & (cur <= 0.0)))
        total += ups - downs
        prev = cur
    return total


def index_chain(f: OperatorFamily, atlas: Atlas,
                gap_tol: float = DEFAULT_GAP_TOL,
                zero_tol: float = ZERO_TOL) -> IndexChain:
    """Band subspaces, boundary counts, and overlap decompositions.

    Transition samples are the first grid sample, one sample inside each
    chart overlap, and the last grid sample. Each must carry no eigenvalue
    within zero_tol of 0; an overlap sample violating this is replaced by
    the next sample of the overlap, and a violation at a grid endpoint is
    an error the caller fixes by perturbing the family or the grid.

    Two structural identities are asserted: at every overlap the larger
    band splits as the smaller band plus the two annular windows, and
    within every chart the change of the below-zero count between the
    transition samples equals the net signed zero crossings there.
    """
    ok, report = check_atlas(f, atlas, gap_tol)
    if not ok:
        raise ValidationError(f"atlas rejected: {report}")
    charts = atlas.charts
    n_charts = len(charts)
    for endpoint, label in ((0, "first"), (f.n_samples - 1, "last")):
        if _min_abs_eigenvalue(f, endpoint) <= zero_tol:
            raise BoundaryZeroError(
                f"{label} grid sample has an eigenvalue within {zero_tol:.1e} "
                f"of 0; the boundary counts are ambiguous there"
            )
    overlap_samples = []
    for j in range(n_charts - 1):
        lo, hi = charts[j + 1].start, charts[j].end
        overlap_samples.append(_pick_transition_sample(f, lo, hi, zero_tol))

    chart_data = []
    for j, chart in enumerate(charts):
        left = 0 if j == 0 else overlap_samples[j - 1]
        right = f.n_samples - 1 if j == n_charts - 1 else overlap_samples[j]
        bands = tuple(window_subspace(f, k, -chart.eps, chart.eps)
                      for k in chart.sample_indices())
        n_left = _n_below(f, left, chart.eps)
        n_right = _n_below(f, right, chart.eps)
        crossings = _net_up_crossings(f, left, right)
        if n_left - n_right != crossings:
            raise ModelViolationError(
                f"chart {j}: below-zero count drops by {n_left - n_right} "
                f"but the net crossings are {crossings}"
            )
        chart_data.append(ChartBandData(
            start=chart.start, end=chart.end, eps=chart.eps,
            left_sample=left, right_sample=right,
            n_below_left=n_left, n_below_right=n_right,
            bands=bands,
        ))

    overlaps = []
    for j, y in enumerate(overlap_samples):
        e1 = min(charts[j].eps, charts[j + 1].eps)
        e2 = max(charts[j].eps, charts[j + 1].eps)
        small = window_subspace(f, y, -e1, e1)
        big = window_subspace(f, y, -e2, e2)
        if e2 > e1:
            u_minus = window_subspace(f, y, -e2, -e1)
            u_plus = window_subspace(f, y, e1, e2)
        else:
            u_minus = Subspace.zero(f.dim)
            u_plus = Subspace.zero(f.dim)
        if big.dim != u_minus.dim + small.dim + u_plus.dim:
            raise ModelViolationError(
                f"overlap at sample {y}: band dims {big.dim} != "
                f"{u_minus.dim} + {small.dim} + {u_plus.dim}"
            )
        overlaps.append(OverlapData(
            sample=y, eps_small=e1, eps_big=e2,
            u_minus=u_minus, u_plus=u_plus,
            small_band=small, big_band=big,
        ))
    return IndexChain(charts=tuple(chart_data), overlaps=tuple(overlaps))


def spectral_flow_chartwise(chain: IndexChain) -> int:
    """Sum over charts of the drop in the below-zero band count."""
    return sum(c.n_below_left - c.n_below_right for c in chain.charts)


def _refined_eigenvalue_table(f: OperatorFamily, refine: int):
    """Sorted eigenvalues on the grid refined by linear operator interpolation."""
    if refine < 1:
        raise ValidationError("refine factor must be a positive integer")
    t = f.grid.samples
    rows = [f.eigen(0).eigenvalues]
    ts = [t[0]]
    for k in range(1, f.n_samples):
        A0, A1 = f.operators[k - 1], f.operators[k]
        for j in range(1, refine):
            s = j / refine
            rows.append(np.linalg.eigvalsh((1.0 - s) * A0 + s * A1))
            ts.append((1.0 - s) * t[k - 1] + s * t[k])
        rows.append(f.eigen(k).eigenvalues)
        ts.append(t[k])
    return np.array(ts), np.vstack(rows)


def branch_table(f: OperatorFamily, refine: int = 1):
    """(parameters, eigenvalue matrix) with one sorted branch per column."""
    return _refined_eigenvalue_table(f, refine)


def spectral_flow_oracle(f: OperatorFamily, refine: int = 2) -> int:
    """Signed zero crossings of the sorted eigenvalue branches.

    A branch sitting exactly at 0 at a sample counts as not yet crossed; it
    contributes when it leaves zero. A branch pinned at 0 across consecutive
    refined samples cannot be given a direction and raises
    BranchResolutionError.
    """
    _, table = _refined_eigenvalue_table(f, refine)
    pinned = np.abs(table) <= 1e-12
    for i in range(table.shape[1]):
        runs = pinned[:-1, i] & pinned[1:, i]
        if np.any(runs):
            k = int(np.flatnonzero(runs)[0])
            raise BranchResolutionError(
                f"branch {i} sits at 0 across consecutive samples near row {k}; "
                f"refine the grid or perturb the family"
            )
    prev = table[:-1]
    cur = table[1:]
    ups = np.sum((prev <= 0.0) & (cur > 0.0))
    downs = np.sum((prev > 0.0) & (cur <= 0.0))
    return int(ups - downs)


def spectral_flow_endpoints(f: OperatorFamily, zero_tol: float = ZERO_TOL) -> int:
    """Gain in positive-eigenvalue count from the first sample to the last."""
    for sample, label in ((0, "first"), (f.n_samples - 1, "last")):
        if _min_abs_eigenvalue(f, sample) <= zero_tol:
            raise ValidationError(
                f"{label} sample is not invertible within {zero_tol:.1e}; "
                f"the endpoint signature count is undefined"
            )
    n_start = int(np.sum(f.eigen(0).eigenvalues > 0))
    n_end = int(np.sum(f.eigen(f.n_samples - 1).eigenvalues > 0))
    return n_end - n_start


def spectral_flow_routes(f: OperatorFamily, atlas: Atlas | None = None,
                         refine: int = 2, gap_tol: float = DEFAULT_GAP_TOL,
                         max_chart_len: int | None = None) -> dict:
    """All flow routes at once, with their agreement status.

    The endpoint route is reported whenever both endpoint samples are
    invertible (always meaningful: for exact loops it returns 0, for
    shifted loops the declared spectral shift shows up as a count change).
    """
    from .atlas import DEFAULT_MAX_CHART_LEN, build_atlas

    if atlas is None:
        atlas = build_atlas(f, max_chart_len or DEFAULT_MAX_CHART_LEN, gap_tol)
    chain = index_chain(f, atlas, gap_tol)
    chartwise = spectral_flow_chartwise(chain)
    oracle = spectral_flow_oracle(f, refine)
    try:
        endpoints = spectral_flow_endpoints(f)
    except ValidationError:
        endpoints = None
    agree = chartwise == oracle and (endpoints is None or endpoints == chartwise)
    return {
        "atlas": atlas,
        "chain": chain,
        "chartwise": chartwise,
        "oracle": oracle,
        "endpoints": endpoints,
        "agree": bool(agree),
    }


@dataclass(frozen=True, eq=False)
class FredholmPairData:
    """Singular-value band pair with the isometry between the tails."""

    e1: Subspace
    e2: Subspace
    tail_isometry: PartialIsometry
    numeric_index: int


def fredholm_pair(B, eps: float) -> FredholmPairData:
    """Band pair E1 = Im P_[0,eps](|B|), E2 = Im P_[0,eps](|B*|).

    eps must clear every singular value by BOUNDARY_TOL_FACTOR times the
    largest one. The polar factor restricted to the orthogonal complement
    of E1 is returned as a partial isometry onto the complement of E2, and
    the index dim E1 - dim E2 is cross-checked against the kernel dimension
    difference of B and B*.
    """
    if eps < 0:
        raise ValidationError(f"band radius must be nonnegative, got {eps}")
    W, sigma, V = svd_matched(B)
    n = W.shape[0]
    smax = float(sigma[0]) if sigma.size else 0.0
    tol = BOUNDARY_TOL_FACTOR * max(smax, 1.0)
    if sigma.size and float(np.abs(sigma - eps).min()) <= tol:
        j = int(np.argmin(np.abs(sigma - eps)))
        raise SpectralBoundaryError(
            f"singular value {sigma[j]:.12g} sits at the band radius {eps:.12g}"
        )
    small = sigma <= eps
    e1 = Subspace(n, V[:, small])
    e2 = Subspace(n, W[:, small])
    tail = ~small
    tail_isometry = PartialIsometry(
        matrix=W[:, tail] @ V[:, tail].conj().T,
        initial_space=Subspace(n, V[:, tail]),
        final_space=Subspace(n, W[:, tail]),
    )
    rank_cut = RANK_TOL_FACTOR * smax
    ker_b = int(np.sum(sigma <= rank_cut))
    ker_bstar = ker_b
    numeric_index = e1.dim - e2.dim
    if numeric_index != ker_b - ker_bstar:
        raise ModelViolationError("band pair index disagrees with kernel counts")
    return FredholmPairData(e1=e1, e2=e2, tail_isometry=tail_isometry,
                            numeric_index=numeric_index)


@dataclass(frozen=True, eq=False)
class StabilizationData:
    """Constant cokernel map and the kernel bundle it produces.

    m is the number of added directions, held in cokernel_frame. The
    augmented map (v, u) -> C v + B_x u is surjective at every sample;
    kernel_dims holds the per-sample kernel dimensions after removing the
    declared padding directions, and index_value = kernel_dim - m.
    """

    m: int
    cokernel_frame: Subspace
    kernel_dims: tuple
    kernel_frames: tuple
    index_value: int
    domain_codim: int


def _cokernel_frame(B: np.ndarray) -> np.ndarray:
    W, sigma, _ = svd_matched(B)
    smax = float(sigma[0]) if sigma.size else 0.0
    rank = int(np.sum(sigma > RANK_TOL_FACTOR * smax)) if smax > 0 else 0
    return W[:, rank:]


def atiyah_stabilize(f: OperatorFamily, domain_codim: int = 0) -> StabilizationData:
    """Augment a family of square matrices into a surjective one.

    A single frame C of m directions is chosen for the whole family: the
    principal directions of all per-sample cokernels stacked together,
    padded with standard basis vectors if those run out. m grows until
    (v, u) -> C v + B_x u is surjective at every sample, which pins the
    kernel dimension at m everywhere and makes the kernel family a bundle
    at the working resolution.

    domain_codim declares that the last domain_codim input coordinates are
    padding (a rectangular family stored as square); they are projected out
    of the kernel before dimensions are reported, so a padded family with a
    genuinely smaller domain reports index -domain_codim.
    """
    n = f.dim
    if not 0 <= domain_codim < n:
        raise ValidationError(f"bad domain codimension {domain_codim}")
    cokernels = [_cokernel_frame(B) for B in f.operators]
    max_coker = max(c.shape[1] for c in cokernels)

    candidates = []
    stacked = np.hstack([c for c in cokernels if c.shape[1]]) if max_coker else None
    if stacked is not None and stacked.shape[1]:
        Ws, ss, _ = np.linalg.svd(stacked, full_matrices=False)
        n_keep = int(np.sum(ss > 1e-12 * float(ss[0])))
        candidates.extend(Ws[:, k] for k in range(n_keep))
    candidates.extend(np.eye(n, dtype=np.complex128)[:, k] for k in range(n))

    def orthonormal_prefix(m):
        if m == 0:
            return np.zeros((n, 0), dtype=np.complex128)
        cols = []
        for cand in candidates:
            v = cand.astype(np.complex128).copy()
            for u in cols:
                v = v - (u.conj() @ v) * u
            norm = float(np.linalg.norm(v))
            if norm > 1e-8:
                cols.append(v / norm)
            if len(cols) == m:
                break
        if len(cols) < m:
            raise StabilizationError(
                f"cannot assemble {m} independent cokernel directions"
            )
        return np.column_stack(cols) if cols else np.zeros((n, 0), dtype=np.complex128)

    m = max_coker
    while True:
        C = orthonormal_prefix(m)
        all_surjective = True
        for B in f.operators:
            Q = np.hstack([C, B])
            sigma = np.linalg.svd(Q, compute_uv=False)
            if sigma.size < n or float(sigma[n - 1]) <= 1e-8 * max(1.0, float(sigma[0])):
                all_surjective = False
                break
        if all_surjective:
            break
        m += 1
        if m > n:
            raise StabilizationError(
                "surjective stabilization not achievable within the ambient dimension"
            )

    pad_rows = list(range(m + n - domain_codim, m + n))
    kernel_dims = []
    kernel_frames = []
    for x, B in enumerate(f.operators):
        Q = np.hstack([C, B])
        _, sigma, Vh = np.linalg.svd(Q)
        rank = int(np.sum(sigma > RANK_TOL_FACTOR * float(sigma[0])))
        if rank != n:
            raise ModelViolationError(f"augmented map lost surjectivity at sample {x}")
        raw_kernel = Vh.conj().T[:, rank:]
        if domain_codim:
            zero_on_pad = _null_space_of_rows(raw_kernel, pad_rows)
            true_kernel = raw_kernel @ zero_on_pad
        else:
            true_kernel = raw_kernel
        frame = _orthonormalize(true_kernel)
        kernel_dims.append(frame.shape[1])
        kernel_frames.append(Subspace(m + n, frame))
    if len(set(kernel_dims)) > 1:
        raise ModelViolationError(
            f"kernel dimension is not constant along the family: {sorted(set(kernel_dims))}"
        )
    index_value = kernel_dims[0] - m
    expected = -domain_codim
    if index_value != expected:
        raise ModelViolationError(
            f"kernel bundle index {index_value} disagrees with the pointwise "
            f"value {expected}"
        )
    return StabilizationData(
        m=m,
        cokernel_frame=Subspace(n, C),
        kernel_dims=tuple(kernel_dims),
        kernel_frames=tuple(kernel_frames),
        index_value=index_value,
        domain_codim=domain_codim,
    )


def _orthonormalize(cols: np.ndarray) -> np.ndarray:
    if cols.shape[1] == 0:
        return cols
    W, sigma, _ = np.linalg.svd(cols, full_matrices=False)
    rank = int(np.sum(sigma > 1e-10 * float(sigma[0])))
    return W[:, :rank]


def _null_space_of_rows(frame: np.ndarray, rows: list) -> np.ndarray:
    """Coefficient combinations of frame columns that vanish on the rows."""
    sub = frame[rows, :]
    if sub.shape[1] == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    _, sigma, Vh = np.linalg.svd(sub, full_matrices=True)
    rank = int(np.sum(sigma > 1e-10 * max(float(sigma[0]) if sigma.size else 0.0, 1e-300)))
    return Vh.conj().T[:, rank:]
