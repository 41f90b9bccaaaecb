"""Weak spectral sections and their deformation into honest spectral sections.

A weak section assigns a subspace to every parameter sample, loosely tracking
the upper spectral half relative to a reference cut. The deformation below
pushes such a section, one partition-of-unity combination at a time, into a
section pinched between spectral windows: above radius r(x) fully inside,
below -r(x) fully orthogonal. The two passes mirror each other, first gaining
control from below on the section, then from above on its complement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .atlas import DEFAULT_GAP_TOL, DEFAULT_MAX_CHART_LEN, Atlas, build_atlas, check_atlas
from .errors import (
    AtlasBuildError,
    InjectivityError,
    ModelViolationError,
    ValidationError,
)
from .families import OperatorFamily, window_subspace
from .flow import spectral_flow_routes
from .linalg import (
    Subspace,
    combination_path,
    convex_combination_image,
    inclusion_residual,
    orthogonal_complement,
    subspace_distance,
)

SECTION_CONTINUITY_TOL = 0.5
SECTION_RESIDUAL_TOL = 1e-8
LEVEL_CLEAR_TOL = 1e-8
INJECTIVITY_ACCEPT = 1e-6
NUDGE_BUDGET = 10
POU_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeakSpectralSection:
    """Per-sample subspaces with the reference cut they are measured against."""

    subspaces: tuple
    reference_cut: float

    def __post_init__(self):
        if not self.subspaces:
            raise ValidationError("a section needs at least one subspace")
        amb = self.subspaces[0].ambient_dim
        for k, V in enumerate(self.subspaces):
            if V.ambient_dim != amb:
                raise ValidationError(f"subspace {k} has ambient dim {V.ambient_dim}, expected {amb}")

    @property
    def n_samples(self) -> int:
        return len(self.subspaces)


def make_weak_section(f: OperatorFamily, cut: float) -> WeakSpectralSection:
    """The tautological weak section: the spectral window above the cut."""
    subs = tuple(window_subspace(f, x, cut, np.inf) for x in range(f.n_samples))
    return WeakSpectralSection(subspaces=subs, reference_cut=cut)


def tilt_section(f: OperatorFamily, S: WeakSpectralSection, angle: float) -> WeakSpectralSection:
    """Mix the first section vector with a complementary direction at every sample.

    Produces a deliberately imperfect weak section for exercising the
    deformation; the tilt leaks section content below the cut.
    """
    out = []
    for x in range(f.n_samples):
        V = S.subspaces[x]
        if V.dim == 0 or V.dim == V.ambient_dim:
            out.append(V)
            continue
        comp = orthogonal_complement(V)
        w = comp.frame[:, -1]
        frame = V.frame.copy()
        frame[:, 0] = np.cos(angle) * frame[:, 0] + np.sin(angle) * w
        out.append(Subspace(V.ambient_dim, frame))
    return WeakSpectralSection(subspaces=tuple(out), reference_cut=S.reference_cut)


def weak_section_check(f: OperatorFamily, S: WeakSpectralSection,
                       floor: Optional[float] = None):
    """Sanity checks against a family; returns (ok, report dict).

    Verifies the reference cut clears every sampled spectrum, the section
    moves continuously, and nothing in it points along eigenvectors below
    the floor level (by default one unit under the global spectral minimum,
    which makes the deep-content condition vacuous at desk scale but keeps
    the bookkeeping explicit).
    """
    n = f.n_samples
    if S.n_samples != n:
        raise ValidationError(f"section has {S.n_samples} samples, family has {n}")
    if S.subspaces[0].ambient_dim != f.dim:
        raise ValidationError("section ambient dimension differs from the family")
    c = S.reference_cut
    clear = min(
        float(np.abs(f.eigen(x).eigenvalues - c).min()) for x in range(n)
    )
    report = {"cut_clearance": clear, "reason": "weak section"}
    if clear < LEVEL_CLEAR_TOL:
        report["reason"] = (
            f"reference cut {c:.12g} comes within {clear:.3e} of the sampled spectrum"
        )
        return False, report
    defects = []
    for x in range(n):
        target = window_subspace(f, x, c, np.inf).dim
        defects.append(S.subspaces[x].dim - target)
    report["dim_defects"] = tuple(defects)
    steps = [
        subspace_distance(S.subspaces[x], S.subspaces[x + 1]) for x in range(n - 1)
    ]
    report["max_step"] = max(steps) if steps else 0.0
    if steps and max(steps) > SECTION_CONTINUITY_TOL:
        worst = int(np.argmax(steps))
        report["reason"] = (
            f"section jumps by {max(steps):.3f} between samples {worst} and {worst + 1}"
        )
        return False, report
    glob_min = min(float(f.eigen(x).eigenvalues.min()) for x in range(n))
    c_floor = floor if floor is not None else glob_min - 1.0
    worst_overlap = 0.0
    for x in range(n):
        deep = window_subspace(f, x, -np.inf, c_floor)
        V = S.subspaces[x]
        if deep.dim == 0 or V.dim == 0:
            continue
        overlap = float(np.linalg.svd(deep.frame.conj().T @ V.frame, compute_uv=False)[0])
        worst_overlap = max(worst_overlap, overlap)
        if overlap > 1.0 - LEVEL_CLEAR_TOL:
            report["floor_overlap"] = worst_overlap
            report["reason"] = (
                f"section contains a direction below the floor {c_floor:.12g} at sample {x}"
            )
            return False, report
    report["floor_overlap"] = worst_overlap
    return True, report


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Tent weights per chart plus plateau profiles sitting over them.

    weights[i] is chart i's tent over the whole grid, zero off the chart and
    summing to one with its neighbours on overlaps. plateaus[i] equals one
    wherever the tent is positive. On exact loops the first and last grid
    samples are the same point, so the seam is shared between the two end
    charts and the support rule treats those two samples as one.
    """

    weights: np.ndarray
    plateaus: np.ndarray
    ranges: tuple
    loop: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        s = np.asarray(self.plateaus, dtype=float)
        if w.shape != s.shape or w.ndim != 2:
            raise ValidationError("weights and plateaus must share a 2d shape")
        if len(self.ranges) != w.shape[0]:
            raise ValidationError("one range per chart required")
        sums = w.sum(axis=0)
        if np.abs(sums - 1.0).max() > POU_SUM_TOL:
            raise ValidationError("tent weights must sum to one at every sample")
        if w.min() < 0 or w.max() > 1 + POU_SUM_TOL:
            raise ValidationError("tent weights must lie in [0, 1]")
        if s.min() < 0 or s.max() > 1 + POU_SUM_TOL:
            raise ValidationError("plateau values must lie in [0, 1]")
        if np.any((w > 0) & (s < 1.0 - POU_SUM_TOL)):
            raise ValidationError("plateaus must equal one wherever the tent is positive")
        n = w.shape[1]
        for i, (a, b) in enumerate(self.ranges):
            inside = np.zeros(n, dtype=bool)
            inside[a : b + 1] = True
            if self.loop:
                if inside[0]:
                    inside[n - 1] = True
                if inside[n - 1]:
                    inside[0] = True
            if np.any(w[i][~inside] > 0):
                raise ValidationError(f"tent {i} leaves its chart range")

    @property
    def n_charts(self) -> int:
        return int(self.weights.shape[0])

    def active_charts(self, x: int) -> list:
        return [i for i in range(self.n_charts) if self.weights[i, x] > 0]


def partition_of_unity(atlas: Atlas, n_samples: int, loop: bool = False) -> PartitionOfUnity:
    """Tents subordinate to the atlas: linear ramps across each overlap.

    With single-sample overlaps the ramp degenerates to an even split of the
    shared sample. For loops the seam sample gets the same even split between
    the last and first charts, which keeps seam quantities equal at both ends
    of the grid.
    """
    lo, hi = atlas.covered_range()
    if lo != 0 or hi != n_samples - 1:
        raise ValidationError("atlas must cover the full grid to carry a partition")
    K = atlas.n_charts
    w = np.zeros((K, n_samples))
    for i, c in enumerate(atlas.charts):
        w[i, c.start : c.end + 1] = 1.0
    for i in range(K - 1):
        a = atlas.charts[i + 1].start
        b = atlas.charts[i].end
        L = b - a + 1
        for k, x in enumerate(range(a, b + 1)):
            left = (L - k) / (L + 1.0)
            w[i, x] = left
            w[i + 1, x] = 1.0 - left
    if loop and K >= 2:
        w[0, 0] = 0.5
        w[K - 1, 0] = 0.5
        w[K - 1, n_samples - 1] = 0.5
        w[0, n_samples - 1] = 0.5
    s = (w > 0).astype(float)
    ranges = tuple((c.start, c.end) for c in atlas.charts)
    return PartitionOfUnity(weights=w, plateaus=s, ranges=ranges, loop=loop)


def default_level_grid(f: OperatorFamily, count: int = 4) -> list:
    """Midpoints of the widest gaps in the pooled sampled spectrum."""
    pooled = np.unique(
        np.concatenate([f.eigen(x).eigenvalues for x in range(f.n_samples)])
    )
    if pooled.size == 1:
        return [float(pooled[0] - 1.0), float(pooled[0] + 1.0)]
    widths = np.diff(pooled)
    order = np.argsort(-widths)[:count]
    mids = sorted(0.5 * (pooled[k] + pooled[k + 1]) for k in order)
    return [float(m) for m in mids]


def discrete_spectrum_check(f: OperatorFamily, levels: Sequence[float],
                            gap_tol: float = DEFAULT_GAP_TOL,
                            max_chart_len: int = DEFAULT_MAX_CHART_LEN):
    """Can each level be pushed off the sampled spectrum and the shifted
    family still carry an atlas?

    A level may be nudged by up to NUDGE_BUDGET steps of 1e-8 times the
    spectral radius in either direction; it must then clear every sampled
    spectrum by gap_tol. Levels glued to an eigenvalue across the whole
    nudge budget fail, as do shifted families that refuse to carry an
    adapted atlas. Returns (ok, report string).
    """
    radius = f.spectral_radius()
    step = 1e-8 * max(1.0, radius)
    notes = []
    eye = np.eye(f.dim, dtype=np.complex128)
    for lam in levels:
        lam = float(lam)
        shifted_level = None
        for k in range(NUDGE_BUDGET + 1):
            for sign in ((0,) if k == 0 else (1, -1)):
                cand = lam + sign * k * step
                clear = min(
                    float(np.abs(f.eigen(x).eigenvalues - cand).min())
                    for x in range(f.n_samples)
                )
                if clear >= gap_tol:
                    shifted_level = cand
                    break
            if shifted_level is not None:
                break
        if shifted_level is None:
            return False, (
                f"level {lam:.12g} stays within {gap_tol:.1e} of the sampled "
                f"spectrum throughout the nudge budget"
            )
        ops = tuple(A - shifted_level * eye for A in f.operators)
        g = OperatorFamily(grid=f.grid, dim=f.dim, operators=ops, hermitian=True)
        try:
            atlas = build_atlas(g, max_chart_len=max_chart_len, gap_tol=gap_tol)
        except AtlasBuildError as exc:
            return False, f"level {lam:.12g}: {exc}"
        notes.append(f"level {lam:.12g}: ok ({atlas.n_charts} charts)")
    return True, "; ".join(notes)


def is_spectral_section(f: OperatorFamily, sections, radius):
    """Sandwich test: window above r inside the section, section above -r.

    radius may be a scalar or a per-sample array. Returns (ok, report dict)
    with the worst residuals and the sample where they occur.
    """
    subs = sections.subspaces if isinstance(sections, WeakSpectralSection) else tuple(sections)
    n = f.n_samples
    if len(subs) != n:
        raise ValidationError(f"{len(subs)} subspaces for {n} samples")
    r = np.broadcast_to(np.asarray(radius, dtype=float), (n,)).copy()
    if np.any(r <= 0):
        raise ValidationError("section radius must be positive everywhere")
    worst_upper = worst_lower = 0.0
    worst_sample = 0
    for x in range(n):
        upper = window_subspace(f, x, float(r[x]), np.inf)
        lower = window_subspace(f, x, -float(r[x]), np.inf)
        ru = inclusion_residual(upper, subs[x])
        rl = inclusion_residual(subs[x], lower)
        if max(ru, rl) > max(worst_upper, worst_lower):
            worst_sample = x
        worst_upper = max(worst_upper, ru)
        worst_lower = max(worst_lower, rl)
    ok = worst_upper <= SECTION_RESIDUAL_TOL and worst_lower <= SECTION_RESIDUAL_TOL
    return ok, {
        "upper_residual": worst_upper,
        "lower_residual": worst_lower,
        "worst_sample": worst_sample,
        "max_radius": float(r.max()),
    }


def _levels_below(pooled: np.ndarray, cap: float, gap_tol: float) -> list:
    """Control levels under cap: midpoints of (capped) spectral gaps, best first."""
    out = []
    for a, b in zip(pooled[:-1], pooled[1:]):
        hi = min(b, cap)
        if hi <= a:
            continue
        m = 0.5 * (a + hi)
        if min(m - a, b - m) >= gap_tol:
            out.append(float(m))
    out.sort(reverse=True)
    out.append(float(min(cap, pooled[0] - 1.0)))
    return out


def _levels_above(pooled: np.ndarray, cap: float, gap_tol: float) -> list:
    """Control levels over cap, mirrored: lowest usable midpoint first."""
    out = []
    for a, b in zip(pooled[:-1], pooled[1:]):
        lo = max(a, cap)
        if b <= lo:
            continue
        m = 0.5 * (lo + b)
        if min(m - a, b - m) >= gap_tol:
            out.append(float(m))
    out.sort()
    out.append(float(max(cap, pooled[-1] + 1.0)))
    return out


def _projection_floor(f: OperatorFamily, x: int, K: Subspace, level: float,
                      upper: bool) -> float:
    """Smallest singular value of the spectral projection restricted to K."""
    if K.dim == 0:
        return 1.0
    if upper:
        H = window_subspace(f, x, level, np.inf)
    else:
        H = window_subspace(f, x, -np.inf, level)
    if H.dim < K.dim:
        return 0.0
    sig = np.linalg.svd(H.frame.conj().T @ K.frame, compute_uv=False)
    return float(sig[-1]) if sig.size else 0.0


def _aligned_radius(abs_vals: np.ndarray, r0: float, clearance: float) -> float:
    """Smallest radius at least r0 keeping a safe distance from |spectrum|."""
    r0 = max(r0, clearance)
    vals = np.asarray(abs_vals, dtype=float)
    if vals.size == 0:
        return r0
    if float(np.abs(vals - r0).min()) >= clearance:
        return r0
    cands = []
    prev = 0.0
    for v in vals:
        lo = max(prev, r0)
        if v > lo:
            m = 0.5 * (lo + v)
            if min(m - prev, v - m) >= clearance:
                cands.append(m)
        prev = v
    cands.append(max(r0, float(vals[-1]) + 1.0))
    return float(min(cands))


def _chart_pooled(f: OperatorFamily, chart) -> np.ndarray:
    return np.unique(
        np.concatenate([f.eigen(k).eigenvalues for k in chart.sample_indices()])
    )


def _fixed_point_radius(f: OperatorFamily, subs, gap_tol: float):
    """Per-sample radius certifying the input is already sandwiched, or None.

    For each sample the candidate radii are the midpoints of the gaps of the
    absolute spectrum (zero prepended), tried in ascending order; only levels
    below the top of the spectrum count, since beyond it the sandwich holds
    for any subspace and certifies nothing.
    """
    n = f.n_samples
    radius = np.zeros(n)
    for x in range(n):
        abs_vals = np.unique(np.abs(f.eigen(x).eigenvalues))
        edges = np.concatenate([[0.0], abs_vals])
        found = None
        for a, b in zip(edges[:-1], edges[1:]):
            m = 0.5 * (a + b)
            if min(m - a, b - m) < gap_tol or m <= 0.0:
                continue
            upper = window_subspace(f, x, m, np.inf)
            lower = window_subspace(f, x, -m, np.inf)
            if (inclusion_residual(upper, subs[x]) <= SECTION_RESIDUAL_TOL
                    and inclusion_residual(subs[x], lower) <= SECTION_RESIDUAL_TOL):
                found = m
                break
        if found is None:
            return None
        radius[x] = found
    return radius


def _pick_chart_levels(f: OperatorFamily, atlas: Atlas, sections, cap: float,
                       gap_tol: float, upper: bool) -> list:
    """One control level per chart with the projection injective throughout."""
    chosen = []
    for i, chart in enumerate(atlas.charts):
        pooled = _chart_pooled(f, chart)
        if upper:
            cands = _levels_below(pooled, cap, gap_tol)
        else:
            cands = _levels_above(pooled, cap, gap_tol)
        level = None
        for v in cands:
            floor_val = min(
                _projection_floor(f, x, sections[x], v, upper=upper)
                for x in chart.sample_indices()
            )
            if floor_val >= INJECTIVITY_ACCEPT:
                level = v
                break
        if level is None:
            raise InjectivityError(
                f"no control level keeps the spectral projection injective on "
                f"chart {i} (samples {chart.start}..{chart.end}); the section "
                f"is too degenerate there"
            )
        chosen.append(level)
    return chosen


@dataclass(frozen=True, eq=False)
class DeformationResult:
    """Outcome of the two-pass deformation.

    sections holds the final per-sample subspaces, radius the per-sample
    sandwich radius, mu and mu_perp the lower and upper control envelopes.
    homotopy(x, s) samples the concatenated deformation path at parameter
    s in [0, 1]; s = 0 is the input section, s = 1 the output.
    """

    sections: tuple
    radius: np.ndarray
    mu: np.ndarray
    mu_perp: np.ndarray
    nu: tuple
    nu_perp: tuple
    pou: PartitionOfUnity
    intermediate: tuple = field(repr=False, default=())
    homotopy: Callable = field(repr=False, default=None)
    report: dict = field(default_factory=dict)


def deform_to_spectral_section(f: OperatorFamily, S: WeakSpectralSection,
                               atlas: Optional[Atlas] = None,
                               gap_tol: float = DEFAULT_GAP_TOL,
                               max_chart_len: int = DEFAULT_MAX_CHART_LEN) -> DeformationResult:
    """Deform a weak section into a spectral section with an explicit radius.

    Pass one pulls the section into spectral windows above per-chart control
    levels nu, combined through a partition of unity; pass two repeats the
    construction on orthogonal complements with levels nu_perp above the
    cut. The result is pinched between Im P above mu_perp and Im P above mu,
    and the returned radius turns that pinch into the sandwich property,
    verified before returning.

    An input whose subspaces already satisfy the sandwich at some
    sub-spectral radius is returned unchanged with a constant homotopy; the
    construction only runs when there is something to deform.
    """
    n = f.n_samples
    if len(S.subspaces) != n:
        raise ValidationError(
            f"{len(S.subspaces)} subspaces for {n} samples"
        )
    fp = _fixed_point_radius(f, S.subspaces, gap_tol)
    if fp is not None:
        subs_in = S.subspaces

        def constant_homotopy(x: int, s: float) -> Subspace:
            if not 0.0 <= s <= 1.0:
                raise ValidationError(f"homotopy parameter {s} outside [0, 1]")
            return subs_in[x]

        ok, rep = is_spectral_section(f, subs_in, fp)
        if not ok:
            raise ModelViolationError(
                f"fixed-point certificate contradicts the sandwich test: {rep}"
            )
        rep = dict(rep)
        rep["fixed_point"] = True
        return DeformationResult(
            sections=subs_in,
            radius=fp,
            mu=-fp,
            mu_perp=fp.copy(),
            nu=(),
            nu_perp=(),
            pou=None,
            intermediate=(),
            homotopy=constant_homotopy,
            report=rep,
        )
    ok, rep = weak_section_check(f, S)
    if not ok:
        raise ValidationError(f"not a weak section: {rep['reason']}")
    okd, drep = discrete_spectrum_check(f, [S.reference_cut], gap_tol=gap_tol,
                                        max_chart_len=max_chart_len)
    if not okd:
        raise ValidationError(f"discrete-spectrum precheck failed: {drep}")
    if atlas is None:
        atlas = build_atlas(f, max_chart_len=max_chart_len, gap_tol=gap_tol)
    ok, rep = check_atlas(f, atlas, gap_tol)
    if not ok:
        raise ValidationError(f"atlas rejected: {rep}")
    loop = f.grid.closure == "exact_loop"
    pou = partition_of_unity(atlas, n, loop=loop)

    cut0 = min(0.0, S.reference_cut)
    cut1 = max(0.0, S.reference_cut)
    nu = _pick_chart_levels(f, atlas, S.subspaces, cut0, gap_tol, upper=True)

    chains1, weights1 = [], []
    first_pass = []
    mu = np.zeros(n)
    for x in range(n):
        active = pou.active_charts(x)
        order = sorted(active, key=lambda i: (nu[i], i))
        chain = [window_subspace(f, x, nu[i], np.inf) for i in order]
        w = np.array([pou.weights[i, x] for i in order])
        L = convex_combination_image(S.subspaces[x], chain, w)
        first_pass.append(L)
        chains1.append(chain)
        weights1.append(w)
        mu[x] = float(np.dot(pou.plateaus[:, x], nu))
        if mu[x] > min(nu[i] for i in active) + 1e-12:
            raise ModelViolationError(
                f"lower control envelope exceeds an active level at sample {x}"
            )

    complements = [orthogonal_complement(L) for L in first_pass]
    nu_perp = _pick_chart_levels(f, atlas, complements, cut1, gap_tol, upper=False)

    chains2, weights2 = [], []
    final = []
    mu_perp = np.zeros(n)
    for x in range(n):
        active = pou.active_charts(x)
        order = sorted(active, key=lambda i: (-nu_perp[i], i))
        chain = [window_subspace(f, x, -np.inf, nu_perp[i]) for i in order]
        w = np.array([pou.weights[i, x] for i in order])
        Mp = convex_combination_image(complements[x], chain, w)
        M = orthogonal_complement(Mp)
        final.append(M)
        chains2.append(chain)
        weights2.append(w)
        mu_perp[x] = float(np.dot(pou.plateaus[:, x], nu_perp))
        top = max(nu_perp[i] for i in active)
        bottom = min(nu[i] for i in active)
        if mu_perp[x] < top - 1e-12:
            raise ModelViolationError(
                f"upper control envelope undercuts an active level at sample {x}"
            )
        if M.dim != S.subspaces[x].dim:
            raise ModelViolationError(
                f"deformation changed the section dimension at sample {x}"
            )
        res_up = inclusion_residual(window_subspace(f, x, top, np.inf), M)
        res_dn = inclusion_residual(M, window_subspace(f, x, bottom, np.inf))
        if max(res_up, res_dn) > SECTION_RESIDUAL_TOL:
            raise ModelViolationError(
                f"pinch inclusions fail at sample {x}: "
                f"residuals {res_up:.3e}, {res_dn:.3e}"
            )

    radius = np.zeros(n)
    for x in range(n):
        r0 = max(abs(mu[x]), abs(mu_perp[x]))
        abs_vals = np.unique(np.abs(f.eigen(x).eigenvalues))
        radius[x] = _aligned_radius(abs_vals, r0, gap_tol)
    ok, rep = is_spectral_section(f, final, radius)
    if not ok:
        raise ModelViolationError(f"deformed section fails the sandwich test: {rep}")

    sections_in = S.subspaces
    comp_in = complements

    def homotopy(x: int, s: float) -> Subspace:
        if not 0.0 <= s <= 1.0:
            raise ValidationError(f"homotopy parameter {s} outside [0, 1]")
        if s <= 0.5:
            return combination_path(sections_in[x], chains1[x], weights1[x], 2.0 * s)
        part = combination_path(comp_in[x], chains2[x], weights2[x], 2.0 * s - 1.0)
        return orthogonal_complement(part)

    return DeformationResult(
        sections=tuple(final),
        radius=radius,
        mu=mu,
        mu_perp=mu_perp,
        nu=tuple(nu),
        nu_perp=tuple(nu_perp),
        pou=pou,
        intermediate=tuple(first_pass),
        homotopy=homotopy,
        report=rep,
    )


@dataclass(frozen=True, eq=False)
class ExistenceData:
    """Verdict of the loop existence test.

    exists is decided by the spectral flow; when it holds, sections carries
    a witness verified against the sandwich oracle and radius its r values.
    deformed optionally holds the glued output of the deformation applied to
    the raw witness, when a global reference cut is available for it.
    """

    exists: bool
    flow: int
    obstruction: int
    sections: tuple = ()
    radius: Optional[np.ndarray] = None
    deformed: Optional[DeformationResult] = None
    note: str = ""


def section_existence(f: OperatorFamily, gap_tol: float = DEFAULT_GAP_TOL,
                      max_chart_len: int = DEFAULT_MAX_CHART_LEN) -> ExistenceData:
    """Spectral flow as the obstruction to a section over a loop.

    Zero flow produces a witness: the span of the top sorted eigenvalue
    branches, the split position chosen at the first sample, with a radius
    tracking the branch bracketing the split. Non-zero flow reports itself
    as the obstruction.
    """
    if f.grid.closure == "open_path":
        raise ValidationError(
            "section existence is a loop question; open paths always deform"
        )
    routes = spectral_flow_routes(f, gap_tol=gap_tol, max_chart_len=max_chart_len)
    if not routes["agree"]:
        raise ModelViolationError(f"flow routes disagree: {routes}")
    flow = int(routes["chartwise"])
    if flow != 0:
        return ExistenceData(exists=False, flow=flow, obstruction=flow,
                             note="flow obstruction")
    n = f.n_samples
    lam0 = f.eigen(0).eigenvalues
    split = int(np.searchsorted(lam0, 0.0, side="left"))
    sections = []
    radius = np.zeros(n)
    for x in range(n):
        dec = f.eigen(x)
        sections.append(Subspace(f.dim, dec.frame[:, split:]))
        lam = dec.eigenvalues
        r0 = 0.0
        if split > 0:
            r0 = max(r0, float(lam[split - 1]))
        if split < f.dim:
            r0 = max(r0, -float(lam[split]))
        abs_vals = np.unique(np.abs(lam))
        radius[x] = _aligned_radius(abs_vals, max(r0, gap_tol), gap_tol)
    ok, rep = is_spectral_section(f, sections, radius)
    if not ok:
        raise ModelViolationError(
            f"witness section fails the sandwich test: {rep}"
        )
    deformed = None
    note = "witness from sorted branches"
    upper_edge = min(float(f.eigen(x).eigenvalues[split]) for x in range(n)) if split < f.dim else None
    lower_edge = max(float(f.eigen(x).eigenvalues[split - 1]) for x in range(n)) if split > 0 else None
    if upper_edge is not None and lower_edge is not None and upper_edge - lower_edge > 2 * gap_tol:
        cut = 0.5 * (upper_edge + lower_edge)
        try:
            weak = WeakSpectralSection(subspaces=tuple(sections), reference_cut=cut)
            deformed = deform_to_spectral_section(f, weak, gap_tol=gap_tol,
                                                  max_chart_len=max_chart_len)
            note += f"; glued through the deformation at cut {cut:.6g}"
        except (ValidationError, InjectivityError, AtlasBuildError):
            deformed = None
    return ExistenceData(
        exists=True,
        flow=flow,
        obstruction=0,
        sections=tuple(sections),
        radius=radius,
        deformed=deformed,
        note=note,
    )
