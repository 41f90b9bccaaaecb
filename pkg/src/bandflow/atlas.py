"""Adapted charts, atlas construction, and covering combinatorics.

A chart is a contiguous run of grid samples together with a band radius eps
such that +eps and -eps stay clear of every eigenvalue on the run, the band
rank is constant, and the band subspace moves continuously from sample to
sample. An atlas is an ordered list of such charts covering the grid with
single-sample overlaps between neighbours.

The radius search works on pooled absolute eigenvalues: the distance from
the pair {-eps, +eps} to an eigenvalue lam is | |lam| - eps |, so admissible
radii are midpoints of gaps in the pooled absolute spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import AtlasBuildError, ModelViolationError, ValidationError
from .families import ContinuityReport, OperatorFamily, window_subspace
from .linalg import subspace_distance

# Minimum clearance required between +-eps and every eigenvalue on a chart.
DEFAULT_GAP_TOL = 1e-6
# Cap on chart length in samples; keeps charts local and atlases nontrivial.
DEFAULT_MAX_CHART_LEN = 40
# A band that moves more than this between consecutive samples is treated as
# a different band (the projector distance saturates at 1).
BAND_CONTINUITY_TOL = 0.5
# Threshold on per-step movement of the upper spectral subspace.
STRICT_TOL = 0.5
# Guard against combinatorial blow-up in cover_category.
OBJECT_LIMIT = 10**6

_SIG_DIGITS = 12


@dataclass(frozen=True)
class AdaptedChart:
    """Contiguous sample range [start, end] with a band radius eps."""

    start: int
    end: int
    eps: float

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValidationError(f"bad chart range [{self.start}, {self.end}]")
        if not self.eps > 0:
            raise ValidationError(f"chart eps must be positive, got {self.eps}")

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def sample_indices(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class Atlas:
    """Ordered overlapping charts; neighbours share at least one sample."""

    charts: tuple

    def __post_init__(self):
        if not self.charts:
            raise ValidationError("atlas needs at least one chart")
        for k, (c, d) in enumerate(zip(self.charts, self.charts[1:])):
            if d.start > c.end:
                raise ValidationError(f"charts {k} and {k + 1} do not overlap")
            if d.start <= c.start or d.end <= c.end:
                raise ValidationError(f"chart {k + 1} does not advance past chart {k}")

    @property
    def n_charts(self) -> int:
        return len(self.charts)

    def covered_range(self) -> tuple:
        return (self.charts[0].start, self.charts[-1].end)

    def charts_containing(self, sample_index: int) -> list:
        return [i for i, c in enumerate(self.charts)
                if c.start <= sample_index <= c.end]


def _round_sig(x: float) -> float:
    return float(f"{x:.{_SIG_DIGITS}g}")


def _abs_sorted(f: OperatorFamily, k: int) -> np.ndarray:
    return np.sort(np.abs(f.eigen(k).eigenvalues))


def _radius_candidates(f: OperatorFamily, start: int, end: int, gap_tol: float,
                       eps_cap: float | None = None) -> list:
    """Admissible radii for the range, best first.

    A candidate is the midpoint of a gap in the pooled absolute spectrum
    (with 0 prepended as a virtual edge) whose clearance to the pooled values
    reaches gap_tol and whose band rank is the same at every sample. When
    eps_cap is given, gaps are clipped to (0, eps_cap] before taking
    midpoints, so every candidate stays under the cap. Candidates are
    ordered by clearance descending, comparing clearances rounded to 12
    significant digits so that gaps equal up to roundoff count as ties, then
    by radius ascending.

    Returns a list of (eps, clearance, rank) triples.
    """
    per_sample = [_abs_sorted(f, k) for k in range(start, end + 1)]
    pooled = np.unique(np.concatenate(per_sample))
    edges = np.concatenate(([0.0], pooled))
    lo, hi = edges[:-1], edges[1:]
    if eps_cap is not None:
        hi = np.minimum(hi, eps_cap)
    valid = hi > lo
    mids = np.where(valid, 0.5 * (lo + hi), 0.0)
    clear = np.where(valid, np.minimum(mids - lo, edges[1:] - mids), 0.0)
    keep = valid & (clear >= gap_tol) & (mids > 0)
    mids, clear = mids[keep], clear[keep]
    if mids.size == 0:
        return []
    counts = np.stack([np.searchsorted(lam, mids) for lam in per_sample])
    constant = np.all(counts == counts[0], axis=0)
    out = [(float(m), float(h), int(r))
           for m, h, r, ok in zip(mids, clear, counts[0], constant) if ok]
    out.sort(key=lambda c: (-_round_sig(c[1]), c[0]))
    return out


def _band_continuity_ok(f: OperatorFamily, start: int, end: int, eps: float) -> bool:
    prev = window_subspace(f, start, -eps, eps)
    for k in range(start + 1, end + 1):
        cur = window_subspace(f, k, -eps, eps)
        if subspace_distance(prev, cur) > BAND_CONTINUITY_TOL:
            return False
        prev = cur
    return True


def is_adapted(f: OperatorFamily, chart: AdaptedChart, gap_tol: float = DEFAULT_GAP_TOL):
    """Check the three chart conditions; returns (ok, report).

    The report names the first violation: a radius clearance failure, a band
    rank jump, or a band continuity break.
    """
    if chart.end >= f.n_samples:
        raise ValidationError("chart range leaves the grid")
    eps = chart.eps
    ranks = []
    for k in chart.sample_indices():
        lam = f.eigen(k).eigenvalues
        dist = np.abs(np.abs(lam) - eps)
        j = int(np.argmin(dist))
        if dist[j] < gap_tol:
            return False, (
                f"sample {k}: eigenvalue {lam[j]:.12g} lies within "
                f"{gap_tol:.1e} of the band edge +-{eps:.12g}"
            )
        ranks.append(int(np.sum(np.abs(lam) < eps)))
    if len(set(ranks)) > 1:
        k = next(i for i, r in enumerate(ranks) if r != ranks[0])
        return False, (
            f"band rank jumps from {ranks[0]} to {ranks[k]} at sample {chart.start + k}"
        )
    prev = window_subspace(f, chart.start, -eps, eps)
    for k in range(chart.start + 1, chart.end + 1):
        cur = window_subspace(f, k, -eps, eps)
        d = subspace_distance(prev, cur)
        if d > BAND_CONTINUITY_TOL:
            return False, (
                f"band moves by {d:.3f} between samples {k - 1} and {k} "
                f"(limit {BAND_CONTINUITY_TOL})"
            )
        prev = cur
    return True, "adapted"


def _grow_chart(f: OperatorFamily, start: int, max_chart_len: int, gap_tol: float,
                eps_cap: float | None = None):
    """Extend a chart rightward from start as far as any radius survives."""
    n = f.n_samples
    hard_end = min(n - 1, start + max_chart_len - 1)
    feasible_end = None
    j = start
    while j <= hard_end:
        if not _radius_candidates(f, start, j, gap_tol, eps_cap):
            break
        feasible_end = j
        j += 1
    if feasible_end is None:
        raise AtlasBuildError(
            f"no admissible gap radius at sample {start}; "
            f"refine the grid or lower gap_tol"
        )
    for end in range(feasible_end, start - 1, -1):
        for eps, _clear, _rank in _radius_candidates(f, start, end, gap_tol, eps_cap):
            if _band_continuity_ok(f, start, end, eps):
                return end, float(eps)
    raise AtlasBuildError(
        f"band continuity fails for every admissible radius starting "
        f"at sample {start}; refine the grid"
    )


def build_atlas(f: OperatorFamily, max_chart_len: int = DEFAULT_MAX_CHART_LEN,
                gap_tol: float = DEFAULT_GAP_TOL,
                eps_cap: float | None = None) -> Atlas:
    """Greedy left-to-right atlas construction.

    Each chart is extended rightward while some radius keeps clearing the
    pooled spectrum with a constant band rank; the radius finally chosen is
    the midpoint of the widest surviving gap (ties broken toward the smaller
    radius). The next chart starts at the previous chart's last sample, so
    consecutive charts overlap in exactly one sample. An eps_cap bounds
    every chart radius from above, at the cost of shorter charts.
    """
    if max_chart_len < 2:
        raise ValidationError("max_chart_len must be at least 2")
    n = f.n_samples
    charts = []
    start = 0
    while True:
        end, eps = _grow_chart(f, start, max_chart_len, gap_tol, eps_cap)
        if end == start and start < n - 1:
            raise AtlasBuildError(
                f"no gap radius shared by samples {start} and {start + 1}; "
                f"refine the grid"
            )
        charts.append(AdaptedChart(start=start, end=end, eps=eps))
        if end >= n - 1:
            break
        start = end
    return Atlas(charts=tuple(charts))


def check_atlas(f: OperatorFamily, atlas: Atlas, gap_tol: float = DEFAULT_GAP_TOL):
    """Full-grid coverage plus is_adapted on every chart; returns (ok, report)."""
    lo, hi = atlas.covered_range()
    if lo != 0 or hi != f.n_samples - 1:
        return False, f"atlas covers samples [{lo}, {hi}] of [0, {f.n_samples - 1}]"
    for i, chart in enumerate(atlas.charts):
        ok, report = is_adapted(f, chart, gap_tol)
        if not ok:
            return False, f"chart {i}: {report}"
    return True, "valid atlas"


def eps_for_subset(atlas: Atlas, sigma) -> float:
    """Radius attached to a chart subset: the minimum of the member radii.

    The subset must have a nonempty common sample range. Antitone under
    inclusion: enlarging sigma can only shrink the value.
    """
    idx = sorted(set(sigma))
    if not idx:
        raise ValidationError("chart subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= atlas.n_charts:
        raise ValidationError(f"chart index out of range in {idx}")
    members = [atlas.charts[i] for i in idx]
    lo = max(c.start for c in members)
    hi = min(c.end for c in members)
    if lo > hi:
        raise ValidationError(f"charts {idx} have no common sample")
    return min(c.eps for c in members)


@dataclass(frozen=True, eq=False)
class CoverCategoryData:
    """Objects (sample, chart subset), reverse-inclusion morphisms, nerve sizes.

    morphisms holds triples (sample, sigma, tau) with tau a nonempty subset
    of sigma; tau == sigma is the identity. nerve_counts[k] is the number of
    chains sigma_0 strictly containing sigma_1 ... strictly containing
    sigma_k at a fixed sample, summed over samples; nerve_counts[0] is the
    object count.
    """

    objects: tuple
    morphisms: tuple
    nerve_counts: tuple

    @property
    def object_count(self) -> int:
        return len(self.objects)

    @property
    def morphism_count(self) -> int:
        return len(self.morphisms)


def cover_category(atlas: Atlas, max_dim: int = 3) -> CoverCategoryData:
    """Enumerate the covering category over the atlas's sample range."""
    if not 0 <= max_dim <= 3:
        raise ValidationError("max_dim must be between 0 and 3")
    lo, hi = atlas.covered_range()
    objects = []
    morphisms = []
    nerve = [0] * (max_dim + 1)
    for x in range(lo, hi + 1):
        containing = atlas.charts_containing(x)
        subsets = []
        for size in range(1, len(containing) + 1):
            for combo in combinations(containing, size):
                subsets.append(frozenset(combo))
        if len(objects) + len(subsets) > OBJECT_LIMIT:
            raise ValidationError("covering category exceeds the object limit")
        for sigma in subsets:
            objects.append((x, sigma))
            for size in range(1, len(sigma) + 1):
                for combo in combinations(sorted(sigma), size):
                    morphisms.append((x, sigma, frozenset(combo)))
        # Chains of strict inclusions, counted by dynamic programming over
        # the subset poset at this sample.
        ways = {s: 1 for s in subsets}
        nerve[0] += len(subsets)
        for k in range(1, max_dim + 1):
            nxt = {}
            for tau in subsets:
                total = sum(w for s, w in ways.items() if tau < s)
                if total:
                    nxt[tau] = total
            nerve[k] += sum(nxt.values())
            ways = nxt
            if not ways:
                break
    return CoverCategoryData(
        objects=tuple(objects),
        morphisms=tuple(morphisms),
        nerve_counts=tuple(nerve),
    )


def _upper_subspace_steps(f: OperatorFamily, chart: AdaptedChart, eps: float):
    steps = []
    prev = window_subspace(f, chart.start, eps, np.inf)
    for k in range(chart.start + 1, chart.end + 1):
        cur = window_subspace(f, k, eps, np.inf)
        steps.append(subspace_distance(prev, cur))
        prev = cur
    return steps


def strictly_adapted_check(f: OperatorFamily, chart: AdaptedChart,
                           gap_tol: float = DEFAULT_GAP_TOL):
    """Continuity of the upper spectral subspace Im P_[eps, inf) on the chart.

    Returns (report, verdict) where verdict means the largest per-step
    movement stays within STRICT_TOL. The verdict must not depend on which
    admissible radius is used; this is re-checked at the extreme admissible
    radii and a disagreement raises ModelViolationError.
    """
    steps = _upper_subspace_steps(f, chart, chart.eps)
    eig_steps = []
    for k in range(chart.start + 1, chart.end + 1):
        eig_steps.append(float(np.abs(
            f.eigen(k).eigenvalues - f.eigen(k - 1).eigenvalues).max()))
    max_step = max(steps) if steps else 0.0
    worst = int(np.argmax(steps)) if steps and max_step > 0 else 0
    report = ContinuityReport(
        max_eigenvalue_step=max(eig_steps) if eig_steps else 0.0,
        max_band_subspace_step=float(max_step),
        worst_step_index=worst,
    )
    verdict = max_step <= STRICT_TOL
    admissible = [
        (eps, clear, rank)
        for eps, clear, rank in _radius_candidates(f, chart.start, chart.end, gap_tol)
        if _band_continuity_ok(f, chart.start, chart.end, eps)
    ]
    if admissible:
        for eps in (min(c[0] for c in admissible), max(c[0] for c in admissible)):
            other = _upper_subspace_steps(f, chart, eps)
            other_verdict = (max(other) if other else 0.0) <= STRICT_TOL
            if other_verdict != verdict:
                raise ModelViolationError(
                    f"strict-adaptedness verdict flips when the radius moves "
                    f"from {chart.eps:.6g} to {eps:.6g}"
                )
    return report, verdict
