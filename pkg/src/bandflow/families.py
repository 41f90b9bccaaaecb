"""Sampled operator families over one-dimensional parameter grids.

A family is a list of matrices, one per grid sample, plus closure metadata
saying whether the parameter interval is an open path, closes up exactly
into a loop, or closes up only after shifting the eigenvalue numbering by a
declared integer (the truncation-friendly way to model loops whose spectrum
drifts by a whole level per cycle).

Built-in generators cover the standard test cases: an explicit crossing
family with prescribed flow, a gapped rotation loop, the truncated shift
flow, smooth random families, and a crossing family with eigenvalues frozen
at -1 and +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import (
    SpectralDecomposition,
    Subspace,
    as_hermitian,
    as_square_matrix,
    hermitian_eig,
    spectral_projection,
    subspace_distance,
)

# Entrywise agreement required of the two endpoint operators of an exact loop.
FAMILY_TOL = 1e-9
# Sorted-spectrum agreement required across a shifted-loop seam, after
# dropping the declared number of boundary branches.
SHIFT_MATCH_TOL = 1e-8

CLOSURES = ("open_path", "exact_loop", "shifted_loop")
GRID_KINDS = ("interval_path", "circle_loop")


@dataclass(frozen=True, eq=False)
class ParameterGrid:
    """Strictly increasing parameter samples with closure metadata."""

    kind: str
    samples: np.ndarray
    closure: str
    shift: int = 0

    def __post_init__(self):
        t = np.asarray(self.samples, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValidationError("grid needs at least two samples")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("grid samples must be strictly increasing")
        if self.kind not in GRID_KINDS:
            raise ValidationError(f"unknown grid kind {self.kind!r}")
        if self.closure not in CLOSURES:
            raise ValidationError(f"unknown closure {self.closure!r}")
        if (self.closure == "open_path") != (self.kind == "interval_path"):
            raise ValidationError("open_path goes with interval_path, loops with circle_loop")
        if self.shift != 0 and self.closure != "shifted_loop":
            raise ValidationError("shift is only meaningful for shifted_loop closure")
        object.__setattr__(self, "samples", t)

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def is_loop(self) -> bool:
        return self.closure != "open_path"


@dataclass(frozen=True, eq=False)
class ContinuityReport:
    max_eigenvalue_step: float
    max_band_subspace_step: float
    worst_step_index: int


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """One operator per grid sample, with optional frozen bands at -1 and +1.

    polarized_bands, when present, is a pair (m_minus, m_plus) declaring that
    every member has at least m_minus eigenvalues at -1 and m_plus at +1
    (within 1e-9) and the whole spectrum inside [-1, 1]. scale records the
    divisor applied when a family was normalized into that range.

    Eigendecompositions are computed lazily per sample and cached, so
    repeated window queries at the same sample cost one eigensolve.
    """

    grid: ParameterGrid
    dim: int
    operators: tuple
    hermitian: bool = True
    polarized_bands: tuple | None = None
    scale: float | None = None
    _eig_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.operators) != self.grid.n_samples:
            raise ValidationError(
                f"{len(self.operators)} operators for {self.grid.n_samples} samples"
            )
        mats = []
        for k, op in enumerate(self.operators):
            M = as_hermitian(op) if self.hermitian else as_square_matrix(op)
            if M.shape[0] != self.dim:
                raise ValidationError(f"operator {k} has dim {M.shape[0]}, declared {self.dim}")
            mats.append(M)
        object.__setattr__(self, "operators", tuple(mats))
        if self.polarized_bands is not None:
            self._check_polarized_bands()
        self._check_closure()

    def _check_polarized_bands(self):
        if not self.hermitian:
            raise ValidationError("polarized bands require a Hermitian family")
        m_minus, m_plus = self.polarized_bands
        if m_minus < 0 or m_plus < 0 or m_minus + m_plus > self.dim:
            raise ValidationError(f"bad frozen multiplicities {self.polarized_bands}")
        for k, M in enumerate(self.operators):
            lam = np.linalg.eigvalsh(M)
            if lam.size and (lam[0] < -1.0 - 1e-9 or lam[-1] > 1.0 + 1e-9):
                raise ValidationError(
                    f"sample {k}: spectrum leaves [-1, 1] despite declared frozen bands"
                )
            n_lo = int(np.sum(np.abs(lam + 1.0) <= 1e-9))
            n_hi = int(np.sum(np.abs(lam - 1.0) <= 1e-9))
            if n_lo < m_minus or n_hi < m_plus:
                raise ValidationError(
                    f"sample {k}: found {n_lo}/{n_hi} eigenvalues at -1/+1, "
                    f"declared {m_minus}/{m_plus}"
                )

    def _check_closure(self):
        closure = self.grid.closure
        if closure == "exact_loop":
            gap = float(np.abs(self.operators[0] - self.operators[-1]).max())
            if gap > FAMILY_TOL:
                raise ValidationError(
                    f"exact loop fails to close: endpoint operators differ by {gap:.3e}"
                )
        elif closure == "shifted_loop":
            if not self.hermitian:
                raise ValidationError("shifted_loop closure requires a Hermitian family")
            s = self.grid.shift
            lam0 = np.linalg.eigvalsh(self.operators[0])
            lam1 = np.linalg.eigvalsh(self.operators[-1])
            n = lam0.size
            if abs(s) >= n:
                raise ValidationError("shift magnitude must be smaller than the dimension")
            if s >= 0:
                a, b = lam1[: n - s], lam0[s:]
            else:
                a, b = lam1[-s:], lam0[: n + s]
            gap = float(np.abs(a - b).max()) if a.size else 0.0
            if gap > SHIFT_MATCH_TOL:
                raise ValidationError(
                    f"shifted loop (shift {s}) fails to close: interior spectra differ by {gap:.3e}"
                )

    @property
    def n_samples(self) -> int:
        return self.grid.n_samples

    def eigen(self, i: int) -> SpectralDecomposition:
        """Cached eigendecomposition of the operator at sample i."""
        if not self.hermitian:
            raise ValidationError("eigen() is only defined for Hermitian families")
        if i not in self._eig_cache:
            self._eig_cache[i] = hermitian_eig(self.operators[i])
        return self._eig_cache[i]

    def spectral_radius(self) -> float:
        return max(self.eigen(i).spectral_radius() for i in range(self.n_samples))


def window_subspace(f: OperatorFamily, sample_index: int, a: float, b: float) -> Subspace:
    """Span of eigenvectors at one sample with eigenvalues strictly in (a, b)."""
    dec = f.eigen(sample_index)
    return spectral_projection(f.operators[sample_index], a, b, decomp=dec)


def continuity_check(f: OperatorFamily, a: float, b: float) -> ContinuityReport:
    """Largest per-step movement of the sorted spectrum and of the (a, b) band."""
    eig_steps = np.zeros(f.n_samples - 1)
    band_steps = np.zeros(f.n_samples - 1)
    prev_lam = f.eigen(0).eigenvalues
    prev_band = window_subspace(f, 0, a, b)
    for i in range(1, f.n_samples):
        lam = f.eigen(i).eigenvalues
        band = window_subspace(f, i, a, b)
        eig_steps[i - 1] = float(np.abs(lam - prev_lam).max())
        band_steps[i - 1] = subspace_distance(prev_band, band)
        prev_lam, prev_band = lam, band
    if band_steps.max() > 0:
        worst = int(np.argmax(band_steps))
    else:
        worst = int(np.argmax(eig_steps))
    return ContinuityReport(
        max_eigenvalue_step=float(eig_steps.max()),
        max_band_subspace_step=float(band_steps.max()),
        worst_step_index=worst,
    )


def _diag_family(columns: np.ndarray, t: np.ndarray, closure: str, shift: int = 0,
                 polarized_bands: tuple | None = None) -> OperatorFamily:
    """Family of diagonal matrices; columns[k] holds the k-th diagonal."""
    kind = "interval_path" if closure == "open_path" else "circle_loop"
    grid = ParameterGrid(kind=kind, samples=t, closure=closure, shift=shift)
    ops = [np.diag(columns[:, j]).astype(np.complex128) for j in range(t.size)]
    return OperatorFamily(grid=grid, dim=columns.shape[0], operators=tuple(ops),
                          polarized_bands=polarized_bands)


def _spectator_levels(m: int) -> list:
    """Deterministic gapped levels 2, -2, 3, -3, ... away from zero."""
    out = []
    v = 2.0
    for j in range(m):
        out.append(v if j % 2 == 0 else -v)
        if j % 2 == 1:
            v += 1.0
    return out


def _crossing(k: int = 1, m: int = 1, samples: int = 101) -> OperatorFamily:
    if abs(k) + m < 1:
        raise ValidationError("crossing family needs at least one branch")
    t = np.linspace(0.0, 1.0, samples)
    rows = []
    for _ in range(abs(k)):
        rows.append((t - 0.5) if k > 0 else (0.5 - t))
    for level in _spectator_levels(m):
        rows.append(np.full_like(t, level))
    return _diag_family(np.array(rows), t, closure="open_path")


def _rotation(m: int = 1, turns: float = 1.0, samples: int = 120) -> OperatorFamily:
    """Conjugation of diag(-1, 1) by an in-plane rotation; spectrum constant."""
    t = np.linspace(0.0, 1.0, samples)
    theta = 2.0 * math.pi * turns * t
    dim = 2 + m
    D = np.diag([-1.0, 1.0] + _spectator_levels(m)).astype(np.complex128)
    ops = []
    for th in theta:
        R = np.eye(dim, dtype=np.complex128)
        c, s = math.cos(th), math.sin(th)
        R[0, 0], R[0, 1], R[1, 0], R[1, 1] = c, -s, s, c
        ops.append(R @ D @ R.conj().T)
    whole_turns = abs(turns - round(turns)) < 1e-12
    closure = "exact_loop" if whole_turns else "open_path"
    kind = "circle_loop" if whole_turns else "interval_path"
    grid = ParameterGrid(kind=kind, samples=t, closure=closure)
    return OperatorFamily(grid=grid, dim=dim, operators=tuple(ops))


def _truncated_shift_flow(N: int = 3, samples: int = 101) -> OperatorFamily:
    """Eigenvalues n + t for n in -N..N with fixed eigenvectors.

    The grid is offset by half a step so no sample ever has an eigenvalue at
    an integer or half-integer level; one full traversal shifts the whole
    ladder up by one rung (shifted_loop with shift 1).
    """
    if N < 1:
        raise ValidationError("need N >= 1")
    h = 1.0 / (samples - 1)
    t = np.linspace(0.0, 1.0, samples) + 0.5 * h
    levels = np.arange(-N, N + 1, dtype=float)
    cols = levels[:, None] + t[None, :]
    return _diag_family(cols, t, closure="shifted_loop", shift=1)


def _random_smooth(dim: int = 5, seed: int = 0, samples: int = 200,
                   loop: bool = False, harmonics: int = 3,
                   drift: float = 0.8) -> OperatorFamily:
    """Trigonometric-polynomial Hermitian family with controlled step size."""
    rng = np.random.default_rng(seed)

    def rand_herm(scale):
        X = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        H = (X + X.conj().T) / (2.0 * math.sqrt(dim))
        return scale * H

    t = np.linspace(0.0, 1.0, samples)
    base = rand_herm(1.0)
    terms = [(rand_herm(0.35 / k**2), rand_herm(0.35 / k**2)) for k in range(1, harmonics + 1)]
    drift_op = None if loop else rand_herm(drift)
    ops = []
    for tj in t:
        A = base.copy()
        for k, (Bk, Ck) in enumerate(terms, start=1):
            A = A + math.cos(2 * math.pi * k * tj) * Bk + math.sin(2 * math.pi * k * tj) * Ck
        if drift_op is not None:
            A = A + tj * drift_op
        ops.append(A)
    if loop:
        ops[-1] = ops[0].copy()
        grid = ParameterGrid(kind="circle_loop", samples=t, closure="exact_loop")
    else:
        grid = ParameterGrid(kind="interval_path", samples=t, closure="open_path")
    return OperatorFamily(grid=grid, dim=dim, operators=tuple(ops))


def _constant(dim: int = 3, samples: int = 60) -> OperatorFamily:
    """Constant invertible diagonal family; nothing moves."""
    if dim < 1:
        raise ValidationError("need dim >= 1")
    t = np.linspace(0.0, 1.0, samples)
    levels = [(-1.0) ** j * (1.0 + j // 2) for j in range(dim)]
    rows = [np.full_like(t, lv) for lv in levels]
    return _diag_family(np.array(rows), t, closure="open_path")


def _polarized_crossing(k: int = 1, m_minus: int = 1, m_plus: int = 1,
                        samples: int = 101) -> OperatorFamily:
    """Crossing branches compressed into (-0.3, 0.3) plus frozen bands at -1, +1."""
    if abs(k) < 1:
        raise ValidationError("need at least one crossing branch")
    if m_minus < 1 or m_plus < 1:
        raise ValidationError("need at least one frozen eigenvalue on each side")
    t = np.linspace(0.0, 1.0, samples)
    rows = []
    for _ in range(abs(k)):
        rows.append(0.6 * ((t - 0.5) if k > 0 else (0.5 - t)))
    for _ in range(m_minus):
        rows.append(np.full_like(t, -1.0))
    for _ in range(m_plus):
        rows.append(np.full_like(t, 1.0))
    return _diag_family(np.array(rows), t, closure="open_path",
                        polarized_bands=(m_minus, m_plus))


GENERATORS = {
    "crossing": _crossing,
    "rotation": _rotation,
    "truncated_shift_flow": _truncated_shift_flow,
    "random_smooth": _random_smooth,
    "constant": _constant,
    "polarized_crossing": _polarized_crossing,
}


def generate(name: str, **params) -> OperatorFamily:
    """Build one of the named example families."""
    if name not in GENERATORS:
        raise ValidationError(
            f"unknown generator {name!r}; available: {sorted(GENERATORS)}"
        )
    try:
        return GENERATORS[name](**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for generator {name!r}: {exc}") from exc
