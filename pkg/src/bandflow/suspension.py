"""Suspension of a self-adjoint family into a loop of unitaries-to-be.

Each operator A is swept into B(t) = cos(t) I + i sin(t) A for t in [0, pi].
At the ends B collapses to +-I, and kernels of B(t) can only appear on the
equator t = pi/2, exactly over the parameters where A itself is singular.
Counting those equatorial kernels with the direction of the crossing branch
reproduces the spectral flow of the base family by a completely different
route than the chartwise bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ModelViolationError, ValidationError
from .families import OperatorFamily
from .flow import enhanced_check
from .linalg import (
    Subspace,
    absolute_value,
    hermitian_eig,
    spectral_projection,
    subspace_distance,
)

ENDPOINT_TOL = 1e-12
NORMALITY_TOL = 1e-10
SPECTRUM_IDENTITY_TOL = 1e-9
BAND_MATCH_TOL = 1e-8
KERNEL_TOL = 1e-8
EQUATOR_COS_TOL = 1e-12
WINDING_INT_TOL = 0.1


def _suspension_operator(A: np.ndarray, t: float) -> np.ndarray:
    n = A.shape[0]
    return np.cos(t) * np.eye(n, dtype=np.complex128) + 1j * np.sin(t) * A


@dataclass(frozen=True, eq=False)
class SuspensionFamily:
    """Grid of suspension operators, parameter-major.

    operators[x][k] is the suspension of base operator x at angle t_samples[k].
    """

    base: OperatorFamily
    t_samples: np.ndarray
    operators: tuple = field(repr=False, default=())

    def __post_init__(self):
        t = np.asarray(self.t_samples, dtype=np.float64)
        if t.ndim != 1 or t.size < 3:
            raise ValidationError("need at least 3 suspension angles")
        if abs(t[0]) > 0 or abs(t[-1] - np.pi) > 1e-15:
            raise ValidationError("suspension angles must run from 0 to pi")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("suspension angles must strictly increase")
        object.__setattr__(self, "t_samples", t)
        n = self.base.dim
        eye = np.eye(n, dtype=np.complex128)
        for x, row in enumerate(self.operators):
            for k, B in enumerate(row):
                if B.shape != (n, n):
                    raise ValidationError(
                        f"suspension operator ({x},{k}) has shape {B.shape}"
                    )
            d0 = float(np.abs(row[0] - eye).max())
            d1 = float(np.abs(row[-1] + eye).max())
            if d0 > ENDPOINT_TOL or d1 > ENDPOINT_TOL:
                raise ValidationError(
                    f"suspension at parameter {x} does not collapse to +-identity "
                    f"at the ends (deviations {d0:.3e}, {d1:.3e})"
                )
            for k, B in enumerate(row):
                comm = B @ B.conj().T - B.conj().T @ B
                dev = float(np.abs(comm).max())
                if dev > NORMALITY_TOL:
                    raise ValidationError(
                        f"suspension operator ({x},{k}) is not normal "
                        f"(commutator deviation {dev:.3e})"
                    )

    @property
    def n_parameters(self) -> int:
        return len(self.operators)

    @property
    def n_angles(self) -> int:
        return int(self.t_samples.size)

    def equator_index(self) -> int:
        """Index of the angle sample sitting on the equator t = pi/2."""
        cos_t = np.cos(self.t_samples)
        hits = np.nonzero(np.abs(cos_t) <= EQUATOR_COS_TOL)[0]
        if hits.size != 1:
            raise ValidationError(
                "the angle grid must sample the equator t = pi/2 exactly once; "
                "use an odd number of angles"
            )
        return int(hits[0])


def suspend(f: OperatorFamily, t_count: int = 41) -> SuspensionFamily:
    """Build the suspension family of f on an odd uniform angle grid."""
    if t_count < 3 or t_count % 2 == 0:
        raise ValidationError(
            "t_count must be odd and at least 3 so the equator is sampled"
        )
    if not f.hermitian:
        raise ValidationError("suspension needs a self-adjoint base family")
    t = np.linspace(0.0, np.pi, t_count)
    t[(t_count - 1) // 2] = np.pi / 2
    ops = tuple(
        tuple(_suspension_operator(A, float(tk)) for tk in t) for A in f.operators
    )
    return SuspensionFamily(base=f, t_samples=t, operators=ops)


def suspension_spectrum_check(A: np.ndarray, t: float) -> float:
    """Verify |B(t)|^2 has spectrum {cos^2 t + lam^2 sin^2 t} over lam in spec(A).

    Returns the max absolute deviation between the two sorted spectra and
    raises if it exceeds the identity tolerance.
    """
    dec = hermitian_eig(A)
    B = _suspension_operator(np.asarray(A, dtype=np.complex128), t)
    gram = B.conj().T @ B
    gram = 0.5 * (gram + gram.conj().T)
    left = np.sort(np.linalg.eigvalsh(gram))
    right = np.sort(np.cos(t) ** 2 + dec.eigenvalues**2 * np.sin(t) ** 2)
    dev = float(np.abs(left - right).max())
    if dev > SPECTRUM_IDENTITY_TOL * max(1.0, float(right.max())):
        raise ModelViolationError(
            f"suspension spectrum identity violated at t={t}: deviation {dev:.3e}"
        )
    return dev


def band_correspondence_check(A: np.ndarray, eps: float, t: float) -> bool:
    """Low band of |B(t)| below delta(t) matches the band of |A| below eps.

    delta(t) = sqrt(cos^2 t + eps^2 sin^2 t). Requires sin t away from 0 and
    (A, eps) forming an enhanced pair.
    """
    if abs(np.sin(t)) < 1e-9:
        raise ValidationError("band correspondence needs sin t bounded away from 0")
    enhanced_check(np.asarray(A, dtype=np.complex128), eps)
    delta = float(np.sqrt(np.cos(t) ** 2 + eps**2 * np.sin(t) ** 2))
    B = _suspension_operator(np.asarray(A, dtype=np.complex128), t)
    absB = absolute_value(B)
    low_susp = spectral_projection(absB, -1.0, delta)
    dec = hermitian_eig(np.asarray(A, dtype=np.complex128))
    keep = np.abs(dec.eigenvalues) < eps
    low_base = Subspace(A.shape[0], dec.frame[:, keep])
    if low_susp.dim != low_base.dim:
        return False
    return subspace_distance(low_susp, low_base) <= BAND_MATCH_TOL


def zero_band_check(A: np.ndarray, delta: float, t: float) -> bool:
    """Below |cos t| the absolute value of B(t) has no spectrum at all."""
    if abs(np.sin(t)) < 1e-9:
        raise ValidationError("zero band check needs sin t bounded away from 0")
    if delta < 0 or delta**2 >= np.cos(t) ** 2:
        raise ValidationError("zero band check applies only for delta < |cos t|")
    B = _suspension_operator(np.asarray(A, dtype=np.complex128), t)
    sing = np.linalg.svd(B, compute_uv=False)
    return not bool(np.any(sing <= delta))


@dataclass(frozen=True)
class SuspensionIndexData:
    """Signed equatorial kernel count plus the auxiliary determinant winding."""

    index: int
    kernel_samples: tuple
    det_winding: Optional[int]
    winding_residual: Optional[float]


def _signed_equator_count(eig_table: np.ndarray) -> int:
    """Net number of sorted eigenvalue branches moving up through zero.

    A branch that sits exactly at zero is counted once it actually leaves
    for the other side, matching the convention of the branch oracle.
    """
    ups = 0
    downs = 0
    m, n = eig_table.shape
    for j in range(n):
        for k in range(m - 1):
            a, b = eig_table[k, j], eig_table[k + 1, j]
            if a <= 0.0 < b:
                ups += 1
            elif a > 0.0 >= b:
                downs += 1
    return ups - downs


def suspension_index(sf: SuspensionFamily, kernel_tol: float = KERNEL_TOL) -> SuspensionIndexData:
    """Count equatorial kernels of the suspension with crossing signs.

    Off-equator kernels contradict the model and raise. For exact-loop bases
    the winding number of det B along a contour hugging the equator is
    computed as an independent auxiliary report.
    """
    te = sf.equator_index()
    n_par = sf.n_parameters
    kernel_samples = []
    for x in range(n_par):
        for k, row_op in enumerate(sf.operators[x]):
            smin = float(np.linalg.svd(row_op, compute_uv=False)[-1])
            if smin <= kernel_tol:
                if k != te:
                    raise ModelViolationError(
                        f"kernel detected off the equator at parameter {x}, "
                        f"angle index {k} (smallest singular value {smin:.3e})"
                    )
                kernel_samples.append(x)
    # Equator slice: -i B(pi/2) recovers a self-adjoint operator whose
    # eigenvalue branches carry the crossing directions.
    table = np.zeros((n_par, sf.base.dim))
    for x in range(n_par):
        H = -1j * sf.operators[x][te]
        dev = float(np.abs(H - H.conj().T).max())
        if dev > 1e-9:
            raise ModelViolationError(
                f"equator slice at parameter {x} is not self-adjoint "
                f"(deviation {dev:.3e})"
            )
        table[x] = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
    index = _signed_equator_count(table)

    det_winding = None
    winding_residual = None
    if sf.base.grid.closure == "exact_loop":
        det_winding, winding_residual = _det_winding(sf, te)
    return SuspensionIndexData(
        index=index,
        kernel_samples=tuple(kernel_samples),
        det_winding=det_winding,
        winding_residual=winding_residual,
    )


def _det_winding(sf: SuspensionFamily, te: int):
    """Winding of det B around a thin rectangle enclosing the equator line.

    The two long legs run along the angle rows adjacent to the equator; the
    short legs close the contour at the loop seam, where the base operators
    at both ends coincide.
    """
    lo, hi = te - 1, te + 1
    m = sf.n_parameters - 1
    contour = []
    contour.extend(sf.operators[x][lo] for x in range(0, m + 1))
    contour.append(sf.operators[m][te])
    contour.extend(sf.operators[x][hi] for x in range(m, -1, -1))
    contour.append(sf.operators[0][te])
    contour.append(sf.operators[0][lo])
    dets = np.array([np.linalg.det(B) for B in contour])
    if np.any(np.abs(dets) < 1e-12):
        return None, None
    angles = np.angle(dets[1:] / dets[:-1])
    w = float(np.sum(angles) / (2.0 * np.pi))
    residual = abs(w - round(w))
    if residual > WINDING_INT_TOL:
        raise ModelViolationError(
            f"determinant winding {w:.6f} is not close to an integer"
        )
    return int(round(w)), residual


def spectrum_surface(sf: SuspensionFamily) -> np.ndarray:
    """Eigenvalues of |B|^2 over the (parameter, angle) grid.

    Returns an array of shape (n_parameters, n_angles, dim), eigenvalues
    ascending in the last axis.
    """
    out = np.zeros((sf.n_parameters, sf.n_angles, sf.base.dim))
    for x in range(sf.n_parameters):
        for k, B in enumerate(sf.operators[x]):
            gram = B.conj().T @ B
            out[x, k] = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
    return out
