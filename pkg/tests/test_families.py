"""Parameter grids, family closure rules, and the built-in generators."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bandflow import (
    OperatorFamily,
    ParameterGrid,
    Subspace,
    ValidationError,
    continuity_check,
    generate,
    subspace_distance,
    window_subspace,
)

from conftest import random_hermitian


def constant_family(matrix, samples=2, closure="open_path"):
    """Wrap one matrix as a family that never moves."""
    kind = "interval_path" if closure == "open_path" else "circle_loop"
    grid = ParameterGrid(kind=kind, samples=np.linspace(0, 1, samples), closure=closure)
    M = np.asarray(matrix, dtype=np.complex128)
    return OperatorFamily(grid=grid, dim=M.shape[0], operators=(M,) * samples)


# ---------------------------------------------------------------- grids


def test_grid_rejects_non_increasing_samples():
    with pytest.raises(ValidationError):
        ParameterGrid(kind="interval_path", samples=np.array([0.0, 0.5, 0.5]),
                      closure="open_path")


def test_grid_rejects_single_sample():
    with pytest.raises(ValidationError):
        ParameterGrid(kind="interval_path", samples=np.array([0.3]), closure="open_path")


def test_grid_rejects_unknown_kind_and_closure():
    t = np.linspace(0, 1, 5)
    with pytest.raises(ValidationError):
        ParameterGrid(kind="mystery", samples=t, closure="open_path")
    with pytest.raises(ValidationError):
        ParameterGrid(kind="interval_path", samples=t, closure="sideways")


def test_grid_pairs_open_paths_with_intervals():
    t = np.linspace(0, 1, 5)
    with pytest.raises(ValidationError):
        ParameterGrid(kind="circle_loop", samples=t, closure="open_path")
    with pytest.raises(ValidationError):
        ParameterGrid(kind="interval_path", samples=t, closure="exact_loop")


def test_grid_shift_only_for_shifted_loops():
    t = np.linspace(0, 1, 5)
    with pytest.raises(ValidationError):
        ParameterGrid(kind="interval_path", samples=t, closure="open_path", shift=1)
    g = ParameterGrid(kind="circle_loop", samples=t, closure="shifted_loop", shift=1)
    assert g.is_loop and g.n_samples == 5


# ---------------------------------------------------------------- generators


def test_crossing_is_explicit_diagonal():
    f = generate("crossing", k=1, m=1)
    assert f.n_samples == 101 and f.dim == 2
    assert f.grid.closure == "open_path"
    t = f.grid.samples
    assert t[0] == 0.0 and t[-1] == 1.0
    for i in (0, 37, 100):
        expect = np.diag([t[i] - 0.5, 2.0])
        assert np.abs(f.operators[i] - expect).max() == 0.0


def test_crossing_variants():
    down = generate("crossing", k=-1, m=1, samples=11)
    t = down.grid.samples
    assert np.allclose([down.operators[i][0, 0] for i in range(11)], 0.5 - t)
    flat = generate("crossing", k=0, m=2, samples=7)
    assert flat.dim == 2
    assert np.allclose(np.linalg.eigvalsh(flat.operators[3]), [-2.0, 2.0])
    with pytest.raises(ValidationError):
        generate("crossing", k=0, m=0)


def test_spectator_ladder_is_gapped():
    f = generate("crossing", k=1, m=4, samples=5)
    lam = np.sort(np.diag(f.operators[2]).real)
    assert np.allclose(lam, [-3.0, -2.0, 0.0, 2.0, 3.0])


def test_truncated_shift_flow_closes_after_one_level_shift():
    f = generate("truncated_shift_flow", N=3)
    assert f.dim == 7 and f.grid.shift == 1
    lam0 = np.linalg.eigvalsh(f.operators[0])
    lam1 = np.linalg.eigvalsh(f.operators[-1])
    # one traversal pushes every rung up by exactly one level
    assert np.abs(lam1[:-1] - lam0[1:]).max() <= 1e-12
    # the half-step grid offset keeps all samples away from integer levels
    all_lam = np.concatenate([np.diag(op).real for op in f.operators])
    dist = np.abs(all_lam - np.round(all_lam))
    assert abs(dist.min() - 0.005) < 1e-12


def test_truncated_shift_flow_spectral_radius():
    f = generate("truncated_shift_flow", N=3)
    assert abs(f.spectral_radius() - 4.005) < 1e-12


def test_wrong_shift_declaration_rejected():
    # a ladder that moves by one level cannot close with shift 2
    t = np.linspace(0.0, 1.0, 21) + 0.025
    levels = np.arange(-2.0, 3.0)
    grid = ParameterGrid(kind="circle_loop", samples=t, closure="shifted_loop", shift=2)
    ops = tuple(np.diag(levels + tj).astype(np.complex128) for tj in t)
    with pytest.raises(ValidationError, match="shifted loop"):
        OperatorFamily(grid=grid, dim=5, operators=ops)


def test_exact_loop_must_close():
    t = np.linspace(0.0, 1.0, 9)
    grid = ParameterGrid(kind="circle_loop", samples=t, closure="exact_loop")
    ops = tuple(np.diag([tj, 2.0]).astype(np.complex128) for tj in t)
    with pytest.raises(ValidationError, match="fails to close"):
        OperatorFamily(grid=grid, dim=2, operators=ops)


def test_rotation_loop_has_constant_spectrum():
    f = generate("rotation", m=1)
    assert f.grid.closure == "exact_loop" and f.dim == 3
    assert np.abs(f.operators[0] - np.diag([-1.0, 1.0, 2.0])).max() < 1e-12
    for i in range(0, f.n_samples, 13):
        assert np.allclose(np.linalg.eigvalsh(f.operators[i]), [-1.0, 1.0, 2.0])


def test_rotation_fractional_turns_is_open():
    f = generate("rotation", m=1, turns=0.5, samples=40)
    assert f.grid.closure == "open_path"
    assert not f.grid.is_loop


def test_random_smooth_has_small_steps():
    f = generate("random_smooth", dim=5, seed=11)
    # probe band far below the spectrum so only eigenvalue motion registers
    rep = continuity_check(f, -100.0, -50.0)
    assert rep.max_band_subspace_step == 0.0
    assert rep.max_eigenvalue_step <= 0.1


def test_random_smooth_loop_closes_exactly():
    f = generate("random_smooth", dim=4, seed=3, samples=80, loop=True)
    assert f.grid.closure == "exact_loop"
    assert np.abs(f.operators[0] - f.operators[-1]).max() == 0.0


def test_refining_the_grid_shrinks_steps():
    coarse = generate("random_smooth", dim=4, seed=5, samples=150)
    fine = generate("random_smooth", dim=4, seed=5, samples=300)
    # same trig-polynomial curve either way, so halving the step halves motion
    assert np.abs(coarse.operators[0] - fine.operators[0]).max() == 0.0
    rc = continuity_check(coarse, -100.0, -50.0).max_eigenvalue_step
    rf = continuity_check(fine, -100.0, -50.0).max_eigenvalue_step
    assert rf <= 0.75 * rc


def test_constant_family_levels():
    f = generate("constant", dim=4, samples=10)
    assert np.allclose(np.sort(np.diag(f.operators[0]).real), [-2.0, -1.0, 1.0, 2.0])
    rep = continuity_check(f, 0.0, 3.0)
    assert rep.max_eigenvalue_step == 0.0
    assert rep.max_band_subspace_step == 0.0


def test_polarized_crossing_declares_frozen_bands():
    f = generate("polarized_crossing")
    assert f.polarized_bands == (1, 1) and f.dim == 3
    lam = np.array([np.linalg.eigvalsh(op) for op in f.operators])
    assert lam.min() >= -1.0 and lam.max() <= 1.0
    branch = np.array([op[0, 0].real for op in f.operators])
    assert abs(branch[0] + 0.3) < 1e-12 and abs(branch[-1] - 0.3) < 1e-12
    wide = generate("polarized_crossing", k=1, m_minus=2, m_plus=1, samples=9)
    assert wide.polarized_bands == (2, 1) and wide.dim == 4


def test_polarized_band_declaration_is_checked():
    t = np.linspace(0, 1, 3)
    grid = ParameterGrid(kind="interval_path", samples=t, closure="open_path")
    # spectrum escapes [-1, 1]
    ops = (np.diag([2.0]),) * 3
    with pytest.raises(ValidationError, match="leaves"):
        OperatorFamily(grid=grid, dim=1, operators=ops, polarized_bands=(0, 0))
    # fewer frozen eigenvalues than declared
    ops = (np.diag([0.5]),) * 3
    with pytest.raises(ValidationError, match="declared"):
        OperatorFamily(grid=grid, dim=1, operators=ops, polarized_bands=(1, 0))
    # multiplicities exceed the dimension
    ops = (np.diag([1.0]),) * 3
    with pytest.raises(ValidationError, match="multiplicities"):
        OperatorFamily(grid=grid, dim=1, operators=ops, polarized_bands=(1, 1))
    # frozen bands need a Hermitian family
    nh = (np.array([[0.0, 1.0], [0.0, 0.0]]),) * 3
    with pytest.raises(ValidationError, match="Hermitian"):
        OperatorFamily(grid=grid, dim=2, operators=nh, hermitian=False,
                       polarized_bands=(0, 0))


# ---------------------------------------------------------------- windows


def test_window_subspace_on_ladder_midpoint():
    f = generate("truncated_shift_flow", N=3)
    i = int(np.argmin(np.abs(f.grid.samples - 0.5)))
    V = window_subspace(f, i, 0.0, 2.0)
    # rungs 0 + t and 1 + t sit inside (0, 2) near the middle of the sweep
    assert V.dim == 2
    expect = Subspace(7, np.eye(7, dtype=np.complex128)[:, 3:5])
    assert subspace_distance(V, expect) < 1e-12


def test_window_subspace_isolated_level():
    f = constant_family(np.diag([-2.0, 0.5, 3.0]))
    V = window_subspace(f, 0, -1.0, 1.0)
    expect = Subspace(3, np.eye(3, dtype=np.complex128)[:, 1:2])
    assert V.dim == 1 and subspace_distance(V, expect) < 1e-12


@given(st.integers(min_value=0, max_value=400))
def test_window_dims_add_over_partitions(seed):
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, 6)
    f = constant_family(A)
    lam = np.linalg.eigvalsh(A)
    lo, hi = lam[0] - 1.0, lam[-1] + 1.0
    mid = 0.5 * (lam[2] + lam[3])  # midpoint of a spectral gap (maybe tiny, still open)
    if min(mid - lam[2], lam[3] - mid) < 1e-6:
        return  # degenerate draw, the window boundary rule would refuse it
    left = window_subspace(f, 0, lo, mid)
    right = window_subspace(f, 0, mid, hi)
    full = window_subspace(f, 0, lo, hi)
    assert left.dim + right.dim == full.dim == 6
    overlap = np.abs(left.frame.conj().T @ right.frame).max()
    assert overlap < 1e-10


def test_continuity_check_flags_band_jump():
    f = generate("crossing", k=1, m=1)
    # the moving branch enters (-0.105, 0.105) between samples 39 and 40
    rep = continuity_check(f, -0.105, 0.105)
    assert rep.max_band_subspace_step == 1.0
    assert rep.worst_step_index == 39
    assert abs(rep.max_eigenvalue_step - 0.01) < 1e-12


# ---------------------------------------------------------------- plumbing


def test_eigen_cache_returns_same_object():
    f = generate("constant", dim=3, samples=5)
    assert f.eigen(2) is f.eigen(2)


def test_eigen_requires_hermitian():
    t = np.linspace(0, 1, 2)
    grid = ParameterGrid(kind="interval_path", samples=t, closure="open_path")
    B = np.array([[0.0, 1.0], [0.0, 0.0]])
    f = OperatorFamily(grid=grid, dim=2, operators=(B, B), hermitian=False)
    with pytest.raises(ValidationError):
        f.eigen(0)


def test_operator_count_must_match_grid():
    t = np.linspace(0, 1, 4)
    grid = ParameterGrid(kind="interval_path", samples=t, closure="open_path")
    with pytest.raises(ValidationError, match="4 samples"):
        OperatorFamily(grid=grid, dim=1, operators=(np.eye(1),) * 3)


def test_operator_dim_must_match_declaration():
    t = np.linspace(0, 1, 2)
    grid = ParameterGrid(kind="interval_path", samples=t, closure="open_path")
    with pytest.raises(ValidationError, match="dim"):
        OperatorFamily(grid=grid, dim=3, operators=(np.eye(2), np.eye(2)))


def test_generate_unknown_name_lists_available():
    with pytest.raises(ValidationError, match="crossing"):
        generate("spiral")


def test_generate_rejects_bad_parameters():
    with pytest.raises(ValidationError, match="bad parameters"):
        generate("crossing", bogus=3)
