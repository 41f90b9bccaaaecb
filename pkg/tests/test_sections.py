"""Weak sections, the sandwich predicate, and the two-pass deformation."""

import numpy as np
import pytest

from bandflow import (
    AdaptedChart,
    Atlas,
    OperatorFamily,
    ParameterGrid,
    PartitionOfUnity,
    Subspace,
    ValidationError,
    WeakSpectralSection,
    deform_to_spectral_section,
    default_level_grid,
    discrete_spectrum_check,
    generate,
    is_spectral_section,
    make_weak_section,
    partition_of_unity,
    section_existence,
    subspace_distance,
    tilt_section,
    weak_section_check,
    window_subspace,
)
from bandflow.linalg import inclusion_residual


def constant_family(diagonal, samples=3):
    t = np.linspace(0.0, 1.0, samples)
    grid = ParameterGrid(kind="interval_path", samples=t, closure="open_path")
    A = np.diag(np.asarray(diagonal, dtype=np.complex128))
    return OperatorFamily(grid=grid, dim=len(diagonal), operators=(A,) * samples)


def sine_loop(samples=40):
    t = np.linspace(0.0, 1.0, samples)
    grid = ParameterGrid(kind="circle_loop", samples=t, closure="exact_loop")
    ops = tuple(np.diag([np.sin(2 * np.pi * s), 2.0]).astype(np.complex128) for s in t)
    return OperatorFamily(grid=grid, dim=2, operators=ops)


def span(*cols):
    F = np.column_stack([np.asarray(c, dtype=np.complex128) for c in cols])
    Q, _ = np.linalg.qr(F)
    return Subspace(F.shape[0], Q[:, : F.shape[1]])


# ------------------------------------------------------------- weak sections


def test_weak_section_window_above_cut():
    f = generate("crossing")
    S = make_weak_section(f, cut=1.5)
    assert S.n_samples == f.n_samples
    assert all(V.dim == 1 for V in S.subspaces)
    ok, report = weak_section_check(f, S)
    assert ok
    assert report["reason"] == "weak section"
    assert report["cut_clearance"] == pytest.approx(0.5)
    assert report["dim_defects"] == (0,) * f.n_samples
    assert report["max_step"] < 1e-12


def test_weak_section_rejects_cut_on_spectrum():
    f = generate("crossing")
    S = make_weak_section(f, cut=1.5)
    bad = WeakSpectralSection(subspaces=S.subspaces, reference_cut=2.0)
    ok, report = weak_section_check(f, bad)
    assert not ok
    assert "comes within" in report["reason"]


def test_weak_section_detects_jump():
    f = constant_family([-1.0, 1.0], samples=4)
    subs = (span([0, 1]), span([0, 1]), span([1, 0]), span([1, 0]))
    S = WeakSpectralSection(subspaces=subs, reference_cut=0.0)
    ok, report = weak_section_check(f, S)
    assert not ok
    assert "jumps" in report["reason"]
    assert report["max_step"] == pytest.approx(1.0)


def test_weak_section_detects_floor_content():
    f = constant_family([-5.0, 1.0])
    S = WeakSpectralSection(subspaces=(span([1, 0]),) * 3, reference_cut=0.0)
    ok, report = weak_section_check(f, S, floor=-3.0)
    assert not ok
    assert "below the floor" in report["reason"]
    assert report["floor_overlap"] == pytest.approx(1.0)
    # with the default floor one unit under the spectrum the check is vacuous
    ok_default, _ = weak_section_check(f, S)
    assert ok_default


def test_weak_section_shape_validation():
    f = constant_family([-1.0, 1.0], samples=4)
    S = WeakSpectralSection(subspaces=(span([0, 1]),) * 2, reference_cut=0.0)
    with pytest.raises(ValidationError, match="samples"):
        weak_section_check(f, S)
    wide = WeakSpectralSection(subspaces=(span([0, 0, 1]),) * 4, reference_cut=0.0)
    with pytest.raises(ValidationError, match="ambient"):
        weak_section_check(f, wide)
    with pytest.raises(ValidationError, match="at least one"):
        WeakSpectralSection(subspaces=(), reference_cut=0.0)
    with pytest.raises(ValidationError, match="ambient dim"):
        WeakSpectralSection(subspaces=(span([0, 1]), span([0, 0, 1])), reference_cut=0.0)


def test_tilt_section_moves_by_the_mixing_angle():
    f = sine_loop()
    S = make_weak_section(f, cut=1.5)
    T = tilt_section(f, S, angle=0.2)
    for x in range(f.n_samples):
        assert T.subspaces[x].dim == 1
        assert subspace_distance(S.subspaces[x], T.subspaces[x]) == pytest.approx(
            np.sin(0.2), abs=1e-12
        )
    ok, _ = weak_section_check(f, T)
    assert ok


def test_tilt_section_keeps_trivial_subspaces():
    f = generate("crossing")
    S = make_weak_section(f, cut=3.0)
    T = tilt_section(f, S, angle=0.4)
    assert all(T.subspaces[x] is S.subspaces[x] for x in range(f.n_samples))


# ------------------------------------------------------- partition of unity


def test_partition_single_sample_overlap_splits_evenly():
    atlas = Atlas(charts=(AdaptedChart(0, 5, 0.5), AdaptedChart(5, 10, 0.5)))
    pou = partition_of_unity(atlas, 11)
    assert pou.weights[0, 5] == pytest.approx(0.5)
    assert pou.weights[1, 5] == pytest.approx(0.5)
    assert pou.weights[0, 4] == 1.0 and pou.weights[1, 6] == 1.0
    assert pou.active_charts(5) == [0, 1]
    assert pou.active_charts(2) == [0]
    assert pou.active_charts(8) == [1]
    np.testing.assert_allclose(pou.weights.sum(axis=0), 1.0, atol=1e-15)


def test_partition_multi_sample_ramp():
    atlas = Atlas(charts=(AdaptedChart(0, 10, 0.5), AdaptedChart(5, 15, 0.5)))
    pou = partition_of_unity(atlas, 16)
    ramp = pou.weights[0, 5:11]
    np.testing.assert_allclose(ramp, [(6 - k) / 7.0 for k in range(6)], atol=1e-15)
    assert np.all(np.diff(pou.weights[0]) <= 1e-15)
    np.testing.assert_allclose(pou.weights.sum(axis=0), 1.0, atol=1e-15)
    # plateaus are indicators of the tent supports
    assert np.all(pou.plateaus[0, :11] == 1.0)
    assert np.all(pou.plateaus[0, 11:] == 0.0)
    assert np.all(pou.plateaus[1, 5:] == 1.0)


def test_partition_loop_seam_split():
    atlas = Atlas(charts=(AdaptedChart(0, 5, 0.5), AdaptedChart(5, 10, 0.5)))
    pou = partition_of_unity(atlas, 11, loop=True)
    assert pou.weights[0, 0] == pytest.approx(0.5)
    assert pou.weights[1, 0] == pytest.approx(0.5)
    assert pou.weights[0, 10] == pytest.approx(0.5)
    assert pou.weights[1, 10] == pytest.approx(0.5)
    np.testing.assert_allclose(pou.weights.sum(axis=0), 1.0, atol=1e-15)
    assert pou.active_charts(0) == [0, 1]


def test_partition_requires_full_cover():
    atlas = Atlas(charts=(AdaptedChart(0, 5, 0.5), AdaptedChart(5, 10, 0.5)))
    with pytest.raises(ValidationError, match="cover the full grid"):
        partition_of_unity(atlas, 12)


def test_partition_validation():
    ranges = ((0, 0), (0, 0))
    ones = np.ones((2, 1))
    with pytest.raises(ValidationError, match="sum to one"):
        PartitionOfUnity(weights=np.array([[0.6], [0.5]]), plateaus=ones, ranges=ranges)
    with pytest.raises(ValidationError, match=r"lie in \[0, 1\]"):
        PartitionOfUnity(weights=np.array([[1.5], [-0.5]]), plateaus=ones, ranges=ranges)
    with pytest.raises(ValidationError, match="plateaus must equal one"):
        PartitionOfUnity(
            weights=np.array([[1.0]]), plateaus=np.array([[0.5]]), ranges=((0, 0),)
        )
    with pytest.raises(ValidationError, match="leaves its chart range"):
        PartitionOfUnity(
            weights=np.full((2, 2), 0.5),
            plateaus=np.ones((2, 2)),
            ranges=((0, 0), (1, 1)),
        )
    with pytest.raises(ValidationError, match="2d shape"):
        PartitionOfUnity(weights=np.ones((1, 2)), plateaus=np.ones((2, 1)), ranges=((0, 1),))
    with pytest.raises(ValidationError, match="one range per chart"):
        PartitionOfUnity(weights=np.full((2, 2), 0.5), plateaus=np.ones((2, 2)), ranges=((0, 1),))


# ------------------------------------------------------------- level grids


def test_default_level_grid_crossing():
    f = generate("crossing")
    levels = default_level_grid(f)
    assert len(levels) == 4
    assert levels == sorted(levels)
    assert any(abs(m - 1.25) < 1e-12 for m in levels)


def test_default_level_grid_degenerate_spectrum():
    f = constant_family([3.0])
    assert default_level_grid(f) == [2.0, 4.0]


def test_discrete_check_shift_flow_levels():
    f = generate("truncated_shift_flow")
    ok, report = discrete_spectrum_check(f, [-1.5, -0.5, 0.5, 1.5])
    assert ok
    assert report.count("ok") == 4


def test_discrete_check_pinned_level():
    f = constant_family([0.5, 2.0])
    ok, report = discrete_spectrum_check(f, [0.5])
    assert not ok
    assert "stays within" in report


def test_discrete_check_constant_family():
    f = generate("constant")
    ok, _ = discrete_spectrum_check(f, [0.25])
    assert ok


def test_discrete_check_nudges_level_off_spectrum():
    f = constant_family([0.5, 2.0])
    ok, report = discrete_spectrum_check(f, [0.5], gap_tol=1e-9)
    assert ok
    assert "ok" in report


def test_discrete_check_reports_atlas_failure():
    f = constant_family([1.5e-6, -1.5e-6], samples=2)
    ok, report = discrete_spectrum_check(f, [0.0])
    assert not ok
    assert "no admissible gap radius" in report


# -------------------------------------------------------- sandwich predicate


def test_sandwich_holds_for_spectral_window():
    f = constant_family([-0.7, 0.3, 1.2])
    S = make_weak_section(f, cut=0.1)
    ok, report = is_spectral_section(f, S, 0.2)
    assert ok
    assert report["upper_residual"] < 1e-12
    assert report["lower_residual"] < 1e-12
    assert report["max_radius"] == pytest.approx(0.2)
    ok_arr, _ = is_spectral_section(f, S.subspaces, np.full(f.n_samples, 0.2))
    assert ok_arr


def test_sandwich_fails_on_deep_negative_content():
    f = constant_family([-5.0, 1.0])
    subs = (span([1, 0]),) * 3
    for r in (0.5, 4.0):
        ok, report = is_spectral_section(f, subs, r)
        assert not ok
        assert report["lower_residual"] > 0.9


def test_sandwich_radius_validation():
    f = constant_family([-1.0, 1.0])
    subs = (span([0, 1]),) * 3
    with pytest.raises(ValidationError, match="positive"):
        is_spectral_section(f, subs, 0.0)
    with pytest.raises(ValidationError, match="subspaces for"):
        is_spectral_section(f, subs[:2], 0.5)


# ------------------------------------------------- deformation: fixed points


def test_deform_returns_spectral_input_unchanged():
    f = generate("constant")
    S = make_weak_section(f, cut=0.0)
    res = deform_to_spectral_section(f, S)
    assert res.report["fixed_point"] is True
    assert res.nu == () and res.nu_perp == ()
    assert res.pou is None
    np.testing.assert_allclose(res.radius, 0.5)
    np.testing.assert_allclose(res.mu, -0.5)
    np.testing.assert_allclose(res.mu_perp, 0.5)
    assert all(res.sections[x] is S.subspaces[x] for x in range(f.n_samples))
    assert res.homotopy(3, 0.7) is S.subspaces[3]
    with pytest.raises(ValidationError, match="outside"):
        res.homotopy(0, 1.5)


def test_deform_fixed_point_shift_flow_window():
    f = generate("truncated_shift_flow")
    S = make_weak_section(f, cut=0.5)
    res = deform_to_spectral_section(f, S)
    assert res.report["fixed_point"] is True
    for x in range(f.n_samples):
        assert subspace_distance(res.sections[x], S.subspaces[x]) < 1e-8
    assert res.radius[0] == pytest.approx(0.5)
    assert res.radius[50] == pytest.approx(0.2475)
    ok, _ = is_spectral_section(f, res.sections, res.radius)
    assert ok


def test_deform_rejects_jumping_section():
    f = constant_family([-1.0, 1.0], samples=4)
    subs = (span([0, 1]), span([0, 1]), span([1, 0]), span([1, 0]))
    S = WeakSpectralSection(subspaces=subs, reference_cut=0.0)
    with pytest.raises(ValidationError, match="not a weak section"):
        deform_to_spectral_section(f, S)


def test_deform_rejects_sample_mismatch():
    f = constant_family([-1.0, 1.0], samples=4)
    S = WeakSpectralSection(subspaces=(span([0, 1]),) * 2, reference_cut=0.0)
    with pytest.raises(ValidationError, match="subspaces for"):
        deform_to_spectral_section(f, S)


def test_deform_discrete_precheck_failure():
    f = constant_family([1.0 + 1.5e-6, 1.0 - 1.5e-6], samples=2)
    S = tilt_section(f, make_weak_section(f, cut=1.0), angle=0.3)
    with pytest.raises(ValidationError, match="discrete-spectrum precheck"):
        deform_to_spectral_section(f, S)


def test_deform_rejects_bad_atlas():
    f = sine_loop()
    S = tilt_section(f, make_weak_section(f, cut=1.5), angle=0.2)
    not_adapted = Atlas(charts=(AdaptedChart(0, 39, 0.5),))
    with pytest.raises(ValidationError, match="atlas rejected"):
        deform_to_spectral_section(f, S, atlas=not_adapted)
    partial = Atlas(charts=(AdaptedChart(0, 10, 1.5),))
    with pytest.raises(ValidationError, match="covers samples"):
        deform_to_spectral_section(f, S, atlas=partial)


# --------------------------------------------------- deformation: full path


def test_deform_sine_loop_tilted_section():
    f = sine_loop()
    S = tilt_section(f, make_weak_section(f, cut=1.5), angle=0.2)
    res = deform_to_spectral_section(f, S)
    target = span([0, 1])
    for x in range(f.n_samples):
        assert res.sections[x].dim == 1
        assert subspace_distance(res.sections[x], target) < 1e-9
    ok, _ = is_spectral_section(f, res.sections, res.radius)
    assert ok
    ok_fixed, _ = is_spectral_section(f, res.sections, 1.2)
    assert ok_fixed
    np.testing.assert_allclose(res.radius, 1.75, atol=1e-9)
    assert res.mu_perp[0] == pytest.approx(1.75)
    assert len(res.nu) == res.pou.n_charts
    assert all(v < 0 for v in res.nu)
    assert len(res.intermediate) == f.n_samples


def test_deform_homotopy_endpoints_and_dims():
    f = sine_loop()
    S = tilt_section(f, make_weak_section(f, cut=1.5), angle=0.2)
    res = deform_to_spectral_section(f, S)
    for x in (0, 7, 20, 39):
        assert subspace_distance(res.homotopy(x, 0.0), S.subspaces[x]) < 1e-9
        assert subspace_distance(res.homotopy(x, 1.0), res.sections[x]) < 1e-9
        for s in (0.25, 0.5, 0.75):
            assert res.homotopy(x, s).dim == 1
    with pytest.raises(ValidationError, match="outside"):
        res.homotopy(0, -0.1)


def test_deform_control_envelopes():
    """The combined level functions stay on the safe side of every active level.

    Pass one must place the section above the lower envelope, pass two must
    cap the complement below the upper one; both reduce to envelope-versus-
    level inequalities at each sample.
    """
    f = sine_loop()
    S = tilt_section(f, make_weak_section(f, cut=1.5), angle=0.2)
    res = deform_to_spectral_section(f, S)
    for x in range(f.n_samples):
        active = res.pou.active_charts(x)
        assert res.mu[x] <= min(res.nu[i] for i in active) + 1e-12
        assert res.mu_perp[x] >= max(res.nu_perp[i] for i in active) - 1e-12
        L = res.intermediate[x]
        assert inclusion_residual(L, window_subspace(f, x, res.mu[x], np.inf)) < 1e-8
        upper = window_subspace(f, x, res.mu_perp[x] + 1e-9, np.inf)
        assert inclusion_residual(upper, res.sections[x]) < 1e-8


def test_deform_random_loop_smoke():
    f = generate("random_smooth", dim=5, seed=11, samples=80, loop=True)
    levels = default_level_grid(f, count=4)

    def clearance(c):
        return min(
            float(np.abs(f.eigen(x).eigenvalues - c).min()) for x in range(f.n_samples)
        )

    cut = max(levels, key=clearance)
    S = tilt_section(f, make_weak_section(f, cut), angle=0.15)
    res = deform_to_spectral_section(f, S)
    ok, report = is_spectral_section(f, res.sections, res.radius)
    assert ok, report
    for x in range(f.n_samples):
        assert res.sections[x].dim == S.subspaces[x].dim
    for x in (0, 40, 79):
        assert subspace_distance(res.homotopy(x, 0.0), S.subspaces[x]) < 1e-9
        assert subspace_distance(res.homotopy(x, 1.0), res.sections[x]) < 1e-9


# ------------------------------------------------------------- existence


def test_existence_rotation_loop():
    f = generate("rotation")
    ex = section_existence(f)
    assert ex.exists and ex.flow == 0 and ex.obstruction == 0
    ok, _ = is_spectral_section(f, ex.sections, ex.radius)
    assert ok
    assert "witness" in ex.note
    assert ex.deformed is not None
    assert ex.deformed.report.get("fixed_point") is True


def test_existence_obstruction_shift_flow():
    f = generate("truncated_shift_flow")
    ex = section_existence(f)
    assert not ex.exists
    assert ex.flow == 1 and ex.obstruction == 1
    assert ex.sections == () and ex.radius is None
    assert "obstruction" in ex.note


def test_existence_constant_loop_witness():
    t = np.linspace(0.0, 1.0, 30)
    grid = ParameterGrid(kind="circle_loop", samples=t, closure="exact_loop")
    A = np.diag([-1.0, 1.0, 2.0]).astype(np.complex128)
    f = OperatorFamily(grid=grid, dim=3, operators=(A,) * 30)
    ex = section_existence(f)
    assert ex.exists
    for x in range(f.n_samples):
        ref = window_subspace(f, x, 0.0, np.inf)
        assert subspace_distance(ex.sections[x], ref) < 1e-12
    assert np.all(ex.radius > 0)


def test_existence_rejects_open_path():
    with pytest.raises(ValidationError, match="loop"):
        section_existence(generate("crossing"))
