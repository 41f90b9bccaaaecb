"""Batch command line front end.

JSON family specs in, JSON reports and CSV tables out. Reports are written
with sorted keys and repr floats, so a fixed spec and fixed flags produce
byte-identical files run after run; wall time goes to stderr and never into
a report. Exit codes: 0 success, 2 mathematical obstruction (a loop whose
flow blocks a section), 1 any error.
"""

from __future__ import annotations

import argparse
import hashlib
import inspect
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .atlas import DEFAULT_GAP_TOL, DEFAULT_MAX_CHART_LEN, Atlas, build_atlas, check_atlas, cover_category
from .errors import BandflowError, SpecError
from .families import GENERATORS, OperatorFamily, ParameterGrid, generate
from .flow import index_chain, spectral_flow_routes
from .linalg import Subspace
from .polarize import finite_polarized_replace, flow_preservation_check
from .sections import (
    WeakSpectralSection,
    deform_to_spectral_section,
    default_level_grid,
    discrete_spectrum_check,
    is_spectral_section,
    make_weak_section,
    section_existence,
    weak_section_check,
)
from .suspension import (
    band_correspondence_check,
    suspend,
    suspension_index,
    suspension_spectrum_check,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_OBSTRUCTION = 2

HOMOTOPY_STOPS = (0.0, 0.25, 0.5, 0.75, 1.0)


# ---------------------------------------------------------------------------
# serialization helpers

def _pair(z) -> dict:
    z = complex(z)
    return {"im": float(z.imag), "re": float(z.real)}


def _frame_json(V: Subspace) -> dict:
    cols = [[_pair(V.frame[r, c]) for r in range(V.ambient_dim)]
            for c in range(V.dim)]
    return {"ambient_dim": V.ambient_dim, "columns": cols, "dim": V.dim}


def _grid_json(grid: ParameterGrid) -> dict:
    return {
        "closure": grid.closure,
        "kind": grid.kind,
        "samples": [float(s) for s in grid.samples],
        "shift": int(grid.shift),
    }


def _family_json(f: OperatorFamily) -> dict:
    real = [[[float(v.real) for v in row] for row in A] for A in f.operators]
    imag = [[[float(v.imag) for v in row] for row in A] for A in f.operators]
    out = {
        "sampled": {
            "dim": f.dim,
            "grid": _grid_json(f.grid),
            "matrices": {"imag": imag, "real": real},
        }
    }
    if f.polarized_bands is not None:
        out["polarized_bands"] = [int(m) for m in f.polarized_bands]
    if f.scale is not None:
        out["scale"] = float(f.scale)
    return out


def _atlas_json(atlas: Atlas) -> list:
    return [{"end": c.end, "eps": float(c.eps), "start": c.start}
            for c in atlas.charts]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.complexfloating, complex)):
        return _pair(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    path.write_text(text)


def _write_csv(path: Path, header: list, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# family spec parsing

def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise SpecError(f"{where}: missing field {key!r}")
    return mapping[key]


def _parse_grid(obj, where: str) -> ParameterGrid:
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: expected an object")
    kind = _require(obj, "kind", where)
    samples = _require(obj, "samples", where)
    closure = _require(obj, "closure", where)
    shift = obj.get("shift", 0)
    try:
        return ParameterGrid(kind=kind, samples=np.asarray(samples, dtype=float),
                             closure=closure, shift=int(shift))
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: {exc}") from exc


def _parse_sampled(obj, spec: dict) -> OperatorFamily:
    where = "spec.sampled"
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: expected an object")
    dim = _require(obj, "dim", where)
    grid = _parse_grid(_require(obj, "grid", where), where + ".grid")
    mats = _require(obj, "matrices", where)
    if not isinstance(mats, dict) or "real" not in mats:
        raise SpecError(f"{where}.matrices: expected an object with a 'real' array")
    try:
        real = np.asarray(mats["real"], dtype=float)
        imag = np.asarray(mats.get("imag", np.zeros_like(real)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}.matrices: {exc}") from exc
    if real.shape != imag.shape:
        raise SpecError(f"{where}.matrices: real and imag shapes differ")
    if real.ndim != 3 or real.shape[1:] != (dim, dim):
        raise SpecError(
            f"{where}.matrices: expected shape (n_samples, {dim}, {dim}), got {real.shape}"
        )
    ops = tuple(real[k] + 1j * imag[k] for k in range(real.shape[0]))
    bands = spec.get("polarized_bands")
    if bands is not None:
        bands = tuple(int(b) for b in bands)
    try:
        return OperatorFamily(grid=grid, dim=int(dim), operators=ops,
                              hermitian=bool(spec.get("hermitian", True)),
                              polarized_bands=bands)
    except BandflowError as exc:
        raise SpecError(f"{where}: {exc}") from exc


def _parse_generator(spec: dict, seed: int | None) -> OperatorFamily:
    name = spec["generator"]
    params = dict(spec.get("params", {}))
    if not isinstance(name, str):
        raise SpecError("spec.generator: expected a string")
    if name not in GENERATORS:
        raise SpecError(
            f"spec.generator: unknown generator {name!r}; available: {sorted(GENERATORS)}"
        )
    if seed is not None and "seed" not in params:
        if "seed" in inspect.signature(GENERATORS[name]).parameters:
            params["seed"] = seed
    try:
        return generate(name, **params)
    except BandflowError as exc:
        raise SpecError(f"spec.params: {exc}") from exc


def load_family_spec(path, seed: int | None = None) -> tuple:
    """Parse a family spec file; returns (family, raw spec bytes)."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise SpecError(f"spec: cannot read {p}: {exc}") from exc
    try:
        spec = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SpecError(f"spec: malformed JSON in {p}: {exc}") from exc
    if not isinstance(spec, dict):
        raise SpecError("spec: top level must be an object")
    if "generator" in spec:
        return _parse_generator(spec, seed), raw
    if "sampled" in spec:
        return _parse_sampled(spec["sampled"], spec), raw
    raise SpecError("spec: need either 'generator' or 'sampled'")


def _load_section_file(path, f: OperatorFamily) -> WeakSpectralSection:
    p = Path(path)
    where = "section"
    try:
        obj = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"{where}: cannot parse {p}: {exc}") from exc
    cut = _require(obj, "reference_cut", where)
    frames = _require(obj, "subspaces", where)
    if len(frames) != f.n_samples:
        raise SpecError(
            f"{where}.subspaces: {len(frames)} frames for {f.n_samples} samples"
        )
    subs = []
    for k, fr in enumerate(frames):
        cols = _require(fr, "columns", f"{where}.subspaces[{k}]")
        mat = np.zeros((f.dim, len(cols)), dtype=np.complex128)
        for c, col in enumerate(cols):
            if len(col) != f.dim:
                raise SpecError(
                    f"{where}.subspaces[{k}].columns[{c}]: expected {f.dim} entries"
                )
            for r, entry in enumerate(col):
                mat[r, c] = complex(entry["re"], entry.get("im", 0.0))
        try:
            subs.append(Subspace(f.dim, mat))
        except BandflowError as exc:
            raise SpecError(f"{where}.subspaces[{k}]: {exc}") from exc
    return WeakSpectralSection(subspaces=tuple(subs), reference_cut=float(cut))


def _digest(raw: bytes, options: dict) -> str:
    h = hashlib.sha256()
    h.update(raw)
    h.update(json.dumps(_jsonable(options), sort_keys=True).encode("utf-8"))
    return h.hexdigest()


def _options_dict(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys}


# ---------------------------------------------------------------------------
# commands

def cmd_flow(args) -> int:
    f, raw = load_family_spec(args.spec, args.seed)
    opts = _options_dict(args, ["eps_gap_tol", "grid_refine", "max_chart_len"])
    atlas = build_atlas(f, max_chart_len=args.max_chart_len, gap_tol=args.eps_gap_tol)
    routes = spectral_flow_routes(f, atlas=atlas, refine=args.grid_refine,
                                  gap_tol=args.eps_gap_tol)
    chain = routes["chain"]
    cat = cover_category(atlas)
    checks = [
        {"name": "atlas_valid", "passed": check_atlas(f, atlas, args.eps_gap_tol)[0]},
        {"name": "routes_agree", "passed": bool(routes["agree"])},
    ]
    report = {
        "command": "flow",
        "inputs_digest": _digest(raw, opts),
        "invariant_checks": checks,
        "options": opts,
        "outputs": {
            "atlas": _atlas_json(atlas),
            "charts": [
                {
                    "end": c.end,
                    "eps": float(c.eps),
                    "n_below_left": c.n_below_left,
                    "n_below_right": c.n_below_right,
                    "start": c.start,
                }
                for c in chain.charts
            ],
            "cover_category": {
                "morphism_count": cat.morphism_count,
                "nerve_counts": list(cat.nerve_counts),
                "object_count": cat.object_count,
            },
            "flow_chartwise": routes["chartwise"],
            "flow_endpoints": routes["endpoints"],
            "flow_oracle": routes["oracle"],
            "overlaps": [
                {
                    "eps_big": float(o.eps_big),
                    "eps_small": float(o.eps_small),
                    "sample": o.sample,
                    "u_minus_dim": o.u_minus.dim,
                    "u_plus_dim": o.u_plus.dim,
                }
                for o in chain.overlaps
            ],
        },
        "version": __version__,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "flow_report.json", report)
    if args.emit_branches:
        rows = []
        for x in range(f.n_samples):
            lam = f.eigen(x).eigenvalues
            rows.append([x, float(f.grid.samples[x])] + [float(v) for v in lam])
        header = ["sample", "t"] + [f"lam_{j}" for j in range(f.dim)]
        _write_csv(out / "branches.csv", header, rows)
    sys.stdout.write(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    if not all(c["passed"] for c in checks):
        return EXIT_ERROR
    return EXIT_OK


def cmd_suspend(args) -> int:
    f, raw = load_family_spec(args.spec, args.seed)
    opts = _options_dict(args, ["eps_gap_tol", "t_samples", "max_chart_len"])
    sf = suspend(f, t_count=args.t_samples)
    atlas = build_atlas(f, max_chart_len=args.max_chart_len, gap_tol=args.eps_gap_tol)
    eps_ref = min(c.eps for c in atlas.charts)
    rows = []
    worst = 0.0
    band_all_ok = True
    for k, t in enumerate(sf.t_samples):
        res = max(
            suspension_spectrum_check(f.operators[x], float(t))
            for x in range(f.n_samples)
        )
        worst = max(worst, res)
        band_ok = ""
        if 0 < k < sf.n_angles - 1:
            ok = all(
                band_correspondence_check(f.operators[x], eps_ref, float(t))
                for x in range(0, f.n_samples, max(1, f.n_samples // 8))
            )
            band_all_ok = band_all_ok and ok
            band_ok = str(ok)
        rows.append([k, float(t), res, band_ok])
    idx = suspension_index(sf)
    routes = spectral_flow_routes(f, atlas=atlas, refine=args.grid_refine,
                                  gap_tol=args.eps_gap_tol)
    equal = int(routes["chartwise"]) == idx.index
    checks = [
        {"name": "spectrum_identity_max_residual", "passed": worst <= 1e-8,
         "value": worst},
        {"name": "band_correspondence", "passed": band_all_ok},
        {"name": "index_equals_flow", "passed": equal},
        {"name": "routes_agree", "passed": bool(routes["agree"])},
    ]
    report = {
        "command": "suspend",
        "inputs_digest": _digest(raw, opts),
        "invariant_checks": checks,
        "options": opts,
        "outputs": {
            "base_flow": routes["chartwise"],
            "det_winding": idx.det_winding,
            "equator_kernel_samples": list(idx.kernel_samples),
            "n_angles": sf.n_angles,
            "suspension_index": idx.index,
        },
        "version": __version__,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "suspend_report.json", report)
    _write_csv(out / "suspension_residuals.csv",
               ["t_index", "t", "spectrum_residual", "band_ok"], rows)
    sys.stdout.write(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_ERROR


def cmd_section(args) -> int:
    f, raw = load_family_spec(args.spec, args.seed)
    opts = _options_dict(args, ["eps_gap_tol", "max_chart_len"])
    opts["auto"] = bool(args.auto)
    opts["section_file"] = str(args.section_file) if args.section_file else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.auto and f.grid.closure != "open_path":
        data = section_existence(f, gap_tol=args.eps_gap_tol,
                                 max_chart_len=args.max_chart_len)
        if not data.exists:
            report = {
                "command": "section",
                "inputs_digest": _digest(raw, opts),
                "invariant_checks": [
                    {"name": "section_exists", "passed": False,
                     "value": data.obstruction},
                ],
                "options": opts,
                "outputs": {
                    "exists": False,
                    "flow": data.flow,
                    "obstruction": data.obstruction,
                },
                "version": __version__,
            }
            _write_json(out / "section_report.json", report)
            sys.stdout.write(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
            return EXIT_OBSTRUCTION
        ok, srep = is_spectral_section(f, data.sections, data.radius)
        report = {
            "command": "section",
            "inputs_digest": _digest(raw, opts),
            "invariant_checks": [
                {"name": "section_exists", "passed": True},
                {"name": "sandwich", "passed": bool(ok), "value": srep},
            ],
            "options": opts,
            "outputs": {
                "exists": True,
                "flow": data.flow,
                "note": data.note,
                "obstruction": 0,
                "radius": [float(r) for r in data.radius],
                "section_dims": [V.dim for V in data.sections],
            },
            "version": __version__,
        }
        _write_json(out / "section_report.json", report)
        if args.emit_frames:
            frames = {"reference_cut": None,
                      "subspaces": [_frame_json(V) for V in data.sections]}
            _write_json(out / "section_frames.json", frames)
        sys.stdout.write(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
        return EXIT_OK if ok else EXIT_ERROR

    # Deformation path: section from file, or the tautological one above a
    # level picked from the widest spectral gap.
    if args.section_file:
        weak = _load_section_file(args.section_file, f)
    else:
        levels = default_level_grid(f)
        cut = min(levels, key=lambda c: abs(c))
        weak = make_weak_section(f, cut)
    okw, wrep = weak_section_check(f, weak)
    okd, drep = discrete_spectrum_check(f, [weak.reference_cut],
                                        gap_tol=args.eps_gap_tol,
                                        max_chart_len=args.max_chart_len)
    result = deform_to_spectral_section(f, weak, gap_tol=args.eps_gap_tol,
                                        max_chart_len=args.max_chart_len)
    ok, srep = is_spectral_section(f, result.sections, result.radius)
    from .linalg import subspace_distance

    moved = max(
        subspace_distance(a, b) for a, b in zip(weak.subspaces, result.sections)
    )
    checks = [
        {"name": "weak_section", "passed": bool(okw)},
        {"name": "discrete_spectrum", "passed": bool(okd), "value": drep},
        {"name": "sandwich", "passed": bool(ok), "value": srep},
        {"name": "dims_preserved",
         "passed": all(a.dim == b.dim for a, b in
                       zip(weak.subspaces, result.sections))},
    ]
    report = {
        "command": "section",
        "inputs_digest": _digest(raw, opts),
        "invariant_checks": checks,
        "options": opts,
        "outputs": {
            "max_deformation_distance": moved,
            "mu": [float(v) for v in result.mu],
            "mu_perp": [float(v) for v in result.mu_perp],
            "nu": list(result.nu),
            "nu_perp": list(result.nu_perp),
            "radius": [float(v) for v in result.radius],
            "reference_cut": weak.reference_cut,
            "section_dims": [V.dim for V in result.sections],
        },
        "version": __version__,
    }
    _write_json(out / "section_report.json", report)
    if args.emit_frames:
        frames = {
            "homotopy": [
                {
                    "frames": [_frame_json(result.homotopy(x, s))
                               for x in range(f.n_samples)],
                    "s": s,
                }
                for s in HOMOTOPY_STOPS
            ],
            "reference_cut": weak.reference_cut,
        }
        _write_json(out / "section_frames.json", frames)
    sys.stdout.write(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_ERROR


def cmd_polarize(args) -> int:
    f, raw = load_family_spec(args.spec, args.seed)
    opts = _options_dict(args, ["eps_gap_tol", "max_chart_len"])
    rep = finite_polarized_replace(f, gap_tol=args.eps_gap_tol,
                                   max_chart_len=args.max_chart_len)
    preserved, flow_rep = flow_preservation_check(f, rep, gap_tol=args.eps_gap_tol,
                                                  max_chart_len=args.max_chart_len)
    unchanged = max(
        float(np.abs(a - b).max())
        for a, b in zip(rep.scaled_input.operators, rep.family.operators)
    )
    checks = [
        {"name": "band_identity", "passed": True, "value": rep.band_report},
        {"name": "flow_preserved", "passed": bool(preserved), "value": flow_rep},
    ]
    report = {
        "command": "polarize",
        "inputs_digest": _digest(raw, opts),
        "invariant_checks": checks,
        "options": opts,
        "outputs": {
            "atlas": _atlas_json(rep.atlas),
            "max_change_after_normalize": unchanged,
            "polarized_bands": list(rep.family.polarized_bands),
            "radius": [float(v) for v in rep.radius],
            "scale": float(rep.scale),
        },
        "version": __version__,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "polarize_report.json", report)
    _write_json(out / "replacement_family.json", _family_json(rep.family))
    _write_csv(out / "squash_radius.csv", ["sample", "r"],
               [[x, float(rep.radius[x])] for x in range(rep.radius.size)])
    sys.stdout.write(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_ERROR


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", required=True, help="path to a JSON family spec")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--eps-gap-tol", type=float, default=DEFAULT_GAP_TOL,
                   dest="eps_gap_tol",
                   help="minimal clearance between band edges and spectra")
    p.add_argument("--grid-refine", type=int, default=2, dest="grid_refine",
                   help="refinement factor for the branch-tracking oracle")
    p.add_argument("--max-chart-len", type=int, default=DEFAULT_MAX_CHART_LEN,
                   dest="max_chart_len", help="maximal chart length in samples")
    p.add_argument("--seed", type=int, default=None,
                   help="seed forwarded to generators that accept one")
    p.add_argument("--t-samples", type=int, default=41, dest="t_samples",
                   help="suspension angle count (odd, includes the equator)")
    p.add_argument("--emit-frames", action="store_true", dest="emit_frames",
                   help="write section/homotopy frames as JSON")
    p.add_argument("--emit-branches", action="store_true", dest="emit_branches",
                   help="write eigenvalue branches as CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bandflow",
        description="spectral flow, suspensions, sections, and polarized "
                    "replacements for sampled operator families",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    p_flow = sub.add_parser("flow", help="atlas, index chain, and all flow routes")
    _add_common(p_flow)
    p_flow.set_defaults(func=cmd_flow)
    p_susp = sub.add_parser("suspend", help="suspension checks and index")
    _add_common(p_susp)
    p_susp.set_defaults(func=cmd_suspend)
    p_sec = sub.add_parser("section", help="existence, deformation, sandwich checks")
    _add_common(p_sec)
    p_sec.add_argument("--auto", action="store_true",
                       help="decide existence and build a witness over a loop")
    p_sec.add_argument("--section-file", default=None, dest="section_file",
                       help="JSON file with per-sample section frames")
    p_sec.set_defaults(func=cmd_section)
    p_pol = sub.add_parser("polarize", help="finite polarized replacement")
    _add_common(p_pol)
    p_pol.set_defaults(func=cmd_polarize)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.monotonic()
    try:
        code = args.func(args)
    except SpecError as exc:
        sys.stderr.write(f"spec error: {exc}\n")
        return EXIT_ERROR
    except BandflowError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    finally:
        elapsed = time.monotonic() - started
        sys.stderr.write(f"wall_time_s={elapsed:.3f}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
