"""Command line front end: generate, construct, verify, sweep, report.

Exit codes are a stable contract: 0 all checks passed, 1 verification
failure, 2 construction failure, 3 input error.  The NODALDIV_OUT
environment variable overrides the output directory.  Identical
configurations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import dec, meshio
from .config import ConfigError, RunConfig, load_config, load_surface_spec
from .construct import (
    ConstructionError, ConstructionParams, ConstructionResult, construct,
)
from .generate import build_from_spec, generate_preset
from .mesh import LabeledSurfaceMesh, MeshError
from .profile import ProfileError
from .verify import convergence_sweep, run_all_checks

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONSTRUCT = 2
EXIT_INPUT = 3

logger = logging.getLogger("nodaldiv")

FIELD_FILES = {
    "potential": ("potential.txt", False),
    "eigenfunction": ("eigenfunction.txt", False),
    "ref_area": ("ref_area.txt", True),
    "eigen_area": ("eigen_area.txt", True),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nodaldiv",
        description=(
            "Construct and verify surface eigenfunctions whose nodal set is "
            "a prescribed dividing multicurve"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="run configuration file")
        p.add_argument("--preset", help="named example surface")
        p.add_argument("--spec-file", help="surface spec file")
        p.add_argument("--level", type=int, help="refinement level (0..6)")
        p.add_argument("--rho0", type=float, help="Poisson source density")
        p.add_argument("--collar-rings", type=int, help="collar rings per side")
        p.add_argument("--margin", type=float, help="scale margin inside pi/2")
        p.add_argument("--smooth-seam", action="store_true", default=None,
                       help="smooth the potential on the gluing seams")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="sampling seed")
        p.add_argument("--sample-count", type=int,
                       help="faces sampled by the adaptedness check")
        p.add_argument("--tol-eigen", type=float,
                       help="override the eigen-identity tolerance")

    for name, desc in (
        ("generate", "write the labeled mesh"),
        ("construct", "run the construction and write the fields"),
        ("verify", "run all checks against constructed or stored fields"),
        ("sweep", "run the pipeline across refinement levels"),
    ):
        p = sub.add_parser(name, help=desc)
        common(p)
        if name == "construct" or name == "verify":
            p.add_argument("--mesh", help="labeled mesh file to start from")
        if name == "verify":
            p.add_argument("--from-files", action="store_true",
                           help="load fields from the output directory")
            p.add_argument("--sweep", metavar="A..B",
                           help="also run a refinement sweep over levels A..B")
        if name == "sweep":
            p.add_argument("--levels", default="0..2", metavar="A..B",
                           help="level range (default 0..2)")
    rp = sub.add_parser("report", help="summarize an existing report file")
    rp.add_argument("--report", help="report file (default <out>/report.txt)")
    rp.add_argument("--out", help="output directory")
    return parser


def _merge_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for attr, key in (
        ("preset", "preset"), ("spec_file", "spec_file"), ("level", "level"),
        ("rho0", "rho0"), ("collar_rings", "collar_rings"),
        ("margin", "margin"), ("smooth_seam", "smooth_seam"), ("out", "out"),
        ("seed", "seed"), ("sample_count", "sample_count"),
        ("tol_eigen", "eigen_tol"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, key, value)
    env_out = os.environ.get("NODALDIV_OUT")
    if env_out and getattr(args, "out", None) is None:
        cfg.out = env_out
    cfg.validate()
    return cfg


def _make_mesh(cfg: RunConfig, mesh_path: str | None) -> LabeledSurfaceMesh:
    if mesh_path:
        return meshio.load_mesh(mesh_path)
    if cfg.spec_file:
        spec = load_surface_spec(cfg.spec_file, cfg.collar_rings, cfg.level)
        return build_from_spec(spec)
    if cfg.preset:
        return generate_preset(cfg.preset, cfg.level)
    raise ConfigError("one of --preset, --spec-file or --mesh is required")


def _write_params(params: ConstructionParams, path: Path) -> None:
    lines = []
    for key in ("rho0", "margin", "blend_width", "scale", "collar_slope",
                "linear_halfwidth"):
        lines.append(f"{key} = {getattr(params, key):.17g}")
    lines.append(f"smoothed = {str(params.smoothed).lower()}")
    for cid in sorted(params.end_slopes):
        a_m, a_p = params.end_slopes[cid]
        lines.append(f"end_slope.{cid}.minus = {a_m:.17g}")
        lines.append(f"end_slope.{cid}.plus = {a_p:.17g}")
    path.write_text("\n".join(lines) + "\n")


def _read_params(path: Path) -> ConstructionParams:
    values: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    slopes: dict[str, list[float]] = {}
    for key, val in values.items():
        if key.startswith("end_slope."):
            _, cid, side = key.split(".")
            slopes.setdefault(cid, [math.nan, math.nan])[
                0 if side == "minus" else 1
            ] = float(val)
    return ConstructionParams(
        rho0=float(values["rho0"]),
        margin=float(values["margin"]),
        blend_width=float(values["blend_width"]),
        scale=float(values["scale"]),
        collar_slope=float(values["collar_slope"]),
        linear_halfwidth=float(values["linear_halfwidth"]),
        end_slopes={cid: (v[0], v[1]) for cid, v in slopes.items()},
        smoothed=values.get("smoothed", "false") == "true",
    )


def _write_result(result: ConstructionResult, out: Path) -> None:
    meshio.save_mesh(result.mesh, out / "mesh.off")
    for attr, (fname, on_faces) in FIELD_FILES.items():
        meshio.save_field(getattr(result, attr), out / fname, on_faces=on_faces)
    _write_params(result.params, out / "params.txt")


def _load_result(out: Path) -> ConstructionResult:
    mesh_path = out / "mesh.off"
    if not mesh_path.exists():
        raise ConfigError(f"missing mesh file {mesh_path}")
    mesh = meshio.load_mesh(mesh_path)
    fields = {}
    for attr, (fname, on_faces) in FIELD_FILES.items():
        fpath = out / fname
        if not fpath.exists():
            raise ConfigError(f"missing field file {fpath}")
        values, got_faces = meshio.load_field(fpath)
        if got_faces != on_faces:
            raise ConfigError(f"{fpath}: wrong field kind")
        expected = mesh.n_faces if on_faces else mesh.n_vertices
        if len(values) != expected:
            raise ConfigError(f"{fpath}: {len(values)} values, expected {expected}")
        fields[attr] = values
    params = _read_params(out / "params.txt")
    result = ConstructionResult(
        mesh=mesh,
        potential=fields["potential"],
        eigenfunction=fields["eigenfunction"],
        ref_area=fields["ref_area"],
        eigen_area=fields["eigen_area"],
        potential_laplacian=np.zeros(0),
        params=params,
    )
    bundle = dec.OperatorBundle.build(mesh)
    lap = -(bundle.stiffness @ result.potential) / bundle.ref_mass.diagonal()
    eps = params.linear_halfwidth
    if eps > 0.0:
        on_linear = np.isfinite(mesh.collar_s) & (np.abs(mesh.collar_s) <= eps)
        lap[on_linear] = 0.0
    result.potential_laplacian = lap
    return result


def _parse_levels(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",")]


def cmd_generate(args) -> int:
    cfg = _merge_config(args)
    mesh = _make_mesh(cfg, None)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meshio.save_mesh(mesh, out / "mesh.off")
    print(f"wrote {out / 'mesh.off'}")
    print(mesh.summary())
    return EXIT_OK


def cmd_construct(args) -> int:
    cfg = _merge_config(args)
    mesh = _make_mesh(cfg, getattr(args, "mesh", None))
    result = construct(
        mesh, rho0=cfg.rho0, margin=cfg.margin, smooth_seam=cfg.smooth_seam,
    )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_result(result, out)
    p = result.params
    print(f"wrote fields to {out}")
    print(
        f"rho0={p.rho0:.6g} scale={p.scale:.6g} collar_slope={p.collar_slope:.6g} "
        f"linear_halfwidth={p.linear_halfwidth:.6g}"
    )
    for cid in sorted(p.end_slopes):
        a_m, a_p = p.end_slopes[cid]
        print(f"end_slope[{cid}] minus={a_m:.6g} plus={a_p:.6g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _merge_config(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if getattr(args, "from_files", False):
        result = _load_result(out)
    else:
        mesh = _make_mesh(cfg, getattr(args, "mesh", None))
        result = construct(
            mesh, rho0=cfg.rho0, margin=cfg.margin, smooth_seam=cfg.smooth_seam,
        )
        _write_result(result, out)
    report = run_all_checks(
        result, level=cfg.level, seed=cfg.seed,
        sample_count=cfg.sample_count, eigen_tol=cfg.eigen_tol,
    )
    sweep_arg = getattr(args, "sweep", None)
    if sweep_arg:
        if not cfg.preset:
            raise ConfigError("--sweep requires a preset")
        rows, records = convergence_sweep(
            cfg.preset, _parse_levels(sweep_arg), rho0=cfg.rho0,
        )
        report.sweep_rows = rows
        for rec in records:
            report.add(rec)
        (out / "sweep.csv").write_text(report.sweep_csv())
    report.write(out / "report.txt")
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} "
              f"value={c.value:.6g} tol={c.tol:.6g}")
    print(f"report written to {out / 'report.txt'}")
    return EXIT_OK if report.all_passed else EXIT_VERIFY


def cmd_sweep(args) -> int:
    cfg = _merge_config(args)
    if not cfg.preset:
        raise ConfigError("sweep requires a preset")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    levels = _parse_levels(args.levels)
    rows, records = convergence_sweep(cfg.preset, levels, rho0=cfg.rho0)
    from .verify import VerificationReport

    report = VerificationReport(level=max(levels), seed=cfg.seed)
    report.sweep_rows = rows
    for rec in records:
        report.add(rec)
    (out / "sweep.csv").write_text(report.sweep_csv())
    report.write(out / "report.txt")
    for row in rows:
        print(
            f"level {row['level']}: h={row['h']:.6g} "
            f"residual={row['eigen_residual']:.6g} "
            f"min_Omega={row['min_Omega']:.6g} seam={row['seam_worst']:.6g}"
        )
    return EXIT_OK if all(r.passed for r in records) else EXIT_VERIFY


def cmd_report(args) -> int:
    out = Path(getattr(args, "out", None) or os.environ.get("NODALDIV_OUT")
               or "nodaldiv_out")
    path = Path(args.report) if args.report else out / "report.txt"
    if not path.exists():
        raise ConfigError(f"no report at {path}")
    failed = []
    for line in path.read_text().splitlines():
        if line.endswith(".pass = false"):
            failed.append(line.split(".")[1])
        print(line)
    if failed:
        print(f"FAILED checks: {', '.join(failed)}")
        return EXIT_VERIFY
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate": cmd_generate,
        "construct": cmd_construct,
        "verify": cmd_verify,
        "sweep": cmd_sweep,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, MeshError, meshio.FileFormatError, FileNotFoundError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (ConstructionError, ProfileError) as err:
        print(f"construction failed: {err}", file=sys.stderr)
        return EXIT_CONSTRUCT


if __name__ == "__main__":
    sys.exit(main())
