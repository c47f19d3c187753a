"""Command-line interface.

Subcommands: deploy (single stent), batch (config-driven cohort), metrics,
check (validity), serve (interactive session service), synth (demo fixtures).

Exit codes: 0 success, 1 runtime error, 2 usage error, 3 output failed the
validity check (outputs are still written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as stent_io
from .errors import StentKitError
from .mesh import check_validity
from .metrics import equivalent_radius_profile, mis_radius_profile, profile_text, summarize
from .pipeline import RunSpec, run_deployment

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INVALID_OUTPUT = 3


def _add_selection_flags(p: argparse.ArgumentParser):
    p.add_argument("--start-path", type=int, required=True, help="path id of the distal anchor")
    p.add_argument("--start-arc", type=float, required=True, help="arc length (mm) on the start path")
    p.add_argument("--end-path", type=int, required=True)
    p.add_argument("--end-arc", type=float, required=True)


def _add_param_flags(p: argparse.ArgumentParser):
    p.add_argument("--length", type=float, default=None, help="nominal stent length (mm)")
    p.add_argument("--foreshortening", type=float, default=0.0, help="fractional length loss on expansion")
    p.add_argument("--k", type=float, default=0.4, help="smooth-union width (mm)")
    p.add_argument("--d-infl", type=float, default=6.5, help="influence distance (mm)")
    p.add_argument("--dr", type=float, default=0.1, help="radius increment per step (mm)")
    p.add_argument("--d-con", type=float, default=0.1, help="contact threshold (mm)")
    p.add_argument("--r-init", type=float, default=0.1, help="initial (crimped) radius (mm)")
    p.add_argument("--capsule-length", type=float, default=2.5, help="axis resampling interval (mm)")
    p.add_argument("--no-radius-correction", action="store_true",
                   help="disable the k/4 prescribed-radius correction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stentkit", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deploy", help="deploy one stent and write the deformed mesh")
    p.add_argument("--mesh", required=True)
    p.add_argument("--centerline", required=True)
    _add_selection_flags(p)
    p.add_argument("--diameter", type=float, required=True, help="prescribed diameter (mm)")
    _add_param_flags(p)
    p.add_argument("--out", default="deployed.vtp")
    p.add_argument("--metrics-out", default=None, help="write the MIS profile here")

    p = sub.add_parser("batch", help="run every combination in a config document")
    p.add_argument("config")

    p = sub.add_parser("metrics", help="MIS / equivalent-radius profile of a mesh")
    p.add_argument("--mesh", required=True)
    p.add_argument("--centerline", default=None, help="probe along this centerline")
    p.add_argument("--path-id", type=int, default=None, help="centerline path to probe (default: root)")
    p.add_argument("--spacing", type=float, default=0.5)
    p.add_argument("--equivalent", action="store_true", help="also slice for equivalent radii")
    p.add_argument("--out", default=None, help="write the profile text here")

    p = sub.add_parser("check", help="watertightness and self-intersection report")
    p.add_argument("--mesh", required=True)

    p = sub.add_parser("serve", help="run the interactive session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--export-dir", default=".", help="directory for session exports")

    p = sub.add_parser("synth", help="write synthetic demo fixtures")
    p.add_argument("--out-dir", default="fixtures")
    return parser


def _spec_from_args(args) -> RunSpec:
    return RunSpec(
        start=(args.start_path, args.start_arc),
        end=(args.end_path, args.end_arc),
        diameter=args.diameter,
        nominal_length=args.length,
        foreshortening=args.foreshortening,
        k=args.k,
        d_infl=args.d_infl,
        dr=args.dr,
        d_con=args.d_con,
        r_init=args.r_init,
        capsule_length=args.capsule_length,
        correct_radius=not args.no_radius_correction,
    )


def cmd_deploy(args, parser) -> int:
    if args.diameter <= 0:
        parser.error("--diameter must be positive")
    mesh = stent_io.load_mesh(args.mesh)
    tree = stent_io.load_centerline(args.centerline)
    result = run_deployment(mesh, tree, _spec_from_args(args))
    stent_io.save_mesh(args.out, result.mesh)
    if args.metrics_out:
        Path(args.metrics_out).write_text(profile_text(result.profile))
    report = result.report
    print(f"deployed: {report.summary_line()}")
    if result.stented_summary:
        print(f"stented region: {result.stented_summary}")
    print(f"wrote {args.out}")
    if report.validity is not None and not report.validity.is_clean:
        print("warning: output mesh failed the validity check", file=sys.stderr)
        return EXIT_INVALID_OUTPUT
    return EXIT_OK


def _manifest_row(run_id, entry_idx, pos_idx, pos, diameter, length, entry, status,
                  out_name, result=None, message=""):
    cells = [
        run_id, str(entry_idx), str(pos_idx),
        f"{pos[0][0]}:{pos[0][1]:g}", f"{pos[1][0]}:{pos[1][1]:g}",
        f"{diameter:g}", "" if length is None else f"{length:g}",
        f"{entry.foreshortening:g}", f"{entry.k:g}", f"{entry.d_infl:g}",
        f"{entry.dr:g}", f"{entry.d_con:g}", f"{entry.r_init:g}",
    ]
    if result is not None:
        s = result.stented_summary
        vr = result.report.validity
        cells += [
            str(len(result.report.steps)), f"{result.report.wall_time_ms:.1f}",
            f"{s.minimum:.4f}", f"{s.maximum:.4f}", f"{s.mean:.4f}", f"{s.sd:.4f}",
            str(vr.is_watertight).lower(), str(len(vr.self_intersecting_face_pairs)),
        ]
    else:
        cells += [""] * 8
    cells += [status, out_name, message]
    return "\t".join(cells)


MANIFEST_HEADER = "\t".join([
    "run", "stent", "position", "start", "end", "diameter_mm", "length_mm",
    "foreshortening", "k_mm", "d_infl_mm", "dr_mm", "d_con_mm", "r_init_mm",
    "steps", "time_ms", "min_diameter_mm", "max_diameter_mm", "mean_diameter_mm",
    "sd_mm", "watertight", "self_intersections", "status", "output", "message",
])


def cmd_batch(args) -> int:
    cfg = stent_io.parse_config(Path(args.config).read_bytes())
    mesh = stent_io.load_mesh(cfg.mesh_path)
    tree = stent_io.load_centerline(cfg.centerline_path)
    out_dir = Path(cfg.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    failures = 0
    for si, entry in enumerate(cfg.stents):
        for pi, pos, diameter, length in entry.combinations():
            run_id = f"s{si}_p{pi}_d{diameter:g}" + ("" if length is None else f"_l{length:g}")
            out_name = f"{run_id}.vtp"
            spec = RunSpec(
                start=pos[0], end=pos[1], diameter=diameter, nominal_length=length,
                foreshortening=entry.foreshortening, k=entry.k, d_infl=entry.d_infl,
                dr=entry.dr, d_con=entry.d_con, r_init=entry.r_init,
                capsule_length=cfg.capsule_length,
            )
            try:
                result = run_deployment(mesh, tree, spec, with_metrics=True)
                stent_io.save_mesh(out_dir / out_name, result.mesh)
                if cfg.emit_metrics:
                    (out_dir / f"{run_id}_profile.tsv").write_text(profile_text(result.profile))
                ok = result.report.validity.is_clean
                status = "ok" if ok else "invalid-output"
                if not ok:
                    failures += 1
                rows.append(_manifest_row(run_id, si, pi, pos, diameter, length, entry,
                                          status, out_name, result))
                print(f"{run_id}: {status} ({result.stented_summary})")
            except (StentKitError, ValueError, OSError) as e:
                failures += 1
                rows.append(_manifest_row(run_id, si, pi, pos, diameter, length, entry,
                                          "failed", "", message=str(e)))
                print(f"{run_id}: failed: {e}", file=sys.stderr)
    manifest = out_dir / "manifest.tsv"
    manifest.write_text(MANIFEST_HEADER + "\n" + "\n".join(rows) + "\n")
    print(f"wrote {manifest} ({len(rows)} runs, {failures} failed)")
    return EXIT_ERROR if failures else EXIT_OK


def cmd_metrics(args, parser) -> int:
    mesh = stent_io.load_mesh(args.mesh)
    if args.centerline is None:
        parser.error("--centerline is required to define the probe polyline")
    tree = stent_io.load_centerline(args.centerline)
    pid = args.path_id if args.path_id is not None else tree.root_ids()[0]
    polyline = tree.path(pid).points
    if args.equivalent:
        profile = equivalent_radius_profile(mesh, polyline, spacing=args.spacing)
    else:
        profile = mis_radius_profile(mesh, polyline, spacing=args.spacing)
    text = profile_text(profile)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    print(f"summary: {summarize(profile)}")
    return EXIT_OK


def cmd_check(args) -> int:
    mesh = stent_io.load_mesh(args.mesh)
    report = check_validity(mesh)
    print(f"watertight: {report.is_watertight}")
    print(f"boundary edges: {report.boundary_edge_count}")
    print(f"non-manifold edges: {report.non_manifold_edge_count}")
    print(f"self-intersecting face pairs: {len(report.self_intersecting_face_pairs)}")
    for a, b in report.self_intersecting_face_pairs[:20]:
        print(f"  faces {a} and {b}")
    return EXIT_OK if report.is_clean else EXIT_ERROR


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(export_dir=args.export_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def cmd_synth(args) -> int:
    from . import synthetic

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mesh, tree = synthetic.stenotic_tube()
    stent_io.save_mesh(out / "stenotic_tube.vtp", mesh)
    stent_io.save_centerline(out / "stenotic_tube_centerline.vtp", tree)
    mesh, tree = synthetic.curved_tube()
    stent_io.save_mesh(out / "curved_tube.vtp", mesh)
    stent_io.save_centerline(out / "curved_tube_centerline.vtp", tree)
    try:
        mesh, tree = synthetic.junction_vessel()
        stent_io.save_mesh(out / "junction.vtp", mesh)
        stent_io.save_centerline(out / "junction_centerline.vtp", tree)
    except ImportError:
        print("scikit-image not installed; skipping the junction fixture", file=sys.stderr)
    print(f"wrote fixtures to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "deploy":
            return cmd_deploy(args, parser)
        if args.command == "batch":
            return cmd_batch(args)
        if args.command == "metrics":
            return cmd_metrics(args, parser)
        if args.command == "check":
            return cmd_check(args)
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "synth":
            return cmd_synth(args)
    except (StentKitError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
