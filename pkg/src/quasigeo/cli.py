"""Command-line interface: ``qgeo <command> ...``.

Exit codes: 0 success, 1 invalid input (or a rejected word), 2 budget
exhausted without a certificate, 3 internal failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .diskflow import DEFAULT_MAX_ITER, DEFAULT_TOL_FLOW, iterate_flow, sweep_out_fibers
from .errors import HashMismatch, MeshError, QuasigeoError, WordSyntaxError
from .export import (
    certificate_from_json,
    certificate_json,
    certificate_obj,
    certificate_svg,
    dumps,
    mesh_hash,
)
from .geometry import PLCurve, make_curve, point_from_json
from .mesh import (
    IntrinsicMesh,
    compute_shelling,
    default_eps,
    from_document,
    from_extrinsic,
    global_quantities,
    preprocess,
    read_obj,
    to_document,
)
from .pipeline import find_quasigeodesic
from .search import DEFAULT_BUDGET, SearchConfig, search
from .verify import Certificate, check_word
from .words import format_word, parse_word

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_INTERNAL = 0, 1, 2, 3


class InvalidInput(Exception):
    pass


# --------------------------------------------------------------------------
# helpers


def load_mesh(path: str, eps: float | None = None, preprocess_mesh: bool = True) -> tuple[IntrinsicMesh, int]:
    """Read an intrinsic JSON document or an OBJ file. Returns (mesh, subdivision rounds)."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    if p.suffix.lower() == ".obj":
        pts, faces = read_obj(text)
        mesh = from_extrinsic(pts, faces, eps=eps, preprocess_mesh=False)
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path} is not valid JSON: {exc}") from exc
        mesh = from_document(doc, eps=eps, preprocess_mesh=False)
    rounds = 0
    if preprocess_mesh:
        mesh, rounds = preprocess(mesh)
    return mesh, rounds


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _manifest(args, command: str, mesh: IntrinsicMesh | None, start: float, outcome: str) -> None:
    if not getattr(args, "manifest", None):
        return
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "manifest")}
    doc = {
        "schema": "quasigeo.manifest/1",
        "command": command,
        "config": config,
        "mesh_hash": mesh_hash(mesh) if mesh is not None else None,
        "version": __version__,
        "wall_time": round(time.perf_counter() - start, 6),
        "outcome": outcome,
    }
    Path(args.manifest).write_text(dumps(doc))


def _quantities(mesh: IntrinsicMesh) -> dict:
    gq = global_quantities(mesh)
    return {
        "n": mesh.n,
        "m": mesh.m,
        "faces": mesh.num_faces,
        "edge_sum": gq.edge_sum,
        "min_altitude": gq.min_altitude,
        "max_degree": gq.max_degree,
        "eta": gq.eta,
        "total_curvature": math.fsum(float(k) for k in mesh.curvatures),
    }


def _vertex_table(mesh: IntrinsicMesh) -> list[dict]:
    out = []
    for v in range(mesh.n):
        vd = mesh.vertex_data(v)
        kind = "flat" if vd.is_flat else ("convex" if vd.is_convex else "concave")
        out.append({"vertex": v, "cone_angle": vd.cone_angle, "curvature": vd.curvature,
                    "degree": vd.degree, "kind": kind})
    return out


# --------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    start = time.perf_counter()
    mesh, rounds = load_mesh(args.mesh)
    report = {"schema": "quasigeo.validate/1", "valid": True, "mesh_hash": mesh_hash(mesh),
              "subdivision_rounds": rounds}
    report.update(_quantities(mesh))
    report["vertices"] = _vertex_table(mesh)
    _write(dumps(report), args.out)
    _manifest(args, "validate", mesh, start, "valid")
    return EXIT_OK


def cmd_analyze(args) -> int:
    start = time.perf_counter()
    mesh, rounds = load_mesh(args.mesh)
    report = {"schema": "quasigeo.analyze/1", "mesh_hash": mesh_hash(mesh), "subdivision_rounds": rounds}
    report.update(_quantities(mesh))
    report["eps"] = mesh.eps
    report["shelling"] = [int(f) for f in compute_shelling(mesh)]
    report["vertices"] = _vertex_table(mesh)
    _write(dumps(report), args.out)
    _manifest(args, "analyze", mesh, start, f"eta={report['eta']}")
    return EXIT_OK


def cmd_verify(args) -> int:
    start = time.perf_counter()
    mesh, _ = load_mesh(args.mesh)
    try:
        word = parse_word(args.word, mesh)
    except WordSyntaxError as exc:
        raise InvalidInput(str(exc)) from exc
    res = check_word(mesh, word, check_simplicity=not args.no_simplicity)
    h = mesh_hash(mesh)
    if isinstance(res, Certificate):
        _write(dumps(res.to_json(mesh, h)), args.out)
        _manifest(args, "verify", mesh, start, "accepted")
        return EXIT_OK
    doc = {"schema": "quasigeo.rejection/1", "mesh_hash": h, "word_text": format_word(word, mesh)}
    doc.update(res.as_dict())
    _write(dumps(doc), args.out)
    _manifest(args, "verify", mesh, start, f"rejected: {res.reason}")
    return EXIT_INVALID


def cmd_search(args) -> int:
    start = time.perf_counter()
    mesh, _ = load_mesh(args.mesh)
    cfg = SearchConfig(max_total_length=args.max_length, max_segment_length=args.max_segment,
                       max_word_length=args.max_word,
                       max_solutions=1 if args.first else args.max_solutions,
                       budget=args.budget, threads=args.threads)
    res = search(mesh, cfg)
    h = mesh_hash(mesh)
    doc = {"schema": "quasigeo.search/1", "mesh_hash": h, "complete": res.complete,
           "certificates": [c.to_json(mesh, h) for c in res.certificates]}
    _write(dumps(doc), args.out)
    _manifest(args, "search", mesh, start, f"{len(res.certificates)} certificates")
    if not res.certificates and not res.complete:
        return EXIT_BUDGET
    return EXIT_OK


def _initial_curves(args, mesh: IntrinsicMesh) -> list[PLCurve]:
    if args.init == "sweepout":
        return [fb.curve for fb in sweep_out_fibers(mesh, samples_per_face=args.samples)]
    if args.init == "word":
        if not args.word:
            raise InvalidInput("--init word needs --word")
        res = check_word(mesh, parse_word(args.word, mesh), check_simplicity=False)
        if not isinstance(res, Certificate):
            raise InvalidInput(f"word has no realization: {res.reason} {res.detail}")
        return [res.realization]
    if not args.curve:
        raise InvalidInput("--init file needs --curve")
    doc = json.loads(Path(args.curve).read_text())
    pts = [point_from_json(d) for d in doc["points"]]
    return [make_curve(mesh, pts, doc.get("faces"))]


def cmd_flow(args) -> int:
    start = time.perf_counter()
    mesh, _ = load_mesh(args.mesh)
    curves = _initial_curves(args, mesh)
    h = mesh_hash(mesh)
    outcomes = []
    for c in curves:
        outcomes.append(iterate_flow(mesh, c, args.tol, args.max_iter))
    doc = {"schema": "quasigeo.flow/1", "mesh_hash": h,
           "outcomes": [o.as_dict(mesh, h) for o in outcomes]}
    _write(dumps(doc), args.out)
    if args.trace:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["curve", "iteration", "length"])
        for i, o in enumerate(outcomes):
            for it, L in enumerate(o.lengths):
                w.writerow([i, it, repr(float(L))])
        Path(args.trace).write_text(buf.getvalue())
    _manifest(args, "flow", mesh, start, ",".join(o.status for o in outcomes))
    return EXIT_OK


def cmd_find(args) -> int:
    start = time.perf_counter()
    mesh, _ = load_mesh(args.mesh)
    cfg = SearchConfig(max_solutions=1, budget=args.budget, threads=args.threads,
                       max_word_length=args.max_word)
    res = find_quasigeodesic(mesh, samples_per_face=args.samples, max_iter=args.max_iter, config=cfg,
                             threads=args.threads, use_flow=not args.no_flow)
    if res.certificate is None:
        doc = {"schema": "quasigeo.find/1", "mesh_hash": mesh_hash(mesh), "found": False,
               "complete": res.complete, "notes": res.notes}
        _write(dumps(doc), args.out)
        _manifest(args, "find", mesh, start, "budget exhausted")
        return EXIT_BUDGET
    doc = certificate_json(mesh, res.certificate)
    doc["source"] = res.source
    _write(dumps(doc), args.out)
    if args.svg:
        Path(args.svg).write_text(certificate_svg(mesh, res.certificate))
    _manifest(args, "find", mesh, start, f"length {res.certificate.length:.12g} via {res.source}")
    return EXIT_OK


def cmd_export(args) -> int:
    start = time.perf_counter()
    mesh, _ = load_mesh(args.mesh)
    try:
        doc = json.loads(Path(args.certificate).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read certificate: {exc}") from exc
    cert = certificate_from_json(mesh, doc)
    if args.format == "svg":
        text = certificate_svg(mesh, cert)
    elif args.format == "obj-polyline":
        if mesh.coords is None:
            raise InvalidInput("OBJ polyline export needs a mesh with 3D points")
        text = certificate_obj(mesh, cert)
    else:
        text = dumps(certificate_json(mesh, cert))
    _write(text, args.out)
    _manifest(args, "export", mesh, start, args.format)
    return EXIT_OK


def cmd_generate(args) -> int:
    from . import shapes

    if args.shape == "random":
        pts, tris = shapes.random_hull_points(args.seed, args.points)
    elif args.shape in ("cube", "icosahedron", "tetrahedron"):
        pts, tris = getattr(shapes, f"{args.shape}_points")()
    else:
        pts, tris = None, None
    if args.format == "obj":
        if pts is None:
            raise InvalidInput(f"{args.shape} has no 3D embedding")
        lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in pts]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in tris]
        _write("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    if args.shape == "doubled-triangle":
        doc = shapes.doubled_triangle_document()
    elif args.shape == "tetrahedron":
        doc = shapes.tetrahedron_document()
    else:
        doc = to_document(from_extrinsic(pts, tris, preprocess_mesh=False))
    _write(dumps(doc), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgeo", description="Closed quasigeodesics on polyhedral spheres.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mesh=True):
        if mesh:
            sp.add_argument("mesh", help="mesh file: intrinsic JSON or OBJ")
        sp.add_argument("-o", "--out", help="output file (default: stdout)")
        sp.add_argument("--manifest", help="write a run manifest (config, mesh hash, timing) here")

    sp = sub.add_parser("validate", help="check mesh invariants and report the global quantities")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("analyze", help="global quantities, curvature table and a shelling")
    common(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("verify", help="verify a crossing word")
    common(sp)
    sp.add_argument("--word", required=True, help='e.g. "V0 F0-1 V1 F0-1"')
    sp.add_argument("--no-simplicity", action="store_true", help="skip the weak simplicity check")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("search", help="bounded search over vertex-anchored words")
    common(sp)
    sp.add_argument("--max-length", type=float, default=None, help="total length bound (default: edge sum)")
    sp.add_argument("--max-segment", type=float, default=None, help="length bound per inter-vertex segment")
    sp.add_argument("--max-word", type=int, default=None, help="word length cap (default: eta)")
    sp.add_argument("--max-solutions", type=int, default=None)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="search node budget")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--emit-all", dest="first", action="store_false", help="emit every certificate (default)")
    g.add_argument("--first", dest="first", action="store_true", help="stop at the first certificate")
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_search, first=False)

    sp = sub.add_parser("flow", help="run the disk flow")
    common(sp)
    sp.add_argument("--init", choices=["sweepout", "word", "file"], default="sweepout")
    sp.add_argument("--word", help="initial curve as a word (with --init word)")
    sp.add_argument("--curve", help="initial curve JSON {points, faces} (with --init file)")
    sp.add_argument("--samples", type=int, default=2, help="fibers sampled per face")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL_FLOW)
    sp.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    sp.add_argument("--trace", help="CSV file for the per-iteration lengths")
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("find", help="flow sweep-out fibers, then search; emit one certificate")
    common(sp)
    sp.add_argument("--samples", type=int, default=2)
    sp.add_argument("--max-iter", type=int, default=2000)
    sp.add_argument("--max-word", type=int, default=None)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--no-flow", action="store_true", help="skip the flow and go straight to the search")
    sp.add_argument("--svg", help="also draw the inter-vertex strips here")
    sp.set_defaults(func=cmd_find)

    sp = sub.add_parser("export", help="render a certificate")
    sp.add_argument("certificate")
    common(sp)
    sp.add_argument("--format", choices=["svg", "obj-polyline", "json"], default="json")
    sp.set_defaults(func=cmd_export)

    sp = sub.add_parser("generate", help="write a test mesh")
    sp.add_argument("shape", choices=["tetrahedron", "cube", "icosahedron", "doubled-triangle", "random"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--points", type=int, default=8)
    sp.add_argument("--format", choices=["json", "obj"], default="json")
    common(sp, mesh=False)
    sp.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if "QG_TOLERANCE" in os.environ:
        try:
            default_eps()
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
    try:
        return args.func(args)
    except (InvalidInput, MeshError, WordSyntaxError, HashMismatch) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BrokenPipeError:
        # the reader went away (e.g. piped into head); nothing left to report
        sys.stdout = None
        return EXIT_OK
    except QuasigeoError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # internal invariant failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
