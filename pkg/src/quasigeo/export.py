"""Serialisation of meshes and certificates: hashes, JSON, SVG strip drawings, OBJ polylines."""
from __future__ import annotations

import hashlib
import json
from typing import Sequence

import numpy as np

from .errors import HashMismatch
from .geometry import VertexPoint, point_from_json, point_xyz, strip_candidates, trace_segment
from .mesh import IntrinsicMesh, to_document
from .verify import Certificate, check_word
from .words import Letter, letters_from_json

SVG_SCALE = 100.0


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def mesh_hash(mesh: IntrinsicMesh) -> str:
    """Digest of the canonical intrinsic form (faces, lengths, gluing); 3D points are ignored."""
    doc = to_document(mesh, include_points=False)
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def dumps(obj) -> str:
    """Stable, human-readable JSON used for every file the tool writes."""
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def certificate_json(mesh: IntrinsicMesh, cert: Certificate) -> dict:
    return cert.to_json(mesh, mesh_hash(mesh))


def certificate_from_json(mesh: IntrinsicMesh, doc: dict) -> Certificate:
    """Re-verify a stored certificate against a mesh; the hashes must agree."""
    h = mesh_hash(mesh)
    stored = doc.get("mesh_hash")
    if stored is not None and stored != h:
        raise HashMismatch(f"certificate was computed on mesh {stored[:12]}..., this mesh is {h[:12]}...")
    word = letters_from_json(doc["word"])
    cert = check_word(mesh, word)
    if not isinstance(cert, Certificate):
        raise ValueError(f"stored certificate no longer verifies: {cert.reason} {cert.detail}")
    return cert


# --------------------------------------------------------------------------
# SVG


def _segments_of_word(word: Sequence[Letter]):
    """Split a cyclic word into (start vertex, inner letters, end vertex)."""
    n = len(word)
    vpos = [i for i, l in enumerate(word) if l.kind == "V"]
    out = []
    for a, b in zip(vpos, vpos[1:] + [vpos[0] + n]):
        inner = [word[i % n] for i in range(a + 1, b)]
        out.append((word[a].id, inner, word[b % n].id))
    return out


def _fmt(x: float) -> str:
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def certificate_svg(mesh: IntrinsicMesh, cert: Certificate) -> str:
    """One unfolded strip per inter-vertex segment, laid out left to right, with the segment drawn."""
    pieces = []
    for p1, inner, p2 in _segments_of_word(cert.word):
        if len(inner) == 1 and inner[0].kind == "F":
            e = inner[0].id
            f = min(mesh.edge_faces(e))
            z = mesh.charts[f]
            a = z[mesh.corner_of_vertex(f, p1)]
            b = z[mesh.corner_of_vertex(f, p2)]
            pieces.append(([z], a, b, f"V{p1} F{e} V{p2}"))
            continue
        edges = [l.id for l in inner]
        chosen = None
        for strip in strip_candidates(mesh, VertexPoint(p1), edges, VertexPoint(p2)):
            if trace_segment(mesh, strip).accepted:
                chosen = strip
                break
        if chosen is None:
            continue
        label = f"V{p1} " + " ".join(f"C{e}" for e in edges) + f" V{p2}"
        pieces.append((list(chosen.placed), chosen.start_image, chosen.end_image, label))
    # normalise each piece so that its segment runs left to right from the origin
    groups = []
    for tris, a, b, label in pieces:
        d = b - a
        rot = abs(d) / d if abs(d) > 0 else 1.0
        pts = [[(z - a) * rot for z in tri] for tri in tris]
        groups.append((pts, 0j, (b - a) * rot, label))
    x_off = 0.0
    margin = 0.25
    body = []
    ymin, ymax = 0.0, 0.0
    for pts, a, b, label in groups:
        allz = [z for tri in pts for z in tri]
        xmin = min(z.real for z in allz)
        xmax = max(z.real for z in allz)
        shift = x_off - xmin
        ymin = min(ymin, min(z.imag for z in allz))
        ymax = max(ymax, max(z.imag for z in allz))
        for tri in pts:
            coords = " ".join(f"{_fmt((z.real + shift) * SVG_SCALE)},{_fmt(-z.imag * SVG_SCALE)}" for z in tri)
            body.append(f'<polygon points="{coords}" fill="#eef2f7" stroke="#555" stroke-width="1"/>')
        body.append(f'<line x1="{_fmt((a.real + shift) * SVG_SCALE)}" y1="{_fmt(-a.imag * SVG_SCALE)}" '
                    f'x2="{_fmt((b.real + shift) * SVG_SCALE)}" y2="{_fmt(-b.imag * SVG_SCALE)}" '
                    f'stroke="#c0392b" stroke-width="2"/>')
        body.append(f'<text x="{_fmt((xmin + shift) * SVG_SCALE)}" y="{_fmt(-(ymin - 0.1) * SVG_SCALE + 14)}" '
                    f'font-size="12" font-family="monospace">{label}</text>')
        x_off += (xmax - xmin) + margin
    width = max(1.0, x_off) * SVG_SCALE
    top = -(ymax + 0.1) * SVG_SCALE
    height = (ymax - ymin + 0.6) * SVG_SCALE
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_fmt(-10)} {_fmt(top)} '
            f'{_fmt(width + 20)} {_fmt(height)}">')
    title = f"<title>closed quasigeodesic, length {cert.length:.9f}</title>"
    return "\n".join([head, title] + body + ["</svg>"]) + "\n"


# --------------------------------------------------------------------------
# OBJ polyline


def certificate_obj(mesh: IntrinsicMesh, cert: Certificate) -> str:
    """The realization as a closed OBJ polyline in the original 3D coordinates."""
    if mesh.coords is None:
        raise ValueError("mesh has no 3D coordinates; OBJ export needs an extrinsic mesh")
    lines = [f"# closed quasigeodesic, length {cert.length:.12g}"]
    pts = cert.realization.points
    for p in pts:
        x, y, z = (float(c) for c in np.asarray(point_xyz(mesh, p)))
        lines.append(f"v {x:.12g} {y:.12g} {z:.12g}")
    idx = " ".join(str(i + 1) for i in range(len(pts)))
    lines.append(f"l {idx} 1")
    return "\n".join(lines) + "\n"


def points_from_json(items) -> list:
    return [point_from_json(d) for d in items]
