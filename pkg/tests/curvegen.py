"""Seeded random weakly simple closed curves for property tests.

Most curves start as a sweep-out fiber and get a few local edits: corners at
vertices are cut into a face, edge points slide along their edge, and short
bumps are added inside faces. The rest are short closed quasigeodesics found
by the search, re-sampled at random interior points so that they are fixed
points in disguise. Only curves that the weak-simplicity check accepts are
kept.
"""
from __future__ import annotations

import numpy as np

from quasigeo.diskflow import sweep_out_fibers
from quasigeo.geometry import EdgePoint, FacePoint, PLCurve, VertexPoint, canonical_point, point_in_face
from quasigeo.search import SearchConfig, search
from quasigeo.simplicity import check_weakly_simple


def _face_point(mesh, f, z):
    p = canonical_point(mesh, f, z, tol=0.0)
    return p if isinstance(p, FacePoint) else None


def _edit(mesh, curve: PLCurve, rng: np.random.Generator) -> PLCurve:
    pts, fs = list(curve.points), list(curve.faces)
    n = len(pts)
    out_p, out_f = [], []
    for i in range(n):
        p, f_in, f_out = pts[i], fs[i - 1], fs[i]
        if isinstance(p, VertexPoint) and f_in == f_out and rng.random() < 0.5:
            z = point_in_face(mesh, p, f_in)
            c = sum(mesh.charts[f_in]) / 3
            q = _face_point(mesh, f_in, z + rng.uniform(0.05, 0.4) * (c - z))
            if q is not None:
                p = q
        elif isinstance(p, EdgePoint) and rng.random() < 0.5:
            p = EdgePoint(p.edge, float(np.clip(p.t + rng.normal(0, 0.1), 0.05, 0.95)))
        out_p.append(p)
        out_f.append(f_out)
        # bump in the middle of the outgoing segment
        if rng.random() < 0.3:
            a = point_in_face(mesh, p, f_out)
            b = point_in_face(mesh, pts[(i + 1) % n], f_out)
            if abs(b - a) > 1e-3:
                mid = 0.5 * (a + b) + rng.uniform(-0.15, 0.15) * abs(b - a) * 1j * (b - a) / abs(b - a)
                q = _face_point(mesh, f_out, mid)
                if q is not None:
                    out_p.append(q)
                    out_f.append(f_out)
    return PLCurve(tuple(out_p), tuple(out_f))


def _subdivide(mesh, curve: PLCurve, rng: np.random.Generator) -> PLCurve:
    """Same curve with extra points inserted at random along some segments."""
    pts, fs = [], []
    n = len(curve.points)
    for i, (p, f) in enumerate(zip(curve.points, curve.faces)):
        pts.append(p)
        fs.append(f)
        if rng.random() < 0.5:
            a = point_in_face(mesh, p, f)
            b = point_in_face(mesh, curve.points[(i + 1) % n], f)
            q = canonical_point(mesh, f, a + rng.uniform(0.2, 0.8) * (b - a))
            pts.append(q)
            fs.append(f)
    k = int(rng.integers(len(pts)))
    return PLCurve(tuple(pts[k:] + pts[:k]), tuple(fs[k:] + fs[:k]))


def known_quasigeodesics(mesh, bound: float = 4.01) -> list[PLCurve]:
    res = search(mesh, SearchConfig(max_total_length=min(bound, mesh.edge_sum), max_word_length=16,
                                    max_solutions=4))
    return [c.realization for c in res.certificates]


def random_weakly_simple_curves(mesh, count: int, seed: int, samples_per_face: int = 3,
                                fixed_share: float = 0.2) -> list[PLCurve]:
    rng = np.random.default_rng(seed)
    fibers = sweep_out_fibers(mesh, samples_per_face=samples_per_face)
    geodesics = known_quasigeodesics(mesh)
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 200 * count:
            raise RuntimeError("could not generate enough weakly simple curves")
        if geodesics and rng.random() < fixed_share:
            curve = _subdivide(mesh, geodesics[int(rng.integers(len(geodesics)))], rng)
        else:
            base = fibers[int(rng.integers(len(fibers)))].curve
            curve = _edit(mesh, base, rng) if rng.random() < 0.85 else base
        if check_weakly_simple(mesh, curve).accepted:
            out.append(curve)
    return out


def _chart_of_xyz(mesh, f, x):
    """Chart position of a 3D point lying in the plane of face f."""
    a, b, c = (mesh.coords[int(i)] for i in mesh.faces[f])
    m = np.column_stack([b - a, c - a])
    (s, t), *_ = np.linalg.lstsq(m, x - a, rcond=None)
    z = mesh.charts[f]
    return z[0] + s * (z[1] - z[0]) + t * (z[2] - z[0])


def _on_plane(mesh, f, x, tol=1e-9):
    a, b, c = (mesh.coords[int(i)] for i in mesh.faces[f])
    nrm = np.cross(b - a, c - a)
    return abs(np.dot(nrm / np.linalg.norm(nrm), x - a)) <= tol


def cube_zigzag(cube, seed: int, length: float = 4.8) -> PLCurve:
    """Closed zigzag around the four vertical sides of the unit cube.

    It meets the vertical edges at heights alternating between c - a and
    c + a, where the centre c is drawn from the seed and the amplitude a fixes
    the total length: each side contributes sqrt(1 + (2a)^2).
    """
    from quasigeo.geometry import trace_ray

    rng = np.random.default_rng(seed)
    amp = 0.5 * np.sqrt((length / 4.0) ** 2 - 1.0)
    centre = rng.uniform(0.5 - (0.45 - amp), 0.5 + (0.45 - amp))
    corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    heights = [centre - amp, centre + amp, centre - amp, centre + amp]
    xyz = [np.array([x, y, h]) for (x, y), h in zip(corners, heights)]
    edges = []
    for x, y in corners:
        ends = [v for v in range(cube.n) if abs(cube.coords[v][0] - x) < 1e-12 and abs(cube.coords[v][1] - y) < 1e-12]
        edges.append(cube.edge_between(*ends))
    pts, fs = [], []
    for k in range(4):
        e, P, Q = edges[k], xyz[k], xyz[(k + 1) % 4]
        lo = cube.edge_vertices[e][0]
        t = abs(P[2] - cube.coords[lo][2])
        start = EdgePoint(e, float(t))
        f = next(g for g in cube.edge_faces(e) if _on_plane(cube, g, Q))
        zp, zq = _chart_of_xyz(cube, f, P), _chart_of_xyz(cube, f, Q)
        # stop just short of the next vertical edge; that point starts the next side
        tr = trace_ray(cube, start, (f, zq - zp), abs(zq - zp) - 1e-9)
        pts.extend(tr.points[:-1])
        fs.extend(tr.faces)
    return PLCurve(tuple(pts), tuple(fs))
