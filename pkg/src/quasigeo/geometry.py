"""Points, directions, strip unfolding and straight-line tracing on a mesh.

Planar positions are complex numbers. Every face has a fixed chart (see
:func:`quasigeo.mesh.face_chart`); crossing a side into the twin face is a
rigid motion between charts.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import NonAdjacentLetters
from .mesh import IntrinsicMesh
from .words import Letter

# --------------------------------------------------------------------------
# surface points


@dataclass(frozen=True)
class VertexPoint:
    vertex: int


@dataclass(frozen=True)
class EdgePoint:
    edge: int
    t: float  # from the lower vertex id towards the higher one


@dataclass(frozen=True)
class FacePoint:
    face: int
    bary: tuple[float, float, float]


SurfacePoint = Union[VertexPoint, EdgePoint, FacePoint]


def length_tol(mesh: IntrinsicMesh) -> float:
    """Absolute length tolerance: eps scaled by the longest edge."""
    return mesh.eps * max(1.0, float(mesh.edge_lengths.max()))


def point_faces(mesh: IntrinsicMesh, p: SurfacePoint) -> list[int]:
    if isinstance(p, VertexPoint):
        return sorted(set(mesh.vertex_faces(p.vertex)))
    if isinstance(p, EdgePoint):
        return sorted(set(mesh.edge_faces(p.edge)))
    return [p.face]


def common_faces(mesh: IntrinsicMesh, p: SurfacePoint, q: SurfacePoint) -> list[int]:
    fq = set(point_faces(mesh, q))
    return [f for f in point_faces(mesh, p) if f in fq]


def edge_point_in_face(mesh: IntrinsicMesh, e: int, t: float, f: int) -> complex:
    s = mesh.side_of_edge(f, e)
    if s is None:
        raise ValueError(f"edge {e} is not a side of face {f}")
    z = mesh.charts[f]
    a = int(mesh.faces[f, (s + 1) % 3])
    za, zb = z[(s + 1) % 3], z[(s + 2) % 3]
    if a == mesh.edge_vertices[e][0]:
        return za + t * (zb - za)
    return zb + t * (za - zb)


def point_in_face(mesh: IntrinsicMesh, p: SurfacePoint, f: int) -> complex:
    """Chart position of p in face f (p must lie in the closed face)."""
    if isinstance(p, VertexPoint):
        k = mesh.corner_of_vertex(f, p.vertex)
        if k is None:
            raise ValueError(f"vertex {p.vertex} is not a corner of face {f}")
        return complex(mesh.charts[f][k])
    if isinstance(p, EdgePoint):
        return complex(edge_point_in_face(mesh, p.edge, p.t, f))
    if p.face != f:
        raise ValueError(f"face point of face {p.face} used in face {f}")
    return complex(np.dot(np.asarray(p.bary), mesh.charts[f]))


def barycentric(z: Sequence[complex], q: complex) -> tuple[float, float, float]:
    z0, z1, z2 = z
    det = cross(z1 - z0, z2 - z0)
    b1 = cross(q - z0, z2 - z0) / det
    b2 = cross(z1 - z0, q - z0) / det
    return 1.0 - b1 - b2, b1, b2


def cross(a: complex, b: complex) -> float:
    return a.real * b.imag - a.imag * b.real


def dot(a: complex, b: complex) -> float:
    return a.real * b.real + a.imag * b.imag


def canonical_point(mesh: IntrinsicMesh, f: int, q: complex, tol: float | None = None) -> SurfacePoint:
    """Snap a chart position in face f to a vertex, an edge, or keep it in the face."""
    tol = length_tol(mesh) if tol is None else tol
    z = mesh.charts[f]
    for k in range(3):
        if abs(q - z[k]) <= tol:
            return VertexPoint(int(mesh.faces[f, k]))
    for s in range(3):
        za, zb = z[(s + 1) % 3], z[(s + 2) % 3]
        d = zb - za
        lam = dot(q - za, d) / dot(d, d)
        if abs(cross(d, q - za)) / abs(d) <= tol and 0.0 < lam < 1.0:
            e = int(mesh.edge_of_side[f, s])
            a = int(mesh.faces[f, (s + 1) % 3])
            t = lam if a == mesh.edge_vertices[e][0] else 1.0 - lam
            return EdgePoint(e, float(t))
    b = barycentric(z, q)
    b = tuple(max(0.0, x) for x in b)
    total = sum(b)
    return FacePoint(f, (b[0] / total, b[1] / total, b[2] / total))


def same_point(mesh: IntrinsicMesh, p: SurfacePoint, q: SurfacePoint, tol: float | None = None) -> bool:
    if p == q:
        return True
    tol = length_tol(mesh) if tol is None else tol
    for f in common_faces(mesh, p, q):
        if abs(point_in_face(mesh, p, f) - point_in_face(mesh, q, f)) <= tol:
            return True
    return False


def point_to_json(p: SurfacePoint) -> dict:
    if isinstance(p, VertexPoint):
        return {"vertex": p.vertex}
    if isinstance(p, EdgePoint):
        return {"edge": p.edge, "t": float(p.t)}
    return {"face": p.face, "bary": [float(x) for x in p.bary]}


def point_from_json(d: dict) -> SurfacePoint:
    if "vertex" in d:
        return VertexPoint(int(d["vertex"]))
    if "edge" in d:
        return EdgePoint(int(d["edge"]), float(d["t"]))
    return FacePoint(int(d["face"]), tuple(float(x) for x in d["bary"]))


def point_xyz(mesh: IntrinsicMesh, p: SurfacePoint) -> np.ndarray:
    """3D position for meshes that carry extrinsic coordinates."""
    c = mesh.coords
    if c is None:
        raise ValueError("mesh has no extrinsic coordinates")
    if isinstance(p, VertexPoint):
        return c[p.vertex]
    if isinstance(p, EdgePoint):
        a, b = mesh.edge_vertices[p.edge]
        return (1.0 - p.t) * c[a] + p.t * c[b]
    return np.dot(np.asarray(p.bary), c[mesh.faces[p.face]])


# --------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class PLCurve:
    """Closed piecewise-linear curve; segment i joins points[i] to points[i+1] inside faces[i]."""

    points: tuple
    faces: tuple

    def __len__(self) -> int:
        return len(self.points)

    def segment(self, mesh: IntrinsicMesh, i: int) -> tuple[int, complex, complex]:
        f = self.faces[i]
        p, q = self.points[i], self.points[(i + 1) % len(self.points)]
        return f, point_in_face(mesh, p, f), point_in_face(mesh, q, f)

    def segment_lengths(self, mesh: IntrinsicMesh) -> list[float]:
        out = []
        for i in range(len(self.points)):
            _, a, b = self.segment(mesh, i)
            out.append(abs(b - a))
        return out

    def length(self, mesh: IntrinsicMesh) -> float:
        return float(math.fsum(self.segment_lengths(mesh)))

    def vertices(self) -> list[int]:
        return [p.vertex for p in self.points if isinstance(p, VertexPoint)]

    def reversed(self) -> "PLCurve":
        n = len(self.points)
        pts = tuple(self.points[(-i) % n] for i in range(n))
        fs = tuple(self.faces[(-i - 1) % n] for i in range(n))
        return PLCurve(pts, fs)

    def rotated(self, k: int) -> "PLCurve":
        n = len(self.points)
        k %= n
        return PLCurve(self.points[k:] + self.points[:k], self.faces[k:] + self.faces[:k])


def make_curve(mesh: IntrinsicMesh, points: Sequence[SurfacePoint], faces: Sequence[int] | None = None) -> PLCurve:
    """Build a closed curve, inferring segment faces (lowest common face) when not given."""
    pts = tuple(points)
    if faces is None:
        fs = []
        for i, p in enumerate(pts):
            q = pts[(i + 1) % len(pts)]
            common = common_faces(mesh, p, q)
            if not common:
                raise ValueError(f"points {i} and {i + 1} share no face")
            fs.append(common[0])
        faces = fs
    return PLCurve(pts, tuple(int(f) for f in faces))


def clean_curve(mesh: IntrinsicMesh, curve: PLCurve, tol: float | None = None) -> PLCurve:
    """Drop zero-length segments and points where the curve continues straight inside a face."""
    tol = length_tol(mesh) if tol is None else tol
    pts, fs = list(curve.points), list(curve.faces)
    changed = True
    while changed and len(pts) > 1:
        changed = False
        for i in range(len(pts)):
            j = (i + 1) % len(pts)
            f = fs[i]
            if abs(point_in_face(mesh, pts[j], f) - point_in_face(mesh, pts[i], f)) <= tol:
                # keep the more special point (vertex > edge > face)
                # segment i collapses: merge its ends into pts[j] and drop face i,
                # which keeps faces aligned even when j wraps round to 0
                pts[j] = pts[i] if _rank(pts[i]) >= _rank(pts[j]) else pts[j]
                del pts[i]
                del fs[i]
                changed = True
                break
    if len(pts) >= 3:
        changed = True
        while changed and len(pts) >= 3:
            changed = False
            for i in range(len(pts)):
                p = pts[i]
                if not isinstance(p, FacePoint):
                    continue
                prev = (i - 1) % len(pts)
                if fs[prev] != fs[i]:
                    continue
                f = fs[i]
                a = point_in_face(mesh, pts[prev], f)
                b = point_in_face(mesh, pts[(i + 1) % len(pts)], f)
                z = point_in_face(mesh, p, f)
                if abs(cross(b - a, z - a)) <= tol * abs(b - a) and dot(z - a, b - z) > 0:
                    del pts[i]
                    del fs[i]
                    changed = True
                    break
    return PLCurve(tuple(pts), tuple(fs))


def _rank(p: SurfacePoint) -> int:
    return 2 if isinstance(p, VertexPoint) else 1 if isinstance(p, EdgePoint) else 0


# --------------------------------------------------------------------------
# directions and angles at vertices


def theta_towards(mesh: IntrinsicMesh, v: int, f: int, q: complex) -> float:
    """Angle coordinate at vertex v of the direction towards chart point q of face f."""
    k = mesh.corner_of_vertex(f, v)
    z = mesh.charts[f]
    zv = z[k]
    u = z[(k + 1) % 3] - zv
    psi = cmath.phase((q - zv) / u)
    alpha = float(mesh.angles[f, k])
    psi = min(max(psi, 0.0), alpha)
    return float(mesh.corner_theta[f, k]) + psi


def direction_in_face(mesh: IntrinsicMesh, v: int, theta: float) -> tuple[int, complex, float]:
    """Face and chart unit vector for the angle coordinate theta at vertex v.

    Returns (face, unit direction, offset of theta into that corner).
    """
    cone = float(mesh.cone_angles[v])
    theta %= cone
    starts = mesh.fan_start[v]
    i = max(0, int(np.searchsorted(starts, theta, side="right")) - 1)
    f, k = mesh.fans[v][i]
    z = mesh.charts[f]
    u = z[(k + 1) % 3] - z[k]
    psi = theta - starts[i]
    return f, (u / abs(u)) * cmath.exp(1j * psi), psi


def side_angles(mesh: IntrinsicMesh, v: int, theta_in: float, theta_out: float) -> tuple[float, float]:
    """(left, right) angles at v between the incoming and outgoing directions.

    ``theta_in`` points back along the arriving curve, ``theta_out`` along the
    departing one; angles are measured in the cone-angle coordinate at v, so
    left + right equals the cone angle.
    """
    cone = float(mesh.cone_angles[v])
    left = (theta_in - theta_out) % cone
    tol = 1e-12 * max(1.0, cone) + mesh.eps
    if left > cone - tol:
        left = 0.0
    if left < tol:
        left = 0.0
    return left, cone - left


def angle_rule_violation(mesh: IntrinsicMesh, v: int, left: float, right: float) -> tuple[str, float]:
    """Largest violation of the quasigeodesic angle rule at v, with the side concerned.

    Convex vertices need both sides <= pi, concave ones both >= pi, flat
    vertices exactly pi.
    """
    kappa = float(mesh.curvatures[v])
    if abs(kappa) <= mesh.eps:
        worst = max((abs(left - math.pi), "left"), (abs(right - math.pi), "right"))
        return worst[1], worst[0]
    if kappa > 0:
        worst = max((left - math.pi, "left"), (right - math.pi, "right"))
    else:
        worst = max((math.pi - left, "left"), (math.pi - right, "right"))
    return worst[1], max(0.0, worst[0])


def side_angles_at_vertex(mesh: IntrinsicMesh, v: int, in_dir: float, out_dir: float) -> tuple[float, float]:
    return side_angles(mesh, v, in_dir, out_dir)


# --------------------------------------------------------------------------
# unfolding


def _rigid(z1: complex, z2: complex, p1: complex, p2: complex):
    rot = (p2 - p1) / (z2 - z1)
    rot /= abs(rot)
    return lambda z: p1 + (z - z1) * rot, rot


def place_across(mesh: IntrinsicMesh, f: int, s: int, placed_f: Sequence[complex]) -> tuple[int, int, np.ndarray]:
    """Place the twin face of side s of f, given the planar images of f's corners."""
    g, t = (int(x) for x in mesh.twin[f, s])
    zg = mesh.charts[g]
    # twin side runs backwards: g corner t+1 sits on f corner s+2
    m, _ = _rigid(zg[(t + 1) % 3], zg[(t + 2) % 3], placed_f[(s + 2) % 3], placed_f[(s + 1) % 3])
    return g, t, np.array([m(z) for z in zg])


@dataclass
class UnfoldedStrip:
    faces: list[int]
    placed: list[np.ndarray]  # corner images per face
    edges: list[int]  # crossed edges, edges[i] between faces[i] and faces[i+1]
    sides: list[int]  # side index of edges[i] in faces[i]
    start: SurfacePoint
    end: SurfacePoint
    start_image: complex = 0j
    end_image: complex = 0j

    def edge_images(self, i: int) -> tuple[complex, complex, int, int]:
        """Planar endpoints of crossed edge i with their vertex ids."""
        f, s = self.faces[i], self.sides[i]
        z = self.placed[i]
        return z[(s + 1) % 3], z[(s + 2) % 3], f, s


def strip_candidates(mesh: IntrinsicMesh, start: SurfacePoint, edges: Sequence[int], end: SurfacePoint,
                     first_face: int | None = None) -> Iterator[UnfoldedStrip]:
    """All unfoldings of the given edge sequence (the first face can be ambiguous)."""
    if not edges:
        faces = common_faces(mesh, start, end)
        if first_face is not None:
            faces = [f for f in faces if f == first_face]
        if not faces:
            raise NonAdjacentLetters(0, "start and end share no face")
        for f in faces:
            z = mesh.charts[f].copy()
            yield UnfoldedStrip([f], [z], [], [], start, end, point_in_face(mesh, start, f), point_in_face(mesh, end, f))
        return
    firsts = [f for f in point_faces(mesh, start) if mesh.side_of_edge(f, edges[0]) is not None]
    if first_face is not None:
        firsts = [f for f in firsts if f == first_face]
    if not firsts:
        raise NonAdjacentLetters(0, "start point is not in a face of the first edge")
    error = None
    produced = False
    for f0 in firsts:
        try:
            strip = _unfold_from(mesh, f0, start, edges, end)
        except NonAdjacentLetters as exc:
            error = exc
            continue
        produced = True
        yield strip
    if not produced:
        raise error


def _unfold_from(mesh, f0, start, edges, end) -> UnfoldedStrip:
    faces, placed, sides = [f0], [mesh.charts[f0].copy()], []
    for i, e in enumerate(edges):
        f = faces[-1]
        s = mesh.side_of_edge(f, e)
        if s is None:
            raise NonAdjacentLetters(i, f"edge {e} is not a side of face {f}")
        if i > 0 and e == edges[i - 1]:
            raise NonAdjacentLetters(i, f"edge {e} repeated")
        sides.append(s)
        g, _, zg = place_across(mesh, f, s, placed[-1])
        faces.append(g)
        placed.append(zg)
    last = faces[-1]
    if last not in point_faces(mesh, end):
        raise NonAdjacentLetters(len(edges), "end point is not in the last face")
    strip = UnfoldedStrip(faces, placed, list(edges), sides, start, end)
    strip.start_image = _image(mesh, start, f0, placed[0])
    strip.end_image = _image(mesh, end, last, placed[-1])
    return strip


def _image(mesh, p, f, placed) -> complex:
    b = barycentric(mesh.charts[f], point_in_face(mesh, p, f))
    return complex(np.dot(np.asarray(b), placed))


def unfold_strip(mesh: IntrinsicMesh, start: SurfacePoint, edges: Sequence[int], end: SurfacePoint,
                 first_face: int | None = None) -> UnfoldedStrip:
    return next(strip_candidates(mesh, start, edges, end, first_face))


@dataclass
class SegmentTrace:
    status: str  # "accept", "reject" or "graze"
    index: int = -1  # offending crossing, when not accepted
    reason: str = ""
    points: list = field(default_factory=list)  # start, crossings, end
    faces: list = field(default_factory=list)
    params: list = field(default_factory=list)  # canonical edge parameters
    length: float = 0.0

    @property
    def accepted(self) -> bool:
        return self.status == "accept"


def trace_segment(mesh: IntrinsicMesh, strip: UnfoldedStrip) -> SegmentTrace:
    """Check that the straight segment from start to end realizes the strip's edge sequence."""
    tol = length_tol(mesh)
    P, Q = strip.start_image, strip.end_image
    D = Q - P
    L = abs(D)
    if L <= tol:
        return SegmentTrace("reject", 0, "zero-length segment")
    points = [strip.start]
    params = []
    last_u = 0.0
    for i, e in enumerate(strip.edges):
        A, B, f, s = strip.edge_images(i)
        dA = cross(D, A - P) / L
        dB = cross(D, B - P) / L
        if abs(dA) <= tol or abs(dB) <= tol:
            ua = dot(A - P, D) / (L * L)
            ub = dot(B - P, D) / (L * L)
            if (abs(dA) <= tol and tol < ua * L < L - tol) or (abs(dB) <= tol and tol < ub * L < L - tol):
                return SegmentTrace("graze", i, f"segment passes within tolerance of an endpoint of edge {e}")
        if dA * dB >= 0:
            return SegmentTrace("reject", i, f"endpoints of edge {e} lie on the same side of the segment")
        lam = dA / (dA - dB)  # from A towards B
        X = A + lam * (B - A)
        u = dot(X - P, D) / (L * L)
        if not (tol / L < u < 1.0 - tol / L) or u < last_u:
            return SegmentTrace("reject", i, f"edge {e} is not crossed between the endpoints in order")
        last_u = u
        a = int(mesh.faces[f, (s + 1) % 3])
        t = lam if a == mesh.edge_vertices[e][0] else 1.0 - lam
        params.append(float(t))
        points.append(EdgePoint(int(e), float(t)))
    points.append(strip.end)
    return SegmentTrace("accept", points=points, faces=list(strip.faces), params=params, length=L)


# --------------------------------------------------------------------------
# ray tracing


@dataclass
class RayTrace:
    points: list
    faces: list  # faces[i] carries points[i] -> points[i+1]
    letters: list
    length: float
    hit_vertex: bool
    end_face: int = -1
    end_direction: complex = 0j  # unit direction in the chart of end_face


def trace_ray(mesh: IntrinsicMesh, start: SurfacePoint, direction, max_len: float,
              max_steps: int = 100_000) -> RayTrace:
    """Walk a straight line from ``start``.

    ``direction`` is an angle coordinate (float) when starting at a vertex,
    otherwise a pair ``(face, unit complex)`` in that face's chart. The walk
    stops after ``max_len`` or when it reaches a vertex.
    """
    tol = length_tol(mesh)
    atol = 1e-12 + mesh.eps
    if isinstance(start, VertexPoint):
        v = start.vertex
        theta = float(direction) % float(mesh.cone_angles[v])
        f, u, psi = direction_in_face(mesh, v, theta)
        k = mesh.corner_of_vertex(f, v)
        alpha = float(mesh.angles[f, k])
        z = mesh.charts[f]
        along = None
        if psi <= atol:
            along = (k + 2) % 3  # outgoing side of the corner
        elif psi >= alpha - atol:
            along = (k + 1) % 3
        if along is not None:
            e = int(mesh.edge_of_side[f, along])
            w = [x for x in mesh.edge_vertices[e] if x != v]
            w = w[0] if w else v
            le = float(mesh.lengths[f, along])
            if le <= max_len + tol:
                return RayTrace([start, VertexPoint(w)], [f], [Letter("F", e)], le, True, f, u)
            zq = z[k] + u * max_len
            return RayTrace([start, canonical_point(mesh, f, zq)], [f], [Letter("F", e)], max_len, False, f, u)
        pos = z[k]
        exclude = {(k + 1) % 3, (k + 2) % 3}
    else:
        f, u = direction
        u = complex(u) / abs(complex(u))
        pos = point_in_face(mesh, start, f)
        exclude = set()
        if isinstance(start, EdgePoint):
            exclude = {mesh.side_of_edge(f, start.edge)}
    points, faces, letters = [start], [], []
    travelled = 0.0
    for _ in range(max_steps):
        z = mesh.charts[f]
        best = None
        for s in range(3):
            if s in exclude:
                continue
            A, B = z[(s + 1) % 3], z[(s + 2) % 3]
            d = B - A
            den = cross(u, d)
            if abs(den) < 1e-15:
                continue
            tau = cross(A - pos, d) / den
            lam = cross(A - pos, u) / den
            if tau > tol * 1e-3 and -1e-9 <= lam <= 1 + 1e-9 and (best is None or tau < best[0]):
                best = (tau, s, lam)
        remaining = max_len - travelled
        if best is None or best[0] >= remaining:
            end = pos + u * remaining
            points.append(canonical_point(mesh, f, end))
            faces.append(f)
            return RayTrace(points, faces, letters, max_len, isinstance(points[-1], VertexPoint), f, u)
        tau, s, lam = best
        travelled += tau
        faces.append(f)
        le = float(mesh.lengths[f, s])
        if lam * le <= tol or (1.0 - lam) * le <= tol:
            k = (s + 1) % 3 if lam * le <= tol else (s + 2) % 3
            points.append(VertexPoint(int(mesh.faces[f, k])))
            letters.append(Letter("V", int(mesh.faces[f, k])))
            return RayTrace(points, faces, letters, travelled, True, f, u)
        e = int(mesh.edge_of_side[f, s])
        a = int(mesh.faces[f, (s + 1) % 3])
        t = lam if a == mesh.edge_vertices[e][0] else 1.0 - lam
        points.append(EdgePoint(e, float(t)))
        letters.append(Letter("C", e))
        X = z[(s + 1) % 3] + lam * (z[(s + 2) % 3] - z[(s + 1) % 3])
        g, tg, zg = place_across(mesh, f, s, z)
        # zg is g's chart expressed in f's chart; invert to move into g's chart
        m, rot = _rigid(zg[(tg + 1) % 3], zg[(tg + 2) % 3], mesh.charts[g][(tg + 1) % 3], mesh.charts[g][(tg + 2) % 3])
        pos = m(X)
        u = u * rot
        f = g
        exclude = {tg}
    raise RuntimeError("trace_ray exceeded its step budget")


# --------------------------------------------------------------------------
# angle coordinates at arbitrary points (used for weak simplicity)


def local_angle(mesh: IntrinsicMesh, p: SurfacePoint, f: int, q: complex) -> float:
    """Angle of the direction from p towards chart point q of face f, in p's tangent cone.

    Vertices use the cone-angle coordinate; edge points use the chart of the
    lower adjacent face (the other face unfolded onto it); face points use
    their face chart. Non-vertex coordinates lie in [0, 2*pi).
    """
    if isinstance(p, VertexPoint):
        return theta_towards(mesh, p.vertex, f, q)
    if isinstance(p, FacePoint):
        zp = point_in_face(mesh, p, f)
        return cmath.phase(q - zp) % (2 * math.pi)
    f1, f2 = sorted(mesh.edge_faces(p.edge))
    if f == f1 or f1 == f2:
        zp = point_in_face(mesh, p, f)
        d = q - zp
    else:
        s1 = mesh.side_of_edge(f1, p.edge)
        g, t, zg = place_across(mesh, f1, s1, mesh.charts[f1])
        m, _ = _rigid(mesh.charts[g][(t + 1) % 3], mesh.charts[g][(t + 2) % 3], zg[(t + 1) % 3], zg[(t + 2) % 3])
        zp = point_in_face(mesh, p, f1)
        d = m(q) - zp
    return cmath.phase(d) % (2 * math.pi)


def cone_angle_at(mesh: IntrinsicMesh, p: SurfacePoint) -> float:
    if isinstance(p, VertexPoint):
        return float(mesh.cone_angles[p.vertex])
    return 2 * math.pi
