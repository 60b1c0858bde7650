"""Disk flow on closed piecewise-linear curves, plus sweep-out fibers from a shelling.

One pass of the flow visits the stars in ascending vertex order. Inside a
star, each piece of the curve between two consecutive gates is replaced
according to the region angles at the apex: either by the two spokes through
the apex, or by the shortest path inside one of the two regions. A sector of
a star without its apex is flat, so shortest paths are computed in the
developed sector.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NoVertexHit
from .geometry import (
    EdgePoint,
    PLCurve,
    SurfacePoint,
    VertexPoint,
    canonical_point,
    clean_curve,
    cross,
    length_tol,
    point_faces,
    point_in_face,
    point_to_json,
    same_point,
)
from .mesh import IntrinsicMesh, compute_shelling, is_shelling
from .search import push_to_vertex
from .verify import Certificate, check_curve_numeric, check_word, curve_to_word

DEFAULT_TOL_FLOW = 1e-7
DEFAULT_MAX_ITER = 10_000


# --------------------------------------------------------------------------
# star geometry


class Star:
    """Polar description of the star of a vertex.

    Fan corner j occupies the angle interval [start_j, start_j + alpha_j) of
    the cone coordinate; its outgoing spoke leaves along start_j.
    """

    def __init__(self, mesh: IntrinsicMesh, v: int):
        self.mesh = mesh
        self.v = v
        self.fan = list(mesh.fans[v])
        self.cone = float(mesh.cone_angles[v])
        self.starts = np.asarray(mesh.fan_start[v], dtype=float)
        self.face_index = {}
        for j, (f, k) in enumerate(self.fan):
            self.face_index.setdefault(f, []).append(j)
        self.link_edges = set()
        self.spoke_edges = []
        self.spoke_len = []
        self.link_vertices = []
        for f, k in self.fan:
            self.link_edges.add(int(mesh.edge_of_side[f, k]))
            self.spoke_edges.append(int(mesh.edge_of_side[f, (k + 2) % 3]))
            self.spoke_len.append(float(mesh.lengths[f, (k + 2) % 3]))
            self.link_vertices.append(int(mesh.faces[f, (k + 1) % 3]))
        self.link_vertex_set = set(self.link_vertices)
        self.faces = set(self.face_index)

    @property
    def is_convex(self) -> bool:
        return float(self.mesh.curvatures[self.v]) >= -self.mesh.eps

    def corner_in_face(self, f: int, q: complex | None = None) -> int:
        """Fan index of face f; when the face meets the vertex twice, the corner nearest q."""
        js = self.face_index[f]
        if len(js) == 1 or q is None:
            return js[0]
        z = self.mesh.charts[f]
        return min(js, key=lambda j: abs(q - z[self.fan[j][1]]))

    def polar(self, p: SurfacePoint, f: int) -> tuple[float, float, int]:
        """(radius, cone angle, fan index) of point p seen from the apex inside face f."""
        q = point_in_face(self.mesh, p, f)
        j = self.corner_in_face(f, q if not isinstance(p, VertexPoint) or p.vertex != self.v else None)
        fk, k = self.fan[j]
        z = self.mesh.charts[f]
        d = q - z[k]
        r = abs(d)
        if r <= length_tol(self.mesh):
            return 0.0, float(self.starts[j]), j
        u = z[(k + 1) % 3] - z[k]
        psi = cmath.phase(d / u)
        alpha = float(self.mesh.angles[f, k])
        psi = min(max(psi, 0.0), alpha)
        return r, float(self.starts[j]) + psi, j

    def fan_at(self, phi: float) -> int:
        a = phi % self.cone
        return max(0, int(np.searchsorted(self.starts, a, side="right")) - 1)

    def on_link(self, p: SurfacePoint) -> bool:
        if isinstance(p, VertexPoint):
            return p.vertex in self.link_vertex_set and p.vertex != self.v
        if isinstance(p, EdgePoint):
            return p.edge in self.link_edges
        return False

    def segment_on_link(self, f: int, p: SurfacePoint, q: SurfacePoint) -> bool:
        """True when the segment pq of face f runs along the link side of f."""
        for j in self.face_index.get(f, []):
            _, k = self.fan[j]
            e = int(self.mesh.edge_of_side[f, k])
            ends = {int(self.mesh.faces[f, (k + 1) % 3]), int(self.mesh.faces[f, (k + 2) % 3])}

            def on_side(x):
                if isinstance(x, VertexPoint):
                    return x.vertex in ends
                return isinstance(x, EdgePoint) and x.edge == e

            if on_side(p) and on_side(q):
                return True
        return False

    def surface_point(self, r: float, phi: float, side: int = 0) -> tuple[SurfacePoint, int]:
        """Surface point at polar position (r, phi); also the fan index used."""
        tol = length_tol(self.mesh)
        if r <= tol:
            return VertexPoint(self.v), self.fan_at(phi)
        j = self.fan_at(phi + side * 1e-12)
        f, k = self.fan[j]
        z = self.mesh.charts[f]
        u = z[(k + 1) % 3] - z[k]
        u = u / abs(u)
        a = (phi - float(self.starts[j])) % self.cone
        if a > float(self.mesh.angles[f, k]) + 1e-9:
            a = 0.0
        q = z[k] + r * u * cmath.exp(1j * a)
        return canonical_point(self.mesh, f, q), j

    def spoke_point(self, j: int, r: float) -> SurfacePoint:
        tol = length_tol(self.mesh)
        L = self.spoke_len[j]
        if r <= tol:
            return VertexPoint(self.v)
        if abs(L - r) <= tol:
            return VertexPoint(self.link_vertices[j])
        e = self.spoke_edges[j]
        t = r / L
        if self.mesh.edge_vertices[e][0] != self.v:
            t = 1.0 - t
        return EdgePoint(e, float(t))


# --------------------------------------------------------------------------
# arcs and gates


@dataclass
class Arc:
    star: int
    start: int  # index of the first point (gate A) in the curve
    count: int  # number of segments; the arc ends at point start + count (mod n)
    points: list
    faces: list
    front_gate: bool = True  # A opens to the right, towards the star interior
    exit_gate: bool = True  # B opens to the left
    interior_loop: bool = False
    through_apex: bool = False

    @property
    def gates(self) -> tuple:
        if self.interior_loop:
            return ()
        return (self.points[0], self.points[-1])


def _segments_in_star(star: Star, curve: PLCurve) -> list[bool]:
    n = len(curve.points)
    out = []
    for i in range(n):
        f = curve.faces[i]
        p, q = curve.points[i], curve.points[(i + 1) % n]
        out.append(f in star.faces and not star.segment_on_link(f, p, q))
    return out


def decompose_arcs(mesh: IntrinsicMesh, curve: PLCurve, v: int, star: Star | None = None) -> list[Arc]:
    """Pieces of the curve inside the star of v, cut at every contact with the star boundary."""
    star = star or Star(mesh, v)
    n = len(curve.points)
    inside = _segments_in_star(star, curve)
    if not any(inside):
        return []
    cuts = [i for i in range(n) if star.on_link(curve.points[i]) or not inside[i] or not inside[i - 1]]
    if all(inside) and not any(star.on_link(p) for p in curve.points):
        return [Arc(v, 0, n, list(curve.points) + [curve.points[0]], list(curve.faces), False, False, True,
                    any(isinstance(p, VertexPoint) and p.vertex == v for p in curve.points))]
    arcs = []
    cutset = set(cuts)
    start = cuts[0]
    for step in range(n):
        i = (start + step) % n
        if i not in cutset or not inside[i]:
            continue
        j = i
        count = 0
        while True:
            count += 1
            j = (j + 1) % n
            if j in cutset or not inside[j]:
                break
        pts = [curve.points[(i + a) % n] for a in range(count + 1)]
        fs = [curve.faces[(i + a) % n] for a in range(count)]
        apex = any(isinstance(p, VertexPoint) and p.vertex == v for p in pts)
        arcs.append(Arc(v, i, count, pts, fs, True, True, False, apex))
    return arcs


# --------------------------------------------------------------------------
# region angles and shortest paths


@dataclass(frozen=True)
class RegionAngles:
    right: float
    left: float


def _angle_of(star: Star, p: SurfacePoint, f: int) -> float:
    return star.polar(p, f)[1]


def region_angles(mesh: IntrinsicMesh, v: int, A: SurfacePoint, B: SurfacePoint,
                  face_a: int | None = None, face_b: int | None = None) -> RegionAngles:
    """Apex angles of the right region (counter-clockwise from A to B) and the left one."""
    star = Star(mesh, v)
    fa = face_a if face_a is not None else _star_face_of(star, A)
    fb = face_b if face_b is not None else _star_face_of(star, B)
    theta_r = (_angle_of(star, B, fb) - _angle_of(star, A, fa)) % star.cone
    if theta_r > star.cone - 1e-12:
        theta_r = 0.0
    return RegionAngles(theta_r, star.cone - theta_r)


def _star_face_of(star: Star, p: SurfacePoint) -> int:

    for f in point_faces(star.mesh, p):
        if f in star.faces:
            return f
    raise ValueError("point is not in the closed star")


@dataclass
class _Polar:
    r: float
    phi: float  # unwrapped
    point: SurfacePoint | None = None

    @property
    def z(self) -> complex:
        return self.r * cmath.exp(1j * self.phi)


def shortest_path_in_region(mesh: IntrinsicMesh, v: int, A: SurfacePoint, B: SurfacePoint, side: str,
                            face_a: int | None = None, face_b: int | None = None,
                            star: Star | None = None, full_turn: bool = False) -> tuple[list, list, float]:
    """Shortest path from A to B in the right or left region of the star of v.

    ``full_turn`` marks a region that is the whole star, as for an arc that
    leaves a link point and comes back to it around the apex.
    Returns (points, faces, length).
    """
    star = star or Star(mesh, v)
    fa = face_a if face_a is not None else _star_face_of(star, A)
    fb = face_b if face_b is not None else _star_face_of(star, B)
    ra, pa, _ = star.polar(A, fa)
    rb, pb, _ = star.polar(B, fb)
    if side == "right":
        theta = (pb - pa) % star.cone
        if theta > star.cone - 1e-12 and _same(star, A, B):
            theta = 0.0
        if full_turn:
            theta = star.cone
        chain = _region_chain(star, _Polar(ra, pa, A), _Polar(rb, pa + theta, B))
        return _realize(star, chain)
    theta = (pa - pb) % star.cone
    if theta > star.cone - 1e-12 and _same(star, A, B):
        theta = 0.0
    if full_turn:
        theta = star.cone
    chain = _region_chain(star, _Polar(rb, pb, B), _Polar(ra, pb + theta, A))
    pts, fs, length = _realize(star, chain)
    return list(reversed(pts)), list(reversed(fs)), length


def _same(star: Star, A, B) -> bool:

    return same_point(star.mesh, A, B)


def apex_path(mesh: IntrinsicMesh, v: int, A: SurfacePoint, B: SurfacePoint, side: str = "right",
              face_a: int | None = None, face_b: int | None = None, star: Star | None = None):
    """The broken path A -> apex -> B."""
    star = star or Star(mesh, v)
    fa = face_a if face_a is not None else _star_face_of(star, A)
    fb = face_b if face_b is not None else _star_face_of(star, B)
    ra, pa, _ = star.polar(A, fa)
    rb, pb, _ = star.polar(B, fb)
    if side == "right":
        chain = [_Polar(ra, pa, A), _Polar(0.0, pa, VertexPoint(v)), _Polar(rb, pa + (pb - pa) % star.cone, B)]
        return _realize(star, chain)
    chain = [_Polar(rb, pb, B), _Polar(0.0, pb, VertexPoint(v)), _Polar(ra, pb + (pa - pb) % star.cone, A)]
    pts, fs, length = _realize(star, chain)
    return list(reversed(pts)), list(reversed(fs)), length


def _region_chain(star: Star, a: _Polar, b: _Polar) -> list[_Polar]:
    """Taut chain from a to b (b counter-clockwise of a) inside the sector between them."""
    theta = b.phi - a.phi
    if theta >= math.pi - 1e-12:
        return [a, _Polar(0.0, a.phi, VertexPoint(star.v)), b]
    cands = [a]
    d = len(star.fan)
    m0 = math.floor((a.phi - 1.0) / star.cone) - 1
    link = []
    for m in range(m0, m0 + 4):
        for j in range(d):
            ang = float(star.starts[j]) + m * star.cone
            if a.phi + 1e-12 < ang < b.phi - 1e-12:
                link.append(_Polar(star.spoke_len[j], ang, VertexPoint(star.link_vertices[j])))
    link.sort(key=lambda p: p.phi)
    cands.extend(link)
    cands.append(b)
    chain: list[_Polar] = []
    for p in cands:
        while len(chain) >= 2 and cross(chain[-1].z - chain[-2].z, p.z - chain[-1].z) >= -1e-15:
            chain.pop()
        chain.append(p)
    return chain


def _realize(star: Star, chain: Sequence[_Polar]) -> tuple[list, list, float]:
    """Turn a developed chain into surface points and carrying faces."""
    mesh = star.mesh
    tol = length_tol(mesh)
    pts: list = [chain[0].point]
    fs: list = []
    total = 0.0
    for P, Q in zip(chain, chain[1:]):
        zP, zQ = P.z, Q.z
        seg = abs(zQ - zP)
        total += seg
        if seg <= tol:
            continue
        if P.r <= tol or Q.r <= tol:
            # radial piece: the region lies counter-clockwise of an outgoing ray, clockwise of an incoming one
            if P.r <= tol:
                j = star.fan_at(Q.phi - 1e-12)
            else:
                j = star.fan_at(P.phi + 1e-12)
            fs.append(star.fan[j][0])
            pts.append(Q.point if Q.point is not None else star.surface_point(Q.r, Q.phi)[0])
            continue
        lo, hi = P.phi, Q.phi
        breaks = []
        d = len(star.fan)
        m0 = math.floor(lo / star.cone) - 1
        for m in range(m0, m0 + 4):
            for j in range(d):
                ang = float(star.starts[j]) + m * star.cone
                if lo + 1e-12 < ang < hi - 1e-12:
                    breaks.append((ang, j))
        breaks.sort()
        last_phi = lo
        for ang, j in breaks:
            # intersection of PQ with the ray at angle ang
            w = cmath.exp(1j * ang)
            den = cross(zQ - zP, w)
            if abs(den) < 1e-300:
                continue
            lam = cross(-zP, w) / den
            X = zP + lam * (zQ - zP)
            r = abs(X)
            fs.append(star.fan[star.fan_at(0.5 * (last_phi + ang))][0])
            pts.append(star.spoke_point(j, r))
            last_phi = ang
        fs.append(star.fan[star.fan_at(0.5 * (last_phi + hi))][0])
        pts.append(Q.point if Q.point is not None else star.surface_point(Q.r, Q.phi)[0])
    return pts, fs, total


# --------------------------------------------------------------------------
# straightening one arc


@dataclass
class Straightening:
    rule: str  # "apex", "right", "left", "unchanged"
    points: list
    faces: list
    length: float
    angles: RegionAngles
    note: str = ""


def _arc_length(mesh: IntrinsicMesh, pts, fs) -> float:
    return math.fsum(abs(point_in_face(mesh, q, f) - point_in_face(mesh, p, f)) for p, q, f in zip(pts, pts[1:], fs))


def _winding(star: Star, pts, fs) -> float:
    """Signed apex angle swept by the arc (only meaningful when the arc avoids the apex)."""
    total = 0.0
    for p, q, f in zip(pts, pts[1:], fs):
        total += star.polar(q, f)[1] - star.polar(p, f)[1]
    return total


def choose_rule(star: Star, angles: RegionAngles, through_apex: bool, winding: float) -> tuple[str, str]:
    """Straightening rule for a piece between two gates.

    Returns (rule, note) where rule is "apex", "right" or "left".
    """
    eps = 1e-12 + star.mesh.eps
    pi = math.pi
    tr, tl = angles.right, angles.left
    own = "right" if winding > 0 else "left"
    if star.is_convex:
        if tr > pi + eps:
            return "left", ""
        if tl > pi + eps:
            return "right", ""
        if through_apex:
            return "apex", ""
        return own, ""
    # concave star
    if tr >= pi - eps and tl >= pi - eps:
        note = "tie resolved towards the apex" if min(abs(tr - pi), abs(tl - pi)) <= eps else ""
        return "apex", note
    if tr < pi:
        return "right", ""
    return "left", ""


def straighten_arc(mesh: IntrinsicMesh, v: int, arc: Arc, star: Star | None = None) -> Straightening:
    """Replacement for the arc between its gates, never longer than the arc."""
    star = star or Star(mesh, v)
    A, B = arc.points[0], arc.points[-1]
    fa, fb = arc.faces[0], arc.faces[-1]
    old = _arc_length(mesh, arc.points, arc.faces)
    ang = region_angles(mesh, v, A, B, fa, fb)
    wind = 0.0 if arc.through_apex else _winding(star, arc.points, arc.faces)
    # back at its starting link point after one turn around the apex: the
    # arc's own region is the whole star rather than an empty sector
    full_turn = (not arc.through_apex and abs(abs(wind) - star.cone) <= 1e-9
                 and _same(star, A, B))
    if full_turn:
        ang = RegionAngles(star.cone, 0.0) if wind > 0 else RegionAngles(0.0, star.cone)
    rule, note = choose_rule(star, ang, arc.through_apex, wind)
    if rule == "apex":
        pts, fs, length = apex_path(mesh, v, A, B, "right", fa, fb, star)
    else:
        own = "right" if wind > 0 else "left"
        pts, fs, length = shortest_path_in_region(mesh, v, A, B, rule, fa, fb, star,
                                                  full_turn=full_turn and rule == own)
    if length < old - 1e-14 * max(1.0, old):
        return Straightening(rule, pts, fs, length, ang, note)
    if length <= old + 1e-15 * max(1.0, old) and _moves(mesh, arc.points, arc.faces, pts, fs):
        # rounding-level length change but a visible kink is removed
        return Straightening(rule, pts, fs, length, ang, note)
    return Straightening("unchanged", list(arc.points), list(arc.faces), old, ang, note)


def _moves(mesh: IntrinsicMesh, old_pts, old_fs, new_pts, new_fs, tol: float = 1e-12) -> bool:
    """True when some old point lies off the new path by more than tol."""
    new_segs = [(f, point_in_face(mesh, p, f), point_in_face(mesh, q, f))
                for p, q, f in zip(new_pts, new_pts[1:], new_fs)]
    for p in old_pts[1:-1]:
        best = math.inf
        for f, a, b in new_segs:
            try:
                z = point_in_face(mesh, p, f)
            except ValueError:
                continue
            d = b - a
            dd = (d * d.conjugate()).real
            lam = 0.0 if dd == 0 else min(1.0, max(0.0, ((z - a) * d.conjugate()).real / dd))
            best = min(best, abs(a + lam * d - z))
        if best > tol:
            return True
    return False


# --------------------------------------------------------------------------
# the flow


@dataclass
class Collapsed:
    point: SurfacePoint
    star: int


def phi_local(mesh: IntrinsicMesh, curve: PLCurve, v: int, notes: list | None = None) -> PLCurve | Collapsed:
    """Straighten every arc of the curve in the star of v; rule notes go to ``notes``."""
    star = Star(mesh, v)
    arcs = decompose_arcs(mesh, curve, v, star)
    if not arcs:
        return curve
    if arcs[0].interior_loop:
        return Collapsed(VertexPoint(v), v)
    n = len(curve.points)
    replaced = {}
    for arc in arcs:
        st = straighten_arc(mesh, v, arc, star)
        if st.note and notes is not None:
            notes.append(f"vertex {v}: {st.note}")
        if st.rule != "unchanged":
            replaced[arc.start] = (arc.count, st)
    if not replaced:
        return curve
    # rebuild starting from a point that no arc covers in its interior
    covered = set()
    for s, (cnt, _) in replaced.items():
        for a in range(1, cnt):
            covered.add((s + a) % n)
    begin = next(i for i in range(n) if i not in covered)
    pts, fs = [], []
    i = begin
    steps = 0
    while steps < n:
        if i in replaced:
            cnt, st = replaced[i]
            pts.extend(st.points[:-1])
            fs.extend(st.faces)
            i = (i + cnt) % n
            steps += cnt
        else:
            pts.append(curve.points[i])
            fs.append(curve.faces[i])
            i = (i + 1) % n
            steps += 1
    out = PLCurve(tuple(pts), tuple(int(f) for f in fs))
    out = clean_curve(mesh, out)
    if len(out.points) < 2 or out.length(mesh) <= length_tol(mesh):
        return Collapsed(out.points[0] if out.points else VertexPoint(v), v)
    return out


def phi(mesh: IntrinsicMesh, curve: PLCurve, notes: list | None = None) -> PLCurve | Collapsed:
    """One pass of the flow: straighten in every star, in ascending vertex order."""
    for v in range(mesh.n):
        curve = phi_local(mesh, curve, v, notes)
        if isinstance(curve, Collapsed):
            return curve
    return curve


@dataclass
class FlowOutcome:
    status: str  # "converged", "collapsed", "stalled" or "max_iterations"
    curve: PLCurve | None
    lengths: list
    iterations: int
    residual: float = 0.0
    point: SurfacePoint | None = None
    certificate: Certificate | None = None
    pushed: bool = False
    notes: list = field(default_factory=list)

    def as_dict(self, mesh: IntrinsicMesh, mesh_hash: str | None = None) -> dict:

        out = {"schema": "quasigeo.flow/1", "status": self.status, "iterations": self.iterations,
               "length": self.lengths[-1] if self.lengths else 0.0, "residual": self.residual,
               "lengths": [float(x) for x in self.lengths]}
        if mesh_hash is not None:
            out["mesh_hash"] = mesh_hash
        if self.curve is not None:
            out["curve"] = {"points": [point_to_json(p) for p in self.curve.points],
                            "faces": [int(f) for f in self.curve.faces]}
        if self.point is not None:
            out["point"] = point_to_json(self.point)
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json(mesh, mesh_hash)
        out["pushed_to_vertex"] = self.pushed
        out["notes"] = list(self.notes)
        return out


def iterate_flow(mesh: IntrinsicMesh, curve: PLCurve, tol_flow: float = DEFAULT_TOL_FLOW,
                 max_iter: int = DEFAULT_MAX_ITER, numeric_tol: float = 1e-7,
                 certify: bool = True) -> FlowOutcome:
    """Apply the flow until the length stalls on a curve that passes the numeric check."""
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    curve = clean_curve(mesh, curve)
    lengths = [curve.length(mesh)]
    notes: list = []
    for it in range(1, max_iter + 1):
        nxt = phi(mesh, curve, notes)
        if isinstance(nxt, Collapsed):
            lengths.append(0.0)
            return FlowOutcome("collapsed", None, lengths, it, 0.0, nxt.point, notes=_dedup(notes))
        L = nxt.length(mesh)
        if L > lengths[-1] + 1e-12 * max(1.0, lengths[-1]):
            # a straightening never lengthens; anything beyond rounding is a bug upstream
            note = f"iteration {it}: step would lengthen the curve by {L - lengths[-1]:.3g}; stopped"
            return FlowOutcome("stalled", curve, lengths, it - 1, 0.0, notes=_dedup(notes + [note]))
        lengths.append(L)
        decrease = max(0.0, lengths[-2] - L)
        curve = nxt
        if decrease < tol_flow:
            rep = check_curve_numeric(mesh, curve, numeric_tol)
            if rep.accepted:
                out = FlowOutcome("converged", curve, lengths, it, decrease, notes=_dedup(notes))
                if certify:
                    _certify(mesh, out)
                return out
    return FlowOutcome("max_iterations", curve, lengths, max_iter, lengths[-2] - lengths[-1],
                       notes=_dedup(notes))


def _dedup(notes: list) -> list:
    return list(dict.fromkeys(notes))


def _certify(mesh: IntrinsicMesh, outcome: FlowOutcome) -> None:
    """Attach a verified certificate, pushing a vertex-free geodesic onto a vertex first."""

    curve = outcome.curve
    if not curve.vertices():
        try:
            curve = push_to_vertex(mesh, curve)
            outcome.pushed = True
        except (NoVertexHit, ValueError) as exc:
            outcome.notes.append(f"push to vertex failed: {exc}")
            return
    word = curve_to_word(mesh, curve)
    cert = check_word(mesh, word)
    if isinstance(cert, Certificate):
        outcome.certificate = cert
    else:
        outcome.notes.append(f"verification rejected the limit word: {cert.reason} {cert.detail}")


# --------------------------------------------------------------------------
# sweep-out fibers


@dataclass
class Fiber:
    curve: PLCurve
    area: float  # area of the swept disk to the left of the fiber
    rank: int  # position of the face in the shelling
    s: float  # sweep parameter inside that face


def _edge_point(mesh: IntrinsicMesh, a: int, b: int, s: float) -> SurfacePoint:
    """Point at fraction s from vertex a towards vertex b along their edge."""
    if s <= 0.0:
        return VertexPoint(a)
    if s >= 1.0:
        return VertexPoint(b)
    e = mesh.edge_between(a, b)
    t = s if mesh.edge_vertices[e][0] == a else 1.0 - s
    return EdgePoint(e, float(t))


def _boundary_cycle(mesh: IntrinsicMesh, prefix: set[int]) -> list[tuple[int, int]]:
    """Boundary of a disk of faces as a cycle of (vertex, face carrying the side leaving it)."""
    nxt = {}
    for f in prefix:
        for s in range(3):
            g = int(mesh.twin[f, s, 0])
            if g in prefix:
                continue
            a = int(mesh.faces[f, (s + 1) % 3])
            b = int(mesh.faces[f, (s + 2) % 3])
            nxt.setdefault(a, []).append((b, f))
    start = min(nxt)
    cycle = []
    a = start
    used = set()
    while True:
        options = sorted(x for x in nxt[a] if (a, x) not in used)
        b, f = options[0]
        used.add((a, (b, f)))
        cycle.append((a, f))
        a = b
        if a == start and len(used) == sum(len(x) for x in nxt.values()):
            break
    return cycle


def sweep_out_fibers(mesh: IntrinsicMesh, shelling: Sequence[int] | None = None,
                     samples_per_face: int = 3) -> list[Fiber]:
    """Sampled fibers of the sweep-out that fills the faces one by one in shelling order.

    Sample parameters inside each face are s = (j + 1/2) / samples.
    """
    order = list(shelling) if shelling is not None else compute_shelling(mesh)
    if not is_shelling(mesh, order):
        raise ValueError("not a shelling")
    k = max(1, int(samples_per_face))
    params = [(j + 0.5) / k for j in range(k)]
    fibers: list[Fiber] = []
    prefix: set[int] = set()
    done_area = 0.0
    ell = len(order)
    for rank, f in enumerate(order):
        A = float(mesh.areas[f])
        vs = [int(x) for x in mesh.faces[f]]
        if rank == 0:
            a, b, c = vs
            for s in params:
                pts = (VertexPoint(a), _edge_point(mesh, a, b, s), _edge_point(mesh, a, c, s))
                fibers.append(Fiber(PLCurve(pts, (f, f, f)), s * s * A, rank, s))
        elif rank == ell - 1:
            cycle = _boundary_cycle(mesh, prefix)
            (v1, g1), (v2, g2), (v3, g3) = cycle
            for s in params:
                r = 1.0 - s
                pts = (VertexPoint(v1), _edge_point(mesh, v1, v2, r), _edge_point(mesh, v1, v3, r))
                fibers.append(Fiber(PLCurve(pts, (f, f, f)), done_area + A - r * r * A, rank, s))
        else:
            cycle = _boundary_cycle(mesh, prefix)
            shared = [s for s in range(3) if int(mesh.twin[f, s, 0]) in prefix]
            verts = [x for x, _ in cycle]
            m = len(cycle)
            if len(shared) == 1:
                s0 = shared[0]
                # boundary runs P -> Q where the face has the side Q -> P
                Q = int(mesh.faces[f, (s0 + 1) % 3])
                P = int(mesh.faces[f, (s0 + 2) % 3])
                c = int(mesh.faces[f, s0])
                pos = next(i for i in range(m) if verts[i] == P and verts[(i + 1) % m] == Q)
                for s in params:
                    pts, fs = [], []
                    for i in range(m):
                        x, g = cycle[(pos + i) % m]
                        if i == 0:
                            pts += [VertexPoint(P), _edge_point(mesh, P, c, s), _edge_point(mesh, Q, c, s)]
                            fs += [f, f, f]
                        else:
                            pts.append(VertexPoint(x))
                            fs.append(g)
                    area = done_area + A - (1 - s) ** 2 * A
                    fibers.append(Fiber(PLCurve(tuple(pts), tuple(fs)), area, rank, s))
            else:
                free = next(s for s in range(3) if s not in shared)
                b = int(mesh.faces[f, free])  # corner opposite the free side
                pos = next(i for i in range(m) if verts[i] == b
                           and {verts[i - 1], verts[(i + 1) % m]} == set(vs) - {b})
                P1 = verts[pos - 1]
                P3 = verts[(pos + 1) % m]
                for s in params:
                    pts, fs = [], []
                    for i in range(m):
                        x, g = cycle[(pos - 1 + i) % m]
                        if i == 0:
                            pts += [VertexPoint(P1), _edge_point(mesh, b, P1, s), _edge_point(mesh, b, P3, s)]
                            fs += [f, f, f]
                        elif i == 1:
                            continue
                        else:
                            pts.append(VertexPoint(x))
                            fs.append(g)
                    area = done_area + s * s * A
                    fibers.append(Fiber(PLCurve(tuple(pts), tuple(fs)), area, rank, s))
        prefix.add(f)
        done_area += A
    return [Fiber(clean_curve(mesh, fb.curve), fb.area, fb.rank, fb.s) for fb in fibers]
