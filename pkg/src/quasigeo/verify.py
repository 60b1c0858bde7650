"""Checking crossing words and numeric curves against the quasigeodesic rules."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import NonAdjacentLetters
from .geometry import (
    EdgePoint,
    FacePoint,
    PLCurve,
    VertexPoint,
    angle_rule_violation,
    clean_curve,
    local_angle,
    point_in_face,
    point_to_json,
    same_point,
    side_angles,
    strip_candidates,
    theta_towards,
    trace_segment,
)
from .mesh import IntrinsicMesh
from .simplicity import check_weakly_simple
from .words import Letter, format_word, letters_to_json

SCHEMA_VERSION = "quasigeo.certificate/1"
MAX_REALIZATION_COMBOS = 256


@dataclass
class Rejection:
    reason: str  # Unrealizable, AngleViolation, NotWeaklySimple, NonAdjacent, NoVertex, Inconclusive
    position: int = -1
    detail: str = ""
    vertex: int | None = None
    side: str | None = None
    value: float | None = None

    accepted = False

    def as_dict(self) -> dict:
        out = {"reason": self.reason, "position": self.position, "detail": self.detail}
        if self.vertex is not None:
            out.update(vertex=self.vertex, side=self.side, value=self.value)
        return out


@dataclass
class Certificate:
    word: tuple
    realization: PLCurve
    angles: list  # (vertex, left, right)
    length: float
    witness: list
    flags: list

    accepted = True

    def to_json(self, mesh: IntrinsicMesh, mesh_hash: str | None = None) -> dict:
        out = {"schema": SCHEMA_VERSION}
        if mesh_hash is not None:
            out["mesh_hash"] = mesh_hash
        out["word"] = letters_to_json(self.word, mesh)
        out["word_text"] = format_word(self.word, mesh)
        out["length"] = float(self.length)
        out["angles"] = [{"vertex": int(v), "left": float(l), "right": float(r)} for v, l, r in self.angles]
        out["realization"] = {
            "points": [point_to_json(p) for p in self.realization.points],
            "faces": [int(f) for f in self.realization.faces],
        }
        out["witness"] = self.witness
        out["flags"] = list(self.flags)
        return out


def _letter_faces(mesh: IntrinsicMesh, letter: Letter) -> set[int]:
    if letter.kind == "V":
        return set(mesh.vertex_faces(letter.id))
    return set(mesh.edge_faces(letter.id))


def _validate_letters(mesh: IntrinsicMesh, word: Sequence[Letter]) -> Rejection | None:
    for i, l in enumerate(word):
        if l.kind == "V" and not 0 <= l.id < mesh.n:
            return Rejection("Unrealizable", i, f"vertex {l.id} does not exist")
        if l.kind in "CF" and not 0 <= l.id < mesh.m:
            return Rejection("Unrealizable", i, f"edge {l.id} does not exist")
        if l.kind not in "VCF":
            return Rejection("Unrealizable", i, f"unknown letter kind {l.kind}")
    n = len(word)
    for i in range(n):
        if not (_letter_faces(mesh, word[i]) & _letter_faces(mesh, word[(i + 1) % n])):
            return Rejection("NonAdjacent", i, f"letters {word[i]} and {word[(i + 1) % n]} share no face")
    return None


def _segment_realizations(mesh, p1, inner, p2, pos):
    """Candidate (points, faces) for the straight segment between two vertex letters."""
    if len(inner) == 1 and inner[0].kind == "F":
        e = inner[0].id
        if set(mesh.edge_vertices[e]) != {p1, p2} or p1 == p2:
            return Rejection("Unrealizable", pos, f"followed edge {e} does not join {p1} and {p2}")
        f = min(mesh.edge_faces(e))
        return [([VertexPoint(p1), VertexPoint(p2)], [f], float(mesh.edge_lengths[e]))]
    if not inner:
        return Rejection("Unrealizable", pos, "consecutive vertices need a followed edge between them")
    if any(l.kind != "C" for l in inner):
        return Rejection("Unrealizable", pos, "followed edges must sit alone between two vertices")
    edges = [l.id for l in inner]
    out = []
    first_failure = None
    try:
        for strip in strip_candidates(mesh, VertexPoint(p1), edges, VertexPoint(p2)):
            tr = trace_segment(mesh, strip)
            if tr.accepted:
                out.append((tr.points, tr.faces, tr.length))
            elif first_failure is None:
                first_failure = tr
    except NonAdjacentLetters as exc:
        return Rejection("Unrealizable", pos, str(exc))
    if not out:
        tr = first_failure
        kind = "vertex graze" if tr.status == "graze" else "side condition"
        return Rejection("Unrealizable", pos, f"{kind} at crossing {tr.index}: {tr.reason}")
    return out


def _junction_angles(mesh, v, prev_pts, prev_faces, next_pts, next_faces):
    f_in = prev_faces[-1]
    f_out = next_faces[0]
    theta_in = theta_towards(mesh, v, f_in, point_in_face(mesh, prev_pts[-2], f_in))
    theta_out = theta_towards(mesh, v, f_out, point_in_face(mesh, next_pts[1], f_out))
    return side_angles(mesh, v, theta_in, theta_out)


def check_word(mesh: IntrinsicMesh, word: Sequence[Letter], check_simplicity: bool = True):
    """Certificate for the unique closed quasigeodesic with this crossing word, or a Rejection."""
    word = list(word)
    if not word:
        return Rejection("Unrealizable", 0, "empty word")
    bad = _validate_letters(mesh, word)
    if bad is not None:
        return bad
    first_v = next((i for i, l in enumerate(word) if l.kind == "V"), None)
    if first_v is None:
        return Rejection("NoVertex", 0, "words without a vertex letter have no unique realization")
    n = len(word)
    rot = word[first_v:] + word[:first_v]
    vpos = [i for i, l in enumerate(rot) if l.kind == "V"]
    segments = []
    for a, b in zip(vpos, vpos[1:] + [n]):
        p1 = rot[a].id
        p2 = rot[b % n].id
        inner = rot[a + 1:b]
        res = _segment_realizations(mesh, p1, inner, p2, (a + first_v) % n)
        if isinstance(res, Rejection):
            return res
        segments.append(res)

    combos = itertools.islice(itertools.product(*segments), MAX_REALIZATION_COMBOS)
    first_rejection = None
    for combo in combos:
        result = _check_combo(mesh, rot, vpos, first_v, combo, check_simplicity)
        if isinstance(result, Certificate):
            return result
        if first_rejection is None:
            first_rejection = result
    return first_rejection


def _check_combo(mesh, rot, vpos, first_v, combo, check_simplicity):
    n = len(rot)
    angles = []
    tol = mesh.eps + 1e-12
    k = len(combo)
    for j in range(k):
        prev_pts, prev_faces, _ = combo[j - 1]
        next_pts, next_faces, _ = combo[j]
        v = rot[vpos[j]].id
        left, right = _junction_angles(mesh, v, prev_pts, prev_faces, next_pts, next_faces)
        side, value = angle_rule_violation(mesh, v, left, right)
        if value > tol:
            return Rejection("AngleViolation", (vpos[j] + first_v) % n,
                             f"vertex {v}: angles ({left:.12g}, {right:.12g})",
                             vertex=v, side=side, value=left if side == "left" else right)
        angles.append((v, left, right))
    points, faces = [], []
    for pts, fs, _ in combo:
        points.extend(pts[:-1])
        faces.extend(fs)
    curve = PLCurve(tuple(points), tuple(faces))
    length = math.fsum(c[2] for c in combo)
    flags = []
    witness = []
    if check_simplicity:
        simp = check_weakly_simple(mesh, curve)
        if simp.status == "inconclusive":
            return Rejection("Inconclusive", -1, simp.reason)
        if not simp.accepted:
            return Rejection("NotWeaklySimple", -1, simp.reason)
        witness = simp.witness
        flags.append("simple" if simp.status == "simple" else "weaklySimple")
    if _is_doubled_segment(mesh, combo):
        flags = ["degenerateDoubledSegment"] + [f for f in flags if f != "simple"]
        if "weaklySimple" not in flags and check_simplicity:
            flags.append("weaklySimple")
    word = tuple(rot)
    return Certificate(word, curve, angles, length, witness, flags)


def _is_doubled_segment(mesh, combo) -> bool:
    if len(combo) != 2:
        return False
    (p1, f1, _), (p2, f2, _) = combo
    if len(p1) != len(p2):
        return False
    if p1[0] == p1[-1]:
        return False
    return all(same_point(mesh, a, b) for a, b in zip(p1, reversed(p2))) and list(f1) == list(reversed(f2))


# --------------------------------------------------------------------------
# numeric curves


@dataclass
class NumericReport:
    straightness_defect: float
    straightness_index: int
    vertex_violation: float
    vertex_index: int
    vertex_detail: tuple = ()
    accepted: bool = False
    per_point: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "straightness_defect": self.straightness_defect,
            "straightness_index": self.straightness_index,
            "vertex_violation": self.vertex_violation,
            "vertex_index": self.vertex_index,
            "accepted": self.accepted,
        }


def check_curve_numeric(mesh: IntrinsicMesh, curve: PLCurve, tol: float = 1e-7) -> NumericReport:
    """Worst turning away from straight at regular points and worst angle-rule violation at vertices."""
    curve = clean_curve(mesh, curve)
    n = len(curve.points)
    worst_s, worst_si = 0.0, -1
    worst_v, worst_vi, detail = 0.0, -1, ()
    per_point = []
    if n < 2:
        return NumericReport(0.0, -1, 0.0, -1, (), False, [])
    for i, p in enumerate(curve.points):
        f_in, f_out = curve.faces[i - 1], curve.faces[i]
        q_prev = point_in_face(mesh, curve.points[i - 1], f_in)
        q_next = point_in_face(mesh, curve.points[(i + 1) % n], f_out)
        a_in = local_angle(mesh, p, f_in, q_prev)
        a_out = local_angle(mesh, p, f_out, q_next)
        if isinstance(p, VertexPoint):
            left, right = side_angles(mesh, p.vertex, a_in, a_out)
            side, value = angle_rule_violation(mesh, p.vertex, left, right)
            per_point.append(value)
            if value > worst_v:
                worst_v, worst_vi, detail = value, i, (p.vertex, left, right)
        else:
            left = (a_in - a_out) % (2 * math.pi)
            value = abs(left - math.pi)
            per_point.append(value)
            if value > worst_s:
                worst_s, worst_si = value, i
    accepted = worst_s <= tol and worst_v <= tol
    return NumericReport(worst_s, worst_si, worst_v, worst_vi, detail, accepted, per_point)


def curve_to_word(mesh: IntrinsicMesh, curve: PLCurve) -> list[Letter]:
    """Crossing word of a curve: vertices, crossed edges, followed edges."""
    curve = clean_curve(mesh, curve)
    n = len(curve.points)
    letters: list[Letter] = []
    for i, p in enumerate(curve.points):
        q = curve.points[(i + 1) % n]
        if isinstance(p, VertexPoint):
            letters.append(Letter("V", p.vertex))
        elif isinstance(p, EdgePoint):
            prev = curve.points[i - 1]
            if not (_on_edge(mesh, prev, p.edge) and _on_edge(mesh, q, p.edge)):
                letters.append(Letter("C", p.edge))
        if _on_edge_segment(mesh, p, q):
            e = _shared_edge(mesh, p, q)
            if not letters or letters[-1] != Letter("F", e):
                letters.append(Letter("F", e))
    # merge a followed edge split across the start of the cycle
    if len(letters) > 1 and letters[0] == letters[-1] and letters[0].kind == "F":
        letters.pop()
    return letters


def _on_edge(mesh, p, e) -> bool:
    if isinstance(p, VertexPoint):
        return p.vertex in mesh.edge_vertices[e]
    return isinstance(p, EdgePoint) and p.edge == e


def _shared_edge(mesh, p, q):
    cands = set()
    for x in (p, q):
        if isinstance(x, EdgePoint):
            cands.add(x.edge)
    if not cands:
        e = mesh.edge_between(p.vertex, q.vertex) if isinstance(p, VertexPoint) and isinstance(q, VertexPoint) else None
        return e
    return min(cands)


def _on_edge_segment(mesh, p, q) -> bool:
    if isinstance(p, FacePoint) or isinstance(q, FacePoint):
        return False
    if isinstance(p, VertexPoint) and isinstance(q, VertexPoint):
        return p.vertex != q.vertex and mesh.edge_between(p.vertex, q.vertex) is not None
    e = _shared_edge(mesh, p, q)
    return e is not None and _on_edge(mesh, p, e) and _on_edge(mesh, q, e)
