"""Weak simplicity of closed PL curves on a mesh.

The curve is cut at every point it visits more than once. Pieces of curve
between two such nodes either run alone or coincide with other pieces
(a bundle). A curve is weakly simple iff some left-to-right order of the
strands in every bundle makes the passages at every node pairwise
non-interleaving in the cyclic order around the node. Bundle orders are
brute-forced.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .geometry import (
    PLCurve,
    VertexPoint,
    canonical_point,
    cone_angle_at,
    cross,
    dot,
    length_tol,
    local_angle,
    point_in_face,
    same_point,
)
from .mesh import IntrinsicMesh

MAX_ASSIGNMENTS = 2 ** 20


@dataclass
class SimplicityResult:
    status: str  # "simple", "weakly_simple", "not_weakly_simple", "inconclusive"
    reason: str = ""
    witness: list = field(default_factory=list)  # [{"strands": [...], "order": [...]}]
    nodes: int = 0

    @property
    def accepted(self) -> bool:
        return self.status in ("simple", "weakly_simple")


def _pieces_by_face(mesh: IntrinsicMesh, curve: PLCurve):
    """Curve segments in each face chart; segments along a side also appear in the twin face."""
    tol = length_tol(mesh)
    by_face: dict[int, list] = {}
    n = len(curve.points)
    for i in range(n):
        f, a, b = curve.segment(mesh, i)
        by_face.setdefault(f, []).append((i, a, b))
        z = mesh.charts[f]
        for s in range(3):
            za, zb = z[(s + 1) % 3], z[(s + 2) % 3]
            d = zb - za
            if abs(cross(d, a - za)) <= tol * abs(d) and abs(cross(d, b - za)) <= tol * abs(d):
                g = int(mesh.twin[f, s, 0])
                if g == f:
                    continue
                p, q = curve.points[i], curve.points[(i + 1) % n]
                try:
                    ga, gb = point_in_face(mesh, p, g), point_in_face(mesh, q, g)
                except ValueError:
                    continue
                by_face.setdefault(g, []).append((i, ga, gb))
    return by_face


def _contacts(mesh: IntrinsicMesh, curve: PLCurve):
    """Points where two different passages of the curve meet; None on a transverse crossing."""
    tol = length_tol(mesh)
    n = len(curve.points)
    found = []  # (face, chart point)
    for f, pieces in _pieces_by_face(mesh, curve).items():
        for x in range(len(pieces)):
            i, a, b = pieces[x]
            for y in range(x + 1, len(pieces)):
                j, c, d = pieces[y]
                if i == j:
                    continue
                adjacent = (j == (i + 1) % n) or (i == (j + 1) % n)
                shared = None
                if adjacent:
                    shared = b if j == (i + 1) % n else a
                res = _segment_contacts(a, b, c, d, tol)
                if res is None:
                    return None, (f, i, j)
                overlap = len(res) == 2
                for pt in res:
                    if shared is not None and abs(pt - shared) <= tol and not overlap:
                        continue
                    found.append((f, pt))
    return found, None


def _segment_contacts(a, b, c, d, tol):
    """Contact points of two closed segments; None if they cross transversally."""
    r, s = b - a, d - c
    lr, ls = abs(r), abs(s)
    if lr <= tol or ls <= tol:
        return []
    den = cross(r, s)
    if abs(den) > tol * max(lr, ls) * 1e-3 and abs(den) / (lr * ls) > 1e-12:
        t = cross(c - a, s) / den
        u = cross(c - a, r) / den
        ta, ua = t * lr, u * ls
        if -tol <= ta <= lr + tol and -tol <= ua <= ls + tol:
            if tol < ta < lr - tol and tol < ua < ls - tol:
                return None
            return [a + t * r]
        return []
    # parallel
    if abs(cross(r, c - a)) / lr > tol:
        return []
    t0 = dot(c - a, r) / (lr * lr)
    t1 = dot(d - a, r) / (lr * lr)
    lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
    if hi * lr < lo * lr - tol:
        return []
    if (hi - lo) * lr <= tol:
        return [a + 0.5 * (lo + hi) * r]
    return [a + lo * r, a + hi * r]


def check_weakly_simple(mesh: IntrinsicMesh, curve: PLCurve) -> SimplicityResult:
    tol = length_tol(mesh)
    n = len(curve.points)
    if n < 2:
        return SimplicityResult("simple")
    contacts, crossing = _contacts(mesh, curve)
    if contacts is None:
        f, i, j = crossing
        return SimplicityResult("not_weakly_simple", f"segments {i} and {j} cross transversally in face {f}")

    nodes: list = []

    def add_node(p):
        for k, q in enumerate(nodes):
            if same_point(mesh, p, q, 4 * tol):
                return k
        nodes.append(p)
        return len(nodes) - 1

    for f, pt in contacts:
        add_node(canonical_point(mesh, f, pt, tol))
    seen = {}
    for p in curve.points:
        if isinstance(p, VertexPoint):
            seen[p.vertex] = seen.get(p.vertex, 0) + 1
    for v, count in sorted(seen.items()):
        if count > 1:
            add_node(VertexPoint(v))
    if not nodes:
        return SimplicityResult("simple")

    # cut the curve at the nodes: visits[k] = (node, segment index, param along segment)
    visits = []
    for i in range(n):
        f, a, b = curve.segment(mesh, i)
        d = b - a
        L = abs(d)
        hits = []
        for k, p in enumerate(nodes):
            try:
                zp = point_in_face(mesh, p, f)
            except ValueError:
                continue
            if L <= tol:
                continue
            t = dot(zp - a, d) / (L * L)
            if abs(cross(d, zp - a)) / L <= 4 * tol and -tol / L <= t < 1.0 - tol / L:
                hits.append((max(t, 0.0), k))
        for t, k in sorted(hits):
            if visits and visits[-1][0] == k and visits[-1][1] == i and abs(visits[-1][2] - t) * L <= 4 * tol:
                continue
            visits.append((k, i, t))
    if len(visits) < 2:
        return SimplicityResult("simple")

    # strands between consecutive visits
    strands = []
    nv = len(visits)
    for x in range(nv):
        k0, i0, t0 = visits[x]
        k1, i1, t1 = visits[(x + 1) % nv]
        strands.append(_strand(mesh, curve, nodes, k0, i0, t0, k1, i1, t1))

    # bundles of coincident strands
    bundle_of = [-1] * len(strands)
    bundles: list[list[tuple[int, bool]]] = []
    for sidx, st in enumerate(strands):
        if bundle_of[sidx] >= 0:
            continue
        members = [(sidx, False)]
        bundle_of[sidx] = len(bundles)
        for oidx in range(sidx + 1, len(strands)):
            if bundle_of[oidx] >= 0:
                continue
            other = strands[oidx]
            rev = _coincide(mesh, st, other, tol)
            if rev is not None:
                members.append((oidx, rev))
                bundle_of[oidx] = len(bundles)
        bundles.append(members)
    position_in_bundle = {}
    for b, members in enumerate(bundles):
        for pos, (sidx, rev) in enumerate(members):
            position_in_bundle[sidx] = (b, pos, rev)

    # ends around every node
    node_passages: dict[int, list] = {}
    for x in range(nv):
        k = visits[x][0]
        incoming = strands[(x - 1) % nv]
        outgoing = strands[x]
        end_in = (incoming["end_angle"], (x - 1) % nv, False)
        end_out = (outgoing["start_angle"], x, True)
        node_passages.setdefault(k, []).append((end_in, end_out))

    multi = [b for b, members in enumerate(bundles) if len(members) > 1]
    choices = [list(itertools.permutations(range(len(bundles[b])))) for b in multi]
    total = 1
    for c in choices:
        total *= len(c)
    if total > MAX_ASSIGNMENTS:
        return SimplicityResult("inconclusive", f"{total} bundle orders exceed the brute-force cap", nodes=len(nodes))

    atol = 1e-7
    for assignment in itertools.product(*choices) if choices else [()]:
        order = {b: perm for b, perm in zip(multi, assignment)}
        ok = True
        for k, passages in node_passages.items():
            if len(passages) < 2:
                continue
            cone = cone_angle_at(mesh, nodes[k])
            ends = []
            for pid, (e_in, e_out) in enumerate(passages):
                for ang, sidx, is_start in (e_in, e_out):
                    b, pos, rev = position_in_bundle[sidx]
                    rank = order[b].index(pos) if b in order else 0
                    at_canonical_start = is_start != rev
                    key = -rank if at_canonical_start else rank
                    a = ang % cone
                    if a > cone - atol:
                        a = 0.0
                    ends.append([a, key, pid])
            ends.sort()
            # merge nearly equal angles so that the bundle rank decides their order
            for q in range(1, len(ends)):
                if ends[q][0] - ends[q - 1][0] <= atol:
                    ends[q][0] = ends[q - 1][0]
            ends.sort()
            where: dict[int, list[int]] = {}
            for idx, (_, _, pid) in enumerate(ends):
                where.setdefault(pid, []).append(idx)
            chords = [tuple(sorted(v)) for v in where.values()]
            if _interleaving(chords):
                ok = False
                break
        if ok:
            witness = []
            for b in multi:
                members = bundles[b]
                witness.append({
                    "strands": [int(strands[s]["first_segment"]) for s, _ in members],
                    "reversed": [bool(r) for _, r in members],
                    "order": [int(x) for x in order[b]],
                })
            return SimplicityResult("weakly_simple", witness=witness, nodes=len(nodes))
    return SimplicityResult("not_weakly_simple", "every bundle order leaves interleaving passages", nodes=len(nodes))


def _interleaving(chords) -> bool:
    for x in range(len(chords)):
        a, b = chords[x]
        for y in range(x + 1, len(chords)):
            c, d = chords[y]
            if (a < c < b) != (a < d < b):
                return True
    return False


def _strand(mesh, curve, nodes, k0, i0, t0, k1, i1, t1):
    """Geometry summary of the curve piece between two node visits."""
    n = len(curve.points)
    spans = []
    if i1 == i0 and t1 > t0:
        spans.append((i0, t0, t1))
    else:
        spans.append((i0, t0, 1.0))
        i = (i0 + 1) % n
        while i != i1:
            spans.append((i, 0.0, 1.0))
            i = (i + 1) % n
        spans.append((i1, 0.0, t1))
    pieces = []  # (face, za, zb)
    for i, ta, tb in spans:
        f, a, b = curve.segment(mesh, i)
        za, zb = a + ta * (b - a), a + tb * (b - a)
        if abs(zb - za) > 0:
            pieces.append((f, za, zb))
    if not pieces:
        f, a, b = curve.segment(mesh, i0)
        pieces = [(f, a, a)]
    length = sum(abs(zb - za) for _, za, zb in pieces)
    f0, za0, zb0 = pieces[0]
    f1, za1, zb1 = pieces[-1]
    start_angle = local_angle(mesh, nodes[k0], f0, zb0) if abs(zb0 - za0) > 0 else 0.0
    end_angle = local_angle(mesh, nodes[k1], f1, za1) if abs(zb1 - za1) > 0 else 0.0
    # midpoint by arc length
    half = 0.5 * length
    acc = 0.0
    mid = canonical_point(mesh, f0, za0)
    for f, za, zb in pieces:
        seg = abs(zb - za)
        if acc + seg >= half and seg > 0:
            mid = canonical_point(mesh, f, za + (half - acc) / seg * (zb - za))
            break
        acc += seg
    return {
        "start": k0, "end": k1, "length": length, "mid": mid,
        "start_angle": start_angle, "end_angle": end_angle, "first_segment": i0,
    }


def _coincide(mesh, s1, s2, tol):
    """None if the strands differ, else whether s2 runs opposite to s1."""
    if abs(s1["length"] - s2["length"]) > 8 * tol:
        return None
    if not same_point(mesh, s1["mid"], s2["mid"], 8 * tol):
        return None
    if s1["start"] == s2["start"] and s1["end"] == s2["end"] and _close_angle(s1["start_angle"], s2["start_angle"]):
        return False
    if s1["start"] == s2["end"] and s1["end"] == s2["start"] and _close_angle(s1["start_angle"], s2["end_angle"]):
        return True
    return None


def _close_angle(a, b, atol=1e-6):
    d = abs(a - b) % (2 * math.pi)
    return d < atol or abs(d - 2 * math.pi) < atol
