"""Bounded search for closed quasigeodesics through at least one vertex.

Segments between vertices are enumerated by unfolding triangle strips from
each vertex while keeping the wedge of directions that still sees through the
strip. Closed words are assembled from segments whose junctions obey the
angle rule and then re-verified from scratch.
"""
from __future__ import annotations

import bisect
import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NoVertexHit
from .geometry import (
    EdgePoint,
    PLCurve,
    VertexPoint,
    clean_curve,
    common_faces,
    cross,
    dot,
    length_tol,
    place_across,
    point_in_face,
    theta_towards,
)
from .mesh import GlobalQuantities, IntrinsicMesh, global_quantities
from .verify import Certificate, check_word
from .words import Letter, word_key

DEFAULT_BUDGET = 10_000_000


@dataclass(frozen=True)
class GeodesicSegment:
    v_start: int
    v_end: int
    kind: str  # "C" for a run of crossed edges (possibly empty), "F" for a followed edge
    inner: tuple  # crossed edge ids, or the single followed edge
    length: float
    exit_dir: float  # angle coordinate at v_start
    entry_dir: float  # angle coordinate at v_end pointing back along the segment
    faces: tuple = ()

    def letters(self) -> list[Letter]:
        return [Letter(self.kind, e) for e in self.inner]

    def key(self) -> tuple:
        return (self.v_start, self.v_end, self.kind, self.inner)


class SegmentList(list):
    """List of segments that remembers whether the enumeration ran to completion."""

    complete: bool = True
    nodes: int = 0


@dataclass
class SearchConfig:
    max_total_length: float | None = None  # defaults to the edge sum M
    max_segment_length: float | None = None  # defaults to the total bound
    max_word_length: int | None = None  # defaults to eta
    max_solutions: int | None = None
    budget: int = DEFAULT_BUDGET
    threads: int = 1
    deepening: tuple = (0.125, 0.25, 0.5, 1.0)

    def resolved(self, mesh: IntrinsicMesh) -> "SearchConfig":
        gq = global_quantities(mesh)
        total = gq.edge_sum if self.max_total_length is None else float(self.max_total_length)
        if total <= 0:
            raise ValueError("max_total_length must be positive")
        seg = total if self.max_segment_length is None else min(float(self.max_segment_length), total)
        word = gq.eta if self.max_word_length is None else min(int(self.max_word_length), gq.eta)
        if word < 2:
            raise ValueError("max_word_length must be at least 2")
        return SearchConfig(total, seg, word, self.max_solutions, self.budget, max(1, int(self.threads)),
                            self.deepening)


@dataclass
class SearchResult:
    certificates: list
    complete: bool
    nodes: int
    segments: int
    config: SearchConfig = field(default=None)


def compute_eta_bound(mesh: IntrinsicMesh) -> GlobalQuantities:
    return global_quantities(mesh)


# --------------------------------------------------------------------------
# segment enumeration


def _unit(z: complex) -> complex:
    return z / abs(z)


def _point_segment_distance(a: complex, b: complex) -> float:
    """Distance from the origin to segment ab."""
    d = b - a
    dd = dot(d, d)
    if dd == 0.0:
        return abs(a)
    lam = min(1.0, max(0.0, -dot(a, d) / dd))
    return abs(a + lam * d)


def _run_ok(mesh: IntrinsicMesh, edges: tuple, e: int) -> bool:
    """Crossing cap around a star: a run of crossings around one vertex stays below its degree."""
    for w in mesh.edge_vertices[e]:
        run = 1
        for prev in reversed(edges):
            if w in mesh.edge_vertices[prev]:
                run += 1
            else:
                break
        if run > len(mesh.fans[w]):
            return False
    return True


def _entry_theta(mesh: IntrinsicMesh, g: int, t: int, placed: np.ndarray) -> float:
    """Angle coordinate at corner t of g of the direction back towards the origin of the unfolding."""
    z = mesh.charts[g]
    rot = (z[(t + 1) % 3] - z[t]) / (placed[(t + 1) % 3] - placed[t])
    rot /= abs(rot)
    w = int(mesh.faces[g, t])
    return theta_towards(mesh, w, g, z[t] + (0j - placed[t]) * rot)


def enumerate_segments(mesh: IntrinsicMesh, v: int, max_len: float, budget: int = DEFAULT_BUDGET,
                       ang_tol: float = 1e-11) -> SegmentList:
    """All straight segments from vertex v to a vertex with length at most max_len.

    Returned in a deterministic order (by length, end vertex, word).
    """
    if max_len <= 0:
        raise ValueError("max_len must be positive")
    tol = length_tol(mesh)
    out = SegmentList()
    nodes = 0
    for f, k in mesh.fans[v]:
        z = mesh.charts[f]
        theta0 = float(mesh.corner_theta[f, k])
        # the followed edge leaving along the start of this corner
        s_out = (k + 2) % 3
        e = int(mesh.edge_of_side[f, s_out])
        le = float(mesh.lengths[f, s_out])
        if le <= max_len + tol:
            w = int(mesh.faces[f, (k + 1) % 3])
            back = theta_towards(mesh, w, f, z[k])
            out.append(GeodesicSegment(v, w, "F", (e,), le, theta0, back, (f,)))
        placed = z - z[k]
        u0 = placed[(k + 1) % 3]
        lo, hi = _unit(placed[(k + 1) % 3]), _unit(placed[(k + 2) % 3])
        stack = [(f, placed, k, lo, hi, (), (f,))]
        while stack:
            nodes += 1
            if nodes > budget:
                out.complete = False
                break
            g0, pl, s, lo, hi, edges, faces = stack.pop()
            A, B = pl[(s + 1) % 3], pl[(s + 2) % 3]
            if _point_segment_distance(A, B) > max_len + tol:
                continue
            e = int(mesh.edge_of_side[g0, s])
            if not _run_ok(mesh, edges, e):
                continue
            g, t, pg = place_across(mesh, g0, s, pl)
            edges2 = edges + (e,)
            faces2 = faces + (g,)
            P = pg[t]
            r = abs(P)
            if r > tol and cross(lo, P) > ang_tol * r and cross(P, hi) > ang_tol * r and r <= max_len + tol:
                w = int(mesh.faces[g, t])
                exit_theta = theta0 + cmath.phase(P / u0)
                out.append(GeodesicSegment(v, w, "C", edges2, float(r), float(exit_theta),
                                           _entry_theta(mesh, g, t, pg), faces2))
            children = []
            for s2 in ((t + 1) % 3, (t + 2) % 3):
                X, Y = pg[(s2 + 1) % 3], pg[(s2 + 2) % 3]
                if cross(X, Y) < 0:
                    X, Y = Y, X
                if abs(X) <= tol or abs(Y) <= tol:
                    continue
                nlo = _unit(X) if cross(lo, X) > 0 else lo
                nhi = _unit(Y) if cross(Y, hi) > 0 else hi
                if cross(nlo, nhi) <= ang_tol:
                    continue
                children.append((g, pg, s2, nlo, nhi, edges2, faces2))
            stack.extend(reversed(children))
        if not out.complete:
            break
    out.nodes = nodes
    out.sort(key=lambda sg: (round(sg.length, 9), sg.v_end, sg.kind, sg.inner, sg.exit_dir))
    return out


def enumerate_all_segments(mesh: IntrinsicMesh, max_len: float, budget: int = DEFAULT_BUDGET,
                           threads: int = 1) -> SegmentList:
    """Segments from every vertex; the per-vertex lists are merged in vertex order."""
    per_vertex_budget = max(1, budget // max(1, mesh.n))
    vs = list(range(mesh.n))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda v: enumerate_segments(mesh, v, max_len, per_vertex_budget), vs))
    else:
        parts = [enumerate_segments(mesh, v, max_len, per_vertex_budget) for v in vs]
    out = SegmentList()
    for p in parts:
        out.extend(p)
        out.complete = out.complete and p.complete
        out.nodes += p.nodes
    return out


# --------------------------------------------------------------------------
# assembling closed words


def _admissible_window(mesh: IntrinsicMesh, v: int) -> tuple[float, float]:
    """Allowed range of the left angle at v (the right angle is the cone angle minus it)."""
    cone = float(mesh.cone_angles[v])
    kappa = float(mesh.curvatures[v])
    if abs(kappa) <= mesh.eps:
        return math.pi, math.pi
    if kappa > 0:
        return cone - math.pi, math.pi
    return math.pi, cone - math.pi


class _ExitIndex:
    """Segments leaving each vertex, sorted by exit direction."""

    def __init__(self, mesh: IntrinsicMesh, segments: Sequence[GeodesicSegment]):
        self.mesh = mesh
        self.by_vertex: dict[int, tuple[list[float], list[int]]] = {}
        buckets: dict[int, list[tuple[float, int]]] = {}
        for i, sg in enumerate(segments):
            cone = float(mesh.cone_angles[sg.v_start])
            buckets.setdefault(sg.v_start, []).append((sg.exit_dir % cone, i))
        for v, items in buckets.items():
            items.sort()
            self.by_vertex[v] = ([a for a, _ in items], [i for _, i in items])

    def exits(self, v: int, entry_dir: float, slack: float) -> list[int]:
        """Indices of segments leaving v whose junction with entry_dir satisfies the angle rule."""
        if v not in self.by_vertex:
            return []
        dirs, idx = self.by_vertex[v]
        cone = float(self.mesh.cone_angles[v])
        lo, hi = _admissible_window(self.mesh, v)
        # left = (entry - exit) mod cone in [lo, hi]  <=>  exit in [entry - hi, entry - lo]
        a = (entry_dir - hi - slack) % cone
        width = (hi - lo) + 2 * slack
        out = []
        if width >= cone:
            return list(idx)
        b = a + width
        if b <= cone:
            out.extend(idx[bisect.bisect_left(dirs, a):bisect.bisect_right(dirs, b)])
        else:
            out.extend(idx[bisect.bisect_left(dirs, a):])
            out.extend(idx[:bisect.bisect_right(dirs, b - cone)])
        return sorted(out)


def assemble_closed(mesh: IntrinsicMesh, segments: Sequence[GeodesicSegment], config: SearchConfig | None = None,
                    start_filter=None) -> SearchResult:
    """Closed chains of segments obeying the angle rule, verified and deduplicated.

    Certificates are sorted by (length, canonical word).
    """
    cfg = (config or SearchConfig()).resolved(mesh)
    segs = list(segments)
    index = _ExitIndex(mesh, segs)
    slack = 10 * mesh.eps + 1e-12
    tol = length_tol(mesh)
    found: dict[tuple, Certificate] = {}
    tried: set[tuple] = set()
    nodes = 0
    complete = True
    limit = cfg.max_solutions

    def letters_of(chain):
        word = []
        for i in chain:
            sg = segs[i]
            word.append(Letter("V", sg.v_start))
            word.extend(sg.letters())
        return word

    def search_from(s0: int, bound: float) -> tuple[list, int, bool]:
        """Chains starting with segment s0 that only use segments with larger or equal index."""
        local_nodes = 0
        results = []
        first = segs[s0]
        stack = [((s0,), first.length, 1 + len(first.inner))]
        per_start_budget = max(1, cfg.budget // max(1, len(segs)))
        while stack:
            local_nodes += 1
            if local_nodes > per_start_budget:
                return results, local_nodes, False
            chain, length, wl = stack.pop()
            last = segs[chain[-1]]
            w = last.v_end
            if w == first.v_start and len(chain) >= 1:
                lo, hi = _admissible_window(mesh, w)
                left = (last.entry_dir - first.exit_dir) % float(mesh.cone_angles[w])
                if left > float(mesh.cone_angles[w]) - slack:
                    left -= float(mesh.cone_angles[w])
                if lo - slack <= left <= hi + slack and not (len(chain) == 1 and last.kind == "F"):
                    results.append(chain)
            children = []
            for j in index.exits(w, last.entry_dir, slack):
                if j < s0:
                    continue
                sg = segs[j]
                nl = length + sg.length
                nw = wl + 1 + len(sg.inner)
                if nl > bound + tol or nw > cfg.max_word_length:
                    continue
                children.append((chain + (j,), nl, nw))
            stack.extend(reversed(children))
        return results, local_nodes, True

    bounds = sorted({min(cfg.max_total_length, cfg.max_total_length * f) for f in cfg.deepening}
                    | {cfg.max_total_length})
    starts = [i for i, sg in enumerate(segs) if start_filter is None or start_filter(sg)]
    for bound in bounds:
        eligible = [i for i in starts if segs[i].length <= bound + tol]
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                parts = list(pool.map(lambda i: search_from(i, bound), eligible))
        else:
            parts = [search_from(i, bound) for i in eligible]
        for chains, used, done in parts:
            nodes += used
            complete = complete and done
            for chain in chains:
                word = letters_of(chain)
                key = word_key(word)
                if key in tried:
                    continue
                tried.add(key)
                cert = check_word(mesh, word)
                if isinstance(cert, Certificate):
                    found[key] = cert
        if limit is not None and len(found) >= limit:
            break
    certs = sorted(found.items(), key=lambda kv: (round(kv[1].length, 9), kv[0]))
    out = [c for _, c in certs]
    if limit is not None:
        out = out[:limit]
    return SearchResult(out, complete and segments_complete(segments), nodes, len(segs), cfg)


def segments_complete(segments) -> bool:
    return getattr(segments, "complete", True)


def search(mesh: IntrinsicMesh, config: SearchConfig | None = None) -> SearchResult:
    """Enumerate segments and assemble closed quasigeodesic words."""
    cfg = (config or SearchConfig()).resolved(mesh)
    segs = enumerate_all_segments(mesh, cfg.max_segment_length, cfg.budget, cfg.threads)
    result = assemble_closed(mesh, segs, cfg)
    result.nodes += segs.nodes
    return result


# --------------------------------------------------------------------------
# pushing a vertex-free closed geodesic onto a vertex


def push_to_vertex(mesh: IntrinsicMesh, curve: PLCurve) -> PLCurve:
    """Translate a closed geodesic that avoids vertices sideways until it meets one.

    The band of parallel geodesics around the curve unfolds to a strip of the
    plane; the curve moves along the strip's normal by the distance to the
    nearest corner, on whichever side that corner is closer.
    """
    curve = clean_curve(mesh, curve)
    if any(isinstance(p, VertexPoint) for p in curve.points):
        raise ValueError("curve already passes through a vertex")
    n = len(curve.points)
    if n < 2:
        raise ValueError("curve is degenerate")
    # crossing sequence: edge points where the face changes
    cross_idx = [i for i, p in enumerate(curve.points)
                 if isinstance(p, EdgePoint) and curve.faces[i - 1] != curve.faces[i]]
    if not cross_idx:
        raise NoVertexHit("curve never leaves its face")
    i0 = cross_idx[0]
    curve = curve.rotated(i0)
    cross_idx = [(i - i0) % n for i in cross_idx]
    cross_idx.sort()
    # unfold faces along the curve, starting with the face after the first crossing
    f = curve.faces[0]
    placed = mesh.charts[f].copy()
    strip = []  # (face, placed corners, side crossed when leaving)
    line_pts = []
    for j in range(len(cross_idx)):
        a = cross_idx[j]
        b = cross_idx[(j + 1) % len(cross_idx)] if j + 1 < len(cross_idx) else n
        f = curve.faces[a]
        zc = mesh.charts[f]
        # position of the curve points a..b-1 in the current unfolding
        rot = (placed[1] - placed[0]) / (zc[1] - zc[0])
        rot /= abs(rot)
        for i in range(a, b):
            q = point_in_face(mesh, curve.points[i], f)
            line_pts.append(placed[0] + (q - zc[0]) * rot)
        p_next = curve.points[b % n]
        e = p_next.edge
        s = mesh.side_of_edge(f, e)
        strip.append((f, placed.copy(), s))
        _, _, placed = place_across(mesh, f, s, placed)
    P0 = line_pts[0]
    dirv = line_pts[1] - P0 if abs(line_pts[1] - P0) > 0 else line_pts[-1] - P0
    for q in line_pts[2:]:
        if abs(q - P0) > abs(dirv):
            dirv = q - P0
    u = _unit(dirv)
    normal = u * 1j
    tol = length_tol(mesh)
    best = None
    for f, pl, s in strip:
        for k in range(3):
            d = dot(pl[k] - P0, normal)
            if abs(d) <= tol:
                raise ValueError("curve passes through a vertex")
            if best is None or abs(d) < abs(best):
                best = d
    if best is None:
        raise NoVertexHit("no corner found beside the band")
    # every corner on the chosen side must lie at least |best| away
    shift = best
    new_pts = []
    new_faces = []
    for j, (f, pl, s) in enumerate(strip):
        A, B = pl[(s + 1) % 3], pl[(s + 2) % 3]
        dA = dot(A - P0, normal) - shift
        dB = dot(B - P0, normal) - shift
        if abs(dA) <= tol:
            pt = VertexPoint(int(mesh.faces[f, (s + 1) % 3]))
        elif abs(dB) <= tol:
            pt = VertexPoint(int(mesh.faces[f, (s + 2) % 3]))
        elif dA * dB < 0:
            lam = dA / (dA - dB)
            e = int(mesh.edge_of_side[f, s])
            a = int(mesh.faces[f, (s + 1) % 3])
            t = lam if a == mesh.edge_vertices[e][0] else 1.0 - lam
            pt = EdgePoint(e, float(t))
        else:
            raise NoVertexHit("pushed line left the band")
        nxt = strip[(j + 1) % len(strip)][0]
        new_pts.append(pt)
        new_faces.append(nxt)
    # merge repeated vertices (the line passing through a corner touches two of its edges)
    pts, fs = [], []
    for p, g in zip(new_pts, new_faces):
        if pts and p == pts[-1]:
            fs[-1] = g
            continue
        pts.append(p)
        fs.append(g)
    while len(pts) > 1 and pts[0] == pts[-1]:
        pts.pop()
        fs.pop()
    # the face carrying each segment is the face shared by its endpoints in strip order
    fixed = []
    for i, p in enumerate(pts):
        q = pts[(i + 1) % len(pts)]
        common = common_faces(mesh, p, q)
        g = fs[i] if fs[i] in common else (common[0] if common else fs[i])
        fixed.append(g)
    out = clean_curve(mesh, PLCurve(tuple(pts), tuple(fixed)))
    if not any(isinstance(p, VertexPoint) for p in out.points):
        raise NoVertexHit("push did not reach a vertex")
    return out
