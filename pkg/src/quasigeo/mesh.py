"""Intrinsic triangulated polyhedral spheres.

A mesh is a list of triangles given by three corner vertex ids and three side
lengths, plus an involution pairing every face-side with its twin. Side ``s``
of a face is opposite corner ``s`` and runs from corner ``s+1`` to corner
``s+2`` (counter-clockwise in the face chart).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateFace,
    GluingLengthMismatch,
    GluingVertexMismatch,
    MeshFormatError,
    NonOrientable,
    NotASphere,
    ShellingNotFound,
    TriangleInequalityViolation,
)

DEFAULT_EPS = 1e-9
TWO_PI = 2.0 * math.pi


def default_eps() -> float:
    """Geometric tolerance, overridable with the ``QG_TOLERANCE`` variable."""
    value = os.environ.get("QG_TOLERANCE")
    if value:
        eps = float(value)
        if not (math.isfinite(eps) and eps > 0.0):
            raise ValueError(f"QG_TOLERANCE must be a positive finite number, got {value!r}")
        return eps
    return DEFAULT_EPS


def corner_angles(lengths: Sequence[float]) -> tuple[float, float, float]:
    """Interior angles of a triangle from its side lengths (side k opposite corner k)."""
    l0, l1, l2 = (float(x) for x in lengths)
    out = []
    for a, b, c in ((l0, l1, l2), (l1, l2, l0), (l2, l0, l1)):
        cos = (b * b + c * c - a * a) / (2.0 * b * c)
        out.append(math.acos(min(1.0, max(-1.0, cos))))
    return out[0], out[1], out[2]


def triangle_area(lengths: Sequence[float]) -> float:
    # Kahan's numerically stable Heron formula
    a, b, c = sorted((float(x) for x in lengths), reverse=True)
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(max(prod, 0.0))


def face_chart(lengths: Sequence[float]) -> np.ndarray:
    """Planar layout of a face as three complex numbers, counter-clockwise."""
    l0, l1, l2 = (float(x) for x in lengths)
    x = (l1 * l1 + l2 * l2 - l0 * l0) / (2.0 * l2)
    y = math.sqrt(max(l1 * l1 - x * x, 0.0))
    return np.array([0.0 + 0.0j, complex(l2, 0.0), complex(x, y)])


@dataclass(frozen=True)
class VertexData:
    vertex: int
    cone_angle: float
    curvature: float
    is_convex: bool
    star_faces: tuple[int, ...]
    degree: int

    @property
    def is_concave(self) -> bool:
        return self.cone_angle >= TWO_PI

    @property
    def is_flat(self) -> bool:
        return abs(self.curvature) <= 1e-12


class IntrinsicMesh:
    """Validated intrinsic triangulation of a sphere; immutable after construction.

    Use :func:`load_intrinsic`, :func:`from_extrinsic` or :func:`from_document`
    rather than calling the constructor, unless the raw arrays are already
    known to be consistent.
    """

    def __init__(self, faces, lengths, twin, eps: float | None = None, coords=None):
        self.eps = default_eps() if eps is None else float(eps)
        self.faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        self.lengths = np.asarray(lengths, dtype=float).reshape(-1, 3)
        self.twin = np.asarray(twin, dtype=np.int64).reshape(-1, 3, 2)
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        for arr in (self.faces, self.lengths, self.twin):
            arr.setflags(write=False)
        self._validate()
        self._build()

    # construction ------------------------------------------------------

    def _validate(self) -> None:
        nf = len(self.faces)
        if nf == 0:
            raise MeshFormatError("mesh has no faces")
        ids = np.unique(self.faces)
        if ids[0] != 0 or ids[-1] != len(ids) - 1:
            raise MeshFormatError("vertex ids must be contiguous starting at 0")
        for f in range(nf):
            l0, l1, l2 = self.lengths[f]
            if min(l0, l1, l2) <= 0 or l0 >= l1 + l2 or l1 >= l0 + l2 or l2 >= l0 + l1:
                raise TriangleInequalityViolation(f, self.lengths[f])
        for f in range(nf):
            for s in range(3):
                g, t = (int(x) for x in self.twin[f, s])
                if not (0 <= g < nf and 0 <= t < 3):
                    raise MeshFormatError(f"side {(f, s)} glued to missing side {(g, t)}")
                if (g, t) == (f, s) or tuple(self.twin[g, t]) != (f, s):
                    raise MeshFormatError(f"gluing is not an involution at side {(f, s)}")
                a, b = self.side_vertices(f, s)
                c, d = self.side_vertices(g, t)
                if (c, d) != (b, a):
                    if (c, d) == (a, b):
                        raise NonOrientable(f"sides {(f, s)} and {(g, t)} are glued orientation-preservingly")
                    raise GluingVertexMismatch(f"sides {(f, s)} and {(g, t)} join different vertices")
                la, lb = self.lengths[f, s], self.lengths[g, t]
                if abs(la - lb) > self.eps * max(1.0, la):
                    raise GluingLengthMismatch((f, s), (g, t), float(la), float(lb))
        seen = {0}
        stack = [0]
        while stack:
            f = stack.pop()
            for s in range(3):
                g = int(self.twin[f, s, 0])
                if g not in seen:
                    seen.add(g)
                    stack.append(g)
        if len(seen) != nf:
            raise NotASphere("gluing graph is disconnected")

    def _build(self) -> None:
        nf = len(self.faces)
        self.n = int(self.faces.max()) + 1
        self.num_faces = nf
        # edges, keyed by the lower side of each twin pair
        raw = []
        for f in range(nf):
            for s in range(3):
                g, t = (int(x) for x in self.twin[f, s])
                if (f, s) < (g, t):
                    a, b = self.side_vertices(f, s)
                    raw.append(((min(a, b), max(a, b), f, s), (f, s), (g, t)))
        raw.sort()
        self.edge_vertices: list[tuple[int, int]] = []
        self.edge_sides: list[tuple[tuple[int, int], tuple[int, int]]] = []
        self.edge_of_side = np.zeros((nf, 3), dtype=np.int64)
        for e, (key, fs, gt) in enumerate(raw):
            self.edge_vertices.append((key[0], key[1]))
            self.edge_sides.append((fs, gt))
            self.edge_of_side[fs] = e
            self.edge_of_side[gt] = e
        self.m = len(raw)
        chi = self.n - self.m + nf
        if chi != 2:
            raise NotASphere(f"Euler characteristic is {chi}, expected 2")
        self.edge_lengths = np.array([self.lengths[fs] for fs, _ in self.edge_sides])

        self.angles = np.array([corner_angles(l) for l in self.lengths])
        self.charts = [face_chart(l) for l in self.lengths]
        self.areas = np.array([triangle_area(l) for l in self.lengths])

        # vertex fans, counter-clockwise from the reference corner
        corners_of: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for f in range(nf):
            for k in range(3):
                corners_of[int(self.faces[f, k])].append((f, k))
        self.fans: list[list[tuple[int, int]]] = []
        self.fan_start: list[list[float]] = []
        self.cone_angles = np.zeros(self.n)
        self.corner_index = np.zeros((nf, 3), dtype=np.int64)
        self.corner_theta = np.zeros((nf, 3))
        for v in range(self.n):
            corners = sorted(corners_of[v])
            fan = [corners[0]]
            while True:
                f, k = fan[-1]
                g, t = (int(x) for x in self.twin[f, (k + 1) % 3])
                nxt = (g, (t + 1) % 3)
                if nxt == fan[0]:
                    break
                fan.append(nxt)
                if len(fan) > len(corners):
                    raise NotASphere(f"fan around vertex {v} does not close")
            if len(fan) != len(corners):
                raise NotASphere(f"vertex {v} is pinched (several corner fans)")
            starts = []
            acc = 0.0
            for i, (f, k) in enumerate(fan):
                starts.append(acc)
                self.corner_index[f, k] = i
                self.corner_theta[f, k] = acc
                acc += self.angles[f, k]
            self.fans.append(fan)
            self.fan_start.append(starts)
            self.cone_angles[v] = acc
        self.curvatures = TWO_PI - self.cone_angles
        total = float(self.curvatures.sum())
        if abs(total - 2.0 * TWO_PI) > max(self.n * self.eps, 1e-9):
            raise NotASphere(f"total curvature {total} differs from 4*pi")
        self._edge_index = {}
        for e, (a, b) in enumerate(self.edge_vertices):
            self._edge_index.setdefault((a, b), e)

    # basic accessors ---------------------------------------------------

    def side_vertices(self, f: int, s: int) -> tuple[int, int]:
        return int(self.faces[f, (s + 1) % 3]), int(self.faces[f, (s + 2) % 3])

    def edge_between(self, a: int, b: int) -> int | None:
        """Edge id joining vertices a and b, or None."""
        return self._edge_index.get((min(a, b), max(a, b)))

    def edge_faces(self, e: int) -> tuple[int, int]:
        (f, _), (g, _) = self.edge_sides[e]
        return f, g

    def side_of_edge(self, f: int, e: int) -> int | None:
        for s in range(3):
            if self.edge_of_side[f, s] == e:
                return s
        return None

    def corner_of_vertex(self, f: int, v: int) -> int | None:
        for k in range(3):
            if self.faces[f, k] == v:
                return k
        return None

    def face_edges(self, f: int) -> tuple[int, int, int]:
        return tuple(int(x) for x in self.edge_of_side[f])

    def vertex_faces(self, v: int) -> list[int]:
        return [f for f, _ in self.fans[v]]

    def vertex_data(self, v: int) -> VertexData:
        theta = float(self.cone_angles[v])
        return VertexData(
            vertex=v,
            cone_angle=theta,
            curvature=TWO_PI - theta,
            is_convex=theta <= TWO_PI + self.eps,
            star_faces=tuple(f for f, _ in self.fans[v]),
            degree=len(self.fans[v]),
        )

    def neighbors(self, v: int) -> list[int]:
        return [int(self.faces[f, (k + 1) % 3]) for f, k in self.fans[v]]

    # global quantities -------------------------------------------------

    @property
    def edge_sum(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def min_altitude(self) -> float:
        return float(min(2.0 * self.areas[f] / self.lengths[f].max() for f in range(self.num_faces)))

    @property
    def max_degree(self) -> int:
        return max(len(fan) for fan in self.fans)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def has_loops_or_multiedges(self) -> bool:
        if any(a == b for a, b in self.edge_vertices):
            return True
        return len(set(self.edge_vertices)) != len(self.edge_vertices)

    def scaled(self, factor: float) -> "IntrinsicMesh":
        coords = None if self.coords is None else self.coords * factor
        return IntrinsicMesh(self.faces, self.lengths * factor, self.twin, eps=self.eps, coords=coords)

    def __repr__(self) -> str:
        return f"IntrinsicMesh(n={self.n}, m={self.m}, faces={self.num_faces})"


@dataclass(frozen=True)
class GlobalQuantities:
    edge_sum: float
    min_altitude: float
    max_degree: int
    eta: int

    def as_dict(self) -> dict:
        return {"M": self.edge_sum, "h": self.min_altitude, "d": self.max_degree, "eta": self.eta}


def eta_bound(edge_sum: float, min_altitude: float, max_degree: int) -> int:
    """Word-length bound ceil((d+1) M / h)."""
    x = (max_degree + 1) * edge_sum / min_altitude
    # guard against ceil(28.000000000001) on values that are integers up to rounding
    return int(math.ceil(x - 1e-9 * max(1.0, x)))


def global_quantities(mesh: IntrinsicMesh) -> GlobalQuantities:
    M, h, d = mesh.edge_sum, mesh.min_altitude, mesh.max_degree
    return GlobalQuantities(M, h, d, eta_bound(M, h, d))


# preprocessing ---------------------------------------------------------


def barycentric_subdivide(mesh: IntrinsicMesh) -> IntrinsicMesh:
    """Split every face into six around its centroid; the metric is unchanged.

    Original vertices keep their ids, edge midpoints get ``n + edge`` and
    centroids ``n + m + face``.
    """
    n, m = mesh.n, mesh.m
    nf = mesh.num_faces
    faces = np.zeros((6 * nf, 3), dtype=np.int64)
    lengths = np.zeros((6 * nf, 3))
    twin = np.zeros((6 * nf, 3, 2), dtype=np.int64)

    def idx(f, s, half):
        return 6 * f + 2 * s + half

    for f in range(nf):
        z = mesh.charts[f]
        g = z.mean()
        centroid = n + m + f
        for s in range(3):
            a, b = (s + 1) % 3, (s + 2) % 3
            zm = 0.5 * (z[a] + z[b])
            mid = n + int(mesh.edge_of_side[f, s])
            va, vb = int(mesh.faces[f, a]), int(mesh.faces[f, b])
            fa, fb = idx(f, s, 0), idx(f, s, 1)
            faces[fa] = (va, mid, centroid)
            lengths[fa] = (abs(zm - g), abs(g - z[a]), abs(z[a] - zm))
            faces[fb] = (mid, vb, centroid)
            lengths[fb] = (abs(z[b] - g), abs(g - zm), abs(zm - z[b]))
            twin[fa, 0] = (fb, 1)
            twin[fb, 1] = (fa, 0)
            nxt = idx(f, (s + 1) % 3, 0)
            twin[fb, 0] = (nxt, 1)
            twin[nxt, 1] = (fb, 0)
            gf, gt = (int(x) for x in mesh.twin[f, s])
            twin[fa, 2] = (idx(gf, gt, 1), 2)
            twin[fb, 2] = (idx(gf, gt, 0), 2)
    # halves of a glued side must agree exactly
    for f in range(6 * nf):
        for s in range(3):
            g, t = twin[f, s]
            if (g, t) > (f, s):
                avg = 0.5 * (lengths[f, s] + lengths[g, t])
                lengths[f, s] = lengths[g, t] = avg
    coords = None
    if mesh.coords is not None:
        c = mesh.coords
        mids = [0.5 * (c[a] + c[b]) for a, b in mesh.edge_vertices]
        cents = [c[mesh.faces[f]].mean(axis=0) for f in range(nf)]
        coords = np.vstack([c, np.array(mids).reshape(-1, 3), np.array(cents).reshape(-1, 3)])
    return IntrinsicMesh(faces, lengths, twin, eps=mesh.eps, coords=coords)


def preprocess(mesh: IntrinsicMesh) -> tuple[IntrinsicMesh, int]:
    """Subdivide at most twice until there are no loops or multiple edges."""
    rounds = 0
    while mesh.has_loops_or_multiedges():
        if rounds == 2:
            raise NotASphere("loops or multiple edges remain after two barycentric subdivisions")
        mesh = barycentric_subdivide(mesh)
        rounds += 1
    return mesh, rounds


# construction from documents -------------------------------------------


def from_document(doc: dict, eps: float | None = None, preprocess_mesh: bool = True) -> IntrinsicMesh:
    """Build a mesh from the canonical intrinsic JSON document."""
    try:
        faces = [list(face["v"]) for face in doc["faces"]]
        lengths = [[float(x) for x in face["len"]] for face in doc["faces"]]
        glue = doc["glue"]
    except (KeyError, TypeError) as exc:
        raise MeshFormatError(f"malformed mesh document: {exc}") from exc
    if any(len(f) != 3 for f in faces) or any(len(l) != 3 for l in lengths):
        raise MeshFormatError("every face needs 3 vertices and 3 lengths")
    nf = len(faces)
    twin = -np.ones((nf, 3, 2), dtype=np.int64)
    for pair in glue:
        (f, s), (g, t) = pair
        for a, b in (((f, s), (g, t)), ((g, t), (f, s))):
            if not (0 <= a[0] < nf and 0 <= a[1] < 3):
                raise MeshFormatError(f"gluing refers to missing side {a}")
            if twin[a[0], a[1], 0] != -1:
                raise MeshFormatError(f"side {tuple(a)} glued twice")
            twin[a[0], a[1]] = b
    if (twin < 0).any():
        f, s = np.argwhere(twin[:, :, 0] < 0)[0]
        raise MeshFormatError(f"side {(int(f), int(s))} is not glued (surface has boundary)")
    # check triangle inequality before anything else so errors are precise
    for f, l in enumerate(lengths):
        a, b, c = l
        if min(l) <= 0 or a >= b + c or b >= a + c or c >= a + b:
            raise TriangleInequalityViolation(f, l)
    coords = doc.get("points")
    mesh = IntrinsicMesh(faces, lengths, twin, eps=eps, coords=coords)
    if preprocess_mesh:
        mesh, _ = preprocess(mesh)
    return mesh


def load_intrinsic(doc: dict, eps: float | None = None, preprocess_mesh: bool = True) -> IntrinsicMesh:
    return from_document(doc, eps=eps, preprocess_mesh=preprocess_mesh)


def to_document(mesh: IntrinsicMesh, include_points: bool = True) -> dict:
    doc = {
        "faces": [
            {"v": [int(x) for x in mesh.faces[f]], "len": [float(x) for x in mesh.lengths[f]]}
            for f in range(mesh.num_faces)
        ],
        "glue": [[list(fs), list(gt)] for fs, gt in mesh.edge_sides],
    }
    if include_points and mesh.coords is not None:
        doc["points"] = [[float(x) for x in p] for p in mesh.coords]
    return doc


def from_extrinsic(points, faces, eps: float | None = None, preprocess_mesh: bool = True) -> IntrinsicMesh:
    """Intrinsic mesh of a closed triangulated surface embedded in R^3."""
    pts = np.asarray(points, dtype=float)
    tris = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    tol = default_eps() if eps is None else eps
    used = np.unique(tris)
    remap = {int(v): i for i, v in enumerate(used)}
    tris = np.array([[remap[int(v)] for v in tri] for tri in tris], dtype=np.int64).reshape(-1, 3)
    pts = pts[used]
    lengths = np.zeros(tris.shape)
    for f, (a, b, c) in enumerate(tris):
        pa, pb, pc = pts[a], pts[b], pts[c]
        scale = max(np.linalg.norm(pb - pa), np.linalg.norm(pc - pa), 1e-300)
        if np.linalg.norm(np.cross(pb - pa, pc - pa)) <= tol * scale * scale:
            raise DegenerateFace(f)
        lengths[f] = (np.linalg.norm(pc - pb), np.linalg.norm(pa - pc), np.linalg.norm(pb - pa))
    directed: dict[tuple[int, int], tuple[int, int]] = {}
    for f, tri in enumerate(tris):
        for s in range(3):
            a, b = int(tri[(s + 1) % 3]), int(tri[(s + 2) % 3])
            if (a, b) in directed:
                raise NonOrientable(f"directed edge {(a, b)} appears twice; faces are not consistently oriented")
            directed[(a, b)] = (f, s)
    twin = np.zeros((len(tris), 3, 2), dtype=np.int64)
    for (a, b), fs in directed.items():
        if (b, a) not in directed:
            raise NotASphere(f"edge {(a, b)} has only one incident face")
        twin[fs] = directed[(b, a)]
    mesh = IntrinsicMesh(tris, lengths, twin, eps=eps, coords=pts)
    if preprocess_mesh:
        mesh, _ = preprocess(mesh)
    return mesh


def read_obj(text: str) -> tuple[np.ndarray, np.ndarray]:
    points, faces = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            points.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(tok.split("/")[0]) for tok in parts[1:]]
            if len(idx) != 3:
                raise MeshFormatError(f"line {lineno}: only triangular faces are supported")
            faces.append([i - 1 if i > 0 else len(points) + i for i in idx])
    if not faces:
        raise MeshFormatError("OBJ file has no faces")
    return np.array(points), np.array(faces)


# shelling --------------------------------------------------------------


def is_disk(mesh: IntrinsicMesh, faces: Iterable[int]) -> bool:
    """True if the union of the given faces is a closed 2-disk."""
    fs = set(int(f) for f in faces)
    if not fs:
        return False
    start = next(iter(fs))
    seen = {start}
    stack = [start]
    while stack:
        f = stack.pop()
        for s in range(3):
            g = int(mesh.twin[f, s, 0])
            if g in fs and g not in seen:
                seen.add(g)
                stack.append(g)
    if seen != fs:
        return False
    verts = {int(v) for f in fs for v in mesh.faces[f]}
    edges = {int(mesh.edge_of_side[f, s]) for f in fs for s in range(3)}
    if len(verts) - len(edges) + len(fs) != 1:
        return False
    nxt: dict[int, int] = {}
    for f in fs:
        for s in range(3):
            if int(mesh.twin[f, s, 0]) not in fs:
                a, b = mesh.side_vertices(f, s)
                if a in nxt:
                    return False
                nxt[a] = b
    if not nxt:
        return False
    v = next(iter(nxt))
    count = 0
    while True:
        v = nxt.get(v)
        count += 1
        if v is None or count > len(nxt):
            return False
        if v == next(iter(nxt)):
            break
    return count == len(nxt)


def _attach_kind(mesh: IntrinsicMesh, prefix: set[int], boundary_verts: set[int], f: int) -> int:
    """Number of shared sides if attaching f keeps a disk, else 0."""
    shared = [s for s in range(3) if int(mesh.twin[f, s, 0]) in prefix]
    k = len(shared)
    if k == 1:
        apex = int(mesh.faces[f, shared[0]])
        return 1 if apex not in boundary_verts else 0
    if k == 2:
        return 2
    return 3 if k == 3 and len(prefix) == mesh.num_faces - 1 else 0


def compute_shelling(mesh: IntrinsicMesh, max_nodes: int = 200_000) -> list[int]:
    """A face order whose every prefix is a disk (greedy with backtracking)."""
    nf = mesh.num_faces
    order = [0]
    prefix = {0}
    nodes = 0

    def boundary_vertices() -> set[int]:
        out = set()
        for f in prefix:
            for s in range(3):
                if int(mesh.twin[f, s, 0]) not in prefix:
                    out.update(mesh.side_vertices(f, s))
        return out

    def rec() -> bool:
        nonlocal nodes
        if len(order) == nf:
            return True
        nodes += 1
        if nodes > max_nodes:
            raise ShellingNotFound("shelling search exceeded its node budget")
        bverts = boundary_vertices()
        candidates = []
        for f in range(nf):
            if f in prefix:
                continue
            k = _attach_kind(mesh, prefix, bverts, f)
            if k:
                candidates.append((-k, f))
        for _, f in sorted(candidates):
            order.append(f)
            prefix.add(f)
            if rec():
                return True
            order.pop()
            prefix.discard(f)
        return False

    if not rec():
        raise ShellingNotFound("no shelling order found")
    return order


def is_shelling(mesh: IntrinsicMesh, order: Sequence[int]) -> bool:
    if sorted(order) != list(range(mesh.num_faces)):
        return False
    return all(is_disk(mesh, order[: i + 1]) for i in range(len(order) - 1))
