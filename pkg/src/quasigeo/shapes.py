"""Small library of test surfaces, extrinsic and intrinsic."""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial import ConvexHull

from .mesh import IntrinsicMesh, from_document, from_extrinsic


def _orient_outward(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    center = points.mean(axis=0)
    out = []
    for a, b, c in tris:
        n = np.cross(points[b] - points[a], points[c] - points[a])
        if np.dot(n, points[a] - center) < 0:
            b, c = c, b
        out.append((a, b, c))
    return np.array(out, dtype=np.int64)


def tetrahedron_points() -> tuple[np.ndarray, np.ndarray]:
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, math.sqrt(3) / 2, 0.0],
                    [0.5, math.sqrt(3) / 6, math.sqrt(2.0 / 3.0)]])
    tris = np.array([[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 2, 3]])
    return pts, _orient_outward(pts, tris)


def tetrahedron(eps: float | None = None) -> IntrinsicMesh:
    """Regular tetrahedron with unit edges, built intrinsically."""
    return from_document(tetrahedron_document(), eps=eps)


def tetrahedron_document() -> dict:
    # faces counter-clockwise seen from outside
    faces = [[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]
    return _document_from_faces(faces, lambda f: [1.0, 1.0, 1.0])


def doubled_triangle_document(side: float = 1.0) -> dict:
    faces = [[0, 1, 2], [0, 2, 1]]
    return _document_from_faces(faces, lambda f: [side, side, side])


def doubled_triangle(eps: float | None = None) -> IntrinsicMesh:
    """Two unit equilateral triangles glued along their three sides."""
    return from_document(doubled_triangle_document(), eps=eps)


def _document_from_faces(faces, lengths_of) -> dict:
    directed = {}
    for f, tri in enumerate(faces):
        for s in range(3):
            directed[(tri[(s + 1) % 3], tri[(s + 2) % 3])] = (f, s)
    glue = []
    for (a, b), fs in sorted(directed.items()):
        gt = directed[(b, a)]
        if fs < gt:
            glue.append([list(fs), list(gt)])
    return {"faces": [{"v": list(t), "len": lengths_of(f)} for f, t in enumerate(faces)], "glue": glue}


def cube_points() -> tuple[np.ndarray, np.ndarray]:
    """Unit cube; every square is split by the diagonal through (0,0,0) or (1,1,1)."""
    pts = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)

    def vid(x, y, z):
        return 4 * x + 2 * y + z

    squares = []
    for axis in range(3):
        for side in (0, 1):
            quad = []
            for u, w in ((0, 0), (1, 0), (1, 1), (0, 1)):
                c = [0, 0, 0]
                c[axis] = side
                others = [a for a in range(3) if a != axis]
                c[others[0]], c[others[1]] = u, w
                quad.append(vid(*c))
            squares.append(quad)
    tris = []
    for quad in squares:
        # split along the diagonal that touches vertex 0 or vertex 7
        if quad[0] in (0, 7) or quad[2] in (0, 7):
            tris += [(quad[0], quad[1], quad[2]), (quad[0], quad[2], quad[3])]
        else:
            tris += [(quad[0], quad[1], quad[3]), (quad[1], quad[2], quad[3])]
    tris = np.array(tris, dtype=np.int64)
    return pts, _orient_outward(pts, tris)


def cube(eps: float | None = None) -> IntrinsicMesh:
    pts, tris = cube_points()
    return from_extrinsic(pts, tris, eps=eps)


def icosahedron_points() -> tuple[np.ndarray, np.ndarray]:
    phi = (1 + math.sqrt(5)) / 2
    pts = []
    for a in (-1, 1):
        for b in (-phi, phi):
            pts += [(0, a, b), (a, b, 0), (b, 0, a)]
    pts = np.array(pts, dtype=float) / 2.0
    hull = ConvexHull(pts)
    return pts, _orient_outward(pts, hull.simplices)


def icosahedron(eps: float | None = None) -> IntrinsicMesh:
    pts, tris = icosahedron_points()
    return from_extrinsic(pts, tris, eps=eps)


def random_hull_points(seed: int, n_points: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Convex hull of random points on the unit sphere (all points on the hull)."""
    rng = np.random.default_rng(seed)
    while True:
        pts = rng.normal(size=(n_points, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        hull = ConvexHull(pts)
        if len(hull.vertices) != n_points:
            continue
        tris = _orient_outward(pts, hull.simplices)
        heights = []
        for a, b, c in tris:
            area2 = np.linalg.norm(np.cross(pts[b] - pts[a], pts[c] - pts[a]))
            longest = max(np.linalg.norm(pts[a] - pts[b]), np.linalg.norm(pts[b] - pts[c]),
                          np.linalg.norm(pts[c] - pts[a]))
            heights.append(area2 / longest)
        # reject slivers; they only slow the search down
        if min(heights) > 0.05:
            return pts, tris


def random_hull(seed: int, n_points: int = 8, eps: float | None = None) -> IntrinsicMesh:
    pts, tris = random_hull_points(seed, n_points)
    return from_extrinsic(pts, tris, eps=eps)


NAMED = {
    "tetrahedron": tetrahedron,
    "cube": cube,
    "icosahedron": icosahedron,
    "doubled-triangle": doubled_triangle,
}
