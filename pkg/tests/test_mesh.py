import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasigeo import shapes
from quasigeo.errors import (
    DegenerateFace,
    GluingLengthMismatch,
    GluingVertexMismatch,
    MeshFormatError,
    NonOrientable,
    NotASphere,
    TriangleInequalityViolation,
)
from quasigeo.mesh import (
    barycentric_subdivide,
    compute_shelling,
    from_document,
    from_extrinsic,
    global_quantities,
    is_disk,
    is_shelling,
    preprocess,
    read_obj,
    to_document,
)

from conftest import hull_mesh


def _heron_altitudes(pts, tris):
    out = []
    for a, b, c in tris:
        u, v = pts[b] - pts[a], pts[c] - pts[a]
        area = 0.5 * np.linalg.norm(np.cross(u, v))
        for p, q in ((a, b), (b, c), (c, a)):
            out.append(2 * area / np.linalg.norm(pts[p] - pts[q]))
    return min(out)


def test_tetrahedron_quantities(tetra):
    gq = global_quantities(tetra)
    assert (tetra.n, tetra.m, tetra.num_faces) == (4, 6, 4)
    assert gq.edge_sum == pytest.approx(6.0)
    assert gq.min_altitude == pytest.approx(math.sqrt(3) / 2)
    assert gq.max_degree == 3
    assert gq.eta == 28
    np.testing.assert_allclose(tetra.cone_angles, np.pi, atol=1e-12)


def test_cube_eta_matches_direct_computation(cube):
    pts, tris = shapes.cube_points()
    edges = {tuple(sorted((int(t[i]), int(t[(i + 1) % 3])))) for t in tris for i in range(3)}
    M = sum(np.linalg.norm(pts[a] - pts[b]) for a, b in edges)
    h = _heron_altitudes(pts, tris)
    deg = max(sum(1 for t in tris if v in t) for v in range(len(pts)))
    assert deg == 6
    eta = math.ceil((deg + 1) * M / h)
    assert eta == 203
    assert global_quantities(cube).eta == eta
    assert cube.edge_sum == pytest.approx(12 + 6 * math.sqrt(2))


def test_doubled_triangle_curvatures(dtri):
    assert (dtri.n, dtri.m, dtri.num_faces) == (3, 3, 2)
    np.testing.assert_allclose(dtri.curvatures, 4 * np.pi / 3, atol=1e-12)


def test_gauss_bonnet(any_mesh):
    assert math.fsum(any_mesh.curvatures) == pytest.approx(4 * math.pi, abs=1e-8)


def test_fans_are_cyclic_and_cover_every_corner(any_mesh):
    mesh = any_mesh
    seen = set()
    for v in range(mesh.n):
        fan = mesh.fans[v]
        for f, k in fan:
            assert mesh.faces[f, k] == v
            seen.add((f, k))
        # consecutive corners share the spoke between them
        for (f, k), (g, t) in zip(fan, fan[1:] + fan[:1]):
            assert tuple(mesh.twin[f, (k + 1) % 3]) == (g, (t + 2) % 3)
    assert len(seen) == 3 * mesh.num_faces


def test_document_round_trip(any_mesh):
    doc = to_document(any_mesh)
    again = from_document(copy.deepcopy(doc))
    assert to_document(again) == doc


def _corrupt(doc, fn):
    doc = copy.deepcopy(doc)
    fn(doc)
    return doc


def test_gluing_length_mismatch():
    doc = shapes.tetrahedron_document()
    (f, s), _ = doc["glue"][0]

    def bump(d):
        d["faces"][f]["len"][s] = 1.01

    with pytest.raises(GluingLengthMismatch):
        from_document(_corrupt(doc, bump))


def test_triangle_inequality():
    doc = shapes.tetrahedron_document()

    def flatten(d):
        d["faces"][0]["len"] = [1.0, 1.0, 2.0]

    with pytest.raises(TriangleInequalityViolation):
        from_document(_corrupt(doc, flatten))


def test_missing_gluing_is_boundary():
    doc = shapes.tetrahedron_document()
    with pytest.raises(MeshFormatError):
        from_document(_corrupt(doc, lambda d: d["glue"].pop()))


def test_gluing_with_swapped_vertices():
    doc = shapes.tetrahedron_document()

    def swap(d):
        # glue two sides that are not the same edge
        a, b = d["glue"][0], d["glue"][1]
        a[1], b[1] = b[1], a[1]

    with pytest.raises((GluingVertexMismatch, NonOrientable)):
        from_document(_corrupt(doc, swap))


def test_inconsistent_orientation():
    pts, tris = shapes.tetrahedron_points()
    tris = tris.copy()
    tris[0] = tris[0][::-1]
    with pytest.raises(NonOrientable):
        from_extrinsic(pts, tris)


def test_degenerate_face():
    pts = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], dtype=float)
    tris = [[0, 1, 2], [0, 3, 1], [1, 3, 2], [0, 2, 3]]
    with pytest.raises(DegenerateFace):
        from_extrinsic(pts, tris)


def test_torus_is_rejected():
    # 7-vertex minimal torus triangulation
    tris = []
    for i in range(7):
        tris.append((i, (i + 1) % 7, (i + 3) % 7))
        tris.append((i, (i + 3) % 7, (i + 2) % 7))
    pts = np.random.default_rng(0).normal(size=(7, 3))
    with pytest.raises(NotASphere):
        from_extrinsic(pts, tris)


def test_read_obj_handles_slashes_and_comments():
    text = "# cube\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1/1 3/1 2/1\nf 1 2 4\nf 2 3 4\nf 1 4 3\n"
    pts, tris = read_obj(text)
    assert pts.shape == (4, 3) and tris.shape == (4, 3)
    mesh = from_extrinsic(pts, tris)
    assert mesh.n == 4
    with pytest.raises(MeshFormatError):
        read_obj("v 0 0 0\nf 1 2 3 4\n")


def test_barycentric_subdivision_edge_sum():
    mesh = from_document(shapes.doubled_triangle_document(), preprocess_mesh=False)
    assert not mesh.has_loops_or_multiedges()
    sub = barycentric_subdivide(mesh)
    assert sub.num_faces == 6 * mesh.num_faces
    # each unit equilateral face gains centroid-vertex edges of length 1/sqrt(3)
    # and centroid-midpoint edges of length 1/(2 sqrt(3))
    per_face = 3 / math.sqrt(3) + 3 / (2 * math.sqrt(3))
    assert sub.edge_sum == pytest.approx(mesh.edge_sum + 2 * per_face, rel=1e-12)
    assert math.fsum(sub.curvatures) == pytest.approx(4 * math.pi)
    again, rounds = preprocess(sub)
    assert rounds == 0 and again is sub


def test_shellings_are_valid(any_mesh):
    order = compute_shelling(any_mesh)
    assert is_shelling(any_mesh, order)
    assert is_disk(any_mesh, order[:1])
    assert not is_disk(any_mesh, order)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(4, 12))
def test_random_hulls_are_spheres(seed, n):
    mesh = hull_mesh(seed, n)
    assert mesh.n == n
    assert mesh.n - mesh.m + mesh.num_faces == 2
    assert math.fsum(mesh.curvatures) == pytest.approx(4 * math.pi, abs=1e-8)
    assert (mesh.cone_angles < 2 * math.pi).all()
    order = compute_shelling(mesh)
    assert is_shelling(mesh, order)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 1000), scale=st.floats(0.1, 10.0))
def test_scaling_scales_eta_invariant_quantities(seed, scale):
    mesh = hull_mesh(seed % 50)
    big = mesh.scaled(scale)
    a, b = global_quantities(mesh), global_quantities(big)
    assert b.edge_sum == pytest.approx(scale * a.edge_sum)
    assert b.min_altitude == pytest.approx(scale * a.min_altitude)
    # eta is dimensionless (equal up to a ceiling at a rounding boundary)
    assert abs(b.eta - a.eta) <= 1
