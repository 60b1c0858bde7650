import functools

import pytest

from quasigeo import shapes


@functools.lru_cache(maxsize=None)
def named_mesh(name: str):
    return shapes.NAMED[name]()


@functools.lru_cache(maxsize=None)
def hull_mesh(seed: int, n_points: int = 8):
    return shapes.random_hull(seed, n_points)


@pytest.fixture
def tetra():
    return named_mesh("tetrahedron")


@pytest.fixture
def cube():
    return named_mesh("cube")


@pytest.fixture
def ico():
    return named_mesh("icosahedron")


@pytest.fixture
def dtri():
    return named_mesh("doubled-triangle")


@pytest.fixture(params=["tetrahedron", "cube", "icosahedron", "doubled-triangle", "hull-1", "hull-5"])
def any_mesh(request):
    if request.param.startswith("hull-"):
        return hull_mesh(int(request.param[5:]))
    return named_mesh(request.param)


@functools.lru_cache(maxsize=None)
def dented_cube():
    """Unit cube with one corner pushed inwards; its three neighbours stay convex, the corner turns concave."""
    import numpy as np

    from quasigeo.mesh import from_extrinsic

    pts, tris = shapes.cube_points()
    pts = pts.copy()
    pts[int(np.argmax(pts.sum(axis=1)))] = [0.7, 0.7, 0.7]
    return from_extrinsic(pts, tris)
