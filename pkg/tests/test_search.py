import json
import math
from pathlib import Path

import pytest
from hypothesis import example, given, settings, strategies as st

from quasigeo.geometry import EdgePoint, PLCurve, VertexPoint, point_in_face, trace_ray
from quasigeo.mesh import global_quantities
from quasigeo.search import (
    SearchConfig,
    assemble_closed,
    enumerate_all_segments,
    enumerate_segments,
    push_to_vertex,
    search,
)
from quasigeo.verify import Certificate, check_curve_numeric, check_word
from quasigeo.words import word_key

from conftest import hull_mesh, named_mesh

DATA = Path(__file__).parent / "data"


def _oracle():
    return json.loads((DATA / "tetra_segments.json").read_text())


def test_tetrahedron_segments_match_brute_force_oracle():
    oracle = _oracle()
    mesh = named_mesh("tetrahedron")
    got = enumerate_all_segments(mesh, oracle["max_len"])
    assert got.complete
    want = sorted((d["start"], d["end"], d["kind"], tuple(d["inner"]), d["length"]) for d in oracle["segments"])
    have = sorted((s.v_start, s.v_end, s.kind, tuple(s.inner), s.length) for s in got)
    assert len(have) == len(want)
    for (a, b, k, w, L), (a2, b2, k2, w2, L2) in zip(have, want):
        assert (a, b, k, w) == (a2, b2, k2, w2)
        assert L == pytest.approx(L2, abs=1e-6)


def test_tetrahedron_short_segments_are_the_edges():
    mesh = named_mesh("tetrahedron")
    for v in range(mesh.n):
        segs = enumerate_segments(mesh, v, 1.01)
        assert sorted(s.v_end for s in segs) == sorted(set(range(4)) - {v})
        assert all(s.kind == "F" and s.length == pytest.approx(1.0) for s in segs)


def test_doubled_triangle_has_nothing_short():
    assert list(enumerate_segments(named_mesh("doubled-triangle"), 2, 0.9)) == []


def test_cube_diagonals():
    cube = named_mesh("cube")
    diag = math.sqrt(2)
    for v in range(cube.n):
        long = [s for s in enumerate_segments(cube, v, diag + 1e-6) if s.length > 1.1]
        # one diagonal per incident square: a triangulation edge or a crossing of the other diagonal
        assert len(long) == 3
        assert all(s.length == pytest.approx(diag) for s in long)
        for s in long:
            if s.kind == "C":
                assert len(s.inner) == 1
                a, b = cube.edge_vertices[s.inner[0]]
                assert v not in (a, b)


def _crossing_positions(mesh, seg):
    tr = trace_ray(mesh, VertexPoint(seg.v_start), seg.exit_dir, seg.length + 1e-9)
    out, acc = [], 0.0
    for i, f in enumerate(tr.faces):
        acc += abs(point_in_face(mesh, tr.points[i + 1], f) - point_in_face(mesh, tr.points[i], f))
        if isinstance(tr.points[i + 1], EdgePoint):
            out.append(acc)
    return tr, out


@pytest.mark.parametrize("name,max_len", [("tetrahedron", 2.5), ("cube", 3.0), ("icosahedron", 2.2),
                                          ("hull-2", 2.0), ("hull-7", 2.0)])
def test_segment_invariants(name, max_len):
    mesh = hull_mesh(int(name[5:])) if name.startswith("hull-") else named_mesh(name)
    gq = global_quantities(mesh)
    segs = enumerate_all_segments(mesh, max_len)
    assert segs.complete and len(segs) > 0
    for s in segs:
        assert s.length <= max_len + 1e-9
        # distinct vertices, or a loop, are at least h apart
        assert s.length >= gq.min_altitude - 1e-9
        # the straight walk from the start reproduces the segment
        tr, pos = _crossing_positions(mesh, s)
        assert tr.hit_vertex and tr.points[-1] == VertexPoint(s.v_end)
        if s.kind == "C":
            assert [l.id for l in tr.letters if l.kind == "C"] == list(s.inner)
        # crossing cap: a run of crossings around one vertex never exceeds its degree
        if s.kind == "C":
            for w in range(mesh.n):
                run = 0
                for e in s.inner:
                    run = run + 1 if w in mesh.edge_vertices[e] else 0
                    assert run <= len(mesh.fans[w])
        # at most d + 1 crossings in any window of length h
        for i, p in enumerate(pos):
            inside = sum(1 for q in pos[i:] if q - p <= gq.min_altitude)
            assert inside <= gq.max_degree + 1


def test_tetrahedron_closed_words_are_the_doubled_edges():
    mesh = named_mesh("tetrahedron")
    res = search(mesh, SearchConfig(max_total_length=2.01))
    assert res.complete
    assert len(res.certificates) == 6
    edges = set()
    for cert in res.certificates:
        assert cert.length == pytest.approx(2.0)
        assert "degenerateDoubledSegment" in cert.flags
        edges.add(frozenset(l.id for l in cert.word if l.kind == "F"))
    assert len(edges) == 6


def test_doubled_triangle_median_is_found():
    mesh = named_mesh("doubled-triangle")
    res = search(mesh, SearchConfig(max_total_length=1.8))
    assert res.certificates
    assert res.certificates[0].length == pytest.approx(math.sqrt(3))


def test_cube_band_through_a_corner():
    cube = named_mesh("cube")
    res = search(cube, SearchConfig(max_total_length=4.01, max_word_length=16))
    assert res.certificates
    cert = res.certificates[0]
    assert cert.length == pytest.approx(4.0, abs=1e-6)
    for _, left, right in cert.angles:
        assert sorted((left, right)) == pytest.approx([math.pi / 2, math.pi])


@pytest.mark.parametrize("name", ["tetrahedron", "doubled-triangle", "cube", "hull-3"])
def test_certificates_reverify_and_are_sorted(name):
    mesh = hull_mesh(3) if name == "hull-3" else named_mesh(name)
    res = search(mesh, SearchConfig(max_total_length=min(mesh.edge_sum, 4.01), max_word_length=16))
    keys = [(round(c.length, 9), word_key(c.word)) for c in res.certificates]
    assert keys == sorted(keys)
    assert len({k for _, k in keys}) == len(keys)
    for cert in res.certificates:
        again = check_word(mesh, list(cert.word))
        assert isinstance(again, Certificate)
        assert again.length == pytest.approx(cert.length, abs=1e-9)


def test_budget_marks_results_incomplete():
    mesh = named_mesh("icosahedron")
    segs = enumerate_all_segments(mesh, 5.0, budget=50)
    assert not segs.complete
    res = search(mesh, SearchConfig(budget=50))
    assert not res.complete


def test_config_validation():
    mesh = named_mesh("tetrahedron")
    with pytest.raises(ValueError):
        SearchConfig(max_total_length=-1).resolved(mesh)
    with pytest.raises(ValueError):
        SearchConfig(max_word_length=1).resolved(mesh)
    cfg = SearchConfig().resolved(mesh)
    assert cfg.max_total_length == pytest.approx(6.0)
    assert cfg.max_word_length == 28


@pytest.mark.parametrize("threads", [1, 4, 8])
def test_threads_do_not_change_results(threads):
    mesh = hull_mesh(4)
    base = search(mesh, SearchConfig(max_total_length=3.0, threads=1))
    res = search(mesh, SearchConfig(max_total_length=3.0, threads=threads))
    assert [c.to_json(mesh) for c in res.certificates] == [c.to_json(mesh) for c in base.certificates]


def _band_geodesic(cube, t=0.5):
    for e in range(cube.m):
        if abs(cube.edge_lengths[e] - 1.0) > 1e-12:
            continue
        f = min(cube.edge_faces(e))
        a, b = cube.edge_vertices[e]
        za, zb = (point_in_face(cube, VertexPoint(x), f) for x in (a, b))
        u = (zb - za) / abs(zb - za) * 1j
        tr = trace_ray(cube, EdgePoint(e, t), (f, u), 4.0)
        return PLCurve(tuple(tr.points[:-1]), tuple(tr.faces))
    raise AssertionError("no unit edge")


@settings(max_examples=10, deadline=None)
@given(t=st.floats(0.05, 0.95))
@example(t=0.5)
def test_push_band_onto_a_corner(t):
    cube = named_mesh("cube")
    curve = _band_geodesic(cube, t)
    assert check_curve_numeric(cube, curve, 1e-9).accepted
    pushed = push_to_vertex(cube, curve)
    assert any(isinstance(p, VertexPoint) for p in pushed.points)
    assert pushed.length(cube) == pytest.approx(4.0, abs=1e-9)
    assert check_curve_numeric(cube, pushed, 1e-7).accepted


def test_push_rejects_curves_through_vertices():
    cube = named_mesh("cube")
    res = search(cube, SearchConfig(max_total_length=4.01, max_solutions=1))
    with pytest.raises(ValueError):
        push_to_vertex(cube, res.certificates[0].realization)


def test_assemble_respects_word_cap():
    mesh = named_mesh("cube")
    segs = enumerate_all_segments(mesh, 4.01)

    def run(cap):
        return assemble_closed(mesh, segs, SearchConfig(max_total_length=4.01, max_word_length=cap).resolved(mesh))

    # the pushed band is V F V F V F V F: eight letters
    assert run(7).certificates == []
    assert all(len(c.word) == 8 for c in run(8).certificates) and run(8).certificates
