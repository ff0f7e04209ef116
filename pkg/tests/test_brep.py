from __future__ import annotations

import math
import re
from collections import Counter

import numpy as np
import pytest

from step_parts.brep import (
    GeometryError,
    NoShellError,
    Placement,
    PrimitiveType,
    build_brep,
    classify,
    eval_edge,
    eval_surface,
    invert_point,
)
from step_parts.brep.geometry import Circle, Cylinder, Line, Plane, Sphere
from step_parts.step_parser import parse_step
from step_parts import synth

from conftest import FIXTURE_NAMES, MANIFEST, load_solid

Z = Placement.from_axes((0, 0, 0))


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_topology(name):
    s = load_solid(name)
    m = MANIFEST[name]
    assert len(s.faces) == m["faces"]
    assert len(s.edges) == m["edges"]
    assert dict(Counter(f.primitive.value for f in s.faces)) == m["primitives"]
    assert s.diagnostics == []
    closed = name not in ("planar_patch", "bspline_patch")
    for e in s.edges:
        assert len(e.incidences) == (2 if closed else 1)


def test_cube_edges_two_faces():
    s = load_solid("cube")
    assert all(len(set(e.faces)) == 2 for e in s.edges)


def test_no_shell():
    g = parse_step("ISO-10303-21;HEADER;ENDSEC;DATA;#1=CARTESIAN_POINT('',(0.,0.,0.));ENDSEC;END-ISO-10303-21;")
    with pytest.raises(NoShellError):
        build_brep(g)


def test_degenerate_radius():
    text = synth.cylinder(1.0, 2.0)
    bad = re.sub(r"(CYLINDRICAL_SURFACE\('',#\d+,)[^)]*\)", r"\g<1>0.)", text)
    assert bad != text
    with pytest.raises(GeometryError):
        build_brep(parse_step(bad))


def test_classify_total():
    assert classify(("PLANE",)) is PrimitiveType.PLANE
    assert classify(("SURFACE_OF_REVOLUTION",)) is PrimitiveType.REVOLUTION
    assert classify(("SURFACE_OF_LINEAR_EXTRUSION",)) is PrimitiveType.EXTRUSION
    assert classify(("BOUNDED_SURFACE", "B_SPLINE_SURFACE", "B_SPLINE_SURFACE_WITH_KNOTS",
                     "RATIONAL_B_SPLINE_SURFACE")) is PrimitiveType.BSPLINE
    assert classify(("OFFSET_SURFACE",)) is PrimitiveType.OTHER


def test_plane_eval_and_invert():
    p, n = eval_surface(Plane(Z), 1.0, 2.0)
    np.testing.assert_allclose(p, [1, 2, 0])
    np.testing.assert_allclose(n, [0, 0, 1])
    assert invert_point(Plane(Z), [3, 4, 0]) == pytest.approx((3, 4))


def test_cylinder_eval_and_invert():
    cyl = Cylinder(Z, 2.0)
    p, n = eval_surface(cyl, 0.0, 5.0)
    np.testing.assert_allclose(p, [2, 0, 5], atol=1e-15)
    np.testing.assert_allclose(n, [1, 0, 0], atol=1e-15)
    u, v = invert_point(cyl, [0, 2, 5])
    assert u == pytest.approx(math.pi / 2) and v == pytest.approx(5)


def test_sphere_normal_is_position():
    sph = Sphere(Z, 1.0)
    rng = np.random.default_rng(3)
    u = rng.uniform(0, 2 * math.pi, 50)
    v = rng.uniform(-1.5, 1.5, 50)
    P, N, _ = sph.evaluate(u, v)
    np.testing.assert_allclose(np.linalg.norm(P, axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(N, P, atol=1e-14)


def test_sphere_pole_flagged():
    _, N, singular = Sphere(Z, 1.0).evaluate(np.array([0.3]), np.array([math.pi / 2]))
    assert singular[0]
    np.testing.assert_allclose(N[0], [0, 0, 1], atol=1e-12)


def test_line_and_circle_eval():
    line = Line([0, 0, 0], [1, 0, 0])
    np.testing.assert_allclose(line.evaluate(np.array([2.0]))[0], [2, 0, 0])
    circ = Circle(Z, 1.0)
    np.testing.assert_allclose(circ.evaluate(np.array([math.pi]))[0], [-1, 0, 0], atol=1e-15)


@pytest.mark.parametrize("rational", [False, True])
def test_bspline_inversion_round_trip(rational):
    s = build_brep(parse_step(synth.bspline_patch(rational=rational)))
    surf = s.surfaces[s.faces[0].surface_id]
    rng = np.random.default_rng(11)
    u0, u1, v0, v1 = surf.domain
    u = rng.uniform(u0, u1, 100)
    v = rng.uniform(v0, v1, 100)
    P, _, _ = surf.evaluate(u, v)
    uu, vv, ok = surf.invert(P, s.tol_onsurface)
    assert ok.all()
    np.testing.assert_allclose(uu, u, atol=1e-6)
    np.testing.assert_allclose(vv, v, atol=1e-6)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_edge_endpoints_match_vertices(name):
    s = load_solid(name)
    for e in s.edges:
        np.testing.assert_allclose(eval_edge(e, e.t_start), e.start, atol=s.tol_vertex)
        np.testing.assert_allclose(eval_edge(e, e.t_end), e.end, atol=s.tol_vertex)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_edge_mid_on_both_surfaces(name):
    s = load_solid(name)
    for e in s.edges:
        p = eval_edge(e, e.mid_parameter)
        for fid in set(e.faces):
            surf = s.surface_of(s.faces[fid])
            u, v = invert_point(surf, p, s.tol_onsurface)
            q, _ = eval_surface(surf, u, v)
            assert np.linalg.norm(q - p) <= s.tol_onsurface


def test_eval_edge_range_check():
    e = load_solid("cube").edges[0]
    with pytest.raises(ValueError):
        eval_edge(e, max(e.t_start, e.t_end) + 1.0)


def test_shared_edge_record():
    s = load_solid("split_cylinder")
    seams = [e for e in s.edges if {s.faces[f].primitive for f in e.faces} == {PrimitiveType.CYLINDER}]
    assert len(seams) == 2
    assert all(len(e.faces) == 2 and e.faces[0] != e.faces[1] for e in seams)
