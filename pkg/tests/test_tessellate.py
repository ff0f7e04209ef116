from __future__ import annotations

import copy
import math

import numpy as np
import pytest

from step_parts.brep import PrimitiveType, build_brep
from step_parts.step_parser import parse_step
from step_parts.tessellate import (
    COARSE,
    SPECS,
    T0,
    T1,
    T2,
    SelfIntersectionError,
    TessellationSpec,
    get_spec,
    tessellate_face,
    tessellate_solid,
    triangle_areas,
)
from step_parts import synth

from conftest import FIXTURE_NAMES, load_solid


def surface_distance(solid, mesh) -> float:
    surf = solid.surface_of(solid.faces[mesh.face_id])
    u, v, ok = surf.invert(mesh.vertices, math.inf)
    assert ok.all()
    P, _, _ = surf.evaluate(u, v)
    return float(np.linalg.norm(P - mesh.vertices, axis=1).max())


def test_spec_validation():
    with pytest.raises(ValueError):
        TessellationSpec("bad", 0.0, 10.0)
    with pytest.raises(ValueError):
        TessellationSpec("bad", 0.01, 90.0)
    assert get_spec("t1") == T1
    custom = get_spec("t0", chord_tol=0.001)
    assert custom.chord_tol == 0.001 and custom.angle_tol == T0.angle_tol
    assert TessellationSpec.from_dict(T2.to_dict()) == T2
    assert T1.chord_tol < T0.chord_tol < T2.chord_tol
    assert T1.angle_tol < T0.angle_tol < T2.angle_tol


@pytest.mark.parametrize("spec", [T0, T1, T2, COARSE], ids=lambda s: s.name)
@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_vertices_on_source_surface(name, spec):
    s = load_solid(name)
    sm = tessellate_solid(s, spec)
    assert sm.skipped == []
    assert [m.face_id for m in sm.meshes] == list(range(len(s.faces)))
    for m in sm.meshes:
        assert surface_distance(s, m) <= spec.chord_tol * s.diag
        assert surface_distance(s, m) <= s.tol_onsurface
        assert triangle_areas(m.vertices, m.triangles).min() > 1e-14 * s.diag ** 2


def test_cylinder_lateral_area():
    s = load_solid("cylinder")
    sm = tessellate_solid(s, T0)
    lateral = [m for m in sm.meshes if s.faces[m.face_id].primitive is PrimitiveType.CYLINDER]
    area = sum(m.area for m in lateral)
    exact = 2 * math.pi * 1.0 * 2.0
    assert abs(area - exact) / exact < 0.01


def test_split_cylinder_meshes():
    s = load_solid("split_cylinder")
    sm = tessellate_solid(s, T0)
    assert [m.face_id for m in sm.meshes] == [0, 1, 2, 3]
    lateral = sum(m.area for m in sm.meshes if s.faces[m.face_id].primitive is PrimitiveType.CYLINDER)
    assert abs(lateral - 4 * math.pi) / (4 * math.pi) < 0.01


def test_cube_coarse_two_triangles_per_face():
    sm = tessellate_solid(load_solid("cube"), COARSE)
    assert len(sm.meshes) == 6
    assert [len(m.triangles) for m in sm.meshes] == [2] * 6
    for m in sm.meshes:
        assert m.area == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("spec", [T0, T1, T2, COARSE], ids=lambda s: s.name)
def test_planar_square_area(spec):
    sm = tessellate_solid(load_solid("planar_patch"), spec)
    s = load_solid("planar_patch")
    extent = s.bbox_max - s.bbox_min
    assert sm.meshes[0].area == pytest.approx(extent[0] * extent[1], rel=1e-9)


def test_sphere_octant_radius():
    s = load_solid("sphere_octant")
    for spec in (T0, T1, T2):
        sm = tessellate_solid(s, spec)
        sph = [m for m in sm.meshes if s.faces[m.face_id].primitive is PrimitiveType.SPHERE][0]
        r = np.linalg.norm(sph.vertices, axis=1)
        assert np.all(np.abs(r - 1.0) <= spec.chord_tol * s.diag)
        assert sph.area == pytest.approx(math.pi / 2, rel=0.02)


def test_hemisphere_cap_area():
    s = load_solid("capsule")
    sm = tessellate_solid(s, T1)
    sph = [m for m in sm.meshes if s.faces[m.face_id].primitive is PrimitiveType.SPHERE][0]
    assert sph.area == pytest.approx(2 * math.pi, rel=0.01)


def test_outward_orientation():
    # a closed mesh with outward normals has positive signed volume
    for name in ("cube", "cylinder", "sphere_octant", "notched_block", "capsule", "cone_frustum"):
        s = load_solid(name)
        vol = 0.0
        for m in tessellate_solid(s, T0).meshes:
            a, b, c = (m.vertices[m.triangles[:, i]] for i in range(3))
            vol += np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0
        assert vol > 0, name


def test_deterministic():
    s = load_solid("rounded_plate")
    a = tessellate_solid(s, T0).meshes
    b = tessellate_solid(s, T0).meshes
    for x, y in zip(a, b):
        assert np.array_equal(x.vertices, y.vertices) and np.array_equal(x.triangles, y.triangles)


@pytest.mark.parametrize("name", ["cylinder", "sphere_octant", "filleted_block", "wave_wall", "bspline_patch",
                                  "revolved_dome", "cone_frustum"])
def test_refinement_never_coarsens(name):
    s = load_solid(name)
    curved = [f.id for f in s.faces if f.primitive is not PrimitiveType.PLANE]
    prev = None
    for chord in (0.02, 0.01, 0.005, 0.0025):
        spec = TessellationSpec("c", chord, 30.0, None)
        counts = {m.face_id: len(m.triangles) for m in tessellate_solid(s, spec).meshes}
        now = [counts[f] for f in curved]
        if prev is not None:
            assert all(n >= p for n, p in zip(now, prev))
        prev = now


def test_shared_edges_weld_exactly():
    s = load_solid("filleted_block")
    sm = tessellate_solid(s, T0)
    V = np.vstack([m.vertices for m in sm.meshes])
    for e in s.edges:
        hits = [np.any(np.all(m.vertices == e.start, axis=1)) for m in sm.meshes if m.face_id in e.faces]
        assert all(hits)
    assert np.unique(V, axis=0).shape[0] < V.shape[0]


def test_empty_solid():
    s = copy.deepcopy(load_solid("cube"))
    s.faces.clear()
    sm = tessellate_solid(s, T0)
    assert sm.meshes == [] and sm.skipped == []


def test_failed_face_is_skipped(monkeypatch):
    import step_parts.tessellate as tess

    real = tess.tessellate_face

    def flaky(face, solid, spec, _ctx=None):
        if face.id == 2:
            raise SelfIntersectionError("trim loop crosses itself")
        return real(face, solid, spec, _ctx)

    monkeypatch.setattr(tess, "tessellate_face", flaky)
    sm = tess.tessellate_solid(load_solid("cube"), T0)
    assert [m.face_id for m in sm.meshes] == [0, 1, 3, 4, 5]
    assert sm.skipped[0].to_dict() == {"face": 2, "reason": "SelfIntersectionError: trim loop crosses itself"}


def test_seamed_hole_and_rational_patch():
    s = build_brep(parse_step(synth.bspline_patch(rational=True)))
    sm = tessellate_solid(s, T0)
    assert sm.skipped == [] and surface_distance(s, sm.meshes[0]) <= s.tol_onsurface
    face = load_solid("rounded_plate").faces[10]
    assert tessellate_face(face, load_solid("rounded_plate"), T0).triangles.shape[0] > 0


def test_specs_registry():
    assert set(SPECS) == {"t0", "t1", "t2", "coarse"}
