from __future__ import annotations

import copy

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from step_parts.brep import PrimitiveType, build_brep
from step_parts.partition import (
    AdjacencyGraph,
    adjacency_csv,
    build_adjacency,
    dihedral_angle,
    extract_parts,
    part_faces,
    partition_solid,
)
from step_parts.step_parser import parse_step
from step_parts import synth

from conftest import FIXTURE_NAMES, MANIFEST, load_solid

TYPES = [PrimitiveType.PLANE, PrimitiveType.CYLINDER, PrimitiveType.SPHERE]


def random_graph(rng: np.random.Generator, n_faces: int, n_edges: int) -> AdjacencyGraph:
    types = [TYPES[i] for i in rng.integers(0, len(TYPES), n_faces)]
    edges = []
    for _ in range(n_edges):
        a, b = rng.choice(n_faces, 2, replace=False) if n_faces > 1 else (0, 0)
        # mix exact grid values (hits theta boundaries) with continuous ones
        phi = float(rng.choice([0, 4, 6, 8, 10, 12, 90])) if rng.random() < 0.3 else float(rng.uniform(0, 20))
        edges.append((int(a), int(b), phi, types[a] == types[b]))
    return AdjacencyGraph.from_edges(n_faces, edges, types)


def closure_oracle(graph: AdjacencyGraph, theta: float) -> np.ndarray:
    n = graph.num_faces
    R = np.eye(n, dtype=bool)
    for a, b, phi, same in zip(graph.a, graph.b, graph.phi, graph.same):
        if same and phi <= theta:
            R[a, b] = R[b, a] = True
    for k in range(n):
        R = R | (R[:, [k]] & R[[k], :])
    return R


def same_part_matrix(assign: np.ndarray) -> np.ndarray:
    return assign[:, None] == assign[None, :]


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_part_counts(name):
    assert partition_solid(load_solid(name), 8.0).num_parts == MANIFEST[name]["parts"]


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_phi_values(name):
    g = build_adjacency(load_solid(name))
    assert sorted({round(float(p), 6) for p in g.phi}) == MANIFEST[name]["phi"]
    assert np.all((g.phi >= 0) & (g.phi <= 180))
    assert g.flags == []


def test_cube_graph():
    g = build_adjacency(load_solid("cube"))
    assert len(g) == 12 and g.same.all()
    np.testing.assert_allclose(g.phi, 90.0, atol=1e-6)


def test_split_cylinder_graph():
    s = load_solid("split_cylinder")
    g = build_adjacency(s)
    cyl = [i for i, f in enumerate(s.faces) if f.primitive is PrimitiveType.CYLINDER]
    seam = [(a in cyl and b in cyl) for a, b in zip(g.a, g.b)]
    assert sum(seam) == 2
    np.testing.assert_allclose(g.phi[seam], 0.0, atol=1e-6)
    assert g.same[seam].all() and not g.same[~np.array(seam)].any()
    p = partition_solid(s, 8.0)
    assert p[cyl[0]] == p[cyl[1]] and p.num_parts == 3


def test_filleted_block_fillet_isolated():
    s = load_solid("filleted_block")
    p = partition_solid(s, 180.0)
    fillet = [i for i, f in enumerate(s.faces) if f.primitive is PrimitiveType.CYLINDER][0]
    members = part_faces(p)[p[fillet]]
    assert members == [fillet]


def test_open_patch_has_no_edges():
    g = build_adjacency(load_solid("planar_patch"))
    assert len(g) == 0
    assert extract_parts(g, 8.0).num_parts == 1


def test_part_ids_by_min_face():
    g = AdjacencyGraph.from_edges(5, [(3, 4, 0.0, True), (0, 2, 0.0, True)], [TYPES[0]] * 5)
    p = extract_parts(g, 8.0)
    assert p.assignment.tolist() == [1, 2, 1, 3, 3]
    assert [ps.faces for ps in p.parts] == [[0, 2], [1], [3, 4]]


def test_theta_zero_merges_exact_tangency_only():
    g = AdjacencyGraph.from_edges(3, [(0, 1, 1e-9, True), (1, 2, 1e-3, True)], [TYPES[0]] * 3)
    assert extract_parts(g, 0.0).assignment.tolist() == [1, 1, 2]


def test_predicate_symmetry():
    rng = np.random.default_rng(5)
    g = random_graph(rng, 8, 14)
    swapped = AdjacencyGraph(g.num_faces, g.b, g.a, g.edge_id, g.phi, g.same, g.face_types)
    assert extract_parts(g, 8.0).assignment.tolist() == extract_parts(swapped, 8.0).assignment.tolist()


def test_flood_fill_matches_closure():
    rng = np.random.default_rng(20240101)
    for _ in range(200):
        n = int(rng.integers(1, 11))
        g = random_graph(rng, n, int(rng.integers(0, 2 * n + 1)))
        for theta in (0.0, 4.0, 8.0, 12.0):
            got = same_part_matrix(extract_parts(g, theta).assignment)
            assert np.array_equal(got, closure_oracle(g, theta))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(0, 80), st.integers(0, 2**32 - 1),
       st.floats(0, 30), st.floats(0, 30))
def test_monotone_refinement(n, m, seed, t1, t2):
    t1, t2 = sorted((t1, t2))
    g = random_graph(np.random.default_rng(seed), n, m)
    fine = extract_parts(g, t1).assignment
    coarse = extract_parts(g, t2).assignment
    for lab in np.unique(fine):
        assert np.unique(coarse[fine == lab]).size == 1


def test_partition_contiguous_and_uniform_type():
    rng = np.random.default_rng(9)
    for _ in range(50):
        g = random_graph(rng, 12, 20)
        p = extract_parts(g, 10.0)
        assert sorted(set(p.assignment.tolist())) == list(range(1, p.num_parts + 1))
        for part in p.parts:
            assert len({g.face_types[f] for f in part.faces}) == 1


@pytest.mark.parametrize("name", ["cube", "split_cylinder", "filleted_block", "sphere_octant", "wave_wall"])
def test_rigid_motion_invariance(name):
    rng = np.random.default_rng(42)
    base = build_adjacency(load_solid(name))
    graph = parse_step(synth.FIXTURES[name]())
    moved = build_brep(synth.transform_graph(graph, synth.random_rotation(rng), rng.uniform(-50, 50, 3)))
    g = build_adjacency(moved)
    np.testing.assert_allclose(g.phi, base.phi, atol=1e-9, rtol=0)
    assert np.array_equal(extract_parts(g, 8.0).assignment, extract_parts(base, 8.0).assignment)


def test_flipped_sense_pair_keeps_phi():
    s = load_solid("cube")
    e = s.edges[0]
    before = dihedral_angle(s, e)
    s2 = copy.deepcopy(s)
    for f in e.faces:
        s2.faces[f].same_sense = not s2.faces[f].same_sense
    assert dihedral_angle(s2, s2.edges[0]) == pytest.approx(before, abs=1e-12)


def test_seam_flip_gives_antiparallel():
    s2 = copy.deepcopy(load_solid("split_cylinder"))
    cyl = [i for i, f in enumerate(s2.faces) if f.primitive is PrimitiveType.CYLINDER]
    s2.faces[cyl[0]].same_sense = not s2.faces[cyl[0]].same_sense
    g = build_adjacency(s2)
    assert np.isclose(g.phi, 180.0).sum() == 2
    assert "orientation_suspect" not in g.flags


def test_orientation_suspect_flag(monkeypatch):
    import step_parts.partition as part

    def flipped(solid, edge, fractions):
        n = np.tile([0.0, 0.0, 1.0], (len(fractions), 1))
        return n, -n, np.ones(len(fractions), bool)

    monkeypatch.setattr(part, "_edge_normals", flipped)
    g = build_adjacency(load_solid("cube"))
    assert np.all(g.phi == 180.0)
    assert "orientation_suspect" in g.flags


def test_spread_mode():
    g = build_adjacency(load_solid("split_cylinder"), spread=True)
    assert g.spread is not None and np.all(g.spread < 1e-6)


def test_adjacency_csv():
    text = adjacency_csv(build_adjacency(load_solid("cube")))
    lines = text.strip().splitlines()
    assert lines[0] == "edge_id,face_a,face_b,type_a,type_b,phi_deg"
    assert len(lines) == 13 and lines[1].endswith(",Plane,Plane,90.0")
