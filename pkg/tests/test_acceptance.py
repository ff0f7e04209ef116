"""Acceptance criteria AC1 to AC10.

Each test records one PASS/FAIL line; the lines are printed at the end of the
pytest session (see ``conftest.pytest_terminal_summary``) and also when the
module is run directly with ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import filecmp
import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from step_parts import synth
from step_parts.brep import PrimitiveType, build_brep
from step_parts.carrier import build_carrier, stabilize
from step_parts.evaluate import SampledLabels, agreement, sample_points, self_consistency
from step_parts.hungarian import matching_weight, max_weight_matching
from step_parts.partition import AdjacencyGraph, build_adjacency, extract_parts, partition_solid
from step_parts.pipeline import RunConfig, run_batch
from step_parts.analysis import threshold_sweep
from step_parts.step_parser import parse_step
from step_parts.tessellate import COARSE, T0, T1, T2, tessellate_solid

from conftest import FIXTURE_NAMES, grid_carrier, load_solid

RESULTS: dict = {}

# frozen on the first verified run: seed 0, 100k surface samples, surface transfer
SPLIT_CYLINDER_T0_T2_MIOU = 0.9905723726545244


def _report(ac: str, ok: bool, detail: str) -> None:
    RESULTS[ac] = (ok, detail)
    print(f"{ac} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _phi_error(solid, target: float, prim=None) -> float:
    g = build_adjacency(solid)
    sel = g.same.copy()
    if prim is not None:
        sel &= np.array([g.face_types[a] is prim for a in g.a], dtype=bool)
    return float(np.abs(g.phi[sel] - target).max())


def test_ac1_fixture_partitions():
    cube = partition_solid(load_solid("cube"))
    sc_solid = load_solid("split_cylinder")
    sc = partition_solid(sc_solid)
    lateral = [f.id for f in sc_solid.faces if f.primitive is PrimitiveType.CYLINDER]
    fb_solid = load_solid("filleted_block")
    fb = partition_solid(fb_solid)
    g = build_adjacency(fb_solid)
    fillet = [f.id for f in fb_solid.faces if f.primitive is PrimitiveType.CYLINDER]
    tangent = [(a, b) for a, b, p in zip(g.a, g.b, g.phi) if p < 1e-6 and (a in fillet or b in fillet)]
    fillet_alone = all(int(np.sum(fb.assignment == fb.assignment[f])) == 1 for f in fillet)
    ok = (cube.num_parts == 6 and sc.num_parts == 3 and len(set(sc.assignment[lateral])) == 1
          and len(lateral) == 2 and len(tangent) > 0 and fillet_alone)
    _report("AC1", ok, f"cube={cube.num_parts} split_cylinder={sc.num_parts} "
                       f"fillet tangent edges={len(tangent)} fillet isolated={fillet_alone}")


def test_ac2_dihedral_evaluation():
    cube_err = _phi_error(load_solid("cube"), 90.0)
    seam_err = _phi_error(load_solid("split_cylinder"), 0.0, PrimitiveType.CYLINDER)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for name in FIXTURE_NAMES:
        base = build_adjacency(load_solid(name))
        moved = build_brep(synth.transform_graph(parse_step(synth.FIXTURES[name]()),
                                                 synth.random_rotation(rng), rng.uniform(-50, 50, 3)))
        g = build_adjacency(moved)
        if len(g) != len(base):
            worst = math.inf
            break
        if len(g):
            worst = max(worst, float(np.abs(g.phi - base.phi).max()))
    ok = cube_err <= 1e-6 and seam_err <= 1e-6 and worst <= 1e-9
    _report("AC2", ok, f"cube |phi-90|={cube_err:.2e} seam |phi|={seam_err:.2e} rigid-motion max={worst:.2e}")


TYPES = [PrimitiveType.PLANE, PrimitiveType.CYLINDER, PrimitiveType.SPHERE]


def _random_graph(rng, n_faces: int, n_edges: int) -> AdjacencyGraph:
    types = [TYPES[i] for i in rng.integers(0, len(TYPES), n_faces)]
    edges = []
    for _ in range(n_edges):
        a, b = rng.choice(n_faces, 2, replace=False)
        phi = float(rng.choice([0, 4, 8, 12, 90])) if rng.random() < 0.3 else float(rng.uniform(0, 20))
        edges.append((int(a), int(b), phi, types[a] == types[b]))
    return AdjacencyGraph.from_edges(n_faces, edges, types)


def _closure(graph: AdjacencyGraph, theta: float) -> np.ndarray:
    R = np.eye(graph.num_faces, dtype=bool)
    for a, b, phi, same in zip(graph.a, graph.b, graph.phi, graph.same):
        if same and phi <= theta:
            R[a, b] = R[b, a] = True
    for k in range(graph.num_faces):
        R |= R[:, [k]] & R[[k], :]
    return R


def test_ac3_monotonicity_and_closure():
    rng = np.random.default_rng(3)
    refine_fail = closure_fail = closure_checked = 0
    for _ in range(200):
        n = int(rng.integers(2, 40))
        g = _random_graph(rng, n, int(rng.integers(0, 3 * n)))
        t1, t2 = sorted(rng.uniform(0, 20, 2))
        p1, p2 = extract_parts(g, t1).assignment, extract_parts(g, t2).assignment
        same1 = p1[:, None] == p1[None, :]
        same2 = p2[:, None] == p2[None, :]
        refine_fail += int(np.any(same1 & ~same2))
        if n <= 10:
            closure_checked += 1
            for t in (t1, t2):
                got = extract_parts(g, t).assignment
                closure_fail += int(not np.array_equal(got[:, None] == got[None, :], _closure(g, t)))
    ok = refine_fail == 0 and closure_fail == 0 and closure_checked > 0
    _report("AC3", ok, f"200 graphs, refinement failures={refine_fail}, "
                       f"closure failures={closure_fail} over {closure_checked} small graphs")


def _brute(w: np.ndarray) -> float:
    n, m = w.shape
    if n > m:
        return _brute(w.T)
    return max(sum(w[i, p[i]] for i in range(n)) for p in itertools.permutations(range(m), n))


def test_ac4_hungarian():
    rng = np.random.default_rng(4)
    bad = 0
    for _ in range(500):
        n, m = (int(x) for x in rng.integers(1, 7, 2))
        w = rng.integers(0, 1000, (n, m)).astype(float)
        pairs = max_weight_matching(w)
        if matching_weight(w, pairs) != _brute(w) or len(pairs) != min(n, m):
            bad += 1
    _report("AC4", bad == 0, f"500 random confusion matrices up to 6x6, mismatches={bad}")


def test_ac5_metric_identities():
    s = load_solid("split_cylinder")
    ref = sample_points(build_carrier(s, partition_solid(s), T0), 20_000, seed=5)
    r = agreement(ref, ref)
    ident = (r.accuracy, r.miou, r.boundary_accuracy) == (1.0, 1.0, 1.0)
    labels = sorted(set(ref.labels.tolist()))
    perm = dict(zip(labels, labels[1:] + labels[:1]))
    p = agreement(ref, ref.with_labels(np.array([perm[x] for x in ref.labels.tolist()])))
    perm_ok = (p.accuracy, p.miou, p.boundary_accuracy) == (r.accuracy, r.miou, r.boundary_accuracy)
    pts = np.zeros((4, 3))
    two = SampledLabels(pts, np.array([1, 1, 2, 2]), np.zeros(4, bool))
    const = agreement(two, two.with_labels(np.full(4, 9)))
    ok = ident and perm_ok and abs(const.miou - 0.25) <= 1e-12
    _report("AC5", ok, f"ref-vs-ref exact={ident} permutation invariant={perm_ok} "
                       f"constant-label mIoU={const.miou!r}")


def test_ac6_self_consistency():
    cube = load_solid("cube")
    c1 = self_consistency(cube, T0, T1)
    c2 = self_consistency(cube, T0, T2)
    sc = self_consistency(load_solid("split_cylinder"), T0, T2)
    cube_ok = all((r.accuracy, r.miou) == (1.0, 1.0) for r in (c1, c2))
    ok = cube_ok and sc.miou >= 0.95 and abs(sc.miou - SPLIT_CYLINDER_T0_T2_MIOU) <= 1e-9
    _report("AC6", ok, f"cube T0-T1 acc/mIoU={c1.accuracy}/{c1.miou} T0-T2={c2.accuracy}/{c2.miou}; "
                       f"split cylinder T0-T2 mIoU={sc.miou:.6f} (frozen {SPLIT_CYLINDER_T0_T2_MIOU:.6f})")


def test_ac7_stabilization():
    idem = 0
    for name in FIXTURE_NAMES:
        for spec in (T0, T1, T2, COARSE):
            s = load_solid(name)
            once = build_carrier(s, partition_solid(s), spec, 20)
            idem += int(np.array_equal(stabilize(once, 20).part_label, once.part_label))
    total = len(FIXTURE_NAMES) * 4
    # 4x10 grid of unit squares, left half label 1 and right half 2, with a 5-triangle island of 3
    cells = np.ones((4, 10), np.int64)
    cells[:, 5:] = 2
    c = grid_carrier(cells)
    lab = c.part_label.copy()
    lab[[34, 35, 36, 37, 54]] = 3
    c.part_label = lab
    out = stabilize(c, 20)
    sliver_ok = out.part_label[[34, 35, 36, 37, 54]].tolist() == [2] * 5
    raw = build_carrier(load_solid("rounded_plate"), partition_solid(load_solid("rounded_plate")), T2, 0)
    ident = np.array_equal(stabilize(raw, 0).part_label, raw.part_label)
    ok = idem == total and sliver_ok and ident
    _report("AC7", ok, f"idempotent {idem}/{total}, sliver absorbed={sliver_ok}, tau_min=0 identity={ident}")


def test_ac8_tessellator_fidelity():
    worst = 0.0
    for name in FIXTURE_NAMES:
        s = load_solid(name)
        for spec in (T0, T1, T2, COARSE):
            for m in tessellate_solid(s, spec).meshes:
                surf = s.surface_of(s.faces[m.face_id])
                u, v, _ = surf.invert(m.vertices, math.inf)
                P, _, _ = surf.evaluate(u, v)
                dev = float(np.linalg.norm(P - m.vertices, axis=1).max()) / (spec.chord_tol * s.diag)
                worst = max(worst, dev)
    cyl = load_solid("cylinder")
    area = sum(m.area for m in tessellate_solid(cyl, T0).meshes
               if cyl.faces[m.face_id].primitive is PrimitiveType.CYLINDER)
    rel = abs(area - 2 * math.pi * 1.0 * 2.0) / (2 * math.pi * 2.0)
    ok = worst <= 1.0 and rel < 0.01
    _report("AC8", ok, f"max vertex deviation / (chord_tol*diag)={worst:.3e}, cylinder lateral area error={rel:.2e}")


def test_ac9_sweep_stability():
    unstable = [n for n in FIXTURE_NAMES if len({r.key() for r in threshold_sweep(load_solid(n))}) != 1]
    _report("AC9", not unstable, f"{len(FIXTURE_NAMES)} fixtures over theta 4..12, unstable={unstable}")


def _same_tree(a: Path, b: Path) -> bool:
    cmp = filecmp.dircmp(a, b, ignore=["summary.json"])
    if cmp.left_only or cmp.right_only:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors


@pytest.mark.slow
def test_ac10_determinism_and_throughput(tmp_path):
    src = tmp_path / "corpus"
    src.mkdir()
    for mid, text in synth.synthetic_corpus(100, seed=0):
        (src / f"{mid}.step").write_text(text, encoding="utf-8")
    t0 = time.perf_counter()
    s1 = run_batch(src, RunConfig(workers=1, out_dir=str(tmp_path / "w1")))
    wall1 = time.perf_counter() - t0
    t0 = time.perf_counter()
    s4 = run_batch(src, RunConfig(workers=4, out_dir=str(tmp_path / "w4")))
    wall4 = time.perf_counter() - t0
    same = _same_tree(tmp_path / "w1", tmp_path / "w4")
    mean = s1["per_model_seconds"]["mean"]
    ok = same and s1["succeeded"] == s4["succeeded"] == 100 and mean < 1.0 and max(wall1, wall4) < 180
    _report("AC10", ok, f"byte-identical={same}, ok={s1['succeeded']}/100, mean={mean:.3f}s/model, "
                        f"wall w1={wall1:.1f}s w4={wall4:.1f}s")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
