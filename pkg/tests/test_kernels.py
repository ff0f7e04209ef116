from __future__ import annotations

import numpy as np
import pytest

from step_parts import kernels
from step_parts.kernels import (
    barycentric_points,
    confusion_matrix,
    nearest_triangle,
    nearest_vertex,
    point_triangle_sq_dist,
)

BACKENDS = [False, True]


def brute_vertex(points, verts):
    d = ((points[:, None, :] - verts[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d, axis=1)


def brute_triangle_dist(points, verts, tris):
    a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    return np.stack([point_triangle_sq_dist(points, np.broadcast_to(a[j], points.shape),
                                            np.broadcast_to(b[j], points.shape),
                                            np.broadcast_to(c[j], points.shape)) for j in range(len(tris))], axis=1)


def random_mesh(rng, n_tri=60):
    verts = rng.normal(size=(n_tri + 2, 3))
    tris = np.array([rng.choice(len(verts), 3, replace=False) for _ in range(n_tri)])
    return verts, tris


@pytest.mark.parametrize("use_numba", BACKENDS)
def test_nearest_vertex_matches_scan(use_numba):
    rng = np.random.default_rng(1)
    for _ in range(20):
        verts = rng.uniform(-1, 1, size=(int(rng.integers(1, 300)), 3))
        pts = rng.uniform(-1.5, 1.5, size=(200, 3))
        assert np.array_equal(nearest_vertex(pts, verts, use_numba), brute_vertex(pts, verts))


@pytest.mark.parametrize("use_numba", BACKENDS)
def test_nearest_vertex_ties_smaller_index(use_numba):
    verts = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [1.0, 0, 0]])
    pts = np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 0.5, 0]])
    assert nearest_vertex(pts, verts, use_numba).tolist() == [0, 0, 2]


@pytest.mark.parametrize("use_numba", BACKENDS)
def test_nearest_vertex_degenerate_cloud(use_numba):
    verts = np.zeros((5, 3))
    pts = np.random.default_rng(0).normal(size=(10, 3))
    assert np.all(nearest_vertex(pts, verts, use_numba) == 0)


@pytest.mark.parametrize("use_numba", BACKENDS)
def test_nearest_triangle_matches_scan(use_numba):
    rng = np.random.default_rng(2)
    for _ in range(10):
        verts, tris = random_mesh(rng, int(rng.integers(1, 80)))
        pts = rng.normal(size=(150, 3))
        got = nearest_triangle(pts, verts, tris, use_numba)
        d = brute_triangle_dist(pts, verts, tris)
        best = d.min(axis=1)
        np.testing.assert_array_equal(d[np.arange(len(pts)), got], best)
        assert np.array_equal(got, np.argmin(d, axis=1))


@pytest.mark.parametrize("use_numba", BACKENDS)
def test_nearest_triangle_shared_edge_tie(use_numba):
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    tris = np.array([[1, 3, 2], [0, 1, 2]])
    pts = np.array([[0.5, 0.5, 0.3]])  # on the shared diagonal, equidistant
    assert nearest_triangle(pts, verts, tris, use_numba).tolist() == [0]


def test_point_triangle_regions():
    a, b, c = np.array([[0.0, 0, 0]]), np.array([[1.0, 0, 0]]), np.array([[0.0, 1, 0]])
    cases = {(0.2, 0.2, 1.0): 1.0, (-1.0, -1.0, 0.0): 2.0, (2.0, 0.0, 0.0): 1.0,
             (0.0, 2.0, 0.0): 1.0, (1.0, 1.0, 0.0): 0.5, (0.5, -1.0, 0.0): 1.0}
    for p, expect in cases.items():
        assert point_triangle_sq_dist(np.array([p]), a, b, c)[0] == pytest.approx(expect)


def test_backends_agree():
    if kernels.backend() != "numba":
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(3)
    verts, tris = random_mesh(rng, 200)
    pts = rng.normal(size=(2000, 3))
    assert np.array_equal(nearest_triangle(pts, verts, tris, True), nearest_triangle(pts, verts, tris, False))
    assert np.array_equal(nearest_vertex(pts, verts, True), nearest_vertex(pts, verts, False))
    idx = rng.integers(0, len(tris), 500)
    r1, r2 = rng.random(500), rng.random(500)
    np.testing.assert_array_equal(barycentric_points(verts, tris, idx, r1, r2, True),
                                  barycentric_points(verts, tris, idx, r1, r2, False))
    ref, cand = rng.integers(0, 5, 1000), rng.integers(0, 4, 1000)
    assert np.array_equal(confusion_matrix(ref, cand, 5, 4, True), confusion_matrix(ref, cand, 5, 4, False))


@pytest.mark.parametrize("use_numba", BACKENDS)
def test_confusion_counts(use_numba):
    ref = np.array([0, 0, 1, 2, 2, 2])
    cand = np.array([1, 1, 0, 0, 1, 1])
    m = confusion_matrix(ref, cand, 3, 2, use_numba)
    assert m.tolist() == [[0, 2], [1, 0], [1, 2]]


@pytest.mark.parametrize("use_numba", BACKENDS)
def test_barycentric_inside(use_numba):
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    rng = np.random.default_rng(4)
    p = barycentric_points(verts, np.array([[0, 1, 2]]), np.zeros(1000, np.int64), rng.random(1000),
                           rng.random(1000), use_numba)
    assert np.all(p[:, 0] >= 0) and np.all(p[:, 1] >= 0) and np.all(p[:, 0] + p[:, 1] <= 1 + 1e-15)
    # uniform density: mean is the centroid
    np.testing.assert_allclose(p.mean(axis=0), [1 / 3, 1 / 3, 0], atol=0.02)


def test_env_flag_selects_fallback(monkeypatch):
    monkeypatch.setenv("STEP_PARTS_NUMBA", "0")
    assert kernels._numba_requested() is False
    monkeypatch.setenv("STEP_PARTS_NUMBA", "1")
    assert kernels._numba_requested() is True


def test_benchmark_script_runs():
    import subprocess
    import sys
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    proc = subprocess.run([sys.executable, str(script), "--samples", "500", "--repeat", "1", "--fixture", "cube"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert "nearest_triangle" in proc.stderr and "False" not in proc.stderr
